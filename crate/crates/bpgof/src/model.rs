//! The common-shock bivariate and trivariate Poisson families.
//!
//! Construction: X₁ = Y₁ + Y₃, X₂ = Y₂ + Y₃ with independent Poisson Y's of
//! means θ₁−θ₃, θ₂−θ₃ and θ₃. The pair (X₁, X₂) has Poisson margins with
//! means θ₁, θ₂ and covariance θ₃. The trivariate family shares one common
//! component across all three coordinates.
//!
//! Two independent pmf routes are provided: a per-point convolution sum
//! evaluated in log space, and a table fill driven by the coefficient-matching
//! recurrences with boundaries taken from the reduced Poisson margins. They
//! are cross-checked against each other in the tests and the acceptance suite.

use crate::error::{Error, Result};
use crate::rng::poisson;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Parameters of the bivariate Poisson family.
///
/// Admissible region Θ: θ₁ > θ₃, θ₂ > θ₃, θ₃ > 0. The marginal means are
/// θ₁ and θ₂; θ₃ equals Cov(X₁, X₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBp {
    theta1: f64,
    theta2: f64,
    theta3: f64,
}

impl ThetaBp {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        let all_finite = theta1.is_finite() && theta2.is_finite() && theta3.is_finite();
        if !all_finite || theta3 <= 0.0 || theta1 <= theta3 || theta2 <= theta3 {
            return Err(Error::InvalidTheta(format!(
                "need theta1 > theta3, theta2 > theta3, theta3 > 0; got ({theta1}, {theta2}, {theta3})"
            )));
        }
        Ok(Self { theta1, theta2, theta3 })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn theta3(&self) -> f64 {
        self.theta3
    }

    /// Means of the independent components: (θ₁−θ₃, θ₂−θ₃).
    pub fn reduced(&self) -> (f64, f64) {
        (self.theta1 - self.theta3, self.theta2 - self.theta3)
    }

    /// Correlation coefficient ρ = θ₃ / √(θ₁θ₂).
    pub fn correlation(&self) -> f64 {
        self.theta3 / (self.theta1 * self.theta2).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }
}

/// Parameters of the trivariate Poisson family: θₖ > θ₄ for k = 1,2,3 and θ₄ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaTp {
    theta: [f64; 4],
}

impl ThetaTp {
    pub fn new(theta1: f64, theta2: f64, theta3: f64, theta4: f64) -> Result<Self> {
        let t = [theta1, theta2, theta3, theta4];
        if t.iter().any(|v| !v.is_finite())
            || theta4 <= 0.0
            || theta1 <= theta4
            || theta2 <= theta4
            || theta3 <= theta4
        {
            return Err(Error::InvalidTheta(format!(
                "need theta_k > theta4 > 0; got ({theta1}, {theta2}, {theta3}, {theta4})"
            )));
        }
        Ok(Self { theta: t })
    }

    pub fn get(&self, k: usize) -> f64 {
        self.theta[k]
    }

    pub fn theta4(&self) -> f64 {
        self.theta[3]
    }

    /// Means of the independent components: (θ₁−θ₄, θ₂−θ₄, θ₃−θ₄).
    pub fn reduced(&self) -> [f64; 3] {
        [
            self.theta[0] - self.theta[3],
            self.theta[1] - self.theta[3],
            self.theta[2] - self.theta[3],
        ]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.theta
    }
}

/// A sample of n iid d-tuples of counts, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSample {
    dim: usize,
    data: Vec<u32>,
}

impl CountSample {
    pub fn new(dim: usize, data: Vec<u32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::DegenerateSample(format!(
                "row data length {} is not a positive multiple of dim {}",
                data.len(),
                dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_pairs(rows: &[(u32, u32)]) -> Result<Self> {
        Self::new(2, rows.iter().flat_map(|&(a, b)| [a, b]).collect())
    }

    pub fn from_triples(rows: &[(u32, u32, u32)]) -> Result<Self> {
        Self::new(3, rows.iter().flat_map(|&(a, b, c)| [a, b, c]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks_exact(self.dim)
    }

    /// Maximum of coordinate `k` over the sample.
    pub fn column_max(&self, k: usize) -> u32 {
        self.rows().map(|r| r[k]).max().unwrap_or(0)
    }

    pub fn column_mean(&self, k: usize) -> f64 {
        self.rows().map(|r| r[k] as f64).sum::<f64>() / self.n() as f64
    }

    /// The (d₁, d₂) bivariate margin as a new sample.
    pub fn margin2(&self, k1: usize, k2: usize) -> CountSample {
        let data = self.rows().flat_map(|r| [r[k1], r[k2]]).collect();
        CountSample { dim: 2, data }
    }
}

// ---------------------------------------------------------------------------
// Probability generating functions
// ---------------------------------------------------------------------------

/// pgf of BP(θ): exp{θ₁(u₁−1) + θ₂(u₂−1) + θ₃(u₁−1)(u₂−1)}.
pub fn pgf_bp(u: [f64; 2], theta: &ThetaBp) -> f64 {
    let [u1, u2] = u;
    (theta.theta1 * (u1 - 1.0) + theta.theta2 * (u2 - 1.0) + theta.theta3 * (u1 - 1.0) * (u2 - 1.0))
        .exp()
}

/// pgf of TP(θ): exp{Σθᵢ(uᵢ−1) + θ₄(u₁u₂u₃ − u₁ − u₂ − u₃ + 2)}.
pub fn pgf_tp(u: [f64; 3], theta: &ThetaTp) -> f64 {
    let [u1, u2, u3] = u;
    let t = &theta.theta;
    (t[0] * (u1 - 1.0)
        + t[1] * (u2 - 1.0)
        + t[2] * (u3 - 1.0)
        + t[3] * (u1 * u2 * u3 - u1 - u2 - u3 + 2.0))
        .exp()
}

/// pgf of the m-variate family; `theta` holds [θ₁, …, θ_m, θ_{m+1}].
///
/// exp{Σᵢθᵢ(uᵢ−1) + θ_{m+1}(∏uᵢ − Σuᵢ + m − 1)}.
pub fn pgf_m(u: &[f64], theta: &[f64]) -> Result<f64> {
    let m = u.len();
    if theta.len() != m + 1 {
        return Err(Error::Dimension { expected: m + 1, got: theta.len() });
    }
    let shock = theta[m];
    if shock <= 0.0 || theta[..m].iter().any(|&t| t <= shock) {
        return Err(Error::InvalidTheta("need theta_k > theta_{m+1} > 0".into()));
    }
    let mut expo = 0.0;
    let mut prod = 1.0;
    let mut sum = 0.0;
    for i in 0..m {
        expo += theta[i] * (u[i] - 1.0);
        prod *= u[i];
        sum += u[i];
    }
    expo += shock * (prod - sum + m as f64 - 1.0);
    Ok(expo.exp())
}

// ---------------------------------------------------------------------------
// pmf — convolution route
// ---------------------------------------------------------------------------

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// log pmf of BP(θ) at (x₁, x₂) via the common-shock convolution sum,
/// accumulated in log space.
pub fn log_pmf_bp(x1: u32, x2: u32, theta: &ThetaBp) -> f64 {
    let (t1p, t2p) = theta.reduced();
    let t3 = theta.theta3;
    let base = -t1p - t2p - t3;
    let (l1, l2, l3) = (t1p.ln(), t2p.ln(), t3.ln());
    let kmax = x1.min(x2);
    let mut terms = Vec::with_capacity(kmax as usize + 1);
    for k in 0..=kmax {
        let (a, b) = ((x1 - k) as f64, (x2 - k) as f64);
        let kf = k as f64;
        terms.push(
            a * l1 + b * l2 + kf * l3 - ln_gamma(a + 1.0) - ln_gamma(b + 1.0) - ln_gamma(kf + 1.0),
        );
    }
    base + log_sum_exp(&terms)
}

/// pmf of BP(θ) at (x₁, x₂) — the convolution oracle.
pub fn pmf_bp_convolution(x1: u32, x2: u32, theta: &ThetaBp) -> f64 {
    log_pmf_bp(x1, x2, theta).exp()
}

/// log pmf of TP(θ) via the four-component convolution sum.
pub fn log_pmf_tp(x: [u32; 3], theta: &ThetaTp) -> f64 {
    let red = theta.reduced();
    let t4 = theta.theta4();
    let base = -red[0] - red[1] - red[2] - t4;
    let logs = [red[0].ln(), red[1].ln(), red[2].ln(), t4.ln()];
    let kmax = x[0].min(x[1]).min(x[2]);
    let mut terms = Vec::with_capacity(kmax as usize + 1);
    for k in 0..=kmax {
        let kf = k as f64;
        let mut t = kf * logs[3] - ln_gamma(kf + 1.0);
        for i in 0..3 {
            let a = (x[i] - k) as f64;
            t += a * logs[i] - ln_gamma(a + 1.0);
        }
        terms.push(t);
    }
    base + log_sum_exp(&terms)
}

/// pmf of TP(θ) at (x₁, x₂, x₃).
pub fn pmf_tp_convolution(x: [u32; 3], theta: &ThetaTp) -> f64 {
    log_pmf_tp(x, theta).exp()
}

// ---------------------------------------------------------------------------
// pmf — recurrence route
// ---------------------------------------------------------------------------

/// Dense pmf table P(x₁, x₂) for 0 ≤ x₁ ≤ max1, 0 ≤ x₂ ≤ max2, row-major.
#[derive(Debug, Clone)]
pub struct PmfTable {
    max1: usize,
    max2: usize,
    p: Vec<f64>,
}

impl PmfTable {
    #[inline]
    pub fn get(&self, x1: u32, x2: u32) -> f64 {
        self.p[x1 as usize * (self.max2 + 1) + x2 as usize]
    }

    /// P at (x₁−s₁, x₂−s₂), zero when a shifted index is negative.
    #[inline]
    pub fn get_shifted(&self, x1: u32, x2: u32, s1: u32, s2: u32) -> f64 {
        if x1 < s1 || x2 < s2 {
            0.0
        } else {
            self.get(x1 - s1, x2 - s2)
        }
    }

    pub fn max1(&self) -> usize {
        self.max1
    }

    pub fn max2(&self) -> usize {
        self.max2
    }
}

/// Fill the pmf table by the coefficient-matching recurrences.
///
/// Boundary rows come from the reduced margins: P(i,0) = e^{−θ₂'−θ₃}·Pois(θ₁')(i)
/// and symmetrically for column 0 (X₂ = 0 forces Y₂ = Y₃ = 0, so X₁ = Y₁).
/// Interior cells follow
///   (i+1)(j+1) P(i+1,j+1) = c₀P(i,j) + c₁P(i−1,j) + c₂P(i,j−1) + c₃P(i−1,j−1)
/// with c₀ = θ₃ + θ₁'θ₂', c₁ = θ₃θ₁', c₂ = θ₃θ₂', c₃ = θ₃².
pub fn pmf_bp_table(max1: usize, max2: usize, theta: &ThetaBp) -> PmfTable {
    let (t1p, t2p) = theta.reduced();
    let t3 = theta.theta3;
    let c0 = t3 + t1p * t2p;
    let c1 = t3 * t1p;
    let c2 = t3 * t2p;
    let c3 = t3 * t3;
    let cols = max2 + 1;
    let mut p = vec![0.0f64; (max1 + 1) * cols];

    // Boundaries in log space; linear space is safe afterwards for the θ
    // ranges of interest, and any subnormal result flushes harmlessly to 0.
    let log_p00 = -t1p - t2p - t3;
    for i in 0..=max1 {
        p[i * cols] = (log_p00 + i as f64 * t1p.ln() - ln_gamma(i as f64 + 1.0)).exp();
    }
    for j in 0..=max2 {
        p[j] = (log_p00 + j as f64 * t2p.ln() - ln_gamma(j as f64 + 1.0)).exp();
    }

    for i in 1..=max1 {
        for j in 1..=max2 {
            let pij = c0 * p[(i - 1) * cols + (j - 1)]
                + if i >= 2 { c1 * p[(i - 2) * cols + (j - 1)] } else { 0.0 }
                + if j >= 2 { c2 * p[(i - 1) * cols + (j - 2)] } else { 0.0 }
                + if i >= 2 && j >= 2 { c3 * p[(i - 2) * cols + (j - 2)] } else { 0.0 };
            p[i * cols + j] = pij / (i as f64 * j as f64);
        }
    }
    PmfTable { max1, max2, p }
}

/// pmf of BP(θ) at (x₁, x₂) via the recurrence table.
pub fn pmf_bp_recurrence(x1: u32, x2: u32, theta: &ThetaBp) -> f64 {
    pmf_bp_table(x1 as usize, x2 as usize, theta).get(x1, x2)
}

/// Smallest K with upper Poisson(λ) tail mass below `tail`.
pub fn poisson_support_bound(lambda: f64, tail: f64) -> u32 {
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while 1.0 - cdf > tail && k < 100_000 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Draw n iid pairs (Y₁+Y₃, Y₂+Y₃) from BP(θ).
pub fn sample_bp<R: Rng + ?Sized>(theta: &ThetaBp, n: usize, rng: &mut R) -> CountSample {
    assert!(n >= 1);
    let (t1p, t2p) = theta.reduced();
    let t3 = theta.theta3;
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let y3 = poisson(rng, t3);
        data.push(poisson(rng, t1p) + y3);
        data.push(poisson(rng, t2p) + y3);
    }
    CountSample { dim: 2, data }
}

/// Draw n iid triples (Y₁+Y₄, Y₂+Y₄, Y₃+Y₄) from TP(θ).
pub fn sample_tp<R: Rng + ?Sized>(theta: &ThetaTp, n: usize, rng: &mut R) -> CountSample {
    assert!(n >= 1);
    let red = theta.reduced();
    let t4 = theta.theta4();
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let y4 = poisson(rng, t4);
        for &r in &red {
            data.push(poisson(rng, r) + y4);
        }
    }
    CountSample { dim: 3, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn th(t1: f64, t2: f64, t3: f64) -> ThetaBp {
        ThetaBp::new(t1, t2, t3).unwrap()
    }

    #[test]
    fn theta_validation() {
        assert!(ThetaBp::new(1.0, 1.0, 0.5).is_ok());
        assert!(ThetaBp::new(0.4, 1.0, 0.5).is_err()); // theta1 <= theta3
        assert!(ThetaBp::new(1.0, 1.0, 0.0).is_err());
        assert!(ThetaBp::new(1.0, 1.0, -0.1).is_err());
        assert!(ThetaTp::new(1.0, 1.0, 1.0, 0.25).is_ok());
        assert!(ThetaTp::new(1.0, 1.0, 0.2, 0.25).is_err());
    }

    #[test]
    fn pgf_normalization_and_values() {
        let t = th(1.0, 1.0, 0.5);
        assert_eq!(pgf_bp([1.0, 1.0], &t), 1.0);
        assert_relative_eq!(pgf_bp([0.0, 0.0], &t), (-1.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(pgf_bp([0.5, 0.5], &t), (-0.875f64).exp(), max_relative = 1e-15);
        // arbitrary theta: normalization holds exactly
        for (a, b, c) in [(2.0, 3.0, 1.0), (0.3, 0.4, 0.2), (9.7, 9.6, 2.4)] {
            assert_eq!(pgf_bp([1.0, 1.0], &th(a, b, c)), 1.0);
        }
    }

    #[test]
    fn pgf_tp_values() {
        let t = ThetaTp::new(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(pgf_tp([1.0, 1.0, 1.0], &t), 1.0);
        assert_relative_eq!(pgf_tp([0.0, 0.0, 0.0], &t), (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn pgf_m_reduces_to_bivariate() {
        let mut rng = substream(5, "pgfm", &[]);
        for _ in 0..200 {
            let t3 = 0.05 + 1.5 * rng.random::<f64>();
            let t1 = t3 + 0.05 + 3.0 * rng.random::<f64>();
            let t2 = t3 + 0.05 + 3.0 * rng.random::<f64>();
            let u = [rng.random::<f64>(), rng.random::<f64>()];
            let theta = th(t1, t2, t3);
            let a = pgf_bp(u, &theta);
            let b = pgf_m(&u, &[t1, t2, t3]).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn pgf_m_matches_trivariate() {
        let t = ThetaTp::new(1.5, 1.2, 1.0, 0.4).unwrap();
        let u = [0.3, 0.8, 0.6];
        assert_relative_eq!(
            pgf_tp(u, &t),
            pgf_m(&u, &t.as_array()).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn pmf_convolution_known_values() {
        let t = th(1.0, 1.0, 0.5);
        assert_relative_eq!(pmf_bp_convolution(0, 0, &t), (-1.5f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(
            pmf_bp_convolution(1, 0, &t),
            0.5 * (-1.5f64).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn pmf_mass_sums_to_one() {
        let t = th(1.5, 1.0, 0.5);
        let k = poisson_support_bound(2.5, 1e-16).max(50);
        let mut mass = 0.0;
        for x1 in 0..=k {
            for x2 in 0..=k {
                mass += pmf_bp_convolution(x1, x2, &t);
            }
        }
        assert!((mass - 1.0).abs() <= 1e-12, "mass {mass}");
    }

    #[test]
    fn recurrence_known_values() {
        let t = th(1.0, 1.0, 0.5);
        assert_relative_eq!(pmf_bp_recurrence(0, 0, &t), (-1.5f64).exp(), max_relative = 1e-13);
        // P11 = c0 * P00 with c0 = 0.5 + 0.25
        assert_relative_eq!(
            pmf_bp_recurrence(1, 1, &t),
            0.75 * (-1.5f64).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn recurrence_agrees_with_convolution() {
        let mut rng = substream(7, "recur-vs-conv", &[]);
        for _ in 0..1000 {
            let t3 = 0.02 + 3.0 * rng.random::<f64>();
            let t1 = t3 + 0.02 + 5.0 * rng.random::<f64>();
            let t2 = t3 + 0.02 + 5.0 * rng.random::<f64>();
            let theta = th(t1, t2, t3);
            let x1 = rng.random_range(0..=25u32);
            let x2 = rng.random_range(0..=25u32);
            let a = pmf_bp_recurrence(x1, x2, &theta);
            let b = pmf_bp_convolution(x1, x2, &theta);
            assert!((a - b).abs() <= 1e-12, "({x1},{x2}) {theta:?}: {a} vs {b}");
        }
    }

    #[test]
    fn margins_are_univariate_poisson() {
        let t = th(1.5, 1.0, 0.5);
        let k2 = poisson_support_bound(1.0, 1e-16).max(40);
        for x1 in 0..=12u32 {
            let row_sum: f64 = (0..=k2).map(|x2| pmf_bp_convolution(x1, x2, &t)).sum();
            let pois =
                (x1 as f64 * 1.5f64.ln() - 1.5 - ln_gamma(x1 as f64 + 1.0)).exp();
            assert!((row_sum - pois).abs() <= 1e-10, "x1={x1}: {row_sum} vs {pois}");
        }
    }

    #[test]
    fn pgf_pmf_consistency() {
        // Sum of pmf * u^x over a big support approaches the pgf.
        let t = th(2.0, 3.0, 1.0);
        let table = pmf_bp_table(60, 60, &t);
        for u in [[0.3, 0.9], [1.0, 0.2], [0.7, 0.7]] {
            let mut s = 0.0;
            for x1 in 0..=60u32 {
                for x2 in 0..=60u32 {
                    s += table.get(x1, x2) * u[0].powi(x1 as i32) * u[1].powi(x2 as i32);
                }
            }
            assert!((s - pgf_bp(u, &t)).abs() <= 1e-8, "u={u:?}");
        }
    }

    #[test]
    fn pmf_tp_mass_and_value() {
        let t = ThetaTp::new(1.0, 1.0, 1.0, 0.25).unwrap();
        assert_relative_eq!(
            pmf_tp_convolution([0, 0, 0], &t),
            (-3.0f64 + 0.5).exp(),
            max_relative = 1e-13
        );
        let mut mass = 0.0;
        for x1 in 0..=22u32 {
            for x2 in 0..=22u32 {
                for x3 in 0..=22u32 {
                    mass += pmf_tp_convolution([x1, x2, x3], &t);
                }
            }
        }
        assert!((mass - 1.0).abs() <= 1e-10, "mass {mass}");
    }

    #[test]
    fn sampler_is_deterministic() {
        let t = th(1.0, 1.0, 0.5);
        let a = sample_bp(&t, 100, &mut substream(9, "s", &[1]));
        let b = sample_bp(&t, 100, &mut substream(9, "s", &[1]));
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_moments() {
        let t = th(1.0, 1.0, 0.5);
        let n = 1_000_000usize;
        let s = sample_bp(&t, n, &mut substream(10, "moments", &[]));
        let nf = n as f64;
        let m1 = s.column_mean(0);
        let m2 = s.column_mean(1);
        let cov: f64 =
            s.rows().map(|r| (r[0] as f64 - m1) * (r[1] as f64 - m2)).sum::<f64>() / nf;
        // sd of the mean of Poisson(1): sqrt(1/n)
        let sd_mean = (1.0f64 / nf).sqrt();
        assert!((m1 - 1.0).abs() < 4.0 * sd_mean, "m1 {m1}");
        assert!((m2 - 1.0).abs() < 4.0 * sd_mean, "m2 {m2}");
        // Var of the sample covariance of a BP pair, loosely bounded by moment scale.
        let sd_cov = (3.0f64 / nf).sqrt();
        assert!((cov - 0.5).abs() < 4.0 * sd_cov, "cov {cov}");
        // empirical pmf at (0,0)
        let p00_hat =
            s.rows().filter(|r| r[0] == 0 && r[1] == 0).count() as f64 / nf;
        let p00 = (-1.5f64).exp();
        let sd = (p00 * (1.0 - p00) / nf).sqrt();
        assert!((p00_hat - p00).abs() < 4.0 * sd, "p00 {p00_hat}");
    }

    #[test]
    fn sampler_chi_square_against_pmf() {
        let t = th(1.0, 1.0, 0.5);
        let n = 1_000_000usize;
        let s = sample_bp(&t, n, &mut substream(11, "chisq", &[]));
        // 99.99% support region
        let k = poisson_support_bound(1.0, 1e-5) + 1;
        let table = pmf_bp_table(k as usize, k as usize, &t);
        let mut obs = vec![0u64; ((k + 1) * (k + 1)) as usize];
        let mut outside = 0u64;
        for r in s.rows() {
            if r[0] <= k && r[1] <= k {
                obs[(r[0] * (k + 1) + r[1]) as usize] += 1;
            } else {
                outside += 1;
            }
        }
        let mut x2 = 0.0;
        let mut cells = 0usize;
        let mut covered = 0.0;
        for x1 in 0..=k {
            for x2i in 0..=k {
                let p = table.get(x1, x2i);
                covered += p;
                let e = p * n as f64;
                if e >= 5.0 {
                    let o = obs[(x1 * (k + 1) + x2i) as usize] as f64;
                    x2 += (o - e).powi(2) / e;
                    cells += 1;
                }
            }
        }
        // fold the tail cell
        let e_tail = (1.0 - covered) * n as f64;
        if e_tail >= 5.0 {
            x2 += (outside as f64 - e_tail).powi(2) / e_tail;
            cells += 1;
        }
        let chi = statrs::distribution::ChiSquared::new((cells - 1) as f64).unwrap();
        let p = 1.0 - statrs::distribution::ContinuousCDF::cdf(&chi, x2);
        assert!(p > 1e-4, "sampler GOF p-value {p}");
    }

    #[test]
    fn trivariate_sampler_moments() {
        let t = ThetaTp::new(1.0, 1.0, 1.0, 0.25).unwrap();
        let n = 1_000_000usize;
        let s = sample_tp(&t, n, &mut substream(12, "tp-moments", &[]));
        let nf = n as f64;
        for k in 0..3 {
            let m = s.column_mean(k);
            assert!((m - 1.0).abs() < 4.0 * (1.0 / nf).sqrt(), "mean {k}: {m}");
        }
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let mi = s.column_mean(i);
            let mj = s.column_mean(j);
            let cov: f64 = s
                .rows()
                .map(|r| (r[i] as f64 - mi) * (r[j] as f64 - mj))
                .sum::<f64>()
                / nf;
            assert!((cov - 0.25).abs() < 4.0 * (2.5f64 / nf).sqrt(), "cov {i}{j}: {cov}");
        }
        assert_eq!(
            sample_tp(&t, 50, &mut substream(1, "d", &[2])),
            sample_tp(&t, 50, &mut substream(1, "d", &[2]))
        );
    }
}
