//! The empirical probability generating function and its partial derivatives.
//!
//! gₙ(u) = n⁻¹ Σᵢ ∏ₖ uₖ^{Xᵢₖ}, with the conventions 0⁰ = 1 and
//! x·u^{x−1} = 0 when x = 0 (derivative terms carry the indicator I{X ≥ 1}).
//!
//! [`GenFn2`]/[`GenFn3`] abstract over "empirical epgf of a sample" and
//! "exact model pgf at a fixed θ" so the residual and integral statistics can
//! be evaluated against either; the exact variant is what the zero-residual
//! characterization checks inject.

use crate::model::{pgf_bp, pgf_tp, CountSample, ThetaBp, ThetaTp};

/// A sample aggregated into unique rows with relative frequencies, sorted
/// lexicographically so accumulation order is reproducible.
#[derive(Debug, Clone)]
pub struct Aggregated {
    dim: usize,
    n: usize,
    values: Vec<u32>,
    /// Relative frequency of each unique row (sums to 1).
    freqs: Vec<f64>,
    col_max: Vec<u32>,
}

impl Aggregated {
    pub fn from_sample(sample: &CountSample) -> Self {
        let dim = sample.dim();
        let mut rows: Vec<&[u32]> = sample.rows().collect();
        rows.sort_unstable();
        let n = rows.len();
        let mut values = Vec::new();
        let mut freqs: Vec<f64> = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && rows[j] == rows[i] {
                j += 1;
            }
            values.extend_from_slice(rows[i]);
            freqs.push((j - i) as f64 / n as f64);
            i = j;
        }
        let col_max = (0..dim).map(|k| sample.column_max(k)).collect();
        Self { dim, n, values, freqs, col_max }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unique(&self) -> usize {
        self.freqs.len()
    }

    pub fn col_max(&self, k: usize) -> u32 {
        self.col_max[k]
    }

    /// Iterate (unique row, relative frequency).
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.values.chunks_exact(self.dim).zip(self.freqs.iter().copied())
    }
}

#[inline]
fn upow(u: f64, x: u32) -> f64 {
    u.powi(x as i32)
}

/// x·u^{x−1} with the I{x ≥ 1} convention.
#[inline]
fn dupow(u: f64, x: u32) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 * u.powi(x as i32 - 1)
    }
}

/// Generating function source on [0,1]²: empirical epgf or exact model pgf.
#[derive(Debug, Clone)]
pub enum GenFn2<'a> {
    Epgf(&'a Aggregated),
    Exact(ThetaBp),
}

impl GenFn2<'_> {
    pub fn g(&self, u: [f64; 2]) -> f64 {
        match self {
            GenFn2::Epgf(agg) => {
                agg.iter().map(|(x, f)| f * upow(u[0], x[0]) * upow(u[1], x[1])).sum()
            }
            GenFn2::Exact(theta) => pgf_bp(u, theta),
        }
    }

    /// ∂g/∂u₁.
    pub fn d1(&self, u: [f64; 2]) -> f64 {
        match self {
            GenFn2::Epgf(agg) => {
                agg.iter().map(|(x, f)| f * dupow(u[0], x[0]) * upow(u[1], x[1])).sum()
            }
            GenFn2::Exact(theta) => {
                pgf_bp(u, theta) * (theta.theta1() + theta.theta3() * (u[1] - 1.0))
            }
        }
    }

    /// ∂g/∂u₂.
    pub fn d2(&self, u: [f64; 2]) -> f64 {
        match self {
            GenFn2::Epgf(agg) => {
                agg.iter().map(|(x, f)| f * upow(u[0], x[0]) * dupow(u[1], x[1])).sum()
            }
            GenFn2::Exact(theta) => {
                pgf_bp(u, theta) * (theta.theta2() + theta.theta3() * (u[0] - 1.0))
            }
        }
    }

    /// ∂²g/∂u₁∂u₂.
    pub fn d12(&self, u: [f64; 2]) -> f64 {
        match self {
            GenFn2::Epgf(agg) => {
                agg.iter().map(|(x, f)| f * dupow(u[0], x[0]) * dupow(u[1], x[1])).sum()
            }
            GenFn2::Exact(theta) => pgf_bp(u, theta) * bp_f(u, theta),
        }
    }
}

/// f(u;θ) = θ₃ + {θ₂+θ₃(u₁−1)}{θ₁+θ₃(u₂−1)} — the factor characterizing the
/// mixed second derivative of the null pgf.
pub fn bp_f(u: [f64; 2], theta: &ThetaBp) -> f64 {
    let (t1, t2, t3) = (theta.theta1(), theta.theta2(), theta.theta3());
    t3 + (t2 + t3 * (u[0] - 1.0)) * (t1 + t3 * (u[1] - 1.0))
}

/// Generating function source on [0,1]³.
#[derive(Debug, Clone)]
pub enum GenFn3<'a> {
    Epgf(&'a Aggregated),
    Exact(ThetaTp),
}

impl GenFn3<'_> {
    pub fn g(&self, u: [f64; 3]) -> f64 {
        match self {
            GenFn3::Epgf(agg) => agg
                .iter()
                .map(|(x, f)| f * upow(u[0], x[0]) * upow(u[1], x[1]) * upow(u[2], x[2]))
                .sum(),
            GenFn3::Exact(theta) => pgf_tp(u, theta),
        }
    }

    /// First partial along `axis`.
    pub fn d(&self, u: [f64; 3], axis: usize) -> f64 {
        match self {
            GenFn3::Epgf(agg) => agg
                .iter()
                .map(|(x, f)| {
                    let mut t = f;
                    for k in 0..3 {
                        t *= if k == axis { dupow(u[k], x[k]) } else { upow(u[k], x[k]) };
                    }
                    t
                })
                .sum(),
            GenFn3::Exact(theta) => {
                let others: f64 = (0..3).filter(|&k| k != axis).map(|k| u[k]).product();
                pgf_tp(u, theta) * (theta.get(axis) + theta.theta4() * (others - 1.0))
            }
        }
    }

    /// Mixed second partial along distinct axes i < j.
    pub fn d2(&self, u: [f64; 3], i: usize, j: usize) -> f64 {
        debug_assert!(i != j);
        match self {
            GenFn3::Epgf(agg) => agg
                .iter()
                .map(|(x, f)| {
                    let mut t = f;
                    for k in 0..3 {
                        t *= if k == i || k == j { dupow(u[k], x[k]) } else { upow(u[k], x[k]) };
                    }
                    t
                })
                .sum(),
            GenFn3::Exact(theta) => {
                let k = 3 - i - j; // the remaining axis
                let t4 = theta.theta4();
                let oi: f64 = (0..3).filter(|&a| a != i).map(|a| u[a]).product();
                let oj: f64 = (0..3).filter(|&a| a != j).map(|a| u[a]).product();
                pgf_tp(u, theta)
                    * ((theta.get(i) + t4 * (oi - 1.0)) * (theta.get(j) + t4 * (oj - 1.0))
                        + t4 * u[k])
            }
        }
    }

    /// ∂³g/∂u₁∂u₂∂u₃.
    pub fn d123(&self, u: [f64; 3]) -> f64 {
        match self {
            GenFn3::Epgf(agg) => agg
                .iter()
                .map(|(x, f)| f * dupow(u[0], x[0]) * dupow(u[1], x[1]) * dupow(u[2], x[2]))
                .sum(),
            GenFn3::Exact(theta) => pgf_tp(u, theta) * tp_h(u, theta),
        }
    }
}

/// h(u;θ) = ∏ᵢ{θᵢ+θ₄(∏_{j≠i}uⱼ−1)} + θ₄(1 + Σₖ uₖ{θₖ+θ₄(∏_{j≠k}uⱼ−1)}) —
/// the factor characterizing the third mixed derivative of the null pgf.
pub fn tp_h(u: [f64; 3], theta: &ThetaTp) -> f64 {
    let t4 = theta.theta4();
    let c = |i: usize| -> f64 {
        let others: f64 = (0..3).filter(|&k| k != i).map(|k| u[k]).product();
        theta.get(i) + t4 * (others - 1.0)
    };
    let (c0, c1, c2) = (c(0), c(1), c(2));
    c0 * c1 * c2 + t4 * (1.0 + u[0] * c0 + u[1] * c1 + u[2] * c2)
}

// Convenience single-point entry points over a raw sample (d = 2).

/// gₙ(u) for a bivariate sample.
pub fn epgf(sample: &CountSample, u: [f64; 2]) -> f64 {
    GenFn2::Epgf(&Aggregated::from_sample(sample)).g(u)
}

/// ∂gₙ/∂u₁.
pub fn epgf_d1(sample: &CountSample, u: [f64; 2]) -> f64 {
    GenFn2::Epgf(&Aggregated::from_sample(sample)).d1(u)
}

/// ∂gₙ/∂u₂.
pub fn epgf_d2(sample: &CountSample, u: [f64; 2]) -> f64 {
    GenFn2::Epgf(&Aggregated::from_sample(sample)).d2(u)
}

/// ∂²gₙ/∂u₁∂u₂.
pub fn epgf_d12(sample: &CountSample, u: [f64; 2]) -> f64 {
    GenFn2::Epgf(&Aggregated::from_sample(sample)).d12(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_bp;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    #[test]
    fn epgf_normalization() {
        let s = CountSample::from_pairs(&[(0, 1), (2, 3), (0, 1), (5, 0)]).unwrap();
        assert_eq!(epgf(&s, [1.0, 1.0]), 1.0);
    }

    #[test]
    fn constant_zero_sample() {
        let s = CountSample::from_pairs(&[(0, 0)]).unwrap();
        for u in [[0.0, 0.0], [0.3, 0.9], [1.0, 1.0]] {
            assert_eq!(epgf(&s, u), 1.0);
            assert_eq!(epgf_d1(&s, u), 0.0);
            assert_eq!(epgf_d2(&s, u), 0.0);
            assert_eq!(epgf_d12(&s, u), 0.0);
        }
    }

    #[test]
    fn aggregation_preserves_multiplicity() {
        let s = CountSample::from_pairs(&[(1, 2), (0, 0), (1, 2), (1, 2)]).unwrap();
        let agg = Aggregated::from_sample(&s);
        assert_eq!(agg.unique(), 2);
        let freqs: Vec<f64> = agg.iter().map(|(_, f)| f).collect();
        assert_relative_eq!(freqs.iter().sum::<f64>(), 1.0, max_relative = 1e-15);
        assert_eq!(agg.col_max(0), 1);
        assert_eq!(agg.col_max(1), 2);
    }

    #[test]
    fn partials_match_finite_differences() {
        let theta = ThetaBp::new(1.5, 1.0, 0.5).unwrap();
        let s = sample_bp(&theta, 60, &mut substream(21, "epgf-fd", &[]));
        let agg = Aggregated::from_sample(&s);
        let g = GenFn2::Epgf(&agg);
        let h = 1e-6;
        for u in [[0.3, 0.7], [0.9, 0.2], [0.5, 0.5]] {
            let fd1 = (g.g([u[0] + h, u[1]]) - g.g([u[0] - h, u[1]])) / (2.0 * h);
            assert!((g.d1(u) - fd1).abs() < 1e-6, "d1 at {u:?}");
            let fd2 = (g.g([u[0], u[1] + h]) - g.g([u[0], u[1] - h])) / (2.0 * h);
            assert!((g.d2(u) - fd2).abs() < 1e-6, "d2 at {u:?}");
            let fd12 = (g.d1([u[0], u[1] + h]) - g.d1([u[0], u[1] - h])) / (2.0 * h);
            assert!((g.d12(u) - fd12).abs() < 1e-6, "d12 at {u:?}");
        }
    }

    #[test]
    fn exact_source_matches_model_derivatives() {
        let theta = ThetaBp::new(1.2, 0.9, 0.4).unwrap();
        let g = GenFn2::Exact(theta);
        let h = 1e-6;
        let u = [0.4, 0.6];
        let fd1 = (g.g([u[0] + h, u[1]]) - g.g([u[0] - h, u[1]])) / (2.0 * h);
        assert!((g.d1(u) - fd1).abs() < 1e-8);
        let fd12 = (g.d1([u[0], u[1] + h]) - g.d1([u[0], u[1] - h])) / (2.0 * h);
        assert!((g.d12(u) - fd12).abs() < 1e-7);
    }

    #[test]
    fn trivariate_partials_match_finite_differences() {
        let theta = ThetaTp::new(1.0, 1.2, 0.9, 0.3).unwrap();
        let s = crate::model::sample_tp(&theta, 50, &mut substream(22, "epgf3-fd", &[]));
        let agg = Aggregated::from_sample(&s);
        let g = GenFn3::Epgf(&agg);
        let h = 1e-5;
        let u = [0.4, 0.7, 0.5];
        for axis in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[axis] += h;
            dn[axis] -= h;
            let fd = (g.g(up) - g.g(dn)) / (2.0 * h);
            assert!((g.d(u, axis) - fd).abs() < 1e-5, "axis {axis}");
        }
        // third order against nested differences of d2
        let fd3 = {
            let mut up = u;
            let mut dn = u;
            up[2] += h;
            dn[2] -= h;
            (g.d2(up, 0, 1) - g.d2(dn, 0, 1)) / (2.0 * h)
        };
        assert!((g.d123(u) - fd3).abs() < 1e-5, "third-order partial");
    }
}
