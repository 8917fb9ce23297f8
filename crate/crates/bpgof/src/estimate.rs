//! Estimation of the null parameters: moment estimator and maximum
//! likelihood.
//!
//! The MLE profiles the likelihood over the common-shock mean (θ₃, or θ₄ in
//! the trivariate case). For a fixed shock the remaining score equations are
//! solved by damped Newton in the reduced means, using the identities
//!   ∂ℓ/∂θ'ₖ = Σᵢ P(x−eₖ)/P(x) − n,
//!   ∂ℓ/∂shock|reduced = Σᵢ P(x−1)/P(x) − n,
//! where the shifted-pmf ratios come straight off the pmf table. The outer
//! one-dimensional maximization is golden-section followed by a Newton polish
//! on the profile score. At an interior optimum the fitted marginal means
//! match the sample means exactly (Holgate's identity), which the profile
//! search recovers numerically rather than assuming.

use crate::epgf::Aggregated;
use crate::error::{Error, Result};
use crate::model::{log_pmf_tp, pmf_bp_table, CountSample, ThetaBp, ThetaTp};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Divisor convention for sample variances and covariances.
///
/// The moment tests are sensitive to this choice; one convention is applied
/// globally. Default is `N` (moment-estimator convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Divisor {
    #[default]
    N,
    NMinus1,
}

/// First and second sample moments of a d-dimensional count sample.
#[derive(Debug, Clone)]
pub struct Moments {
    pub n: usize,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// Covariances for the index pairs (0,1) [, (0,2), (1,2)].
    pub cov: Vec<f64>,
}

pub fn sample_moments(sample: &CountSample, divisor: Divisor) -> Moments {
    let d = sample.dim();
    let n = sample.n();
    let div = match divisor {
        Divisor::N => n as f64,
        Divisor::NMinus1 => (n as f64 - 1.0).max(1.0),
    };
    let mean: Vec<f64> = (0..d).map(|k| sample.column_mean(k)).collect();
    let mut var = vec![0.0; d];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            pairs.push((i, j));
        }
    }
    let mut cov = vec![0.0; pairs.len()];
    for r in sample.rows() {
        for k in 0..d {
            let c = r[k] as f64 - mean[k];
            var[k] += c * c;
        }
        for (pi, &(i, j)) in pairs.iter().enumerate() {
            cov[pi] += (r[i] as f64 - mean[i]) * (r[j] as f64 - mean[j]);
        }
    }
    for v in var.iter_mut().chain(cov.iter_mut()) {
        *v /= div;
    }
    Moments { n, mean, var, cov }
}

/// Estimation method identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Moment,
    Mle,
}

/// A fitted parameter vector of either family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedTheta {
    Bp(ThetaBp),
    Tp(ThetaTp),
}

impl FittedTheta {
    pub fn dim(&self) -> usize {
        match self {
            FittedTheta::Bp(_) => 2,
            FittedTheta::Tp(_) => 3,
        }
    }

    pub fn as_vec(&self) -> Vec<f64> {
        match self {
            FittedTheta::Bp(t) => t.as_array().to_vec(),
            FittedTheta::Tp(t) => t.as_array().to_vec(),
        }
    }

    pub fn bp(&self) -> Result<&ThetaBp> {
        match self {
            FittedTheta::Bp(t) => Ok(t),
            FittedTheta::Tp(_) => Err(Error::Dimension { expected: 2, got: 3 }),
        }
    }

    pub fn tp(&self) -> Result<&ThetaTp> {
        match self {
            FittedTheta::Tp(t) => Ok(t),
            FittedTheta::Bp(_) => Err(Error::Dimension { expected: 3, got: 2 }),
        }
    }
}

/// Result of a point estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub theta: FittedTheta,
    pub method: Method,
    pub loglik: f64,
    pub converged: bool,
    /// Set when the shock estimate was clamped at the edge of its range.
    pub boundary: bool,
}

/// Clamping margin for the shock parameter.
pub const EPS: f64 = 1e-8;

const INNER_FLOOR: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Moment estimator
// ---------------------------------------------------------------------------

/// Moment estimator: marginal means and the clamped sample covariance
/// (mean of the pairwise covariances in the trivariate case).
pub fn moment_estimate(sample: &CountSample) -> Result<EstimateResult> {
    moment_estimate_div(sample, Divisor::N)
}

pub fn moment_estimate_div(sample: &CountSample, divisor: Divisor) -> Result<EstimateResult> {
    if sample.n() < 2 {
        return Err(Error::DegenerateSample("need n >= 2".into()));
    }
    let m = sample_moments(sample, divisor);
    if m.mean.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateSample(format!(
            "a marginal mean is zero: {:?}",
            m.mean
        )));
    }
    let min_mean = m.mean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = min_mean - EPS;
    let raw_shock = m.cov.iter().sum::<f64>() / m.cov.len() as f64;
    let shock = raw_shock.clamp(EPS, hi.max(EPS));
    let boundary = shock != raw_shock;
    let (theta, loglik) = match sample.dim() {
        2 => {
            let t = ThetaBp::new(m.mean[0], m.mean[1], shock)?;
            (FittedTheta::Bp(t), log_likelihood(sample, &t)?)
        }
        3 => {
            let t = ThetaTp::new(m.mean[0], m.mean[1], m.mean[2], shock)?;
            (FittedTheta::Tp(t), log_likelihood_tp(sample, &t)?)
        }
        d => return Err(Error::Dimension { expected: 2, got: d }),
    };
    Ok(EstimateResult { theta, method: Method::Moment, loglik, converged: true, boundary })
}

// ---------------------------------------------------------------------------
// Log-likelihoods
// ---------------------------------------------------------------------------

/// Σᵢ log pmf(Xᵢ; θ) via one recurrence table over the sample support.
pub fn log_likelihood(sample: &CountSample, theta: &ThetaBp) -> Result<f64> {
    if sample.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: sample.dim() });
    }
    let agg = Aggregated::from_sample(sample);
    ll_bp_agg(&agg, theta)
}

fn ll_bp_agg(agg: &Aggregated, theta: &ThetaBp) -> Result<f64> {
    let table = pmf_bp_table(agg.col_max(0) as usize, agg.col_max(1) as usize, theta);
    let n = agg.n() as f64;
    let mut ll = 0.0;
    for (x, f) in agg.iter() {
        let p = table.get(x[0], x[1]);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Numerical(format!(
                "pmf not positive at row ({}, {}) for theta {:?}",
                x[0], x[1], theta
            )));
        }
        ll += f * n * p.ln();
    }
    Ok(ll)
}

/// Trivariate log-likelihood via per-point convolution sums.
pub fn log_likelihood_tp(sample: &CountSample, theta: &ThetaTp) -> Result<f64> {
    if sample.dim() != 3 {
        return Err(Error::Dimension { expected: 3, got: sample.dim() });
    }
    let agg = Aggregated::from_sample(sample);
    let n = agg.n() as f64;
    let mut ll = 0.0;
    for (x, f) in agg.iter() {
        let lp = log_pmf_tp([x[0], x[1], x[2]], theta);
        if !lp.is_finite() {
            return Err(Error::Numerical(format!(
                "pmf not positive at row {x:?} for theta {theta:?}"
            )));
        }
        ll += f * n * lp;
    }
    Ok(ll)
}

// ---------------------------------------------------------------------------
// Bivariate MLE
// ---------------------------------------------------------------------------

struct BpState {
    t1p: f64,
    t2p: f64,
    ll: f64,
    s1: f64,
    s2: f64,
    h11: f64,
    h12: f64,
    h22: f64,
    /// Profile score in the shock direction: Σ P(x−1,y−1)/P − n.
    s_shock: f64,
}

fn bp_state(agg: &Aggregated, t1p: f64, t2p: f64, t3: f64) -> Result<BpState> {
    let theta = ThetaBp::new(t1p + t3, t2p + t3, t3)?;
    let table = pmf_bp_table(agg.col_max(0) as usize, agg.col_max(1) as usize, &theta);
    let n = agg.n() as f64;
    let (mut ll, mut sr1, mut sr2, mut srb) = (0.0, 0.0, 0.0, 0.0);
    let (mut h11, mut h12, mut h22) = (0.0, 0.0, 0.0);
    for (x, f) in agg.iter() {
        let cnt = f * n;
        let p = table.get(x[0], x[1]);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Numerical(format!("pmf underflow at ({}, {})", x[0], x[1])));
        }
        let r1 = table.get_shifted(x[0], x[1], 1, 0) / p;
        let r2 = table.get_shifted(x[0], x[1], 0, 1) / p;
        let r11 = table.get_shifted(x[0], x[1], 2, 0) / p;
        let r22 = table.get_shifted(x[0], x[1], 0, 2) / p;
        let r12 = table.get_shifted(x[0], x[1], 1, 1) / p;
        ll += cnt * p.ln();
        sr1 += cnt * r1;
        sr2 += cnt * r2;
        srb += cnt * r12;
        h11 += cnt * (r11 - r1 * r1);
        h12 += cnt * (r12 - r1 * r2);
        h22 += cnt * (r22 - r2 * r2);
    }
    Ok(BpState {
        t1p,
        t2p,
        ll,
        s1: sr1 - n,
        s2: sr2 - n,
        h11,
        h12,
        h22,
        s_shock: srb - n,
    })
}

/// Inner solve: maximize over the reduced means at fixed shock t3.
fn bp_profile_at(agg: &Aggregated, t3: f64, init: (f64, f64), trace: &mut Vec<f64>) -> Result<BpState> {
    let n = agg.n() as f64;
    let tol_s = 1e-9 * n;
    let mut cur = bp_state(agg, init.0.max(INNER_FLOOR), init.1.max(INNER_FLOOR), t3)?;
    for _ in 0..60 {
        if cur.s1.abs() <= tol_s && cur.s2.abs() <= tol_s {
            break;
        }
        let det = cur.h11 * cur.h22 - cur.h12 * cur.h12;
        let (mut d1, mut d2) = if det.abs() > 1e-300 && det.is_finite() {
            (
                -(cur.h22 * cur.s1 - cur.h12 * cur.s2) / det,
                -(cur.h11 * cur.s2 - cur.h12 * cur.s1) / det,
            )
        } else {
            (0.0, 0.0)
        };
        // Newton direction must ascend; otherwise fall back to the gradient.
        if !(d1.is_finite() && d2.is_finite()) || d1 * cur.s1 + d2 * cur.s2 <= 0.0 {
            let norm = (cur.s1.powi(2) + cur.s2.powi(2)).sqrt();
            d1 = cur.s1 / norm * 0.1 * (1.0 + cur.t1p);
            d2 = cur.s2 / norm * 0.1 * (1.0 + cur.t2p);
        }
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let nt1 = (cur.t1p + lam * d1).max(INNER_FLOOR);
            let nt2 = (cur.t2p + lam * d2).max(INNER_FLOOR);
            if let Ok(trial) = bp_state(agg, nt1, nt2, t3) {
                if trial.ll >= cur.ll - 1e-13 * (1.0 + cur.ll.abs()) {
                    let improved = trial.ll - cur.ll;
                    cur = trial;
                    trace.push(cur.ll);
                    accepted = true;
                    if improved.abs() <= 1e-13 * (1.0 + cur.ll.abs()) {
                        return Ok(cur);
                    }
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(cur)
}

/// Maximum-likelihood estimate for a bivariate sample.
pub fn mle(sample: &CountSample) -> Result<EstimateResult> {
    mle_traced(sample).map(|(r, _)| r)
}

/// MLE with the sequence of accepted log-likelihood values (diagnostic; the
/// sequence never decreases).
pub fn mle_traced(sample: &CountSample) -> Result<(EstimateResult, Vec<f64>)> {
    if sample.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: sample.dim() });
    }
    if sample.n() < 2 {
        return Err(Error::DegenerateSample("need n >= 2".into()));
    }
    let agg = Aggregated::from_sample(sample);
    let m = sample_moments(sample, Divisor::N);
    if m.mean[0] <= 0.0 || m.mean[1] <= 0.0 {
        return Err(Error::DegenerateSample(format!("a marginal mean is zero: {:?}", m.mean)));
    }
    let mut trace = Vec::new();
    let lo = EPS;
    let hi = m.mean[0].min(m.mean[1]) - EPS;
    if hi <= lo {
        // Means so small the admissible shock interval is empty up to clamps.
        let t3 = (m.mean[0].min(m.mean[1]) * 0.5).max(1e-12);
        let sol = bp_profile_at(&agg, t3, (m.mean[0] - t3, m.mean[1] - t3), &mut trace)?;
        let theta = ThetaBp::new(sol.t1p + t3, sol.t2p + t3, t3)?;
        let res = EstimateResult {
            theta: FittedTheta::Bp(theta),
            method: Method::Mle,
            loglik: sol.ll,
            converged: true,
            boundary: true,
        };
        return Ok((res, trace));
    }

    let mut best: Option<(f64, BpState)> = None;
    let mut best_ll = f64::NEG_INFINITY;
    let init_for = |t3: f64, best: &Option<(f64, BpState)>| -> (f64, f64) {
        match best {
            Some((bt3, st)) => ((st.t1p + bt3 - t3).max(INNER_FLOOR), (st.t2p + bt3 - t3).max(INNER_FLOOR)),
            None => (m.mean[0] - t3, m.mean[1] - t3),
        }
    };
    macro_rules! eval {
        ($t3:expr) => {{
            let t3v: f64 = $t3;
            let sol = bp_profile_at(&agg, t3v, init_for(t3v, &best), &mut trace)?;
            let ll = sol.ll;
            if ll > best_ll {
                best_ll = ll;
                best = Some((t3v, sol));
                trace.push(ll);
            }
            ll
        }};
    }

    // Moment shock as an explicit candidate guarantees dominance over the
    // moment estimator (the inner solve starts at the moment point).
    let t3_moment = (m.cov[0]).clamp(lo, hi);
    eval!(t3_moment);

    // Golden-section over the shock.
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval!(c);
    let mut fd = eval!(d);
    let xtol = 1e-5 * (1.0 + hi);
    let mut outer_iters = 0usize;
    while b - a > xtol && outer_iters < 200 {
        outer_iters += 1;
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval!(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval!(d);
        }
    }

    // Newton polish on the profile score in the shock direction.
    let n = agg.n() as f64;
    let mut converged = false;
    for _ in 0..12 {
        let (t3, ref sol) = *best.as_ref().unwrap();
        if sol.s_shock.abs() <= 1e-8 * n || t3 - lo < 1e-12 || hi - t3 < 1e-12 {
            converged = true;
            break;
        }
        let h = (1e-6 * (1.0 + t3)).min(0.25 * (hi - lo));
        let sp = bp_profile_at(&agg, (t3 + h).min(hi), init_for(t3 + h, &best), &mut trace)?;
        let sm = bp_profile_at(&agg, (t3 - h).max(lo), init_for(t3 - h, &best), &mut trace)?;
        let ds = (sp.s_shock - sm.s_shock) / ((t3 + h).min(hi) - (t3 - h).max(lo));
        if !ds.is_finite() || ds >= 0.0 {
            converged = sol.s_shock.abs() <= 1e-6 * n;
            break;
        }
        let t3_new = (t3 - sol.s_shock / ds).clamp(lo, hi);
        let prev_ll = best_ll;
        eval!(t3_new);
        if (best_ll - prev_ll).abs() <= 1e-10 {
            converged = true;
            break;
        }
    }
    if outer_iters >= 200 {
        converged = false;
    }

    let (t3, sol) = best.unwrap();
    let boundary = t3 - lo < 1e-7 || hi - t3 < 1e-7;
    let theta = ThetaBp::new(sol.t1p + t3, sol.t2p + t3, t3)?;
    let res = EstimateResult {
        theta: FittedTheta::Bp(theta),
        method: Method::Mle,
        loglik: sol.ll,
        converged: converged || boundary,
        boundary,
    };
    Ok((res, trace))
}

// ---------------------------------------------------------------------------
// Trivariate MLE
// ---------------------------------------------------------------------------

/// Precomputed log-factorials for the convolution sums.
struct LogFact(Vec<f64>);

impl LogFact {
    fn new(max: usize) -> Self {
        let mut v = Vec::with_capacity(max + 1);
        for k in 0..=max {
            v.push(ln_gamma(k as f64 + 1.0));
        }
        LogFact(v)
    }

    #[inline]
    fn get(&self, k: u32) -> f64 {
        self.0[k as usize]
    }
}

/// pmf of the trivariate family at x (possibly with negative shifts -> 0),
/// with cached log-factorials; linear-space result.
#[inline]
fn tp_pmf_shift(x: [i64; 3], red: [f64; 3], logs: [f64; 4], base: f64, lf: &LogFact) -> f64 {
    if x.iter().any(|&v| v < 0) {
        return 0.0;
    }
    let _ = red;
    let kmax = x.iter().cloned().min().unwrap() as u32;
    let mut acc = 0.0f64;
    // max exponent first for a stable linear sum is unnecessary: exp of each
    // term directly; magnitudes are tame for the θ ranges exercised.
    for k in 0..=kmax {
        let kf = k as f64;
        let mut t = kf * logs[3] - lf.get(k);
        for i in 0..3 {
            let a = x[i] as u32 - k;
            t += a as f64 * logs[i] - lf.get(a);
        }
        acc += (t + base).exp();
    }
    acc
}

struct TpState {
    tp: [f64; 3],
    ll: f64,
    s: [f64; 3],
    h: [[f64; 3]; 3],
    s_shock: f64,
}

fn tp_state(agg: &Aggregated, tp: [f64; 3], t4: f64) -> Result<TpState> {
    let red = tp;
    if red.iter().any(|&v| !(v > 0.0)) || t4 <= 0.0 {
        return Err(Error::InvalidTheta("reduced means must be positive".into()));
    }
    let base = -red[0] - red[1] - red[2] - t4;
    let logs = [red[0].ln(), red[1].ln(), red[2].ln(), t4.ln()];
    let maxc = (0..3).map(|k| agg.col_max(k)).max().unwrap() as usize + 2;
    let lf = LogFact::new(maxc);
    let n = agg.n() as f64;
    let mut ll = 0.0;
    let mut sr = [0.0f64; 3];
    let mut h = [[0.0f64; 3]; 3];
    let mut sr_all = 0.0f64;
    for (x, f) in agg.iter() {
        let cnt = f * n;
        let xi = [x[0] as i64, x[1] as i64, x[2] as i64];
        let p = tp_pmf_shift(xi, red, logs, base, &lf);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Numerical(format!("pmf underflow at {x:?}")));
        }
        let mut r = [0.0f64; 3];
        for i in 0..3 {
            let mut sx = xi;
            sx[i] -= 1;
            r[i] = tp_pmf_shift(sx, red, logs, base, &lf) / p;
        }
        let r_all = tp_pmf_shift([xi[0] - 1, xi[1] - 1, xi[2] - 1], red, logs, base, &lf) / p;
        ll += cnt * p.ln();
        sr_all += cnt * r_all;
        for i in 0..3 {
            sr[i] += cnt * r[i];
            for j in i..3 {
                let mut sx = xi;
                sx[i] -= 1;
                sx[j] -= 1;
                let rij = tp_pmf_shift(sx, red, logs, base, &lf) / p;
                h[i][j] += cnt * (rij - r[i] * r[j]);
            }
        }
    }
    for i in 0..3 {
        for j in 0..i {
            h[i][j] = h[j][i];
        }
    }
    Ok(TpState {
        tp,
        ll,
        s: [sr[0] - n, sr[1] - n, sr[2] - n],
        h,
        s_shock: sr_all - n,
    })
}

/// Solve H d = -s for a 3x3 system; `None` when singular.
fn solve3(h: &[[f64; 3]; 3], s: &[f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&h[i]);
        a[i][3] = -s[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut d = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut v = a[i][3];
        for k in (i + 1)..3 {
            v -= a[i][k] * d[k];
        }
        d[i] = v / a[i][i];
        if !d[i].is_finite() {
            return None;
        }
    }
    Some(d)
}

fn tp_profile_at(agg: &Aggregated, t4: f64, init: [f64; 3], trace: &mut Vec<f64>) -> Result<TpState> {
    let n = agg.n() as f64;
    let tol_s = 1e-9 * n;
    let init = [init[0].max(INNER_FLOOR), init[1].max(INNER_FLOOR), init[2].max(INNER_FLOOR)];
    let mut cur = tp_state(agg, init, t4)?;
    for _ in 0..60 {
        if cur.s.iter().all(|v| v.abs() <= tol_s) {
            break;
        }
        let mut dir = solve3(&cur.h, &cur.s).unwrap_or([0.0; 3]);
        let ascent: f64 = dir.iter().zip(&cur.s).map(|(d, s)| d * s).sum();
        if !dir.iter().all(|v| v.is_finite()) || ascent <= 0.0 {
            let norm = cur.s.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..3 {
                dir[i] = cur.s[i] / norm * 0.1 * (1.0 + cur.tp[i]);
            }
        }
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut nt = [0.0f64; 3];
            for i in 0..3 {
                nt[i] = (cur.tp[i] + lam * dir[i]).max(INNER_FLOOR);
            }
            if let Ok(trial) = tp_state(agg, nt, t4) {
                if trial.ll >= cur.ll - 1e-13 * (1.0 + cur.ll.abs()) {
                    let improved = trial.ll - cur.ll;
                    cur = trial;
                    trace.push(cur.ll);
                    accepted = true;
                    if improved.abs() <= 1e-13 * (1.0 + cur.ll.abs()) {
                        return Ok(cur);
                    }
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(cur)
}

/// Maximum-likelihood estimate for a trivariate sample.
pub fn mle_tp(sample: &CountSample) -> Result<EstimateResult> {
    mle_tp_traced(sample).map(|(r, _)| r)
}

pub fn mle_tp_traced(sample: &CountSample) -> Result<(EstimateResult, Vec<f64>)> {
    if sample.dim() != 3 {
        return Err(Error::Dimension { expected: 3, got: sample.dim() });
    }
    if sample.n() < 2 {
        return Err(Error::DegenerateSample("need n >= 2".into()));
    }
    let agg = Aggregated::from_sample(sample);
    let m = sample_moments(sample, Divisor::N);
    if m.mean.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateSample(format!("a marginal mean is zero: {:?}", m.mean)));
    }
    let mut trace = Vec::new();
    let lo = EPS;
    let min_mean = m.mean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = min_mean - EPS;
    if hi <= lo {
        let t4 = (min_mean * 0.5).max(1e-12);
        let init = [m.mean[0] - t4, m.mean[1] - t4, m.mean[2] - t4];
        let sol = tp_profile_at(&agg, t4, init, &mut trace)?;
        let theta = ThetaTp::new(sol.tp[0] + t4, sol.tp[1] + t4, sol.tp[2] + t4, t4)?;
        let res = EstimateResult {
            theta: FittedTheta::Tp(theta),
            method: Method::Mle,
            loglik: sol.ll,
            converged: true,
            boundary: true,
        };
        return Ok((res, trace));
    }

    let mut best: Option<(f64, TpState)> = None;
    let mut best_ll = f64::NEG_INFINITY;
    let init_for = |t4: f64, best: &Option<(f64, TpState)>| -> [f64; 3] {
        match best {
            Some((bt4, st)) => [
                (st.tp[0] + bt4 - t4).max(INNER_FLOOR),
                (st.tp[1] + bt4 - t4).max(INNER_FLOOR),
                (st.tp[2] + bt4 - t4).max(INNER_FLOOR),
            ],
            None => [m.mean[0] - t4, m.mean[1] - t4, m.mean[2] - t4],
        }
    };
    macro_rules! eval {
        ($t4:expr) => {{
            let t4v: f64 = $t4;
            let sol = tp_profile_at(&agg, t4v, init_for(t4v, &best), &mut trace)?;
            let ll = sol.ll;
            if ll > best_ll {
                best_ll = ll;
                best = Some((t4v, sol));
                trace.push(ll);
            }
            ll
        }};
    }

    let t4_moment = (m.cov.iter().sum::<f64>() / 3.0).clamp(lo, hi);
    eval!(t4_moment);

    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval!(c);
    let mut fd = eval!(d);
    let xtol = 1e-5 * (1.0 + hi);
    let mut outer_iters = 0usize;
    while b - a > xtol && outer_iters < 200 {
        outer_iters += 1;
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval!(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval!(d);
        }
    }

    let n = agg.n() as f64;
    let mut converged = false;
    for _ in 0..12 {
        let (t4, ref sol) = *best.as_ref().unwrap();
        if sol.s_shock.abs() <= 1e-8 * n || t4 - lo < 1e-12 || hi - t4 < 1e-12 {
            converged = true;
            break;
        }
        let h = (1e-6 * (1.0 + t4)).min(0.25 * (hi - lo));
        let sp = tp_profile_at(&agg, (t4 + h).min(hi), init_for(t4 + h, &best), &mut trace)?;
        let sm = tp_profile_at(&agg, (t4 - h).max(lo), init_for(t4 - h, &best), &mut trace)?;
        let ds = (sp.s_shock - sm.s_shock) / ((t4 + h).min(hi) - (t4 - h).max(lo));
        if !ds.is_finite() || ds >= 0.0 {
            converged = sol.s_shock.abs() <= 1e-6 * n;
            break;
        }
        let t4_new = (t4 - sol.s_shock / ds).clamp(lo, hi);
        let prev_ll = best_ll;
        eval!(t4_new);
        if (best_ll - prev_ll).abs() <= 1e-10 {
            converged = true;
            break;
        }
    }
    if outer_iters >= 200 {
        converged = false;
    }

    let (t4, sol) = best.unwrap();
    let boundary = t4 - lo < 1e-7 || hi - t4 < 1e-7;
    let theta = ThetaTp::new(sol.tp[0] + t4, sol.tp[1] + t4, sol.tp[2] + t4, t4)?;
    let res = EstimateResult {
        theta: FittedTheta::Tp(theta),
        method: Method::Mle,
        loglik: sol.ll,
        converged: converged || boundary,
        boundary,
    };
    Ok((res, trace))
}

/// Dispatch on sample dimension.
pub fn estimate(sample: &CountSample, method: Method) -> Result<EstimateResult> {
    match (method, sample.dim()) {
        (Method::Moment, _) => moment_estimate(sample),
        (Method::Mle, 2) => mle(sample),
        (Method::Mle, 3) => mle_tp(sample),
        (Method::Mle, d) => Err(Error::Dimension { expected: 2, got: d }),
    }
}
