//! Tensor-product Gauss rules on the unit square/cube.
//!
//! The integral statistics use the weight w(u) = ∏ uₖ^{aₖ} with aₖ > −1.
//! Each axis gets a Gauss–Jacobi rule for the weight u^{aₖ} on [0,1] (plain
//! Gauss–Legendre when aₖ = 0), so the weight — singular at 0 for
//! aₖ ∈ (−1,0) — is absorbed into the rule and integrands stay polynomial
//! wherever only the epgf appears. Nodes and weights come from the
//! Golub–Welsch eigenvalue construction.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// Default per-axis order for bivariate integral statistics.
pub const DEFAULT_ORDER_2D: usize = 32;
/// Default per-axis order for trivariate integral statistics (cost grows cubically).
pub const DEFAULT_ORDER_3D: usize = 24;

/// One axis of a tensor rule: nodes in (0,1) and weights with the
/// u^exponent factor absorbed, so ∫₀¹ u^a f(u) du ≈ Σ wᵢ f(uᵢ).
#[derive(Debug, Clone)]
pub struct GridAxis {
    pub exponent: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Tensor-product rule over [0,1]^d.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    order: usize,
    axes: Vec<GridAxis>,
}

impl QuadratureGrid {
    /// Build a rule of the given per-axis order for weight exponents `a`
    /// (one entry per axis, each > −1).
    pub fn new(order: usize, a: &[f64]) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument("quadrature order must be >= 2".into()));
        }
        if a.is_empty() {
            return Err(Error::InvalidArgument("at least one axis".into()));
        }
        let axes = a
            .iter()
            .map(|&ak| {
                let (nodes, weights) = gauss_jacobi_01(order, ak)?;
                Ok(GridAxis { exponent: ak, nodes, weights })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { order, axes })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &GridAxis {
        &self.axes[k]
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.axes.iter().map(|ax| ax.exponent).collect()
    }

    /// Same exponents at a different order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        Self::new(order, &self.exponents())
    }

    /// ∫₀¹ u^a du for axis k — the mass the absorbed weight integrates to.
    pub fn axis_mass(&self, k: usize) -> f64 {
        1.0 / (self.axes[k].exponent + 1.0)
    }
}

/// Nodes and weights for ∫₀¹ u^a f(u) du with a > −1.
pub fn gauss_jacobi_01(order: usize, a: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("weight exponent must be > -1, got {a}")));
    }
    // Jacobi weight (1-x)^alpha (1+x)^beta on [-1,1] with alpha = 0, beta = a.
    let (alpha, beta) = (0.0f64, a);
    let n = order;
    let ab = alpha + beta;
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    d[0] = (beta - alpha) / (ab + 2.0);
    for (k, dk) in d.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *dk = (beta * beta - alpha * alpha)
            / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0));
    }
    if n > 1 {
        e[0] = (4.0 * (alpha + 1.0) * (beta + 1.0) / ((ab + 2.0).powi(2) * (ab + 3.0))).sqrt();
    }
    for k in 2..n {
        let kf = k as f64;
        let b = 4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab)
            / ((2.0 * kf + ab).powi(2) * (2.0 * kf + ab + 1.0) * (2.0 * kf + ab - 1.0));
        e[k - 1] = b.sqrt();
    }
    // total mass on [-1,1]: 2^(ab+1) * B(alpha+1, beta+1)
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(ab + 2.0))
        .exp();
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    imtqlx(&mut d, &mut e, &mut z)?;
    // map x in [-1,1] -> u in [0,1]; the (1+x)^beta factor rescales by 2^-(beta+1)
    let scale = 2.0f64.powf(-(beta + 1.0));
    let nodes: Vec<f64> = d.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    let weights: Vec<f64> = z.iter().map(|&zi| mu0 * zi * zi * scale).collect();
    Ok((nodes, weights))
}

/// Implicit-shift QL for a symmetric tridiagonal matrix, tracking the first
/// eigenvector component in `z`. `d` is the diagonal, `e[i]` the subdiagonal
/// between rows i and i+1. On return `d` holds ascending eigenvalues.
fn imtqlx(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let prec = f64::EPSILON;
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= prec * (d[m].abs() + d[m + 1].abs()) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                if g.abs() <= f.abs() {
                    c = g / f;
                    r = (c * c + 1.0).sqrt();
                    e[i + 1] = f * r;
                    s = 1.0 / r;
                    c *= s;
                } else {
                    s = f / g;
                    r = (s * s + 1.0).sqrt();
                    e[i + 1] = g * r;
                    c = 1.0 / r;
                    s *= c;
                }
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    for i in 0..n {
        let mut k = i;
        for j in (i + 1)..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            z.swap(i, k);
        }
    }
    Ok(())
}
