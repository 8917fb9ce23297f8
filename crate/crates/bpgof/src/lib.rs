//! Goodness-of-fit testing for the bivariate (and trivariate) Poisson
//! distribution.
//!
//! The crate provides:
//!
//! - [`model`]: the common-shock bivariate/trivariate Poisson family — pgf,
//!   pmf (convolution and recurrence routes), and exact samplers over
//!   deterministic substreams.
//! - [`estimate`]: moment and maximum-likelihood estimation of the null
//!   parameters.
//! - [`stats`]: the test statistics — the moment tests `T`, `I_B`, `NI_B`
//!   with asymptotic χ² p-values, the epgf integral statistics `R_{n,w}`,
//!   `S_{n,w}`, the frequency statistic `W_n`, and the characterization
//!   statistic `T_{n,w}` in closed form and in quadrature form.
//! - [`mvariate`]: the trivariate/m-variate extensions (`T_3`, `R_3`, `S_3`,
//!   `W_3` and the generic `W_m`, `S_m` formulas).
//! - [`boot`]: parametric-bootstrap p-values and the KS uniformity check.
//! - [`alts`]: samplers and moment oracles for the alternative families used
//!   in the power study.
//!
//! All randomness flows through keyed substreams ([`rng::substream`]) so that
//! every result is a pure function of `(inputs, master seed)` regardless of
//! thread count or scheduling.

pub mod alts;
pub mod boot;
pub mod epgf;
pub mod error;
pub mod estimate;
pub mod model;
pub mod mvariate;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use model::{CountSample, ThetaBp, ThetaTp};
