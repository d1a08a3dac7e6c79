use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("argument |z| = {z_abs:.3} below asymptotic validity threshold {threshold:.3}; increase the matching radius")]
    HankelDomain { z_abs: f64, threshold: f64 },

    #[error("Riccati-Hankel evaluation overflowed at z = {z}")]
    HankelOverflow { z: Complex64 },

    #[error("degenerate indicial exponent: (j+1)(2J+j+2) vanishes at j = {order} for J = {j}")]
    DegenerateExponent { order: usize, j: Complex64 },

    #[error("series start not converged: tail ratio {tail:.3e} exceeds {tol:.3e} (use a smaller r0 or larger j_max)")]
    SeriesConvergence { tail: f64, tol: f64 },

    #[error("step budget of {max_steps} exhausted at r = {r}")]
    StepBudget { max_steps: usize, r: f64 },

    #[error("integration step underflow at r = {r} (h = {h:e})")]
    StepUnderflow { r: f64, h: f64 },

    #[error("solution overflow during propagation at r = {r}")]
    Overflow { r: f64 },

    #[error("energy {energy} within {tol:e} of threshold {threshold} of channel {channel}")]
    Threshold { energy: f64, threshold: f64, channel: usize, tol: f64 },

    #[error("ill-conditioned match: cond(S-) = {condition:.3e}")]
    IllConditionedMatch { condition: f64 },

    #[error("root finder did not converge after {iterations} iterations (last |Δ| = {last_residual:.3e})")]
    NoConvergence { iterations: usize, last_residual: f64, history: Vec<Complex64> },

    #[error("zero at {lambda} failed its certificate: |Δ| ratio {certificate:.3e} > {tol:.1e}")]
    Uncertified { lambda: Complex64, certificate: f64, tol: f64 },

    #[error("root {lambda} left the search box")]
    OutOfBasin { lambda: Complex64 },

    #[error("residue methods disagree: relative difference {relative:.3e}")]
    ResidueMismatch { relative: f64 },

    #[error("degenerate Mulholland denominator 1 + exp(-2πiλ) at λ = {lambda}")]
    DegenerateDenominator { lambda: Complex64 },

    #[error("channel {channel} is closed at E = {energy}")]
    ClosedChannel { channel: usize, energy: f64 },

    #[error("energy {energy} is not on the trajectory grid; recompute the pole there")]
    OffTrajectory { energy: f64 },
}
