//! Potential-matrix models.
//!
//! A model supplies the symmetric `N×N` matrix `V̂(r)`, its asymptotic
//! thresholds, and the Maclaurin coefficients of `r·V̂(r)` used to start the
//! regular solution at the Coulomb-singular origin.

mod adiabatic;
mod synthetic;
mod thomas_fermi;

use std::sync::Arc;

use crate::{Error, RMatrix, Result};

pub use adiabatic::{adiabatic_curves, adiabatic_model, AdiabaticModel};
pub use synthetic::{Coulomb, FreeParticle};
pub use thomas_fermi::{GaussianCoupling, ThomasFermiModel, TwoChannelTFParams};

pub trait PotentialModel: Send + Sync {
    fn channel_count(&self) -> usize;

    /// Writes `V̂(r)` row-major into `out` (length `N²`). Hot path: no domain
    /// checks, `r > 0` is assumed.
    fn fill(&self, r: f64, out: &mut [f64]);

    /// Asymptotic channel offsets `V_1 ≥ … ≥ V_N`.
    fn thresholds(&self) -> Vec<f64>;

    /// Coefficients `V̂_0 … V̂_{j_max}` of `r·V̂(r) = Σ_j V̂_j r^j`.
    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>>;

    fn evaluate(&self, r: f64) -> Result<RMatrix> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("potential evaluated at r = {r}; requires r > 0")));
        }
        let n = self.channel_count();
        let mut buf = vec![0.0; n * n];
        self.fill(r, &mut buf);
        Ok(RMatrix::from_row_slice(n, n, &buf))
    }
}

impl<M: PotentialModel + ?Sized> PotentialModel for Arc<M> {
    fn channel_count(&self) -> usize {
        (**self).channel_count()
    }
    fn fill(&self, r: f64, out: &mut [f64]) {
        (**self).fill(r, out)
    }
    fn thresholds(&self) -> Vec<f64> {
        (**self).thresholds()
    }
    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>> {
        (**self).maclaurin_coeffs(j_max)
    }
}

/// One diagonal channel of a model, treated as an independent single-channel
/// problem. Only meaningful when that channel carries no coupling.
pub struct DiagonalChannel {
    model: Arc<dyn PotentialModel>,
    channel: usize,
}

impl DiagonalChannel {
    pub fn new(model: Arc<dyn PotentialModel>, channel: usize) -> Result<Self> {
        if channel >= model.channel_count() {
            return Err(Error::Argument(format!(
                "channel {channel} out of range for a {}-channel model",
                model.channel_count()
            )));
        }
        Ok(Self { model, channel })
    }
}

impl PotentialModel for DiagonalChannel {
    fn channel_count(&self) -> usize {
        1
    }

    fn fill(&self, r: f64, out: &mut [f64]) {
        let n = self.model.channel_count();
        let mut buf = vec![0.0; n * n];
        self.model.fill(r, &mut buf);
        out[0] = buf[self.channel * n + self.channel];
    }

    fn thresholds(&self) -> Vec<f64> {
        vec![self.model.thresholds()[self.channel]]
    }

    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>> {
        let c = self.channel;
        Ok(self
            .model
            .maclaurin_coeffs(j_max)?
            .into_iter()
            .map(|m| RMatrix::from_element(1, 1, m[(c, c)]))
            .collect())
    }
}

pub(crate) fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Argument("model needs at least one channel".into()));
    }
    if thresholds.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("thresholds must be finite".into()));
    }
    if thresholds.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Argument(format!("thresholds must be nonincreasing, got {thresholds:?}")));
    }
    Ok(())
}
