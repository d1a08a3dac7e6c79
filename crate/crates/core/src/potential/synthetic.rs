//! Analytic test models.

use super::{validate_thresholds, PotentialModel};
use crate::{RMatrix, Result};

/// `V̂(r) = diag(V_1, …, V_N)` for all `r`: no scattering at all.
#[derive(Debug, Clone)]
pub struct FreeParticle {
    thresholds: Vec<f64>,
}

impl FreeParticle {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        validate_thresholds(&thresholds)?;
        Ok(Self { thresholds })
    }
}

impl PotentialModel for FreeParticle {
    fn channel_count(&self) -> usize {
        self.thresholds.len()
    }

    fn fill(&self, _r: f64, out: &mut [f64]) {
        let n = self.thresholds.len();
        out.fill(0.0);
        for (i, v) in self.thresholds.iter().enumerate() {
            out[i * n + i] = *v;
        }
    }

    fn thresholds(&self) -> Vec<f64> {
        self.thresholds.clone()
    }

    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>> {
        let n = self.thresholds.len();
        let mut out = vec![RMatrix::zeros(n, n); j_max + 1];
        if j_max >= 1 {
            out[1] = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.thresholds.clone()));
        }
        Ok(out)
    }
}

/// Single-channel pure Coulomb potential `-Z/r`. Long-ranged, so only useful
/// for checking the series start.
#[derive(Debug, Clone)]
pub struct Coulomb {
    pub charge: f64,
}

impl PotentialModel for Coulomb {
    fn channel_count(&self) -> usize {
        1
    }

    fn fill(&self, r: f64, out: &mut [f64]) {
        out[0] = -self.charge / r;
    }

    fn thresholds(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>> {
        let mut out = vec![RMatrix::zeros(1, 1); j_max + 1];
        out[0][(0, 0)] = -self.charge;
        Ok(out)
    }
}
