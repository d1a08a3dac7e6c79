//! Pointwise diagonalisation of a two-channel potential, neglecting the
//! derivative (non-adiabatic) coupling between the resulting curves.

use std::sync::Arc;

use super::PotentialModel;
use crate::powerseries::PowerSeries;
use crate::{Error, RMatrix, Result};

/// Eigenvalues `(Ṽ_I, Ṽ_II)`, `Ṽ_I ≥ Ṽ_II`, of the 2×2 potential at `r`.
pub fn adiabatic_curves(model: &dyn PotentialModel, r: f64) -> Result<(f64, f64)> {
    if model.channel_count() != 2 {
        return Err(Error::Argument(format!(
            "adiabatic curves need a two-channel model, got N = {}",
            model.channel_count()
        )));
    }
    let v = model.evaluate(r)?;
    Ok(symmetric_eigenvalues(v[(0, 0)], v[(1, 1)], v[(0, 1)]))
}

/// Eigenvalues of `[[p, c], [c, q]]`, larger first. The larger-magnitude root
/// comes from the quadratic formula and the other from the determinant, so
/// both keep full relative precision.
fn symmetric_eigenvalues(p: f64, q: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (p + q);
    let half_gap = (0.25 * (p - q) * (p - q) + c * c).sqrt();
    let det = p * q - c * c;
    if mean >= 0.0 {
        let upper = mean + half_gap;
        let lower = if upper != 0.0 { det / upper } else { 0.0 };
        (upper, lower)
    } else {
        let lower = mean - half_gap;
        (det / lower, lower)
    }
}

/// `diag(Ṽ_I, Ṽ_II)` as a (decoupled) two-channel model. Each branch can also be
/// used on its own through [`super::DiagonalChannel`].
pub struct AdiabaticModel {
    inner: Arc<dyn PotentialModel>,
    thresholds: Vec<f64>,
    warnings: Vec<String>,
}

impl AdiabaticModel {
    /// Problems found while building the model, e.g. near-degenerate curves.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Build the adiabatic model of a two-channel potential.
pub fn adiabatic_model(model: Arc<dyn PotentialModel>) -> Result<AdiabaticModel> {
    if model.channel_count() != 2 {
        return Err(Error::Argument(format!(
            "adiabatic model needs a two-channel model, got N = {}",
            model.channel_count()
        )));
    }
    let t = model.thresholds();
    let thresholds = vec![t[0].max(t[1]), t[0].min(t[1])];

    let mut warnings = Vec::new();
    let mut min_gap = f64::INFINITY;
    let mut at = 0.0;
    for i in 0..=600 {
        let r = 10f64.powf(-3.0 + i as f64 * 0.01);
        let (up, lo) = adiabatic_curves(model.as_ref(), r)?;
        let scale = up.abs().max(lo.abs()).max(1e-300);
        if (up - lo) / scale < min_gap {
            min_gap = (up - lo) / scale;
            at = r;
        }
    }
    if min_gap < 1e-8 {
        let msg = format!("adiabatic curves nearly cross at r ≈ {at:.4} (relative gap {min_gap:.2e})");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(AdiabaticModel { inner: model, thresholds, warnings })
}

impl PotentialModel for AdiabaticModel {
    fn channel_count(&self) -> usize {
        2
    }

    fn fill(&self, r: f64, out: &mut [f64]) {
        let mut buf = [0.0; 4];
        self.inner.fill(r, &mut buf);
        let (up, lo) = symmetric_eigenvalues(buf[0], buf[3], buf[1]);
        out[0] = up;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = lo;
    }

    fn thresholds(&self) -> Vec<f64> {
        self.thresholds.clone()
    }

    /// `r·Ṽ = (p + q)/2 ± sqrt((p - q)² + 4c²)/2` in exact series algebra, with
    /// `p, q, c` the series of `r·V_11`, `r·V_22`, `r·V_12`. The radicand may
    /// vanish at the origin; an even leading power `r^{2k}` is factored out.
    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>> {
        const EXTRA: usize = 16;
        let order = j_max + EXTRA;
        let m = self.inner.maclaurin_coeffs(order)?;
        let series = |i: usize, j: usize| PowerSeries::new(m.iter().map(|c| c[(i, j)]).collect(), order);
        let (p, q, c) = (series(0, 0), series(1, 1), series(0, 1));
        let diff = &p - &q;
        let radicand = &(&diff * &diff) + &(&c * &c).scale(4.0);
        let scale = radicand.coeffs().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let root = match radicand.valuation(1e-14 * scale) {
            None => PowerSeries::constant(0.0, order),
            Some(v) if v % 2 == 1 || v > EXTRA => {
                return Err(Error::UnsupportedModel(format!(
                    "adiabatic curves are not analytic at the origin (radicand starts at r^{v})"
                )));
            }
            Some(v) => radicand
                .shift_down(v)
                .sqrt()
                .ok_or_else(|| Error::UnsupportedModel("negative radicand at the origin".into()))?
                .shift_up(v / 2),
        };
        let mean = (&p + &q).scale(0.5);
        let upper = &mean + &root.scale(0.5);
        let lower = &mean - &root.scale(0.5);
        Ok((0..=j_max)
            .map(|j| RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![upper.coeff(j), lower.coeff(j)])))
            .collect())
    }
}
