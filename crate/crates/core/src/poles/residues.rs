//! Residues `ρ = lim ε S(λ̄ + ε)` by two independent routes.

use num_complex::Complex64;

use super::ReggePoleRecord;
use crate::smatrix::ScatteringSystem;
use crate::{CMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueSettings {
    /// Radius of the quadrature circle.
    pub radius: f64,
    /// Trapezoid nodes on the circle.
    pub nodes: usize,
    /// Offsets for the limit `ε S(λ̄ + ε)`, each half the previous.
    pub limit_offsets: [f64; 3],
    /// Unit direction along which the limit is taken.
    pub direction: Complex64,
    /// Agreement expected between the two methods (max-entry relative).
    pub agreement_tol: f64,
    /// Beyond this the radius is shrunk once, then the call fails.
    pub mismatch_tol: f64,
}

impl Default for ResidueSettings {
    fn default() -> Self {
        Self {
            radius: 1e-3,
            nodes: 16,
            limit_offsets: [1e-3, 5e-4, 2.5e-4],
            direction: Complex64::new(1.0, 0.0),
            agreement_tol: 1e-4,
            mismatch_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidueEstimate {
    /// `(1/2πi) ∮ S dλ` on the circle.
    pub contour: CMatrix,
    /// Richardson-extrapolated `ε S(λ̄ + ε)`.
    pub limit: CMatrix,
    /// `max |contour − limit| / max |contour|`.
    pub relative_difference: f64,
    /// Radius actually used (after a possible shrink).
    pub radius: f64,
    /// Smallest over the circle nodes of `max_{nm} |S_{nm}|`.
    pub peak_on_contour: f64,
}

/// Residue matrix of the raw S at a certified pole.
pub fn residues(system: &dyn ScatteringSystem, pole: &ReggePoleRecord, settings: &ResidueSettings) -> Result<ResidueEstimate> {
    let first = estimate(system, pole, settings, 1.0)?;
    if first.relative_difference <= settings.mismatch_tol {
        if first.relative_difference > settings.agreement_tol {
            log::warn!(
                "residue methods agree only to {:.2e} at E = {}, λ̄ = {}",
                first.relative_difference,
                pole.energy,
                pole.lambda_bar
            );
        }
        return Ok(first);
    }
    log::warn!(
        "residue methods differ by {:.2e} at λ̄ = {}; shrinking the contour (second pole or higher-order zero nearby?)",
        first.relative_difference,
        pole.lambda_bar
    );
    let second = estimate(system, pole, settings, 0.5)?;
    if second.relative_difference <= settings.mismatch_tol {
        Ok(second)
    } else {
        Err(Error::ResidueMismatch { relative: second.relative_difference })
    }
}

fn estimate(system: &dyn ScatteringSystem, pole: &ReggePoleRecord, settings: &ResidueSettings, shrink: f64) -> Result<ResidueEstimate> {
    let (e, center) = (pole.energy, pole.lambda_bar);
    let radius = settings.radius * shrink;
    let m = settings.nodes.max(1);

    // On λ = λ̄ + r e^{iθ}, dλ/(2πi) = r e^{iθ} dθ/(2π): the trapezoid rule is
    // the node average of (λ − λ̄) S(λ).
    let mut contour: Option<CMatrix> = None;
    let mut peak = f64::INFINITY;
    for i in 0..m {
        let offset = Complex64::from_polar(radius, std::f64::consts::TAU * i as f64 / m as f64);
        let s = system.s_matrix(e, center + offset)?;
        peak = peak.min(s.iter().map(|v| v.norm()).fold(0.0, f64::max));
        let term = s * offset;
        contour = Some(match contour {
            Some(acc) => acc + term,
            None => term,
        });
    }
    let contour = contour.expect("at least one node") / Complex64::new(m as f64, 0.0);

    let dir = settings.direction / settings.direction.norm();
    let g = settings
        .limit_offsets
        .iter()
        .map(|&eps| {
            let step = dir * (eps * shrink);
            Ok(system.s_matrix(e, center + step)? * step)
        })
        .collect::<Result<Vec<CMatrix>>>()?;
    // g(ε) = ρ + c₁ε + c₂ε² + …, sampled at ε, ε/2, ε/4.
    let r1 = &g[1] * Complex64::new(2.0, 0.0) - &g[0];
    let r2 = &g[2] * Complex64::new(2.0, 0.0) - &g[1];
    let limit = (&r2 * Complex64::new(4.0, 0.0) - &r1) / Complex64::new(3.0, 0.0);

    let scale = contour.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diff = (&contour - &limit).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let relative_difference = if scale > 0.0 { diff / scale } else { diff };
    Ok(ResidueEstimate { contour, limit, relative_difference, radius, peak_on_contour: peak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smatrix::Determinant;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// S(λ) = C/(λ − p) + B(λ) with an entire background.
    struct Rational {
        p: Complex64,
        c: CMatrix,
        background: bool,
    }

    impl ScatteringSystem for Rational {
        fn channel_count(&self) -> usize {
            2
        }
        fn wave_vectors(&self, _: f64) -> Result<Vec<Complex64>> {
            Ok(vec![c(1.0, 0.0); 2])
        }
        fn delta(&self, _: f64, lambda: Complex64) -> Result<Determinant> {
            Ok(Determinant::from_value(lambda - self.p))
        }
        fn s_matrix(&self, _: f64, lambda: Complex64) -> Result<CMatrix> {
            let mut s = &self.c / (lambda - self.p);
            if self.background {
                s += CMatrix::from_fn(2, 2, |i, j| (lambda * (1.0 + i as f64 + 2.0 * j as f64)).sin() * 5.0);
            }
            Ok(s)
        }
    }

    fn record(p: Complex64) -> ReggePoleRecord {
        ReggePoleRecord {
            energy: 1.0,
            lambda_bar: p,
            residues: None,
            residue_agreement: None,
            iterations: 0,
            delta_at_pole: Determinant::from_value(c(0.0, 0.0)),
            certificate: 0.0,
        }
    }

    fn residue_matrix() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.3, -0.2), c(-0.05, 0.11), c(-0.07, 0.154), c(1.2, 0.4)])
    }

    #[test]
    fn exact_simple_pole() {
        let p = c(2.5, 0.12);
        let sys = Rational { p, c: residue_matrix(), background: false };
        let est = residues(&sys, &record(p), &ResidueSettings::default()).unwrap();
        assert!((&est.contour - residue_matrix()).camax() < 1e-10);
        assert!((&est.limit - residue_matrix()).camax() < 1e-10);
        assert!(est.peak_on_contour > 1e2);
    }

    #[test]
    fn background_integrates_to_zero() {
        let p = c(2.5, 0.12);
        let sys = Rational { p, c: residue_matrix(), background: true };
        let est = residues(&sys, &record(p), &ResidueSettings::default()).unwrap();
        assert!((&est.contour - residue_matrix()).camax() < 1e-8);
        assert!(est.relative_difference < 1e-4, "{}", est.relative_difference);
    }

    #[test]
    fn misplaced_pole_is_rejected() {
        // A centre 3e-4 off the true pole: the limit picks up ρ/(1 − δ/ε)
        // terms while the contour still encloses the pole.
        let p = c(2.5, 0.12);
        let sys = Rational { p, c: residue_matrix(), background: false };
        let r = residues(&sys, &record(p + c(0.0, 3e-4)), &ResidueSettings::default());
        assert!(matches!(r, Err(Error::ResidueMismatch { .. })), "{r:?}");
    }
}
