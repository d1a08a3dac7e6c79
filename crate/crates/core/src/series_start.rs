//! Regular solutions near the Coulomb-singular origin.
//!
//! Substituting `Ψ = r^{J+1} Σ_j u_j r^j` into
//! `Ψ'' = [J(J+1)/r² + 2(V̂ - E)] Ψ` with `r V̂ = Σ_l V̂_l r^l` gives
//!
//! ```text
//! (j+1)(2J+j+2) u_{j+1} = 2 Σ_{l=0}^{j} V̂_l u_{j-l} − 2E u_{j-1},   u_{-1} = 0.
//! ```
//!
//! Seeding `(u_0)_n = δ_{nm}` for `m = 1..N` gives `N` independent regular
//! solutions.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::potential::PotentialModel;
use crate::{CMatrix, Error, RMatrix, Result};

type CVector = DVector<Complex64>;

#[derive(Debug, Clone)]
pub struct SeriesSolution {
    pub coefficients: Vec<CVector>,
    /// Complex angular momentum `J` (`λ = J + 1/2`).
    pub j: Complex64,
    pub energy: f64,
    pub seed_channel: usize,
}

impl SeriesSolution {
    pub fn j_max(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn lambda(&self) -> Complex64 {
        self.j + 0.5
    }

    /// Value, first and second derivative of the truncated series with the
    /// common factor `r^{J+1}` removed.
    pub fn evaluate_reduced(&self, r: f64) -> (CVector, CVector, CVector) {
        let n = self.coefficients[0].len();
        let mut value = CVector::zeros(n);
        let mut first = CVector::zeros(n);
        let mut second = CVector::zeros(n);
        let mut power = 1.0; // r^j
        for (j, u) in self.coefficients.iter().enumerate() {
            let p = self.j + (j as f64 + 1.0); // exponent J + j + 1
            value += u * Complex64::from(power);
            first += u * (p * power / r);
            second += u * (p * (p - 1.0) * power / (r * r));
            power *= r;
        }
        (value, first, second)
    }

    /// `‖Ψ'' − [J(J+1)/r² + 2(V̂ − E)]Ψ‖` of the truncated series at `r`,
    /// relative to the common factor `|r^{J+1}|`.
    pub fn reduced_residual(&self, model: &dyn PotentialModel, r: f64) -> Result<f64> {
        let v = model.evaluate(r)?;
        let (value, _, second) = self.evaluate_reduced(r);
        let centrifugal = self.j * (self.j + 1.0) / (r * r);
        let n = value.len();
        let mut worst = 0.0f64;
        for a in 0..n {
            let mut rhs = (centrifugal - 2.0 * self.energy) * value[a];
            for b in 0..n {
                rhs += 2.0 * v[(a, b)] * value[b];
            }
            worst = worst.max((second[a] - rhs).norm());
        }
        Ok(worst)
    }
}

fn check_j(j: Complex64) -> Result<()> {
    if !(j.re > -1.0) {
        return Err(Error::Argument(format!("regular solution requires Re J > -1, got J = {j}")));
    }
    Ok(())
}

/// Series coefficients from precomputed Maclaurin matrices of `r V̂(r)`.
pub fn series_from_maclaurin(
    maclaurin: &[RMatrix],
    energy: f64,
    j: Complex64,
    seed_channel: usize,
    j_max: usize,
) -> Result<SeriesSolution> {
    check_j(j)?;
    let n = maclaurin[0].nrows();
    if seed_channel >= n {
        return Err(Error::Argument(format!("seed channel {seed_channel} out of range for N = {n}")));
    }
    if maclaurin.len() < j_max {
        return Err(Error::Argument(format!(
            "need {j_max} Maclaurin coefficients, got {}",
            maclaurin.len()
        )));
    }
    let mut u: Vec<CVector> = Vec::with_capacity(j_max + 1);
    let mut u0 = CVector::zeros(n);
    u0[seed_channel] = Complex64::new(1.0, 0.0);
    u.push(u0);
    for jj in 0..j_max {
        let denom = (jj as f64 + 1.0) * (2.0 * j + jj as f64 + 2.0);
        if denom.norm() < 1e-14 {
            return Err(Error::DegenerateExponent { order: jj, j });
        }
        let mut rhs = CVector::zeros(n);
        for l in 0..=jj {
            let vl = &maclaurin[l];
            let ul = &u[jj - l];
            for a in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    acc += vl[(a, b)] * ul[b];
                }
                rhs[a] += 2.0 * acc;
            }
        }
        if jj >= 1 {
            rhs -= &u[jj - 1] * Complex64::from(2.0 * energy);
        }
        u.push(rhs / denom);
    }
    Ok(SeriesSolution { coefficients: u, j, energy, seed_channel })
}

pub fn series_coefficients(
    model: &dyn PotentialModel,
    energy: f64,
    j: Complex64,
    seed_channel: usize,
    j_max: usize,
) -> Result<SeriesSolution> {
    check_j(j)?;
    let maclaurin = model.maclaurin_coeffs(j_max)?;
    series_from_maclaurin(&maclaurin, energy, j, seed_channel, j_max)
}

/// Bundle of `N` solution columns and their radial derivatives at `r`.
///
/// Values are stored up to a common complex factor: the physical bundle is
/// `exp(log_scale) · phi` (and likewise for `dphi`). S-matrices do not depend
/// on that factor; determinants pick up `exp(N · log_scale)`.
#[derive(Debug, Clone)]
pub struct RadialState {
    pub r: f64,
    /// Column `m` is solution `Φ_m`, row `n` is channel `n`.
    pub phi: CMatrix,
    pub dphi: CMatrix,
    pub energy: f64,
    pub lambda: Complex64,
    pub log_scale: Complex64,
}

impl RadialState {
    pub fn channel_count(&self) -> usize {
        self.phi.nrows()
    }

    /// Bilinear concomitant `Φᵀ Φ′ − Φ′ᵀ Φ` of the stored bundle.
    pub fn concomitant(&self) -> CMatrix {
        self.phi.transpose() * &self.dphi - self.dphi.transpose() * &self.phi
    }

    /// Multiply the whole bundle by a constant matrix from the right.
    pub fn combine(&self, m: &CMatrix) -> RadialState {
        RadialState { phi: &self.phi * m, dphi: &self.dphi * m, ..self.clone() }
    }
}

/// Initial conditions at `r0` from one series per column.
///
/// The common factor `r0^{J+1}` is kept in `log_scale`. Fails when the last
/// retained term is not below `tail_tol` relative to the sum.
pub fn initial_conditions(series: &[SeriesSolution], r0: f64, tail_tol: f64) -> Result<RadialState> {
    let first = series
        .first()
        .ok_or_else(|| Error::Argument("initial conditions need at least one series".into()))?;
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("start radius must be positive, got {r0}")));
    }
    let n = first.coefficients[0].len();
    let cols = series.len();
    let mut phi = CMatrix::zeros(n, cols);
    let mut dphi = CMatrix::zeros(n, cols);
    for (m, s) in series.iter().enumerate() {
        let (value, deriv, _) = s.evaluate_reduced(r0);
        let jm = s.j_max();
        let power = r0.powi(jm as i32);
        let last = s.coefficients[jm].norm() * power;
        let before = if jm >= 1 { s.coefficients[jm - 1].norm() * power / r0 } else { 0.0 };
        let tail = last.max(before) / value.norm();
        if !(tail < tail_tol) && jm > 0 {
            return Err(Error::SeriesConvergence { tail, tol: tail_tol });
        }
        phi.set_column(m, &value);
        dphi.set_column(m, &deriv);
    }
    Ok(RadialState {
        r: r0,
        phi,
        dphi,
        energy: first.energy,
        lambda: first.lambda(),
        log_scale: (first.j + 1.0) * r0.ln(),
    })
}

/// All `N` seeded regular solutions at `r0`.
pub fn regular_start(
    model: &dyn PotentialModel,
    energy: f64,
    lambda: Complex64,
    r0: f64,
    j_max: usize,
    tail_tol: f64,
) -> Result<RadialState> {
    let j = lambda - 0.5;
    check_j(j)?;
    let maclaurin = model.maclaurin_coeffs(j_max)?;
    let series = (0..model.channel_count())
        .map(|m| series_from_maclaurin(&maclaurin, energy, j, m, j_max))
        .collect::<Result<Vec<_>>>()?;
    initial_conditions(&series, r0, tail_tol)
}
