//! Asymptotic matching, S-matrix assembly and the Regge-pole determinant.
//!
//! At the matching radius each column `m` and channel `n` of the propagated
//! bundle is written as `Φ_{nm} = Ŝ⁻_{mn} ĥ⁻_λ(k_n r) + Ŝ⁺_{mn} ĥ⁺_λ(k_n r)`.
//! Then `S = (Ŝ⁻)⁻¹ Ŝ⁺` and `Δ(E, λ) = det Ŝ⁻`; Regge poles are the zeros of
//! `Δ` at fixed real energy.

use num_complex::Complex64;

use crate::potential::PotentialModel;
use crate::propagator::{propagate, PropagationSettings};
use crate::series_start::{regular_start, RadialState};
use crate::special::{riccati_hankel, HankelSettings};
use crate::{CMatrix, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `k_n = sqrt(2(E − V_n))`, with `k_n = i sqrt(2(V_n − E))` for closed
/// channels so that `ĥ⁺` is the decaying solution.
pub fn channel_wave_vectors(model: &dyn PotentialModel, energy: f64) -> Result<Vec<Complex64>> {
    model
        .thresholds()
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let d = energy - v;
            if d > 0.0 {
                Ok(Complex64::new((2.0 * d).sqrt(), 0.0))
            } else if d < 0.0 {
                Ok(Complex64::new(0.0, (-2.0 * d).sqrt()))
            } else {
                Err(Error::Threshold { energy, threshold: v, channel: n, tol: 0.0 })
            }
        })
        .collect()
}

fn is_open(k: Complex64) -> bool {
    k.im == 0.0 && k.re > 0.0
}

/// A complex number kept as `mantissa · exp(log_factor)` so that determinants
/// of rescaled bundles never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinant {
    pub mantissa: Complex64,
    pub log_factor: Complex64,
}

impl Determinant {
    pub fn new(value: Complex64, log_factor: Complex64) -> Self {
        let size = value.norm();
        if size > 0.0 && size.is_finite() {
            Self { mantissa: value / size, log_factor: log_factor + size.ln() }
        } else {
            Self { mantissa: value, log_factor }
        }
    }

    pub fn from_value(value: Complex64) -> Self {
        Self::new(value, Complex64::new(0.0, 0.0))
    }

    /// The plain complex value; may overflow to infinity.
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_factor.exp()
    }

    /// `ln |Δ|`.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_factor.re
    }

    /// `self / other` as a plain complex number.
    pub fn ratio(&self, other: &Determinant) -> Complex64 {
        self.mantissa / other.mantissa * (self.log_factor - other.log_factor).exp()
    }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    /// Incoming-wave coefficients, row `m` = solution, column `n` = channel.
    pub s_minus: CMatrix,
    pub s_plus: CMatrix,
    /// `(Ŝ⁻)⁻¹ Ŝ⁺` in the normalisation of the Riccati-Hankel asymptotics.
    pub s_matrix: CMatrix,
    pub delta: Determinant,
    pub wave_vectors: Vec<Complex64>,
    pub r_match: f64,
    /// Unitary (flux-normalised) S-matrix; present when every channel is open.
    pub flux_normalized: Option<CMatrix>,
    /// 2-norm condition number of `Ŝ⁻` after row and column equilibration.
    pub condition: f64,
}

/// Convert a raw S-matrix to the flux-normalised convention,
/// `Ŝ_{nm} = sqrt(k_m / k_n) S_{nm}`.
pub fn flux_normalize(s: &CMatrix, k: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(s.nrows(), s.ncols(), |n, m| (k[m] / k[n]).sqrt() * s[(n, m)])
}

/// Which S-matrix enters cross sections and residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SConvention {
    /// `(Ŝ⁻)⁻¹ Ŝ⁺` as assembled.
    #[default]
    Paper,
    /// Unitary `sqrt(k_m/k_n) S_{nm}`.
    FluxNormalized,
}

impl SConvention {
    pub fn apply(&self, s: CMatrix, k: &[Complex64]) -> CMatrix {
        match self {
            SConvention::Paper => s,
            SConvention::FluxNormalized => flux_normalize(&s, k),
        }
    }
}

fn match_coefficients(
    state: &RadialState,
    k: &[Complex64],
    hankel: &HankelSettings,
) -> Result<(CMatrix, CMatrix)> {
    let n = state.channel_count();
    let cols = state.phi.ncols();
    let r = state.r;
    let mut s_minus = CMatrix::zeros(cols, n);
    let mut s_plus = CMatrix::zeros(cols, n);
    for ch in 0..n {
        let kn = k[ch];
        let h = riccati_hankel(state.lambda, kn * r, hankel)?;
        for m in 0..cols {
            let phi = state.phi[(ch, m)];
            let dphi = state.dphi[(ch, m)];
            s_minus[(m, ch)] = (phi * kn * h.d_plus - dphi * h.h_plus) / (2.0 * I * kn);
            s_plus[(m, ch)] = -(phi * kn * h.d_minus - dphi * h.h_minus) / (2.0 * I * kn);
        }
    }
    Ok((s_minus, s_plus))
}

/// Nearest power of two to `1 / x`, so scaling by it is exact.
fn inverse_scale(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        (-x.log2().round()).exp2()
    } else {
        1.0
    }
}

/// `S = (Ŝ⁻)⁻¹ Ŝ⁺` with `Ŝ⁻` equilibrated first. At large `λ` the rows and
/// columns of `Ŝ⁻` differ in size by many orders of magnitude (each channel
/// has its own turning point), and an unscaled solve then loses the small
/// inelastic entries. With `D`, `C` diagonal, `S = C (DŜ⁻C)⁻¹ (DŜ⁺C) C⁻¹`.
/// Returns S and the condition number of the scaled `Ŝ⁻`.
fn equilibrated_solve(s_minus: &CMatrix, s_plus: &CMatrix) -> (CMatrix, f64) {
    let n = s_minus.nrows();
    let row: Vec<f64> =
        (0..n).map(|i| inverse_scale(s_minus.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max))).collect();
    let col: Vec<f64> = (0..s_minus.ncols())
        .map(|j| inverse_scale((0..n).map(|i| (s_minus[(i, j)] * row[i]).norm()).fold(0.0, f64::max)))
        .collect();
    let a = CMatrix::from_fn(n, s_minus.ncols(), |i, j| s_minus[(i, j)] * row[i] * col[j]);
    let b = CMatrix::from_fn(n, s_plus.ncols(), |i, j| s_plus[(i, j)] * row[i] * col[j]);
    let s = match a.clone().lu().solve(&b) {
        Some(x) => CMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * col[i] / col[j]),
        None => CMatrix::from_element(n, n, Complex64::new(f64::INFINITY, 0.0)),
    };
    (s, condition_number(&a))
}

fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Match a propagated bundle to the Riccati-Hankel asymptotics.
pub fn match_state(
    state: &RadialState,
    model: &dyn PotentialModel,
    hankel: &HankelSettings,
) -> Result<MatchResult> {
    let k = channel_wave_vectors(model, state.energy)?;
    let (s_minus, s_plus) = match_coefficients(state, &k, hankel)?;
    let n = k.len();
    let det = s_minus.clone().determinant();
    let delta = Determinant::new(det, state.log_scale * n as f64);
    let (s_matrix, condition) = equilibrated_solve(&s_minus, &s_plus);
    let flux_normalized = k.iter().all(|&kn| is_open(kn)).then(|| flux_normalize(&s_matrix, &k));
    Ok(MatchResult {
        condition,
        s_minus,
        s_plus,
        s_matrix,
        delta,
        wave_vectors: k,
        r_match: state.r,
        flux_normalized,
    })
}

/// First-order phase picked up beyond `r` in each open channel,
/// `δ_n = −(1/k_n) ∫_r^∞ (V_nn − V_n(∞)) dr`; zero for closed channels.
///
/// Stopping the integration at a finite radius leaves an error in S that
/// falls off only as `∫_r^∞ V`, i.e. `r⁻³` for a `r⁻⁴` tail. Multiplying
/// `S_nm` by `e^{i(δ_n + δ_m)}` removes that leading term; what is left
/// comes from the oscillating part of the tail and falls off one power
/// faster. Couplings beyond `r` are neglected.
pub fn tail_phases(model: &dyn PotentialModel, k: &[Complex64], r: f64) -> Result<Vec<f64>> {
    const INTERVALS: usize = 128;
    let thresholds = model.thresholds();
    let h = 1.0 / INTERVALS as f64;
    // With x = r/t the integrand is V(r/t) r/t², which vanishes at t = 0 for
    // any tail falling faster than 1/x².
    let mut integrals = vec![0.0; k.len()];
    for i in 1..=INTERVALS {
        let t = i as f64 * h;
        let v = model.evaluate(r / t)?;
        let w = if i == INTERVALS { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        for (n, acc) in integrals.iter_mut().enumerate() {
            *acc += w * (v[(n, n)] - thresholds[n]) * r / (t * t);
        }
    }
    Ok(k.iter()
        .zip(integrals)
        .map(|(&kn, integral)| if is_open(kn) { -integral * h / 3.0 / kn.re } else { 0.0 })
        .collect())
}

fn apply_tail_phases(result: &mut MatchResult, phases: &[f64]) {
    let apply = |s: &mut CMatrix| {
        for n in 0..s.nrows() {
            for m in 0..s.ncols() {
                s[(n, m)] *= Complex64::from_polar(1.0, phases[n] + phases[m]);
            }
        }
    };
    apply(&mut result.s_matrix);
    if let Some(s) = result.flux_normalized.as_mut() {
        apply(s);
    }
}

/// Numerical parameters of the full `(E, λ) → S` pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub r0: f64,
    pub j_max: usize,
    pub series_tail_tol: f64,
    pub propagation: PropagationSettings,
    pub hankel: HankelSettings,
    /// Energies closer than this to a threshold are rejected.
    pub threshold_guard: f64,
    /// Largest acceptable `cond(Ŝ⁻)` (equilibrated) for a physical S-matrix.
    pub condition_limit: f64,
    /// Add the first-order phase of the potential beyond the matching
    /// radius to S (see [`tail_phases`]). `Δ` is unaffected.
    pub tail_correction: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            r0: 1e-3,
            j_max: 30,
            series_tail_tol: 1e-12,
            propagation: PropagationSettings::default(),
            hankel: HankelSettings::default(),
            threshold_guard: 1e-8,
            condition_limit: 1e12,
            tail_correction: true,
        }
    }
}

/// Anything that yields `Δ(E, λ)` and `S(E, λ)`: the full pipeline, or an
/// analytic stand-in in tests.
pub trait ScatteringSystem: Sync {
    fn channel_count(&self) -> usize;
    fn wave_vectors(&self, energy: f64) -> Result<Vec<Complex64>>;
    fn delta(&self, energy: f64, lambda: Complex64) -> Result<Determinant>;
    /// Raw S-matrix; no conditioning check, valid arbitrarily close to poles.
    fn s_matrix(&self, energy: f64, lambda: Complex64) -> Result<CMatrix>;
}

/// Series start → propagation → matching for one model.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub model: &'a dyn PotentialModel,
    pub numerics: Numerics,
}

impl<'a> Pipeline<'a> {
    pub fn new(model: &'a dyn PotentialModel, numerics: Numerics) -> Self {
        Self { model, numerics }
    }

    fn guard_thresholds(&self, energy: f64) -> Result<()> {
        let tol = self.numerics.threshold_guard;
        for (n, v) in self.model.thresholds().into_iter().enumerate() {
            if (energy - v).abs() < tol {
                return Err(Error::Threshold { energy, threshold: v, channel: n, tol });
            }
        }
        Ok(())
    }

    /// Matching radius for `(E, λ)`: the configured radius, extended in steps
    /// of 1.5× until every `|k_n| r` lies inside the asymptotic-series domain.
    /// The ladder keeps `Δ(E, ·)` analytic on all but a few isolated `|λ|`.
    pub fn matching_radius(&self, energy: f64, lambda: Complex64) -> Result<f64> {
        let k = channel_wave_vectors(self.model, energy)?;
        let kmin = k.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        let needed = self.numerics.hankel.threshold(lambda) / kmin;
        let mut r = self.numerics.propagation.r_match;
        while r < needed {
            r *= 1.5;
        }
        Ok(r)
    }

    pub fn propagate_to_match(&self, energy: f64, lambda: Complex64) -> Result<RadialState> {
        self.guard_thresholds(energy)?;
        let nm = &self.numerics;
        let start = regular_start(self.model, energy, lambda, nm.r0, nm.j_max, nm.series_tail_tol)?;
        let settings = PropagationSettings { r_match: self.matching_radius(energy, lambda)?, ..nm.propagation };
        propagate(self.model, &start, &settings)
    }

    pub fn solve(&self, energy: f64, lambda: Complex64) -> Result<MatchResult> {
        let state = self.propagate_to_match(energy, lambda)?;
        let mut result = match_state(&state, self.model, &self.numerics.hankel)?;
        if self.numerics.tail_correction {
            let phases = tail_phases(self.model, &result.wave_vectors, result.r_match)?;
            apply_tail_phases(&mut result, &phases);
        }
        Ok(result)
    }

    /// Physical S-matrix: fails when `Ŝ⁻` is numerically singular.
    pub fn physical_s_matrix(&self, energy: f64, lambda: Complex64) -> Result<MatchResult> {
        let result = self.solve(energy, lambda)?;
        if !(result.condition <= self.numerics.condition_limit) {
            return Err(Error::IllConditionedMatch { condition: result.condition });
        }
        Ok(result)
    }
}

impl ScatteringSystem for Pipeline<'_> {
    fn channel_count(&self) -> usize {
        self.model.channel_count()
    }

    fn wave_vectors(&self, energy: f64) -> Result<Vec<Complex64>> {
        channel_wave_vectors(self.model, energy)
    }

    fn delta(&self, energy: f64, lambda: Complex64) -> Result<Determinant> {
        let state = self.propagate_to_match(energy, lambda)?;
        let k = channel_wave_vectors(self.model, energy)?;
        let (s_minus, _) = match_coefficients(&state, &k, &self.numerics.hankel)?;
        Ok(Determinant::new(s_minus.determinant(), state.log_scale * k.len() as f64))
    }

    fn s_matrix(&self, energy: f64, lambda: Complex64) -> Result<CMatrix> {
        Ok(self.solve(energy, lambda)?.s_matrix)
    }
}
