//! Integral cross sections by partial-wave summation and their split into a
//! Regge-pole (Mulholland) term and a background.
//!
//! For exit channel `n` and entrance channel `n'`
//!
//! ```text
//! σ_{nn'}     = (π/k_{n'}²) Σ_J (2J+1) |δ_{nn'} − S_{nn'}(E, J+1/2)|²
//! σ^res_{nn'} = (8π²/k_{n'}²) Im{ λ̄ ρ_{nn'} [S̃_{nn'}(λ̄) − δ_{nn'}] / (1 + e^{−2πiλ̄}) }
//! ```
//!
//! with `S̃(λ) = conj S(conj λ)`. The pole term is the contribution of `λ̄`
//! and `conj λ̄` when the half-integer sum is turned into contour integrals.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::poles::{ReggePoleRecord, Trajectory};
use crate::smatrix::{ScatteringSystem, SConvention};
use crate::{CMatrix, Error, RMatrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwsSettings {
    /// A term counts as negligible below `tol` times the running sum.
    pub tol: f64,
    /// Terms `(2J+1)|δ − S|²` below this are negligible regardless of the
    /// sum (keeps vanishing cross sections from running to the cap).
    pub abs_tol: f64,
    /// Consecutive negligible terms required to stop.
    pub quiet_terms: usize,
    pub j_cap: usize,
    pub convention: SConvention,
}

impl Default for PwsSettings {
    fn default() -> Self {
        Self { tol: 1e-8, abs_tol: 1e-14, quiet_terms: 3, j_cap: 200, convention: SConvention::Paper }
    }
}

/// Partial-wave sums for all open channel pairs at one energy.
#[derive(Debug, Clone)]
pub struct PartialWaveSum {
    pub energy: f64,
    /// `sigma[(n, n')]` in bohr²; NaN where either channel is closed.
    pub sigma: RMatrix,
    /// Highest `J` included.
    pub j_max_used: usize,
    /// Estimated omitted tail per pair, bohr².
    pub truncation_error: RMatrix,
    /// False when the cap was reached before the stop rule fired.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionRecord {
    pub energy: f64,
    /// Exit channel.
    pub n: usize,
    /// Entrance channel.
    pub n_prime: usize,
    pub sigma: f64,
    pub sigma_res: f64,
    /// `sigma − sigma_res`, adjusted in the last place so that
    /// `sigma_res + background == sigma` holds exactly.
    pub background: f64,
    pub j_max_used: usize,
    pub truncation_error_estimate: f64,
}

fn open_channels(system: &dyn ScatteringSystem, energy: f64) -> Result<(Vec<Complex64>, Vec<bool>)> {
    let k = system.wave_vectors(energy)?;
    let open = k.iter().map(|v| v.im == 0.0 && v.re > 0.0).collect();
    Ok((k, open))
}

/// Sum over `J = 0, 1, …` for the listed `(n, n')` pairs; the stop rule must
/// hold for every pair.
fn sum_pairs(system: &dyn ScatteringSystem, energy: f64, pairs: &[(usize, usize)], settings: &PwsSettings) -> Result<PartialWaveSum> {
    let nch = system.channel_count();
    let (k, _) = open_channels(system, energy)?;
    let mut sums = RMatrix::from_element(nch, nch, f64::NAN);
    let mut last_terms = vec![Vec::<f64>::new(); pairs.len()];
    for &(n, np) in pairs {
        sums[(n, np)] = 0.0;
    }
    let mut quiet = vec![0usize; pairs.len()];
    let mut j_used = 0;
    let mut converged = false;
    for j in 0..=settings.j_cap {
        let lambda = Complex64::new(j as f64 + 0.5, 0.0);
        let s = settings.convention.apply(system.s_matrix(energy, lambda)?, &k);
        j_used = j;
        for (p, &(n, np)) in pairs.iter().enumerate() {
            let delta = if n == np { 1.0 } else { 0.0 };
            let term = (2 * j + 1) as f64 * (s[(n, np)] - delta).norm_sqr();
            sums[(n, np)] += term;
            if term < settings.tol * sums[(n, np)] || term < settings.abs_tol {
                quiet[p] += 1;
            } else {
                quiet[p] = 0;
            }
            let hist = &mut last_terms[p];
            hist.push(term);
            if hist.len() > 2 {
                hist.remove(0);
            }
        }
        if quiet.iter().all(|&q| q >= settings.quiet_terms) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("partial-wave sum at E = {energy} not converged by J = {}", settings.j_cap);
    }
    let mut truncation = RMatrix::from_element(nch, nch, f64::NAN);
    for (p, &(n, np)) in pairs.iter().enumerate() {
        let scale = PI / k[np].re.powi(2);
        sums[(n, np)] *= scale;
        truncation[(n, np)] = scale * tail_estimate(&last_terms[p], j_used);
    }
    Ok(PartialWaveSum { energy, sigma: sums, j_max_used: j_used, truncation_error: truncation, converged })
}

/// Tail beyond the last term, assuming the terms fall off as a power of `J`
/// fitted to the last two (long-range potentials give `J^{-5}` or so). If
/// they are not decreasing, a linear-growth bound.
fn tail_estimate(last: &[f64], j: usize) -> f64 {
    match last {
        [a, b] if *a > 0.0 && b < a && j >= 2 => {
            let power = (a / b).ln() / (j as f64 / (j - 1) as f64).ln();
            if power > 1.05 {
                b * j as f64 / (power - 1.0)
            } else {
                b * j as f64
            }
        }
        [.., b] => b * (j.max(1) as f64),
        [] => 0.0,
    }
}

/// `σ_{nn'}` for one exit/entrance pair.
pub fn partial_wave_ics(
    system: &dyn ScatteringSystem,
    energy: f64,
    n: usize,
    n_prime: usize,
    settings: &PwsSettings,
) -> Result<(f64, usize, f64)> {
    let (_, open) = open_channels(system, energy)?;
    for ch in [n, n_prime] {
        match open.get(ch) {
            None => return Err(Error::Argument(format!("channel {ch} out of range"))),
            Some(false) => return Err(Error::ClosedChannel { channel: ch, energy }),
            Some(true) => {}
        }
    }
    let pws = sum_pairs(system, energy, &[(n, n_prime)], settings)?;
    Ok((pws.sigma[(n, n_prime)], pws.j_max_used, pws.truncation_error[(n, n_prime)]))
}

/// All open-open pairs in one sweep over `J`.
pub fn partial_wave_matrix(system: &dyn ScatteringSystem, energy: f64, settings: &PwsSettings) -> Result<PartialWaveSum> {
    let (_, open) = open_channels(system, energy)?;
    let pairs: Vec<(usize, usize)> = (0..open.len())
        .flat_map(|n| (0..open.len()).map(move |np| (n, np)))
        .filter(|&(n, np)| open[n] && open[np])
        .collect();
    if pairs.is_empty() {
        return Err(Error::ClosedChannel { channel: 0, energy });
    }
    sum_pairs(system, energy, &pairs, settings)
}

/// Mulholland resonance term of one pole for the pair `(n, n')`. The pole
/// must carry residues (paper convention); `convention` rescales residue and
/// S-matrix alike.
pub fn mulholland_res(
    system: &dyn ScatteringSystem,
    pole: &ReggePoleRecord,
    n: usize,
    n_prime: usize,
    convention: SConvention,
) -> Result<f64> {
    let (_, open) = open_channels(system, pole.energy)?;
    if !open.get(n_prime).copied().unwrap_or(false) {
        return Err(Error::ClosedChannel { channel: n_prime, energy: pole.energy });
    }
    if n >= open.len() {
        return Err(Error::Argument(format!("channel {n} out of range")));
    }
    Ok(mulholland_matrix(system, pole, convention)?[(n, n_prime)])
}

/// Mulholland terms of one pole for every pair; NaN where the entrance
/// channel is closed.
pub fn mulholland_matrix(system: &dyn ScatteringSystem, pole: &ReggePoleRecord, convention: SConvention) -> Result<RMatrix> {
    let lambda = pole.lambda_bar;
    let rho = pole
        .residues
        .as_ref()
        .ok_or_else(|| Error::Argument(format!("pole at E = {} has no residues", pole.energy)))?;
    let (k, open) = open_channels(system, pole.energy)?;
    let denom = 1.0 + (Complex64::new(0.0, -2.0 * PI) * lambda).exp();
    if denom.norm() < 1e-10 {
        return Err(Error::DegenerateDenominator { lambda });
    }
    let rho = convention.apply(rho.clone(), &k);
    let s_conj = convention.apply(system.s_matrix(pole.energy, lambda.conj())?, &k);
    let nch = k.len();
    Ok(RMatrix::from_fn(nch, nch, |n, np| {
        if !open[np] {
            return f64::NAN;
        }
        let delta = if n == np { 1.0 } else { 0.0 };
        let value = lambda * rho[(n, np)] * (s_conj[(n, np)].conj() - delta) / denom;
        8.0 * PI * PI / k[np].re.powi(2) * value.im
    }))
}

/// Largest `b` (within a few ulps of `sigma − res`) with `res + b == sigma`.
fn exact_background(sigma: f64, res: f64) -> f64 {
    let mut b = sigma - res;
    for _ in 0..8 {
        let back = res + b;
        if back == sigma {
            break;
        }
        b = if back > sigma { b.next_down() } else { b.next_up() };
    }
    b
}

/// Full, resonance and background cross sections on `energies`. Every energy
/// must carry a pole (with residues) on each trajectory; σ^res sums their
/// Mulholland terms.
pub fn decompose(
    system: &dyn ScatteringSystem,
    energies: &[f64],
    trajectories: &[&Trajectory],
    n: usize,
    n_prime: usize,
    settings: &PwsSettings,
) -> Result<Vec<CrossSectionRecord>> {
    energies
        .iter()
        .map(|&energy| {
            let poles = trajectories
                .iter()
                .map(|t| t.at_energy(energy).ok_or(Error::OffTrajectory { energy }))
                .collect::<Result<Vec<_>>>()?;
            let (sigma, j_max_used, truncation_error_estimate) = partial_wave_ics(system, energy, n, n_prime, settings)?;
            let sigma_res = poles
                .iter()
                .map(|p| mulholland_res(system, p, n, n_prime, settings.convention))
                .sum::<Result<f64>>()?;
            Ok(CrossSectionRecord {
                energy,
                n,
                n_prime,
                sigma,
                sigma_res,
                background: exact_background(sigma, sigma_res),
                j_max_used,
                truncation_error_estimate,
            })
        })
        .collect()
}

/// [`decompose`] for every open pair, sharing one partial-wave sweep per
/// energy. Records are ordered by energy, then `n`, then `n'`.
pub fn decompose_all(
    system: &dyn ScatteringSystem,
    energies: &[f64],
    trajectories: &[&Trajectory],
    settings: &PwsSettings,
) -> Result<Vec<CrossSectionRecord>> {
    let per_energy = energies
        .par_iter()
        .map(|&energy| {
            let poles = trajectories
                .iter()
                .map(|t| t.at_energy(energy).ok_or(Error::OffTrajectory { energy }))
                .collect::<Result<Vec<_>>>()?;
            let pws = partial_wave_matrix(system, energy, settings)?;
            let terms = poles
                .iter()
                .map(|p| mulholland_matrix(system, p, settings.convention))
                .collect::<Result<Vec<_>>>()?;
            let nch = pws.sigma.nrows();
            let mut out = Vec::new();
            for n in 0..nch {
                for np in 0..nch {
                    let sigma = pws.sigma[(n, np)];
                    if sigma.is_nan() {
                        continue;
                    }
                    let sigma_res: f64 = terms.iter().map(|t| t[(n, np)]).sum();
                    out.push(CrossSectionRecord {
                        energy,
                        n,
                        n_prime: np,
                        sigma,
                        sigma_res,
                        background: exact_background(sigma, sigma_res),
                        j_max_used: pws.j_max_used,
                        truncation_error_estimate: pws.truncation_error[(n, np)],
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_energy.into_iter().flatten().collect())
}

/// Largest absolute second difference of a sampled curve.
pub fn max_second_difference(values: &[f64]) -> f64 {
    values.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs()).fold(0.0, f64::max)
}

/// Residues rescaled to the flux-normalised convention.
pub fn flux_normalized_residues(rho: &CMatrix, k: &[Complex64]) -> CMatrix {
    SConvention::FluxNormalized.apply(rho.clone(), k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::ReggePoleRecord;
    use crate::smatrix::Determinant;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Single channel, `S(λ) = 1 + g/((λ − p)(λ + q))`: one pole in the upper
    /// half plane, one on the negative axis, and `|1 − S|² ~ λ⁻⁴`.
    struct RationalS {
        p: Complex64,
        q: f64,
        g: Complex64,
        k: f64,
    }

    impl RationalS {
        fn s(&self, l: Complex64) -> Complex64 {
            1.0 + self.g / ((l - self.p) * (l + self.q))
        }
        /// `F(λ) = 2λ (1 − S(λ)) (1 − S̃(λ))`.
        fn f(&self, l: Complex64) -> Complex64 {
            let st = self.s(l.conj()).conj();
            2.0 * l * (1.0 - self.s(l)) * (1.0 - st)
        }
        fn pole(&self) -> ReggePoleRecord {
            ReggePoleRecord {
                energy: 0.5 * self.k * self.k,
                lambda_bar: self.p,
                residues: Some(CMatrix::from_element(1, 1, self.g / (self.p + self.q))),
                residue_agreement: None,
                iterations: 0,
                delta_at_pole: Determinant::from_value(c(0.0, 0.0)),
                certificate: 0.0,
            }
        }
    }

    impl ScatteringSystem for RationalS {
        fn channel_count(&self) -> usize {
            1
        }
        fn wave_vectors(&self, _: f64) -> Result<Vec<Complex64>> {
            Ok(vec![c(self.k, 0.0)])
        }
        fn delta(&self, _: f64, l: Complex64) -> Result<Determinant> {
            Ok(Determinant::from_value((l - self.p) * (l + self.q)))
        }
        fn s_matrix(&self, _: f64, l: Complex64) -> Result<CMatrix> {
            Ok(CMatrix::from_element(1, 1, self.s(l)))
        }
    }

    /// Composite Simpson on `[0, ∞)` after `x = t/(1 − t)`.
    fn integrate_half_line(f: impl Fn(f64) -> f64) -> f64 {
        let n = 200_000;
        let h = 1.0 / n as f64;
        let g = |t: f64| if t >= 1.0 { 0.0 } else { f(t / (1.0 - t)) / (1.0 - t).powi(2) };
        let mut sum = g(0.0) + g(1.0);
        for i in 1..n {
            sum += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    }

    #[test]
    fn mulholland_term_matches_brute_force_sum() {
        for p in [c(2.55, 0.12), c(3.1, 0.4), c(1.7, 0.05)] {
            let sys = RationalS { p, q: 0.7, g: c(0.3, -0.45), k: 1.3 };
            // Σ_J F(J + 1/2), with the λ⁻³ tail summed analytically beyond J = 2·10⁵.
            let jmax = 200_000;
            let mut brute = 0.0;
            for j in (0..jmax).rev() {
                brute += sys.f(c(j as f64 + 0.5, 0.0)).re;
            }
            let lam_end = jmax as f64 + 0.5;
            let tail_coeff = sys.f(c(lam_end, 0.0)).re * lam_end.powi(3);
            brute += tail_coeff / (2.0 * (lam_end - 0.5).powi(2));
            let smooth = integrate_half_line(|x| sys.f(c(x, 0.0)).re)
                + 2.0 * integrate_half_line(|y| sys.f(c(0.0, y)).im / (1.0 + (2.0 * PI * y).exp()));
            let scale = PI / (sys.k * sys.k);
            let resonant = scale * (brute - smooth);
            let res = mulholland_res(&sys, &sys.pole(), 0, 0, SConvention::Paper).unwrap();
            assert!((res - resonant).abs() <= 1e-6 * resonant.abs().max(1e-3), "p={p}: {res} vs {resonant}");
        }
    }

    #[test]
    fn zero_residue_gives_zero_term() {
        let sys = RationalS { p: c(2.5, 0.2), q: 0.7, g: c(0.3, 0.1), k: 1.0 };
        let mut pole = sys.pole();
        pole.residues = Some(CMatrix::zeros(1, 1));
        assert_eq!(mulholland_res(&sys, &pole, 0, 0, SConvention::Paper).unwrap(), 0.0);
    }

    #[test]
    fn half_integer_pole_is_degenerate() {
        let sys = RationalS { p: c(2.5, 0.0), q: 0.7, g: c(0.3, 0.1), k: 1.0 };
        let r = mulholland_res(&sys, &sys.pole(), 0, 0, SConvention::Paper);
        assert!(matches!(r, Err(Error::DegenerateDenominator { .. })));
    }

    #[test]
    fn pws_of_rational_model_matches_direct_sum() {
        let sys = RationalS { p: c(2.55, 0.12), q: 0.7, g: c(0.3, -0.45), k: 1.3 };
        // |1 − S|² ~ λ⁻⁴ converges slowly, so use a loose stop rule.
        let settings = PwsSettings { tol: 1e-5, ..Default::default() };
        let (sigma, jmax, tail) = partial_wave_ics(&sys, 0.845, 0, 0, &settings).unwrap();
        let direct: f64 = (0..=jmax).map(|j| sys.f(c(j as f64 + 0.5, 0.0)).re).sum::<f64>() * PI / 1.69;
        assert!((sigma - direct).abs() < 1e-12 * direct);
        assert!(jmax < 200 && tail < 1e-2 * sigma, "{jmax} {tail}");
    }

    #[test]
    fn background_closes_the_sum_exactly() {
        for (s, r) in [(1.0, 0.3), (0.1 + 0.2, 0.7), (123.456, -7.89e-3), (2.5e-3, 1.7e-3)] {
            assert_eq!(r + exact_background(s, r), s);
        }
    }

    #[test]
    fn decompose_all_matches_single_pair() {
        let sys = RationalS { p: c(2.55, 0.12), q: 0.7, g: c(0.3, -0.45), k: 1.3 };
        let traj = Trajectory {
            label: "I".into(),
            records: vec![sys.pole()],
            self_intersections: vec![],
            truncated: None,
            degenerate: false,
        };
        let e = sys.pole().energy;
        let settings = PwsSettings { tol: 1e-5, ..Default::default() };
        let one = decompose(&sys, &[e], &[&traj], 0, 0, &settings).unwrap();
        let all = decompose_all(&sys, &[e], &[&traj], &settings).unwrap();
        assert_eq!(one, all);
        assert!(matches!(decompose_all(&sys, &[e + 0.1], &[&traj], &settings), Err(Error::OffTrajectory { .. })));
    }

    #[test]
    fn second_difference() {
        assert_eq!(max_second_difference(&[0.0, 1.0, 4.0, 9.0]), 2.0);
        assert_eq!(max_second_difference(&[1.0, 2.0]), 0.0);
    }
}
