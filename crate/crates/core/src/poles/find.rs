//! Single-pole search at fixed energy and the coarse `|Δ|` scan that seeds it.

use num_complex::Complex64;
use rayon::prelude::*;

use super::muller::{muller, MullerSettings};
use super::ReggePoleRecord;
use crate::smatrix::{Determinant, ScatteringSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSettings {
    /// Tolerances apply to `Δ` divided by its value at the end of the trend
    /// baseline and by the fitted exponential trend.
    pub muller: MullerSettings,
    /// Length of the real segment through the guess over which the
    /// exponential trend of `|Δ|` is fitted; zero disables detrending. Trends
    /// under one e-fold across the baseline are ignored.
    pub trend_baseline: f64,
    pub certificate_radius: f64,
    pub certificate_points: usize,
    /// Poles whose certificate exceeds this are rejected.
    pub certificate_tol: f64,
    /// Optional search box `(lower-left, upper-right)`; a zero found outside
    /// it is reported as out of basin.
    pub bounds: Option<(Complex64, Complex64)>,
}

impl Default for PoleSettings {
    fn default() -> Self {
        Self {
            muller: MullerSettings::default(),
            trend_baseline: 0.5,
            certificate_radius: 0.1,
            certificate_points: 8,
            certificate_tol: 1e-6,
            bounds: None,
        }
    }
}

/// Polish `guess` into a certified zero of `Δ(E, ·)`. Residues are left empty.
pub fn find_pole(
    system: &dyn ScatteringSystem,
    energy: f64,
    guess: Complex64,
    settings: &PoleSettings,
) -> Result<ReggePoleRecord> {
    find_pole_excluding(system, energy, guess, &[], settings)
}

/// As [`find_pole`], but with the zeros in `known` divided out of `Δ` so the
/// iteration cannot return to them. Two poles closer together than the scan
/// spacing share one `|Δ|` minimum; this recovers the second.
pub fn find_pole_excluding(
    system: &dyn ScatteringSystem,
    energy: f64,
    guess: Complex64,
    known: &[Complex64],
    settings: &PoleSettings,
) -> Result<ReggePoleRecord> {
    // |Δ| carries a steep exponential trend in Re λ (the r^{λ+1/2}
    // normalisation at the origin). Left in, it drags a descent-controlled
    // iteration past nearby zeros, so divide out a real exponential fitted
    // across a short baseline; e^{−c(λ−g)} has no zeros of its own.
    let half = settings.trend_baseline / 2.0;
    let left = if guess.re - half > -0.4 { guess - half } else { guess };
    let right = left + settings.trend_baseline;
    let reference = system.delta(energy, right)?;
    let mut slope = 0.0;
    if settings.trend_baseline > 0.0 {
        let rise = reference.ln_abs() - system.delta(energy, left)?.ln_abs();
        // Under one e-fold across the baseline is left alone: a nearby zero
        // alone produces that much, and polynomial-like Δ keeps its shape.
        if rise.abs() > 1.0 {
            slope = rise / settings.trend_baseline;
        }
    }
    let detrend = |z: Complex64| (-(z - right) * slope).exp();
    // Scale each deflating factor by its distance from the reference point
    // so the objective stays of order one away from the known zeros.
    let deflate = |z: Complex64| known.iter().map(|&p| (right - p) / (z - p)).product::<Complex64>();
    let outcome = muller(
        |z| Ok(system.delta(energy, z)?.ratio(&reference) * detrend(z) * deflate(z)),
        guess,
        &settings.muller,
    )?;
    let lambda_bar = outcome.root;
    if let Some((lo, hi)) = settings.bounds {
        let inside = (lo.re..=hi.re).contains(&lambda_bar.re) && (lo.im..=hi.im).contains(&lambda_bar.im);
        if !inside {
            return Err(Error::OutOfBasin { lambda: lambda_bar });
        }
    }
    let delta_at_pole = system.delta(energy, lambda_bar)?;
    let cert = certificate(system, energy, lambda_bar, &delta_at_pole, settings)?;
    if !(cert <= settings.certificate_tol) {
        return Err(Error::Uncertified { lambda: lambda_bar, certificate: cert, tol: settings.certificate_tol });
    }
    Ok(ReggePoleRecord {
        energy,
        lambda_bar,
        residues: None,
        residue_agreement: None,
        iterations: outcome.iterations,
        delta_at_pole,
        certificate: cert,
    })
}

/// `|Δ(λ̄)|` divided by the median `|Δ|` on a circle around `λ̄`.
pub fn certificate(
    system: &dyn ScatteringSystem,
    energy: f64,
    lambda_bar: Complex64,
    delta_at_pole: &Determinant,
    settings: &PoleSettings,
) -> Result<f64> {
    let m = settings.certificate_points.max(1);
    let logs = (0..m)
        .map(|i| {
            let phase = Complex64::from_polar(1.0, std::f64::consts::TAU * i as f64 / m as f64);
            Ok(system.delta(energy, lambda_bar + settings.certificate_radius * phase)?.ln_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    // Work relative to one circle value so that nothing over- or underflows.
    let base = logs[0];
    let mut sizes: Vec<f64> = logs.iter().map(|l| (l - base).exp()).collect();
    sizes.sort_by(f64::total_cmp);
    let median = if m % 2 == 1 { sizes[m / 2] } else { 0.5 * (sizes[m / 2 - 1] + sizes[m / 2]) };
    Ok((delta_at_pole.ln_abs() - base).exp() / median)
}

/// `v` minus its least-squares plane `a + b Re λ + c Im λ`. The steep
/// exponential trend of `|Δ|` in `Re λ` otherwise hides the shallow grid
/// dips of narrow poles close to the real axis.
fn detrend_plane(points: &[Complex64], v: &[f64]) -> Vec<f64> {
    let finite: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_finite()).collect();
    if finite.len() < 3 {
        return v.to_vec();
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &i in &finite {
        let row = nalgebra::Vector3::new(1.0, points[i].re, points[i].im);
        ata += row * row.transpose();
        atb += row * v[i];
    }
    let Some(coef) = ata.lu().solve(&atb) else {
        return v.to_vec();
    };
    points.iter().zip(v).map(|(z, x)| x - coef[0] - coef[1] * z.re - coef[2] * z.im).collect()
}

/// `ln |Δ|` on a rectangular λ grid and the local minima found on it.
#[derive(Debug, Clone)]
pub struct DeltaScan {
    pub energy: f64,
    /// Grid points, real part varying fastest.
    pub lambdas: Vec<Complex64>,
    pub deltas: Vec<Determinant>,
    pub shape: (usize, usize),
    /// Local minima of the detrended `ln |Δ|`, deepest first.
    pub seeds: Vec<Complex64>,
}

/// Evaluate `Δ(E, ·)` on `nx × ny` points of `[re.0, re.1] × i[im.0, im.1]`
/// and return the grid minima whose depth (mean neighbour minus value, in
/// `ln |Δ|` with its best-fit plane removed) exceeds `min_depth`.
pub fn scan_for_seeds(
    system: &dyn ScatteringSystem,
    energy: f64,
    re: (f64, f64),
    im: (f64, f64),
    shape: (usize, usize),
    min_depth: f64,
) -> Result<DeltaScan> {
    let (nx, ny) = shape;
    if nx < 3 || ny < 2 {
        return Err(Error::Argument(format!("scan grid {nx}×{ny} is too small")));
    }
    let lambdas: Vec<Complex64> = (0..nx * ny)
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            Complex64::new(
                re.0 + (re.1 - re.0) * i as f64 / (nx - 1) as f64,
                im.0 + (im.1 - im.0) * j as f64 / (ny - 1) as f64,
            )
        })
        .collect();
    let deltas = lambdas.par_iter().map(|&l| system.delta(energy, l)).collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = deltas.iter().map(Determinant::ln_abs).collect();
    let values = detrend_plane(&lambdas, &raw);

    let mut minima = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            let mut sum = 0.0;
            let mut count = 0;
            let mut lowest = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                        continue;
                    }
                    let w = values[b as usize * nx + a as usize];
                    lowest &= w > v;
                    sum += w;
                    count += 1;
                }
            }
            // Edge points need most of their neighbourhood to count.
            if lowest && count >= 5 && sum / count as f64 - v > min_depth {
                minima.push((sum / count as f64 - v, lambdas[j * nx + i]));
            }
        }
    }
    minima.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(DeltaScan { energy, lambdas, deltas, shape, seeds: minima.into_iter().map(|m| m.1).collect() })
}

/// Every certified pole in a rectangle of the λ plane at one energy: the
/// scan minima polished by [`find_pole`], then a deflated pass from each
/// minimum for partners sharing it. Failed polishes are skipped. Sorted by
/// `Re λ̄`. The rectangle doubles as the search box unless `settings`
/// already carries one.
pub fn locate_poles(
    system: &dyn ScatteringSystem,
    energy: f64,
    re: (f64, f64),
    im: (f64, f64),
    shape: (usize, usize),
    min_depth: f64,
    settings: &PoleSettings,
) -> Result<Vec<ReggePoleRecord>> {
    let scan = scan_for_seeds(system, energy, re, im, shape, min_depth)?;
    let (dx, dy) = ((re.1 - re.0) / (shape.0 - 1) as f64, (im.1 - im.0) / (shape.1 - 1) as f64);
    let settings = PoleSettings {
        bounds: settings.bounds.or(Some((
            Complex64::new(re.0 - dx, im.0 - dy),
            Complex64::new(re.1 + dx, im.1 + dy),
        ))),
        ..*settings
    };
    let mut found: Vec<ReggePoleRecord> = Vec::new();
    let keep = |found: &mut Vec<ReggePoleRecord>, pole: Result<ReggePoleRecord>| {
        if let Ok(p) = pole {
            if found.iter().all(|q| (q.lambda_bar - p.lambda_bar).norm() > 1e-6) {
                found.push(p);
            }
        }
    };
    for &seed in &scan.seeds {
        let pole = find_pole(system, energy, seed, &settings);
        keep(&mut found, pole);
    }
    for &seed in &scan.seeds {
        let known: Vec<Complex64> = found.iter().map(|p| p.lambda_bar).collect();
        let pole = find_pole_excluding(system, energy, seed, &known, &settings);
        keep(&mut found, pole);
    }
    found.sort_by(|a, b| a.lambda_bar.re.total_cmp(&b.lambda_bar.re));
    Ok(found)
}
