//! Continuation of a pole along an energy grid and polyline geometry of the
//! resulting trajectory.

use num_complex::Complex64;

use super::find::{find_pole, PoleSettings};
use super::residues::{residues, ResidueSettings};
use super::ReggePoleRecord;
use crate::smatrix::ScatteringSystem;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    pub pole: PoleSettings,
    /// Largest accepted `|Δλ̄|` between consecutive records.
    pub jump_tol: f64,
    /// Smallest energy step reached by halving before the trace gives up.
    pub min_energy_step: f64,
    /// Residues are computed for every record when set.
    pub residues: Option<ResidueSettings>,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self { pole: PoleSettings::default(), jump_tol: 0.2, min_energy_step: 1e-4, residues: None }
    }
}

/// A crossing of two non-adjacent segments of the `λ̄` polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfIntersection {
    /// Index of the first vertex of each crossing segment.
    pub segments: (usize, usize),
    /// Energies at the crossing, interpolated along each segment.
    pub energies: (f64, f64),
    pub point: Complex64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub label: String,
    /// Strictly increasing in energy; includes points added by step halving.
    pub records: Vec<ReggePoleRecord>,
    pub self_intersections: Vec<SelfIntersection>,
    /// Why the trace stopped before the end of the grid, if it did.
    pub truncated: Option<String>,
    /// Set when another trajectory landed on the same pole.
    pub degenerate: bool,
}

impl Trajectory {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.records.iter().map(|r| r.lambda_bar).collect()
    }

    /// The record computed at `energy` (to within 1e-12), if any.
    pub fn at_energy(&self, energy: f64) -> Option<&ReggePoleRecord> {
        self.records.iter().find(|r| (r.energy - energy).abs() <= 1e-12 * energy.abs().max(1.0))
    }

    /// Records with energy in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> Vec<&ReggePoleRecord> {
        self.records.iter().filter(|r| r.energy >= lo && r.energy <= hi).collect()
    }
}

/// Follow the pole seeded by `seed` at `energies[0]` across the grid.
///
/// The guess for each new energy is the linear extrapolation of the last two
/// poles. A step is halved while the accepted pole jumps by more than
/// `jump_tol` or the search fails; intermediate energies are kept as records.
pub fn trace_trajectory(
    system: &dyn ScatteringSystem,
    energies: &[f64],
    seed: Complex64,
    settings: &TraceSettings,
    label: &str,
) -> Result<Trajectory> {
    if energies.is_empty() || energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("trajectory energies must be non-empty and strictly increasing".into()));
    }
    let first = find_pole(system, energies[0], seed, &settings.pole)?;
    let mut records = vec![with_residues(system, first, settings)];
    let mut truncated = None;

    'grid: for &target in &energies[1..] {
        let mut step = target - records.last().map_or(target, |r| r.energy);
        loop {
            let last = records.last().expect("trajectory has a first record");
            let e_try = if last.energy + step >= target { target } else { last.energy + step };
            let guess = extrapolate(&records, e_try);
            let outcome = find_pole(system, e_try, guess, &settings.pole);
            let accepted = match outcome {
                Ok(pole) if (pole.lambda_bar - last.lambda_bar).norm() <= settings.jump_tol => Some(pole),
                Ok(pole) => {
                    log::debug!("{label}: jump {:.3e} at E = {e_try}", (pole.lambda_bar - last.lambda_bar).norm());
                    None
                }
                Err(err) => {
                    log::debug!("{label}: search failed at E = {e_try}: {err}");
                    None
                }
            };
            match accepted {
                Some(pole) => {
                    let reached = e_try == target;
                    records.push(with_residues(system, pole, settings));
                    if reached {
                        break;
                    }
                    step = (2.0 * step).min(target - e_try);
                }
                None => {
                    step *= 0.5;
                    if step < settings.min_energy_step {
                        let msg = format!(
                            "continuation failed between E = {} and E = {target}: no acceptable pole with step ≥ {:e}",
                            last.energy, settings.min_energy_step
                        );
                        log::warn!("{label}: {msg}");
                        truncated = Some(msg);
                        break 'grid;
                    }
                }
            }
        }
    }

    let lambdas: Vec<Complex64> = records.iter().map(|r| r.lambda_bar).collect();
    let energies: Vec<f64> = records.iter().map(|r| r.energy).collect();
    let self_intersections = self_intersections(&lambdas, &energies);
    Ok(Trajectory { label: label.to_string(), records, self_intersections, truncated, degenerate: false })
}

fn with_residues(system: &dyn ScatteringSystem, mut pole: ReggePoleRecord, settings: &TraceSettings) -> ReggePoleRecord {
    if let Some(rs) = &settings.residues {
        match residues(system, &pole, rs) {
            Ok(est) => {
                pole.residues = Some(est.contour);
                pole.residue_agreement = Some(est.relative_difference);
            }
            Err(err) => log::warn!("residues at E = {}, λ̄ = {}: {err}", pole.energy, pole.lambda_bar),
        }
    }
    pole
}

fn extrapolate(records: &[ReggePoleRecord], energy: f64) -> Complex64 {
    match records {
        [.., a, b] => b.lambda_bar + (b.lambda_bar - a.lambda_bar) * ((energy - b.energy) / (b.energy - a.energy)),
        [b] => b.lambda_bar,
        [] => unreachable!("extrapolation needs at least one record"),
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Proper crossings between non-adjacent segments of the polyline
/// `points[0] → points[1] → …`; `energies` label the vertices.
pub fn self_intersections(points: &[Complex64], energies: &[f64]) -> Vec<SelfIntersection> {
    let mut found = Vec::new();
    let n = points.len();
    if n < 4 {
        return found;
    }
    for i in 0..n - 1 {
        let (p, r) = (points[i], points[i + 1] - points[i]);
        for j in i + 2..n - 1 {
            let (q, s) = (points[j], points[j + 1] - points[j]);
            let o1 = cross(r, q - p);
            let o2 = cross(r, q + s - p);
            let o3 = cross(s, p - q);
            let o4 = cross(s, p + r - q);
            if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                let denom = cross(r, s);
                let t = cross(q - p, s) / denom;
                let u = cross(q - p, r) / denom;
                found.push(SelfIntersection {
                    segments: (i, j),
                    energies: (
                        energies[i] + t * (energies[i + 1] - energies[i]),
                        energies[j] + u * (energies[j + 1] - energies[j]),
                    ),
                    point: p + r * t,
                });
            }
        }
    }
    found
}

fn point_segment_distance(x: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    let t = if len2 > 0.0 { ((x - a).re * d.re + (x - a).im * d.im) / len2 } else { 0.0 };
    (x - (a + d * t.clamp(0.0, 1.0))).norm()
}

fn directed_distance(from: &[Complex64], to: &[Complex64]) -> f64 {
    from.iter()
        .map(|&x| match to {
            [only] => (x - only).norm(),
            _ => to.windows(2).map(|w| point_segment_distance(x, w[0], w[1])).fold(f64::INFINITY, f64::min),
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two polylines in the λ plane.
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed_distance(a, b).max(directed_distance(b, a))
}

/// Flag trajectories that reach the same pole (within `tol`) at a shared
/// energy. Returns the number of colliding pairs.
pub fn mark_collisions(trajectories: &mut [Trajectory], tol: f64) -> usize {
    let mut pairs = Vec::new();
    for i in 0..trajectories.len() {
        for j in i + 1..trajectories.len() {
            let hit = trajectories[i].records.iter().any(|r| {
                trajectories[j].at_energy(r.energy).is_some_and(|s| (s.lambda_bar - r.lambda_bar).norm() <= tol)
            });
            if hit {
                pairs.push((i, j));
            }
        }
    }
    for &(i, j) in &pairs {
        log::warn!("trajectories {} and {} converge to the same pole", trajectories[i].label, trajectories[j].label);
        trajectories[i].degenerate = true;
        trajectories[j].degenerate = true;
    }
    pairs.len()
}
