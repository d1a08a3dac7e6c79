//! Regge poles: zeros of `Δ(E, ·)` at fixed real energy, their continuation
//! in energy and their residues.
//!
//! Everything here talks to a [`ScatteringSystem`](crate::ScatteringSystem),
//! so analytic stand-ins can replace the full pipeline in tests.

mod find;
mod muller;
mod residues;
mod trajectory;

pub use find::{certificate, find_pole, find_pole_excluding, locate_poles, scan_for_seeds, DeltaScan, PoleSettings};
pub use muller::{muller, MullerOutcome, MullerSettings};
pub use residues::{residues, ResidueEstimate, ResidueSettings};
pub use trajectory::{
    hausdorff_distance, mark_collisions, self_intersections, trace_trajectory, SelfIntersection,
    TraceSettings, Trajectory,
};

use num_complex::Complex64;

use crate::smatrix::Determinant;
use crate::CMatrix;

/// One Regge pole `λ̄(E)` with its diagnostics.
#[derive(Debug, Clone)]
pub struct ReggePoleRecord {
    pub energy: f64,
    pub lambda_bar: Complex64,
    /// `ρ_{nn'}(E)` in the paper convention; filled in by [`residues`].
    pub residues: Option<CMatrix>,
    /// Relative difference between the contour and limit residue estimates.
    pub residue_agreement: Option<f64>,
    pub iterations: usize,
    pub delta_at_pole: Determinant,
    /// `|Δ(λ̄)|` over the median `|Δ|` on the certificate circle.
    pub certificate: f64,
}

impl ReggePoleRecord {
    /// `Re J = Re λ̄ − 1/2`.
    pub fn angular_momentum(&self) -> Complex64 {
        self.lambda_bar - 0.5
    }
}
