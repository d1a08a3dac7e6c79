//! Multichannel scattering at complex angular momentum.
//!
//! The crate computes S-matrices of coupled radial Schrödinger equations
//! for complex `λ = J + 1/2`, locates Regge poles as zeros of
//! `Δ(E, λ) = det Ŝ⁻`, follows them in energy, extracts residues and splits
//! integral cross sections into a pole (Mulholland) term and a background.
//!
//! The pipeline for one `(E, λ)` evaluation is
//! power-series start near the origin ([`series_start`]) →
//! adaptive propagation ([`propagator`]) →
//! matching to Riccati-Hankel functions ([`special`], [`smatrix`]).
//!
//! Atomic units are used throughout (`ħ = μ = 1`).

pub mod error;
pub mod poles;
pub mod potential;
pub mod powerseries;
pub mod propagator;
pub mod series_start;
pub mod smatrix;
pub mod special;
pub mod xsec;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use poles::{
    find_pole, find_pole_excluding, locate_poles, mark_collisions, hausdorff_distance, residues, scan_for_seeds, trace_trajectory, MullerSettings, PoleSettings, ReggePoleRecord,
    ResidueEstimate, ResidueSettings, SelfIntersection, TraceSettings, Trajectory,
};
pub use potential::{
    adiabatic_curves, adiabatic_model, AdiabaticModel, FreeParticle, PotentialModel,
    ThomasFermiModel, TwoChannelTFParams,
};
pub use propagator::{propagate, PropagationSettings};
pub use series_start::{initial_conditions, series_coefficients, RadialState, SeriesSolution};
pub use smatrix::{
    channel_wave_vectors, match_state, tail_phases, Determinant, MatchResult, Numerics, Pipeline,
    ScatteringSystem, SConvention,
};
pub use special::{riccati_hankel, HankelSettings, RiccatiHankelPair};
pub use xsec::{
    decompose, decompose_all, max_second_difference, mulholland_matrix, mulholland_res, partial_wave_ics, partial_wave_matrix, CrossSectionRecord, PartialWaveSum, PwsSettings,
};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense complex matrix used for solution bundles and S-matrices.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense real matrix used for potential values and series coefficients.
pub type RMatrix = nalgebra::DMatrix<f64>;
