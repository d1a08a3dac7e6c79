//! Riccati-Hankel functions `ĥ±_λ(z) = sqrt(πz/2) H^{(1,2)}_λ(z)` of complex
//! order and argument from the large-argument asymptotic series
//!
//! ```text
//! ĥ±_λ(z) = e^{±iω} Σ_m (±i)^m a_m(λ) z^{-m},   ω = z - λπ/2 - π/4,
//! a_m(λ) = Π_{k=1}^{m} (4λ² - (2k-1)²) / (8^m m!).
//! ```
//!
//! The series is summed until a term drops below `tol` relative to the partial
//! sum, or, once past the growing region `m ≲ |λ|`, until terms stop
//! decreasing (optimal truncation).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;

use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Validity domain and truncation control of the asymptotic series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelSettings {
    /// Absolute lower bound on `|z|`.
    pub z_min: f64,
    /// Order-dependent bound: `|z| ≥ c (1 + |λ|²)`.
    pub order_factor: f64,
    /// Relative truncation tolerance.
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for HankelSettings {
    fn default() -> Self {
        Self { z_min: 25.0, order_factor: 0.1, tol: 1e-16, max_terms: 400 }
    }
}

impl HankelSettings {
    pub fn threshold(&self, lambda: Complex64) -> f64 {
        self.z_min.max(self.order_factor * (1.0 + lambda.norm_sqr()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiHankelPair {
    pub h_plus: Complex64,
    pub h_minus: Complex64,
    pub d_plus: Complex64,
    pub d_minus: Complex64,
    pub order: Complex64,
    pub argument: Complex64,
    pub terms_used: usize,
    /// Magnitude of the first omitted term relative to the partial sum.
    pub truncation_estimate: f64,
}

impl RiccatiHankelPair {
    /// `ĥ⁺ (ĥ⁻)′ − ĥ⁻ (ĥ⁺)′`, identically `−2i`.
    pub fn wronskian(&self) -> Complex64 {
        self.h_plus * self.d_minus - self.h_minus * self.d_plus
    }
}

pub fn riccati_hankel(lambda: Complex64, z: Complex64, settings: &HankelSettings) -> Result<RiccatiHankelPair> {
    let threshold = settings.threshold(lambda);
    if !(z.norm() >= threshold) {
        return Err(Error::HankelDomain { z_abs: z.norm(), threshold });
    }
    if z.re < 0.0 {
        return Err(Error::Domain(format!("Riccati-Hankel argument {z} in the left half-plane")));
    }

    let inv_z = 1.0 / z;
    let four_l2 = 4.0 * lambda * lambda;
    let growth_limit = lambda.norm() + 1.0;

    // a_m z^{-m} and the two alternating sums with their termwise derivatives
    let mut term = Complex64::new(1.0, 0.0);
    let mut phase_p = Complex64::new(1.0, 0.0); // i^m
    let mut sum_p = Complex64::new(0.0, 0.0);
    let mut sum_m = Complex64::new(0.0, 0.0);
    // Σ (±i)^m a_m (-m) z^{-m-1}
    let mut dsum_p = Complex64::new(0.0, 0.0);
    let mut dsum_m = Complex64::new(0.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut m = 0usize;
    let estimate = loop {
        let size = term.norm();
        let partial = sum_p.norm().max(sum_m.norm()).max(f64::MIN_POSITIVE);
        let converged = m > 0 && size < settings.tol * partial;
        let diverging = m as f64 > growth_limit && size >= prev;
        if converged || diverging || m >= settings.max_terms {
            break size / partial;
        }
        let phase_m = phase_p.conj();
        sum_p += phase_p * term;
        sum_m += phase_m * term;
        let dterm = -(m as f64) * term * inv_z;
        dsum_p += phase_p * dterm;
        dsum_m += phase_m * dterm;

        prev = size;
        m += 1;
        let k = (2 * m - 1) as f64;
        term *= (four_l2 - k * k) * inv_z / (8.0 * m as f64);
        phase_p *= I;
    };

    let omega = z - lambda * FRAC_PI_2 - FRAC_PI_4;
    let e_plus = (I * omega).exp();
    let e_minus = (-I * omega).exp();
    let h_plus = e_plus * sum_p;
    let h_minus = e_minus * sum_m;
    let d_plus = e_plus * (I * sum_p + dsum_p);
    let d_minus = e_minus * (-I * sum_m + dsum_m);
    if ![h_plus, h_minus, d_plus, d_minus].iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::HankelOverflow { z });
    }
    Ok(RiccatiHankelPair {
        h_plus,
        h_minus,
        d_plus,
        d_minus,
        order: lambda,
        argument: z,
        terms_used: m,
        truncation_estimate: estimate,
    })
}
