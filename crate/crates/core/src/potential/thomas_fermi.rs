//! Coupled Thomas-Fermi type potentials.
//!
//! Every diagonal entry is `-Z/[r(r+a)(r²+b)] + V_n`; channels are coupled by
//! Gaussians `α exp[-(r-r_i)²/Δr²]`.

use super::{validate_thresholds, PotentialModel};
use crate::powerseries::PowerSeries;
use crate::{Error, RMatrix, Result};

/// Parameters of the two-channel model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoChannelTFParams {
    pub z: f64,
    pub a: f64,
    pub b: f64,
    /// Excitation energy, i.e. the threshold of channel 1.
    pub delta_v: f64,
    pub alpha: f64,
    pub r_i: f64,
    pub delta_r: f64,
}

impl TwoChannelTFParams {
    /// The parameter set used for the reference trajectories:
    /// `Z = 54, a = 0.0125, b = 1.5874, ΔV = 0.3, α = 1.5, r_i = 2.4, Δr = 1`.
    pub fn paper() -> Self {
        Self { z: 54.0, a: 0.0125, b: 1.5874, delta_v: 0.3, alpha: 1.5, r_i: 2.4, delta_r: 1.0 }
    }

    pub fn uncoupled(mut self) -> Self {
        self.alpha = 0.0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCoupling {
    pub i: usize,
    pub j: usize,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianCoupling {
    fn value(&self, r: f64) -> f64 {
        let x = (r - self.center) / self.width;
        self.amplitude * (-x * x).exp()
    }

    /// Series of `r · α exp[-(r-r_i)²/Δr²]`.
    fn r_times_series(&self, order: usize) -> PowerSeries {
        let w2 = self.width * self.width;
        let exponent = PowerSeries::new(
            vec![-self.center * self.center / w2, 2.0 * self.center / w2, -1.0 / w2],
            order,
        );
        exponent.exp().scale(self.amplitude).shift_up(1)
    }
}

#[derive(Debug, Clone)]
pub struct ThomasFermiModel {
    z: f64,
    a: f64,
    b: f64,
    thresholds: Vec<f64>,
    couplings: Vec<GaussianCoupling>,
}

impl ThomasFermiModel {
    pub fn new(
        z: f64,
        a: f64,
        b: f64,
        thresholds: Vec<f64>,
        couplings: Vec<GaussianCoupling>,
    ) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Argument(format!("shape parameters must be positive (a = {a}, b = {b})")));
        }
        validate_thresholds(&thresholds)?;
        let n = thresholds.len();
        for c in &couplings {
            if c.i >= n || c.j >= n || c.i == c.j {
                return Err(Error::Argument(format!("invalid coupling indices ({}, {})", c.i, c.j)));
            }
            if !(c.width > 0.0) {
                return Err(Error::Argument(format!("coupling width must be positive, got {}", c.width)));
            }
        }
        Ok(Self { z, a, b, thresholds, couplings })
    }

    pub fn two_channel(p: &TwoChannelTFParams) -> Result<Self> {
        let couplings = if p.alpha != 0.0 {
            vec![GaussianCoupling { i: 0, j: 1, amplitude: p.alpha, center: p.r_i, width: p.delta_r }]
        } else {
            Vec::new()
        };
        if !(p.delta_r > 0.0) {
            return Err(Error::Argument(format!("Δr must be positive, got {}", p.delta_r)));
        }
        Self::new(p.z, p.a, p.b, vec![p.delta_v, 0.0], couplings)
    }

    /// The screened Coulomb part `-Z/[r(r+a)(r²+b)]` shared by all channels.
    pub fn core(&self, r: f64) -> f64 {
        -self.z / (r * (r + self.a) * (r * r + self.b))
    }

    fn core_r_series(&self, order: usize) -> PowerSeries {
        // (r + a)(r² + b) = ab + b r + a r² + r³
        let denom = PowerSeries::new(vec![self.a * self.b, self.b, self.a, 1.0], order);
        denom.recip().expect("ab > 0").scale(-self.z)
    }
}

impl PotentialModel for ThomasFermiModel {
    fn channel_count(&self) -> usize {
        self.thresholds.len()
    }

    fn fill(&self, r: f64, out: &mut [f64]) {
        let n = self.thresholds.len();
        let core = self.core(r);
        out.fill(0.0);
        for (i, v) in self.thresholds.iter().enumerate() {
            out[i * n + i] = core + v;
        }
        for c in &self.couplings {
            let v = c.value(r);
            out[c.i * n + c.j] += v;
            out[c.j * n + c.i] += v;
        }
    }

    fn thresholds(&self) -> Vec<f64> {
        self.thresholds.clone()
    }

    fn maclaurin_coeffs(&self, j_max: usize) -> Result<Vec<RMatrix>> {
        let n = self.thresholds.len();
        let core = self.core_r_series(j_max);
        let mut out: Vec<RMatrix> = (0..=j_max)
            .map(|j| {
                let mut m = RMatrix::from_diagonal_element(n, n, core.coeff(j));
                if j == 1 {
                    for (i, v) in self.thresholds.iter().enumerate() {
                        m[(i, i)] += v;
                    }
                }
                m
            })
            .collect();
        for c in &self.couplings {
            let s = c.r_times_series(j_max);
            for (j, m) in out.iter_mut().enumerate() {
                m[(c.i, c.j)] += s.coeff(j);
                m[(c.j, c.i)] += s.coeff(j);
            }
        }
        Ok(out)
    }
}
