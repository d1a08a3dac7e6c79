//! Truncated real power series `Σ c_j x^j`, enough algebra to build exact
//! Maclaurin coefficients of the model potentials.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    /// Series with the given leading coefficients, truncated (or zero-padded)
    /// to `order + 1` terms.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> Self {
        coeffs.resize(order + 1, 0.0);
        Self { coeffs }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        Self::new(vec![c], order)
    }

    /// The series of `x` itself.
    pub fn identity(order: usize) -> Self {
        Self::new(vec![0.0, 1.0], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Option<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return None;
        }
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = 1.0 / c0;
        for j in 1..n {
            let s: f64 = (1..=j).map(|i| self.coeffs[i] * out[j - i]).sum();
            out[j] = -s / c0;
        }
        Some(Self { coeffs: out })
    }

    /// `exp(f)` by the recursion `g' = f' g`.
    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[0].exp();
        for j in 1..n {
            let s: f64 = (1..=j).map(|i| i as f64 * self.coeffs[i] * out[j - i]).sum();
            out[j] = s / j as f64;
        }
        Self { coeffs: out }
    }

    /// Principal square root; requires a positive constant term.
    pub fn sqrt(&self) -> Option<Self> {
        let c0 = self.coeffs[0];
        if c0 <= 0.0 {
            return None;
        }
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = c0.sqrt();
        for j in 1..n {
            let s: f64 = (1..j).map(|i| out[i] * out[j - i]).sum();
            out[j] = (self.coeffs[j] - s) / (2.0 * out[0]);
        }
        Some(Self { coeffs: out })
    }

    /// Index of the first coefficient with magnitude above `eps`, if any.
    pub fn valuation(&self, eps: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| c.abs() > eps)
    }

    /// Divide by `x^k`, dropping the first `k` coefficients (assumed zero) and
    /// keeping the truncation order.
    pub fn shift_down(&self, k: usize) -> Self {
        let order = self.order();
        let coeffs = self.coeffs.iter().skip(k).copied().collect();
        Self::new(coeffs, order)
    }

    /// Multiply by `x^k` within the truncation order.
    pub fn shift_up(&self, k: usize) -> Self {
        let order = self.order();
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Self::new(coeffs, order)
    }
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order).map(|j| self.coeffs[j] + rhs.coeffs[j]).collect();
        PowerSeries { coeffs }
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: &PowerSeries) -> PowerSeries {
        self + &(-rhs)
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        self.scale(-1.0)
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: &PowerSeries) -> PowerSeries {
        let order = self.order().min(rhs.order());
        let coeffs = (0..=order)
            .map(|j| (0..=j).map(|i| self.coeffs[i] * rhs.coeffs[j - i]).sum())
            .collect();
        PowerSeries { coeffs }
    }
}
