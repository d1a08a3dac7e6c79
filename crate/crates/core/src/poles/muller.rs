//! Muller's method for complex roots, with a secant fallback.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MullerSettings {
    /// Required `|f|` at the root.
    pub f_tol: f64,
    /// Required size of the final step.
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Offset of the two auxiliary starting points from the guess.
    pub initial_spread: f64,
    /// Steps longer than this are shortened, keeping the iteration local.
    pub max_step: f64,
    /// Halvings tried when a step fails to decrease `|f|`.
    pub backtracks: usize,
}

impl Default for MullerSettings {
    fn default() -> Self {
        Self { f_tol: 1e-8, step_tol: 1e-10, max_iterations: 50, initial_spread: 1e-2, max_step: 0.5, backtracks: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct MullerOutcome {
    pub root: Complex64,
    pub value: Complex64,
    pub iterations: usize,
    pub history: Vec<Complex64>,
}

/// Solve `f(x) = 0` from `guess`. Iteration counts exclude the three start
/// evaluations.
pub fn muller<F>(mut f: F, guess: Complex64, settings: &MullerSettings) -> Result<MullerOutcome>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let h = Complex64::new(settings.initial_spread, 0.0);
    let mut x = [guess - h, guess + h, guess];
    let mut fx = [f(x[0])?, f(x[1])?, f(x[2])?];
    let mut history = vec![guess];
    if fx[2] == Complex64::new(0.0, 0.0) {
        return Ok(MullerOutcome { root: guess, value: fx[2], iterations: 0, history });
    }

    for iteration in 1..=settings.max_iterations {
        let mut step = muller_step(&x, &fx).or_else(|| secant_step(&x, &fx)).ok_or_else(|| {
            Error::NoConvergence { iterations: iteration, last_residual: fx[2].norm(), history: history.clone() }
        })?;
        if step.norm() > settings.max_step {
            step *= settings.max_step / step.norm();
        }
        // |f| of an analytic function has no local minima away from its
        // zeros, so insisting on descent keeps the iterate in the basin it
        // started in.
        let mut next = x[2] + step;
        let mut f_next = f(next)?;
        for _ in 0..settings.backtracks {
            let tiny = step.norm() <= 1e3 * settings.step_tol;
            if tiny || (f_next.is_finite() && f_next.norm() < fx[2].norm()) {
                break;
            }
            step *= 0.5;
            next = x[2] + step;
            f_next = f(next)?;
        }
        history.push(next);
        x = [x[1], x[2], next];
        fx = [fx[1], fx[2], f_next];
        if !f_next.is_finite() {
            break;
        }
        if (f_next.norm() <= settings.f_tol && step.norm() <= settings.step_tol) || f_next.norm() == 0.0 {
            return Ok(MullerOutcome { root: next, value: f_next, iterations: iteration, history });
        }
    }
    Err(Error::NoConvergence { iterations: history.len() - 1, last_residual: fx[2].norm(), history })
}

/// Step from `x[2]` to the nearer root of the interpolating parabola.
fn muller_step(x: &[Complex64; 3], f: &[Complex64; 3]) -> Option<Complex64> {
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    if h1.norm() == 0.0 || h2.norm() == 0.0 || (x[2] - x[0]).norm() == 0.0 {
        return None;
    }
    let d1 = (f[1] - f[0]) / h1;
    let d2 = (f[2] - f[1]) / h2;
    let a = (d2 - d1) / (h2 + h1);
    let b = a * h2 + d2;
    let disc = (b * b - 4.0 * a * f[2]).sqrt();
    let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
    let step = -2.0 * f[2] / den;
    (den.norm() > 0.0 && step.is_finite()).then_some(step)
}

fn secant_step(x: &[Complex64; 3], f: &[Complex64; 3]) -> Option<Complex64> {
    let df = f[2] - f[1];
    let step = -f[2] * (x[2] - x[1]) / df;
    (df.norm() > 0.0 && step.is_finite()).then_some(step)
}
