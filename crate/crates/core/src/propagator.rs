//! Outward integration of the coupled radial equations
//! `Φ'' = [(λ² − 1/4)/r² + 2(V̂(r) − E)] Φ` for a whole solution bundle.
//!
//! Dormand–Prince 5(4) with local extrapolation; all `N` columns share one
//! step-size sequence. The system is integrated as `2N²` complex first-order
//! equations.

use num_complex::Complex64;

use crate::potential::PotentialModel;
use crate::series_start::RadialState;
use crate::{CMatrix, Error, Result};

const GROWTH_LIMIT: f64 = 1e150;
/// Re-orthogonalise the bundle once the weakest direction drops this far
/// below the strongest one.
const INDEPENDENCE_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub r_match: f64,
    pub max_steps: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-300,
            max_step: 2.0,
            initial_step: 1e-4,
            r_match: 450.0,
            max_steps: 2_000_000,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Argument("propagation tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0 && self.initial_step > 0.0) {
            return Err(Error::Argument("step bounds must be positive".into()));
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights equal the last row of A; these are (b5 - b4).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Right-hand side of the first-order system on a flat, column-major buffer
/// `[Φ | Φ′]`.
struct RadialSystem<'a> {
    model: &'a dyn PotentialModel,
    n: usize,
    energy: f64,
    centrifugal: Complex64,
    potential: Vec<f64>,
}

impl<'a> RadialSystem<'a> {
    fn new(model: &'a dyn PotentialModel, energy: f64, lambda: Complex64) -> Self {
        let n = model.channel_count();
        Self { model, n, energy, centrifugal: lambda * lambda - 0.25, potential: vec![0.0; n * n] }
    }

    fn eval(&mut self, r: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let n = self.n;
        let n2 = n * n;
        self.model.fill(r, &mut self.potential);
        let diag = self.centrifugal / (r * r) - 2.0 * self.energy;
        let (phi, dphi) = y.split_at(n2);
        let (out_phi, out_dphi) = dy.split_at_mut(n2);
        out_phi.copy_from_slice(dphi);
        for m in 0..n {
            let col = &phi[m * n..(m + 1) * n];
            for a in 0..n {
                let mut acc = diag * col[a];
                let row = &self.potential[a * n..(a + 1) * n];
                for b in 0..n {
                    acc += 2.0 * row[b] * col[b];
                }
                out_dphi[m * n + a] = acc;
            }
        }
    }
}

fn pack(state: &RadialState) -> Vec<Complex64> {
    let mut y = Vec::with_capacity(2 * state.phi.len());
    y.extend_from_slice(state.phi.as_slice());
    y.extend_from_slice(state.dphi.as_slice());
    y
}

fn unpack(template: &RadialState, y: &[Complex64], r: f64, log_scale: Complex64) -> RadialState {
    let (n, cols) = template.phi.shape();
    let len = n * cols;
    RadialState {
        r,
        phi: CMatrix::from_column_slice(n, cols, &y[..len]),
        dphi: CMatrix::from_column_slice(n, cols, &y[len..]),
        energy: template.energy,
        lambda: template.lambda,
        log_scale,
    }
}

fn max_abs(y: &[Complex64]) -> f64 {
    y.iter().fold(0.0f64, |a, v| a.max(v.norm()))
}

/// Keep the bundle inside the floating-point range by a common rescaling.
fn renormalize(y: &mut [Complex64], half: usize, log_scale: &mut Complex64) {
    let size = max_abs(&y[..half]);
    if size > GROWTH_LIMIT || (size > 0.0 && size < 1.0 / GROWTH_LIMIT) {
        let inv = 1.0 / size;
        y.iter_mut().for_each(|v| *v *= inv);
        *log_scale += size.ln();
    }
}

/// Replace the columns of `[Φ; Φ′]` by an orthonormal basis of their span.
///
/// Under a barrier every regular solution picks up a component of the
/// fastest-growing one, and the subdominant directions would otherwise drown
/// in rounding. A column recombination `Φ → Φ M` leaves the S-matrix
/// unchanged; `ln det M` is taken out of `log_scale` so determinants are
/// those of the unstabilized bundle.
fn reorthogonalize(y: &mut [Complex64], n: usize, cols: usize, log_scale: &mut Complex64) -> bool {
    if cols < 2 {
        return false;
    }
    let half = n * cols;
    // scaled first: the factorisation squares entries
    let size = max_abs(y);
    if !(size > 0.0 && size.is_finite()) {
        return false;
    }
    let b = CMatrix::from_fn(2 * n, cols, |i, m| if i < n { y[m * n + i] } else { y[half + m * n + i - n] } / size);
    let qr = b.col_piv_qr();
    let r = qr.r();
    let top = r[(0, 0)].norm();
    let bottom = r[(cols - 1, cols - 1)].norm();
    if !(top > 0.0) || bottom >= INDEPENDENCE_LIMIT * top || bottom == 0.0 {
        return false;
    }
    // B P = Q R, so M = P R⁻¹ and det M = det P / det R.
    let ln_det_r: Complex64 = (0..cols).map(|i| r[(i, i)].ln() + size.ln()).sum();
    let ln_det_p = if qr.p().determinant::<f64>() < 0.0 { Complex64::new(0.0, std::f64::consts::PI) } else { Complex64::new(0.0, 0.0) };
    let q = qr.q();
    for m in 0..cols {
        for i in 0..n {
            y[m * n + i] = q[(i, m)];
            y[half + m * n + i] = q[(n + i, m)];
        }
    }
    *log_scale += (ln_det_r - ln_det_p) / cols as f64;
    true
}

struct Stepper {
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
}

impl Stepper {
    fn new(len: usize) -> Self {
        Self { k: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); len]), stage: vec![Complex64::new(0.0, 0.0); len] }
    }

    /// One DP5 step from `(r, y)` with `k[0] = f(r, y)` already filled.
    /// Writes the 5th-order result into `out` and returns the error norm
    /// (max over components of `|y5 - y4|`).
    fn step(&mut self, sys: &mut RadialSystem, r: f64, y: &[Complex64], h: f64, out: &mut [Complex64]) -> f64 {
        let len = y.len();
        for s in 1..7 {
            for (i, yi) in y.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (p, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += *a * self.k[p][i];
                    }
                }
                self.stage[i] = yi + h * acc;
            }
            sys.eval(r + C[s] * h, &self.stage, &mut self.k[s]);
        }
        // stage 6 evaluated at the 5th-order solution (FSAL)
        out.copy_from_slice(&self.stage);
        let mut err = 0.0f64;
        for i in 0..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, e) in E.iter().enumerate() {
                if *e != 0.0 {
                    acc += *e * self.k[s][i];
                }
            }
            err = err.max((h * acc).norm());
        }
        err
    }
}

/// Integrate the bundle from `state.r` to exactly `settings.r_match`.
pub fn propagate(model: &dyn PotentialModel, state: &RadialState, settings: &PropagationSettings) -> Result<RadialState> {
    settings.validate()?;
    let r_end = settings.r_match;
    if !(r_end > state.r) {
        return Err(Error::Argument(format!("matching radius {r_end} must exceed start radius {}", state.r)));
    }
    let mut sys = RadialSystem::new(model, state.energy, state.lambda);
    let mut y = pack(state);
    let len = y.len();
    let half = len / 2;
    let (n, cols) = state.phi.shape();
    let mut y_new = vec![Complex64::new(0.0, 0.0); len];
    let mut stepper = Stepper::new(len);
    let mut log_scale = state.log_scale;

    let mut r = state.r;
    let mut h = settings.initial_step.min(r_end - r);
    sys.eval(r, &y, &mut stepper.k[0]);
    let mut steps = 0usize;
    while r < r_end {
        if steps >= settings.max_steps {
            return Err(Error::StepBudget { max_steps: settings.max_steps, r });
        }
        steps += 1;
        let last = r + h >= r_end;
        if last {
            h = r_end - r;
        }
        let err = stepper.step(&mut sys, r, &y, h, &mut y_new);
        let tol = settings.abs_tol.max(settings.rel_tol * max_abs(&y).max(max_abs(&y_new)));
        let ratio = err / tol;
        if !ratio.is_finite() {
            return Err(Error::Overflow { r });
        }
        if ratio <= 1.0 {
            r = if last { r_end } else { r + h };
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the last stage is f at the new point
            let (first, rest) = stepper.k.split_at_mut(1);
            std::mem::swap(&mut first[0], &mut rest[5]);
            let before = max_abs(&y[..half]);
            let basis_changed = reorthogonalize(&mut y, n, cols, &mut log_scale);
            renormalize(&mut y, half, &mut log_scale);
            if basis_changed || max_abs(&y[..half]) != before {
                sys.eval(r, &y, &mut stepper.k[0]);
            }
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        let factor = if ratio > 1.0 { factor.min(1.0) } else { factor };
        h = (h * factor).min(settings.max_step);
        if h < 1e-14 * r.max(1.0) {
            return Err(Error::StepUnderflow { r, h });
        }
    }
    Ok(unpack(state, &y, r_end, log_scale))
}

/// Fixed-step DP5 integration (no error control), for order diagnostics.
pub fn propagate_fixed(model: &dyn PotentialModel, state: &RadialState, r_end: f64, steps: usize) -> Result<RadialState> {
    if !(r_end > state.r) || steps == 0 {
        return Err(Error::Argument("fixed-step propagation needs r_end > r and steps > 0".into()));
    }
    let mut sys = RadialSystem::new(model, state.energy, state.lambda);
    let mut y = pack(state);
    let len = y.len();
    let mut y_new = vec![Complex64::new(0.0, 0.0); len];
    let mut stepper = Stepper::new(len);
    let h = (r_end - state.r) / steps as f64;
    for i in 0..steps {
        let r = state.r + i as f64 * h;
        sys.eval(r, &y, &mut stepper.k[0]);
        stepper.step(&mut sys, r, &y, h, &mut y_new);
        std::mem::swap(&mut y, &mut y_new);
    }
    Ok(unpack(state, &y, r_end, state.log_scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{FreeParticle, ThomasFermiModel, TwoChannelTFParams};
    use crate::series_start::regular_start;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_state(k: f64, r0: f64) -> RadialState {
        // λ = 1/2: Φ'' = -k² Φ, start with Φ = sin(k r0), Φ' = k cos(k r0)
        RadialState {
            r: r0,
            phi: CMatrix::from_element(1, 1, c((k * r0).sin(), 0.0)),
            dphi: CMatrix::from_element(1, 1, c(k * (k * r0).cos(), 0.0)),
            energy: 0.5 * k * k,
            lambda: c(0.5, 0.0),
            log_scale: c(0.0, 0.0),
        }
    }

    #[test]
    fn free_particle_sine() {
        let model = FreeParticle::new(vec![0.0]).unwrap();
        let k = 1.0;
        let settings = PropagationSettings { r_match: 50.0, ..Default::default() };
        let out = propagate(&model, &free_state(k, 0.01), &settings).unwrap();
        let exact = (k * 50.0f64).sin();
        let got = out.phi[(0, 0)] * out.log_scale.exp();
        assert!((got - exact).norm() < 1e-8 * exact.abs().max(1.0));
        assert_eq!(out.r, 50.0);
    }

    #[test]
    fn concomitant_is_conserved() {
        let model = ThomasFermiModel::two_channel(&TwoChannelTFParams::paper()).unwrap();
        let start = regular_start(&model, 1.46, c(2.7, 0.3), 1e-3, 30, 1e-12).unwrap();
        // combine with a generic matrix so the concomitant is not trivially zero
        let mix = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.2), c(0.3, -0.1), c(-0.4, 0.0), c(0.9, 0.5)]);
        let start = start.combine(&mix);
        let start = RadialState { dphi: &start.dphi + &start.phi * c(0.0, 0.7), ..start };
        let before = start.concomitant();
        let settings = PropagationSettings { r_match: 60.0, rel_tol: 1e-11, ..Default::default() };
        let out = propagate(&model, &start, &settings).unwrap();
        let ratio = (out.log_scale - start.log_scale).exp();
        let after = out.concomitant() * (ratio * ratio);
        let scale = start.phi.norm() * start.dphi.norm();
        assert!((&after - &before).norm() <= 1e-8 * scale, "{} vs {}", after, before);
    }

    #[test]
    fn reorthogonalizing_keeps_the_determinant() {
        // two nearly parallel, very large columns of [Φ; Φ′]
        let phi = CMatrix::from_row_slice(2, 2, &[c(3e140, 1e139), c(3e140 + 1e135, 1e139), c(1e138, 0.0), c(1e138, 5e134)]);
        let dphi = &phi * c(0.5, 0.1);
        let mut y: Vec<Complex64> = phi.iter().chain(dphi.iter()).copied().collect();
        let mut log_scale = c(1.0, 0.0);
        let before = phi.determinant() * (2.0 * log_scale).exp();
        assert!(reorthogonalize(&mut y, 2, 2, &mut log_scale));
        let b = CMatrix::from_fn(4, 2, |i, m| if i < 2 { y[m * 2 + i] } else { y[4 + m * 2 + i - 2] });
        assert!((b.adjoint() * &b - CMatrix::identity(2, 2)).norm() < 1e-12);
        let after = CMatrix::from_column_slice(2, 2, &y[..4]).determinant() * (2.0 * log_scale).exp();
        assert!((after - before).norm() < 1e-8 * before.norm(), "{after} vs {before}");
        // well-separated columns are left alone
        assert!(!reorthogonalize(&mut y, 2, 2, &mut log_scale));
    }

    #[test]
    fn rejects_backward_target() {
        let model = FreeParticle::new(vec![0.0]).unwrap();
        let settings = PropagationSettings { r_match: 0.001, ..Default::default() };
        assert!(propagate(&model, &free_state(1.0, 0.01), &settings).is_err());
    }

    #[test]
    fn step_budget_is_reported() {
        let model = FreeParticle::new(vec![0.0]).unwrap();
        let settings = PropagationSettings { r_match: 500.0, max_steps: 10, ..Default::default() };
        assert!(matches!(
            propagate(&model, &free_state(1.0, 0.01), &settings),
            Err(Error::StepBudget { max_steps: 10, .. })
        ));
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let model = FreeParticle::new(vec![0.0]).unwrap();
        // outgoing wave e^{ir}: the phase error accumulates smoothly
        let r0 = 0.5;
        let start = RadialState {
            phi: CMatrix::from_element(1, 1, c(0.0, r0).exp()),
            dphi: CMatrix::from_element(1, 1, c(0.0, 1.0) * c(0.0, r0).exp()),
            ..free_state(1.0, r0)
        };
        let exact = c(0.0, 10.0).exp();
        let err = |steps| (propagate_fixed(&model, &start, 10.0, steps).unwrap().phi[(0, 0)] - exact).norm();
        let e1 = err(40);
        let e2 = err(80);
        let order = (e1 / e2).log2();
        // global error of a 5th-order method: h^5
        assert!((order - 5.0).abs() < 0.3, "observed order {order}");
    }
}
