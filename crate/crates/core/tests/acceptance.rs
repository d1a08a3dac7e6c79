//! Acceptance run for the two-channel Thomas-Fermi model.
//!
//! Prints one PASS/FAIL line per criterion. The process exits with status 0
//! either way unless `REGGE_ACCEPTANCE_STRICT=1` is set, so that the rest of
//! the workspace test suite still runs after a failing criterion.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use regge_core::potential::DiagonalChannel;
use regge_core::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `a, a + h, …` up to `b` inclusive, rounded to the step.
fn grid(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h).round() as usize;
    (0..=n).map(|i| ((a + h * i as f64) * 1e9).round() / 1e9).collect()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Low edge of the reproduction energy range.
const E_LOW: f64 = 0.35;
/// Scan poles closest to these start trajectories I and II at `E_LOW`. I is
/// the slow, barrier-stabilised trajectory that crosses a physical
/// `λ = J + 1/2` inside the resonance window; II is its partner under
/// continuation of the coupling to zero.
const ANCHOR_I: (f64, f64) = (3.3, 0.0);
const ANCHOR_II: (f64, f64) = (3.45, 0.05);

fn nearest(points: &[Complex64], to: Complex64) -> Complex64 {
    *points.iter().min_by(|a, b| (*a - to).norm().total_cmp(&(*b - to).norm())).expect("no poles found")
}

/// Scan `Δ` at `energy`, polish every minimum and return the distinct poles.
fn scan_poles(system: &dyn ScatteringSystem, energy: f64) -> Vec<Complex64> {
    locate_poles(system, energy, (0.0, 6.0), (0.0, 1.2), (61, 13), 0.1, &PoleSettings::default())
        .expect("scan")
        .iter()
        .map(|p| p.lambda_bar)
        .collect()
}

struct Context {
    model: ThomasFermiModel,
    /// Exact (coupled) trajectories I and II.
    traj_i: Trajectory,
    traj_ii: Trajectory,
    /// Energies on which σ is decomposed.
    window: Vec<f64>,
    /// Every pole accepted anywhere in the run, with the system it belongs to.
    extra_poles: Vec<(String, Vec<ReggePoleRecord>)>,
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let settings = HankelSettings::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut errors = Vec::new();
    for re in grid(-10.0, 10.0, 0.5) {
        for im in grid(-3.0, 3.0, 0.5) {
            let lambda = c(re, im);
            if lambda.norm() > 10.0 {
                continue;
            }
            for z in [30.0, 45.0, 60.0, 80.0, 100.0, 125.0, 150.0, 175.0, 200.0] {
                match riccati_hankel(lambda, c(z, 0.0), &settings) {
                    Ok(pair) => worst = worst.max((pair.wronskian() + c(0.0, 2.0)).norm()),
                    Err(e) => errors.push(format!("λ = {lambda}, z = {z}: {e}")),
                }
                count += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = errors.is_empty() && worst <= 1e-9 && secs < 10.0;
    outcome(
        pass,
        format!(
            "max |W + 2i| = {worst:.2e} over {count} (λ, z) points, {} evaluation errors{}, {secs:.2} s",
            errors.len(),
            errors.first().map(|e| format!(" (first: {e})")).unwrap_or_default()
        ),
    )
}

fn criterion_2(ctx: &Context) -> Outcome {
    let start = Instant::now();
    let pipeline = Pipeline::new(&ctx.model, Numerics::default());
    let (mut unitarity, mut symmetry): (f64, f64) = (0.0, 0.0);
    for e in [0.5, 1.0, 1.46, 2.0] {
        for l in grid(0.5, 6.5, 1.0) {
            let r = pipeline.physical_s_matrix(e, c(l, 0.0)).expect("S-matrix");
            let s = r.flux_normalized.expect("open channels");
            let n = s.nrows();
            unitarity = unitarity.max(max_abs(&(s.adjoint() * &s - CMatrix::identity(n, n))));
            symmetry = symmetry.max(max_abs(&(&s - s.transpose())));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        unitarity <= 1e-6 && symmetry <= 1e-6 && secs < 120.0,
        format!("max ‖Ŝ†Ŝ − I‖ = {unitarity:.2e}, max ‖Ŝ − Ŝᵀ‖ = {symmetry:.2e} on 28 (E, λ) points, {secs:.1} s"),
    )
}

fn criterion_3(extra: &mut Vec<(String, Vec<ReggePoleRecord>)>) -> Outcome {
    let start = Instant::now();
    let model = ThomasFermiModel::two_channel(&TwoChannelTFParams::paper().uncoupled()).expect("model");
    let pipeline = Pipeline::new(&model, Numerics::default());
    let shift = TwoChannelTFParams::paper().delta_v;
    // Trajectory I belongs to the ground channel; at E + ΔV the excited
    // channel has the same pole, so one seed serves both traces.
    let energies_i = grid(1.46, 1.935, 0.025);
    let energies_ii: Vec<f64> = energies_i.iter().map(|e| ((e + shift) * 1e9).round() / 1e9).collect();
    let seed = find_pole(&pipeline, energies_i[0], c(2.49, 0.63), &PoleSettings::default()).expect("seed").lambda_bar;
    let settings = TraceSettings::default();
    let ti = trace_trajectory(&pipeline, &energies_i, seed, &settings, "I (α = 0)").expect("trace I");
    let tii = trace_trajectory(&pipeline, &energies_ii, seed, &settings, "II (α = 0)").expect("trace II");
    let mut worst: f64 = 0.0;
    let mut shared = 0;
    for (ei, eii) in energies_i.iter().zip(&energies_ii) {
        if let (Some(a), Some(b)) = (ti.at_energy(*ei), tii.at_energy(*eii)) {
            worst = worst.max((a.lambda_bar - b.lambda_bar).norm());
            shared += 1;
        }
    }
    extra.push(("uncoupled I".into(), ti.records.clone()));
    extra.push(("uncoupled II".into(), tii.records.clone()));
    let secs = start.elapsed().as_secs_f64();
    outcome(
        shared == 20 && worst <= 1e-6 && secs < 300.0,
        format!(
            "max |λ̄_I(E) − λ̄_II(E + 0.3)| = {worst:.2e} over {shared} shared energies in [{}, {}], {secs:.1} s",
            energies_i[0],
            energies_i[19]
        ),
    )
}

fn criterion_4(ctx: &Context) -> Outcome {
    let t = &ctx.traj_ii;
    let first_quadrant: Vec<&SelfIntersection> =
        t.self_intersections.iter().filter(|x| x.point.re > 0.0 && x.point.im > 0.0).collect();
    let lambdas = t.lambdas();
    let detail = match first_quadrant.first() {
        Some(x) => format!(
            "{} crossing(s); first at λ = {:.4} between E = {:.4} and {:.4}",
            first_quadrant.len(),
            x.point,
            x.energies.0,
            x.energies.1
        ),
        None => format!(
            "no self-intersection of trajectory II over E ∈ [{}, {}] ({} poles, from {:.4} to {:.4}{}); trajectory I has {} crossing(s)",
            t.records.first().map_or(f64::NAN, |r| r.energy),
            t.records.last().map_or(f64::NAN, |r| r.energy),
            lambdas.len(),
            lambdas.first().copied().unwrap_or_default(),
            lambdas.last().copied().unwrap_or_default(),
            t.truncated.as_ref().map(|s| format!(", truncated: {s}")).unwrap_or_default(),
            ctx.traj_i.self_intersections.len()
        ),
    };
    outcome(!first_quadrant.is_empty(), detail)
}

fn criterion_5(ctx: &Context) -> Outcome {
    let records = &ctx.traj_i.records;
    let mut crossing = None;
    for w in records.windows(2) {
        let (a, b) = (w[0].lambda_bar, w[1].lambda_bar);
        if (a.re - 2.5) * (b.re - 2.5) <= 0.0 && a.re != b.re {
            let t = (2.5 - a.re) / (b.re - a.re);
            let e = w[0].energy + t * (w[1].energy - w[0].energy);
            let im = a.im + t * (b.im - a.im);
            crossing = Some((e, im));
            break;
        }
    }
    let in_window: Vec<f64> = ctx.traj_i.window(1.36, 1.56).iter().map(|r| r.lambda_bar.re).collect();
    let lo = in_window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = in_window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half_integer = ctx
        .traj_i
        .records
        .windows(2)
        .find_map(|w| {
            let (a, b) = (w[0].lambda_bar, w[1].lambda_bar);
            let target = (a.re - 0.5).floor() + 1.5;
            (b.re >= target && a.re < target).then(|| {
                let t = (target - a.re) / (b.re - a.re);
                format!(
                    "; trajectory I crosses Re λ̄ = {target} at E = {:.4} (Im λ̄ = {:.4})",
                    w[0].energy + t * (w[1].energy - w[0].energy),
                    a.im + t * (b.im - a.im)
                )
            })
        })
        .unwrap_or_default();
    let ii_crossing = ctx
        .traj_ii
        .records
        .windows(2)
        .find(|w| (w[0].lambda_bar.re - 2.5) * (w[1].lambda_bar.re - 2.5) <= 0.0)
        .map(|w| format!("; trajectory II crosses Re λ̄ = 2.5 near E = {:.3}", w[0].energy))
        .unwrap_or_default();
    match crossing {
        Some((e, im)) => outcome(
            (e - 1.46).abs() <= 0.1 && im < 0.5,
            format!("Re λ̄_I = 2.5 at E* = {e:.4} with Im λ̄ = {im:.4}"),
        ),
        None => outcome(
            false,
            format!(
                "trajectory I never reaches Re λ̄ = 2.5 on [{:.2}, {:.2}]; on [1.36, 1.56] Re λ̄_I ∈ [{lo:.4}, {hi:.4}]{half_integer}{ii_crossing}",
                records.first().map_or(f64::NAN, |r| r.energy),
                records.last().map_or(f64::NAN, |r| r.energy),
            ),
        ),
    }
}

fn criterion_6(ctx: &Context) -> Outcome {
    let coupled = Pipeline::new(&ctx.model, Numerics::default());
    let uncoupled_model = ThomasFermiModel::two_channel(&TwoChannelTFParams::paper().uncoupled()).expect("model");
    let uncoupled = Pipeline::new(&uncoupled_model, Numerics::default());
    let full: Arc<dyn PotentialModel> = Arc::new(ThomasFermiModel::two_channel(&TwoChannelTFParams::paper()).expect("model"));
    let adiabatic: Arc<dyn PotentialModel> = Arc::new(adiabatic_model(full).expect("adiabatic"));
    let branches: Vec<DiagonalChannel> =
        (0..2).map(|b| DiagonalChannel::new(adiabatic.clone(), b).expect("branch")).collect();
    let adiabatic_pipelines: Vec<Pipeline> = branches.iter().map(|b| Pipeline::new(b, Numerics::default())).collect();

    let mut sets: Vec<(&str, &dyn ScatteringSystem, &[ReggePoleRecord])> =
        vec![("I", &coupled, &ctx.traj_i.records), ("II", &coupled, &ctx.traj_ii.records)];
    for (label, records) in &ctx.extra_poles {
        let system: &dyn ScatteringSystem = match label.as_str() {
            "adiabatic-I" => &adiabatic_pipelines[0],
            "adiabatic-II" => &adiabatic_pipelines[1],
            _ => &uncoupled,
        };
        sets.push((label, system, records));
    }
    let (mut count, mut worst_cert, mut lowest_peak) = (0, 0.0f64, f64::INFINITY);
    let mut failures = Vec::new();
    for (label, system, records) in sets {
        for r in records {
            count += 1;
            worst_cert = worst_cert.max(r.certificate);
            let peak = max_abs(&system.s_matrix(r.energy, r.lambda_bar + 1e-3).expect("S near pole"));
            lowest_peak = lowest_peak.min(peak);
            if !(r.certificate <= 1e-6) || !(peak >= 1e2) {
                failures.push(format!("{label} at E = {}", r.energy));
            }
        }
    }
    outcome(
        failures.is_empty() && count > 0,
        format!(
            "{count} poles: worst certificate {worst_cert:.2e}, smallest max|S| at distance 1e-3 = {lowest_peak:.3e}{}",
            failures.first().map(|f| format!("; failing: {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_7(ctx: &Context) -> Outcome {
    let window = ctx.traj_i.window(1.2, 1.7);
    let worst = window.iter().map(|r| r.residue_agreement.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let missing = window.iter().filter(|r| r.residues.is_none()).count();
    // Continuity of the residue trajectories (largest step over median step).
    let mut continuity: f64 = 0.0;
    for idx in 0..4 {
        let (n, m) = (idx / 2, idx % 2);
        let mut steps: Vec<f64> = window
            .windows(2)
            .filter_map(|w| Some((w[1].residues.as_ref()?[(n, m)] - w[0].residues.as_ref()?[(n, m)]).norm()))
            .collect();
        steps.sort_by(f64::total_cmp);
        if let (Some(max), false) = (steps.last(), steps.is_empty()) {
            let median = steps[steps.len() / 2];
            if median > 0.0 {
                continuity = continuity.max(max / median);
            }
        }
    }
    outcome(
        missing == 0 && !window.is_empty() && worst <= 1e-4,
        format!(
            "{} poles on [1.2, 1.7]: worst contour/limit relative difference {worst:.2e}, {missing} without residues; largest residue step / median step = {continuity:.2}",
            window.len()
        ),
    )
}

/// Single channel, `S(λ) = 1 + g/((λ − p)(λ + q))`, whose half-integer sum can
/// be split exactly into smooth integrals and the pole contribution.
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
    fn f(&self, l: Complex64) -> Complex64 {
        let st = self.s(l.conj()).conj();
        2.0 * l * (1.0 - self.s(l)) * (1.0 - st)
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

/// Worst relative error of the Mulholland term against the resonant part of
/// a brute-force half-integer sum.
fn synthetic_mulholland_error() -> f64 {
    let mut worst: f64 = 0.0;
    for p in [c(2.55, 0.12), c(3.1, 0.4), c(1.7, 0.05)] {
        let sys = RationalS { p, q: 0.7, g: c(0.3, -0.45), k: 1.3 };
        let jmax = 200_000;
        let mut brute = 0.0;
        for j in (0..jmax).rev() {
            brute += sys.f(c(j as f64 + 0.5, 0.0)).re;
        }
        let end = jmax as f64 + 0.5;
        brute += sys.f(c(end, 0.0)).re * end.powi(3) / (2.0 * (end - 0.5).powi(2));
        let smooth = integrate_half_line(|x| sys.f(c(x, 0.0)).re)
            + 2.0 * integrate_half_line(|y| sys.f(c(0.0, y)).im / (1.0 + (2.0 * PI * y).exp()));
        let resonant = PI / (sys.k * sys.k) * (brute - smooth);
        let pole = ReggePoleRecord {
            energy: 0.5 * sys.k * sys.k,
            lambda_bar: p,
            residues: Some(CMatrix::from_element(1, 1, sys.g / (p + sys.q))),
            residue_agreement: None,
            iterations: 0,
            delta_at_pole: Determinant::from_value(c(0.0, 0.0)),
            certificate: 0.0,
        };
        let res = mulholland_res(&sys, &pole, 0, 0, SConvention::Paper).expect("Mulholland term");
        worst = worst.max((res - resonant).abs() / resonant.abs());
    }
    worst
}

fn criterion_8(ctx: &Context) -> Outcome {
    let start = Instant::now();
    let pipeline = Pipeline::new(&ctx.model, Numerics::default());
    // The check is about smoothness in E, which the truncation tail does not
    // affect at this level.
    let settings = PwsSettings { tol: 1e-6, ..Default::default() };
    let records = decompose_all(&pipeline, &ctx.window, &[&ctx.traj_i], &settings).expect("decomposition");
    let mut smooth_pairs = 0;
    let mut parts = Vec::new();
    for n in 0..2 {
        for np in 0..2 {
            let pair: Vec<&CrossSectionRecord> = records.iter().filter(|r| r.n == n && r.n_prime == np).collect();
            let sigma: Vec<f64> = pair.iter().map(|r| r.sigma).collect();
            let background: Vec<f64> = pair.iter().map(|r| r.background).collect();
            let (ds, db) = (max_second_difference(&sigma), max_second_difference(&background));
            let ok = db <= ds / 5.0;
            smooth_pairs += ok as usize;
            parts.push(format!("σ{}{}: {:.3e}/{:.3e} ({})", n + 1, np + 1, db, ds, if ok { "ok" } else { "rough" }));
        }
    }
    let synthetic = synthetic_mulholland_error();
    outcome(
        smooth_pairs >= 3 && synthetic <= 0.01,
        format!(
            "{smooth_pairs}/4 pairs with max Δ²B ≤ max Δ²σ / 5 [{}]; synthetic Mulholland vs brute-force sum rel. error {synthetic:.2e}; {:.1} s",
            parts.join(", "),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_9(ctx: &Context) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let free = FreeParticle::new(vec![0.3, 0.0]).expect("free model");
    let free_pipeline = Pipeline::new(&free, Numerics::default());
    let mut free_err: f64 = 0.0;
    for e in [0.5, 1.46] {
        for l in [c(0.5, 0.0), c(2.5, 0.3), c(4.1, 0.0)] {
            let s = free_pipeline.s_matrix(e, l).expect("free S");
            free_err = free_err.max(max_abs(&(s - CMatrix::identity(2, 2))));
        }
    }
    pass &= free_err <= 1e-8;
    notes.push(format!("free ‖S − I‖ = {free_err:.1e}"));

    let uncoupled: Arc<dyn PotentialModel> =
        Arc::new(ThomasFermiModel::two_channel(&TwoChannelTFParams::paper().uncoupled()).expect("model"));
    let two = Pipeline::new(uncoupled.as_ref(), Numerics::default());
    let singles: Vec<DiagonalChannel> = (0..2).map(|n| DiagonalChannel::new(uncoupled.clone(), n).expect("channel")).collect();
    let mut split_err: f64 = 0.0;
    for e in [0.5, 1.46] {
        for l in [c(1.5, 0.0), c(2.5, 0.2)] {
            let s = two.s_matrix(e, l).expect("S");
            for (n, single) in singles.iter().enumerate() {
                let s1 = Pipeline::new(single, Numerics::default()).s_matrix(e, l).expect("single S")[(0, 0)];
                split_err = split_err.max((s[(n, n)] - s1).norm() / s1.norm().max(1.0));
            }
            split_err = split_err.max(s[(0, 1)].norm()).max(s[(1, 0)].norm());
        }
    }
    pass &= split_err <= 1e-8;
    notes.push(format!("uncoupled vs single-channel {split_err:.1e}"));

    let base = Numerics::default();
    let half_r0 = Numerics { r0: base.r0 / 2.0, ..base };
    let far = Numerics { propagation: PropagationSettings { r_match: base.propagation.r_match * 1.5, ..base.propagation }, ..base };
    let pole = ctx.traj_i.at_energy(1.46).expect("pole at 1.46");
    for (name, numerics) in [("r0/2", half_r0), ("1.5 r_match", far)] {
        let a = Pipeline::new(&ctx.model, base);
        let b = Pipeline::new(&ctx.model, numerics);
        let mut ds: f64 = 0.0;
        for (e, l) in [(1.46, c(2.5, 0.0)), (1.0, c(1.5, 0.2))] {
            ds = ds.max(max_abs(&(a.s_matrix(e, l).expect("S") - b.s_matrix(e, l).expect("S"))));
        }
        let moved = find_pole(&b, pole.energy, pole.lambda_bar, &PoleSettings::default()).expect("pole");
        let dp = (moved.lambda_bar - pole.lambda_bar).norm();
        pass &= ds < 1e-7 && dp < 1e-6;
        notes.push(format!("{name}: ΔS = {ds:.1e}, Δλ̄ = {dp:.1e}"));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_10(ctx: &Context, extra: &mut Vec<(String, Vec<ReggePoleRecord>)>) -> Outcome {
    let full: Arc<dyn PotentialModel> = Arc::new(ThomasFermiModel::two_channel(&TwoChannelTFParams::paper()).expect("model"));
    let adiabatic: Arc<dyn PotentialModel> = Arc::new(adiabatic_model(full).expect("adiabatic"));
    // Branch 0 is the upper curve (with the barrier), branch 1 the lower.
    let mut traces = Vec::new();
    for (branch, exact, label) in [(0, &ctx.traj_i, "adiabatic-I"), (1, &ctx.traj_ii, "adiabatic-II")] {
        let channel = DiagonalChannel::new(adiabatic.clone(), branch).expect("branch");
        let pipeline = Pipeline::new(&channel, Numerics::default());
        let seed = nearest(&scan_poles(&pipeline, E_LOW), exact.records[0].lambda_bar);
        let t = trace_trajectory(&pipeline, &exact.energies(), seed, &TraceSettings::default(), label).expect("adiabatic trace");
        extra.push((label.to_string(), t.records.clone()));
        traces.push(t);
    }
    let lo = ctx.traj_i.records[0].energy.max(traces[0].records[0].energy);
    let hi = ctx.traj_i.records.last().unwrap().energy.min(traces[0].records.last().unwrap().energy);
    let exact: Vec<Complex64> = ctx.traj_i.window(lo, hi).iter().map(|r| r.lambda_bar).collect();
    let approx: Vec<Complex64> = traces[0].window(lo, hi).iter().map(|r| r.lambda_bar).collect();
    let distance = hausdorff_distance(&exact, &approx);
    let loops = traces[1].self_intersections.len();
    outcome(
        distance <= 0.3 && loops == 0,
        format!(
            "Hausdorff(adiabatic-I, I) = {distance:.3e} over E ∈ [{lo}, {hi}]; adiabatic-II has {loops} self-intersection(s); Hausdorff(adiabatic-II, II) = {:.3e}",
            hausdorff_distance(&traces[1].lambdas(), &ctx.traj_ii.lambdas())
        ),
    )
}

fn build_context() -> Context {
    let model = ThomasFermiModel::two_channel(&TwoChannelTFParams::paper()).expect("model");
    let pipeline = Pipeline::new(&model, Numerics::default());

    eprintln!("scanning |Δ| at E = {E_LOW}");
    let poles = scan_poles(&pipeline, E_LOW);
    let seed_i = nearest(&poles, c(ANCHOR_I.0, ANCHOR_I.1));
    let seed_ii = nearest(&poles, c(ANCHOR_II.0, ANCHOR_II.1));
    eprintln!("seeds: I = {seed_i:.6}, II = {seed_ii:.6}");

    let window = grid(1.36, 1.56, 0.01);
    let mut energies_i = grid(E_LOW, 1.35, 0.05);
    energies_i.extend(&window);
    energies_i.extend(grid(1.6, 2.0, 0.05));
    let energies_ii = grid(E_LOW, 2.0, 0.05);

    eprintln!("tracing I and II");
    let settings = TraceSettings::default();
    let mut traj_i = trace_trajectory(&pipeline, &energies_i, seed_i, &settings, "I").expect("trace I");
    let traj_ii = trace_trajectory(&pipeline, &energies_ii, seed_ii, &settings, "II").expect("trace II");

    eprintln!("residues on I");
    let residue_settings = ResidueSettings::default();
    for record in traj_i.records.iter_mut().filter(|r| r.energy >= 1.2 - 1e-12 && r.energy <= 1.7 + 1e-12) {
        match residues(&pipeline, record, &residue_settings) {
            Ok(est) => {
                record.residue_agreement = Some(est.relative_difference);
                record.residues = Some(est.contour);
            }
            Err(e) => eprintln!("residues failed at E = {}: {e}", record.energy),
        }
    }
    Context { model, traj_i, traj_ii, window, extra_poles: Vec::new() }
}

fn guarded<F: FnOnce() -> Outcome>(f: F) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        outcome(false, format!("aborted: {msg}"))
    })
}

fn main() {
    let names = [
        "special-function Wronskian",
        "S-matrix unitarity and symmetry",
        "uncoupled degeneracy identity",
        "loop in trajectory II",
        "resonance position of trajectory I",
        "pole certificates",
        "residue dual-method agreement",
        "Mulholland decomposition",
        "oracle equivalences",
        "adiabatic correspondence",
    ];
    let start = Instant::now();
    let mut results: Vec<Option<Outcome>> = (0..10).map(|_| None).collect();
    results[0] = Some(guarded(criterion_1));
    match catch_unwind(build_context) {
        Ok(mut ctx) => {
            let mut extra = Vec::new();
            eprintln!("criterion 2");
            results[1] = Some(guarded(|| criterion_2(&ctx)));
            eprintln!("criterion 3");
            results[2] = Some(guarded(|| criterion_3(&mut extra)));
            results[3] = Some(guarded(|| criterion_4(&ctx)));
            results[4] = Some(guarded(|| criterion_5(&ctx)));
            results[6] = Some(guarded(|| criterion_7(&ctx)));
            eprintln!("criterion 8");
            results[7] = Some(guarded(|| criterion_8(&ctx)));
            eprintln!("criterion 9");
            results[8] = Some(guarded(|| criterion_9(&ctx)));
            eprintln!("criterion 10");
            results[9] = Some(guarded(|| criterion_10(&ctx, &mut extra)));
            ctx.extra_poles = extra;
            eprintln!("criterion 6");
            results[5] = Some(guarded(|| criterion_6(&ctx)));
        }
        Err(_) => {
            for r in results.iter_mut().skip(1) {
                *r = Some(outcome(false, "shared trajectories could not be built".into()));
            }
        }
    }

    let mut failed = 0;
    for (i, (name, result)) in names.iter().zip(results).enumerate() {
        let r = result.expect("every criterion evaluated");
        failed += (!r.pass) as usize;
        println!("{} [{}] {name}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    println!("acceptance: {} passed, {failed} failed ({:.0} s)", 10 - failed, start.elapsed().as_secs_f64());
    if failed > 0 && std::env::var("REGGE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
