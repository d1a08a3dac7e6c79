//! Task execution. Every task returns the files it produced and a report
//! table for the manifest; files are written by the caller.

use std::sync::Arc;

use log::info;
use regge_core::potential::DiagonalChannel;
use regge_core::{
    adiabatic_model, decompose_all, hausdorff_distance, locate_poles, mark_collisions, max_second_difference,
    trace_trajectory, Complex64, FreeParticle, Pipeline, PoleSettings, PotentialModel, ScatteringSystem,
    ThomasFermiModel, TraceSettings, Trajectory,
};
use toml::{Table, Value};

use crate::config::{AdiabaticTask, ModelConfig, RunConfig, ScanConfig, SeedConfig, SmatrixTask, TaskConfig, TraceTask, XsecTask};
use crate::error::CliError;
use crate::output::{crossings_csv, scan_csv, trajectory_csv, xsec_csv, ScanRow};

/// What a task produced. `failure` is set when the task ran to the end but
/// some result is incomplete; the files are still written.
pub struct TaskOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: Table,
    pub failure: Option<CliError>,
}

impl TaskOutput {
    fn new() -> Self {
        Self { files: Vec::new(), report: Table::new(), failure: None }
    }

    fn fail(&mut self, message: String) {
        if self.failure.is_none() {
            self.failure = Some(CliError::Incomplete(message));
        }
    }
}

pub fn build_model(config: &ModelConfig) -> Result<Arc<dyn PotentialModel>, CliError> {
    match config {
        ModelConfig::ThomasFermi(tf) => ThomasFermiModel::two_channel(&tf.params())
            .map(|m| Arc::new(m) as Arc<dyn PotentialModel>)
            .map_err(|e| CliError::config("model", e.to_string())),
        ModelConfig::Free(f) => FreeParticle::new(f.thresholds.clone())
            .map(|m| Arc::new(m) as Arc<dyn PotentialModel>)
            .map_err(|e| CliError::config("model.thresholds", e.to_string())),
    }
}

pub fn run(config: &RunConfig) -> Result<TaskOutput, CliError> {
    let model = build_model(&config.model)?;
    match &config.task {
        TaskConfig::Smatrix(t) => smatrix(config, model.as_ref(), t),
        TaskConfig::Trace(t) => trace(config, model.as_ref(), t, false),
        TaskConfig::Residues(t) => trace(config, model.as_ref(), t, true),
        TaskConfig::Xsec(t) => xsec(config, model.as_ref(), t),
        TaskConfig::Adiabatic(t) => adiabatic(config, model, t),
    }
}

fn file_name(config: &RunConfig, stem: &str) -> String {
    format!("{}{stem}.csv", config.output.prefix)
}

fn complex(z: Complex64) -> Value {
    Value::Array(vec![Value::Float(z.re), Value::Float(z.im)])
}

fn smatrix(config: &RunConfig, model: &dyn PotentialModel, task: &SmatrixTask) -> Result<TaskOutput, CliError> {
    let pipeline = Pipeline::new(model, config.numerics.pipeline());
    let convention = regge_core::SConvention::from(config.numerics.convention);
    let mut rows = Vec::new();
    let mut worst_unitarity: f64 = 0.0;
    for energy in task.energies.values() {
        for im in task.lambda_im.values() {
            for re in task.lambda_re.values() {
                let lambda = Complex64::new(re, im);
                let stage = format!("S-matrix at E = {energy}, λ = {lambda}");
                let result = pipeline.solve(energy, lambda).map_err(|e| CliError::numerical(stage, e))?;
                let s = convention.apply(result.s_matrix.clone(), &result.wave_vectors);
                if im == 0.0 {
                    if let Some(f) = &result.flux_normalized {
                        let d = f.adjoint() * f - regge_core::CMatrix::identity(f.nrows(), f.ncols());
                        worst_unitarity = worst_unitarity.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
                    }
                }
                rows.push(ScanRow { energy, lambda, delta: result.delta.value(), s });
            }
        }
    }
    info!("evaluated {} points", rows.len());
    let mut out = TaskOutput::new();
    out.report.insert("points".into(), Value::Integer(rows.len() as i64));
    out.report.insert("max_unitarity_defect_real_lambda".into(), Value::Float(worst_unitarity));
    out.files.push((file_name(config, "scan"), scan_csv(&rows, model.channel_count(), config.output.precision)));
    Ok(out)
}

/// Starting points for every seed at `energy`. Anchored seeds take the
/// nearest pole not already claimed by an earlier seed.
fn resolve_seeds(
    system: &dyn ScatteringSystem,
    energy: f64,
    seeds: &[&SeedConfig],
    scan: &ScanConfig,
    pole: &PoleSettings,
) -> Result<Vec<Complex64>, CliError> {
    let mut found = Vec::new();
    if seeds.iter().any(|s| s.anchor) {
        info!("scanning |Δ| at E = {energy} for anchored seeds");
        let shape = (scan.points[0], scan.points[1]);
        let poles = locate_poles(system, energy, (scan.re[0], scan.re[1]), (scan.im[0], scan.im[1]), shape, scan.min_depth, pole)
            .map_err(|e| CliError::numerical(format!("pole scan at E = {energy}"), e))?;
        found = poles.into_iter().map(|p| p.lambda_bar).collect::<Vec<_>>();
    }
    let mut claimed: Vec<Complex64> = Vec::new();
    let mut out = Vec::new();
    for s in seeds {
        if !s.anchor {
            out.push(s.lambda());
            continue;
        }
        let best = found
            .iter()
            .filter(|p| !claimed.contains(p))
            .min_by(|a, b| (**a - s.lambda()).norm().total_cmp(&(**b - s.lambda()).norm()))
            .copied()
            .ok_or_else(|| {
                CliError::Incomplete(format!("no unclaimed pole in the scan region for anchored seed {:?}", s.label))
            })?;
        info!("seed {}: anchor {} → {best}", s.label, s.lambda());
        claimed.push(best);
        out.push(best);
    }
    Ok(out)
}

fn trace_all(
    system: &dyn ScatteringSystem,
    energies: &[f64],
    seeds: &[&SeedConfig],
    scan: &ScanConfig,
    settings: &TraceSettings,
) -> Result<Vec<Trajectory>, CliError> {
    let starts = resolve_seeds(system, energies[0], seeds, scan, &settings.pole)?;
    seeds
        .iter()
        .zip(starts)
        .map(|(seed, start)| {
            info!("tracing {} from {start}", seed.label);
            trace_trajectory(system, energies, start, settings, &seed.label)
                .map_err(|e| CliError::numerical(format!("trajectory {} from {start}", seed.label), e))
        })
        .collect()
}

/// Files and report entries for a set of traced trajectories.
fn emit_trajectories(config: &RunConfig, channels: usize, trajectories: &[Trajectory], out: &mut TaskOutput) {
    let digits = config.output.precision;
    let mut summary = Table::new();
    for t in trajectories {
        out.files.push((file_name(config, &format!("trajectory_{}", t.label)), trajectory_csv(t, channels, digits)));
        out.files.push((file_name(config, &format!("crossings_{}", t.label)), crossings_csv(t, digits)));
        let mut entry = Table::new();
        entry.insert("records".into(), Value::Integer(t.records.len() as i64));
        if let (Some(first), Some(last)) = (t.records.first(), t.records.last()) {
            entry.insert("start".into(), complex(first.lambda_bar));
            entry.insert("end".into(), complex(last.lambda_bar));
            entry.insert("energy_range".into(), Value::Array(vec![Value::Float(first.energy), Value::Float(last.energy)]));
        }
        entry.insert("self_intersections".into(), Value::Integer(t.self_intersections.len() as i64));
        entry.insert("degenerate".into(), Value::Boolean(t.degenerate));
        let worst_cert = t.records.iter().map(|r| r.certificate).fold(0.0, f64::max);
        entry.insert("max_certificate".into(), Value::Float(worst_cert));
        let agreements: Vec<f64> = t.records.iter().filter_map(|r| r.residue_agreement).collect();
        if !agreements.is_empty() {
            entry.insert("max_residue_disagreement".into(), Value::Float(agreements.iter().copied().fold(0.0, f64::max)));
        }
        if let Some(msg) = &t.truncated {
            entry.insert("truncated".into(), Value::String(msg.clone()));
            out.fail(format!("trajectory {} truncated: {msg}", t.label));
        }
        summary.insert(t.label.clone(), Value::Table(entry));
    }
    out.report.insert("trajectories".into(), Value::Table(summary));
}

fn require_residues(trajectories: &[Trajectory], out: &mut TaskOutput) {
    for t in trajectories {
        let missing = t.records.iter().filter(|r| r.residues.is_none()).count();
        if missing > 0 {
            out.fail(format!("{missing} record(s) of trajectory {} have no residues", t.label));
        }
    }
}

fn trace(config: &RunConfig, model: &dyn PotentialModel, task: &TraceTask, with_residues: bool) -> Result<TaskOutput, CliError> {
    let pipeline = Pipeline::new(model, config.numerics.pipeline());
    let settings = config.numerics.trace(with_residues);
    let seeds: Vec<&SeedConfig> = task.seeds.iter().collect();
    let mut trajectories = trace_all(&pipeline, &task.energies.values(), &seeds, &task.scan, &settings)?;
    let collisions = mark_collisions(&mut trajectories, 1e-6);
    let mut out = TaskOutput::new();
    out.report.insert("collisions".into(), Value::Integer(collisions as i64));
    emit_trajectories(config, model.channel_count(), &trajectories, &mut out);
    if with_residues {
        require_residues(&trajectories, &mut out);
    }
    Ok(out)
}

fn xsec(config: &RunConfig, model: &dyn PotentialModel, task: &XsecTask) -> Result<TaskOutput, CliError> {
    let pipeline = Pipeline::new(model, config.numerics.pipeline());
    let settings = config.numerics.trace(true);
    let energies = task.energies.values();
    let seeds: Vec<&SeedConfig> = task.seeds.iter().collect();
    let trajectories = trace_all(&pipeline, &energies, &seeds, &task.scan, &settings)?;
    let mut out = TaskOutput::new();
    emit_trajectories(config, model.channel_count(), &trajectories, &mut out);
    require_residues(&trajectories, &mut out);
    if out.failure.is_some() {
        return Ok(out);
    }
    info!("partial-wave sums on {} energies", energies.len());
    let refs: Vec<&Trajectory> = trajectories.iter().collect();
    let records = decompose_all(&pipeline, &energies, &refs, &config.numerics.pws())
        .map_err(|e| CliError::numerical("cross-section decomposition", e))?;

    // Smoothness of σ and of the background, per channel pair.
    let mut pairs = Table::new();
    let n = model.channel_count();
    for a in 0..n {
        for b in 0..n {
            let pick = |f: fn(&regge_core::CrossSectionRecord) -> f64| -> Vec<f64> {
                records.iter().filter(|r| r.n == a && r.n_prime == b).map(f).collect()
            };
            let sigma = pick(|r| r.sigma);
            if sigma.is_empty() {
                continue;
            }
            let mut entry = Table::new();
            entry.insert("max_second_difference_sigma".into(), Value::Float(max_second_difference(&sigma)));
            entry.insert("max_second_difference_background".into(), Value::Float(max_second_difference(&pick(|r| r.background))));
            entry.insert("max_truncation_error".into(), Value::Float(pick(|r| r.truncation_error_estimate).iter().copied().fold(0.0, f64::max)));
            pairs.insert(format!("{}{}", a + 1, b + 1), Value::Table(entry));
        }
    }
    out.report.insert("pairs".into(), Value::Table(pairs));
    out.files.push((file_name(config, "xsec"), xsec_csv(&records, config.output.precision)));
    Ok(out)
}

fn adiabatic(config: &RunConfig, model: Arc<dyn PotentialModel>, task: &AdiabaticTask) -> Result<TaskOutput, CliError> {
    let energies = task.energies.values();
    let settings = config.numerics.trace(false);
    let numerics = config.numerics.pipeline();
    let curves = Arc::new(adiabatic_model(model.clone()).map_err(|e| CliError::numerical("adiabatic model", e))?);
    let mut out = TaskOutput::new();
    if !curves.warnings().is_empty() {
        let warnings = curves.warnings().iter().map(|w| Value::String(w.clone())).collect();
        out.report.insert("warnings".into(), Value::Array(warnings));
    }
    let curves: Arc<dyn PotentialModel> = curves;

    let mut trajectories = Vec::new();
    for seed in &task.seeds {
        let branch = seed.branch.expect("validated");
        let channel = DiagonalChannel::new(curves.clone(), branch).map_err(|e| CliError::numerical("adiabatic branch", e))?;
        let pipeline = Pipeline::new(&channel, numerics);
        trajectories.extend(trace_all(&pipeline, &energies, &[seed], &task.scan, &settings)?);
    }
    emit_trajectories(config, 1, &trajectories, &mut out);

    if let Some(exact_seed) = &task.exact {
        let pipeline = Pipeline::new(model.as_ref(), numerics);
        let exact = trace_all(&pipeline, &energies, &[exact_seed], &task.scan, &settings)?.remove(0);
        let mut comparison = Table::new();
        for (seed, t) in task.seeds.iter().zip(&trajectories) {
            let lo = exact.records[0].energy.max(t.records[0].energy);
            let hi = exact.records.last().expect("non-empty").energy.min(t.records.last().expect("non-empty").energy);
            let a: Vec<Complex64> = exact.window(lo, hi).iter().map(|r| r.lambda_bar).collect();
            let b: Vec<Complex64> = t.window(lo, hi).iter().map(|r| r.lambda_bar).collect();
            let mut entry = Table::new();
            entry.insert("energy_range".into(), Value::Array(vec![Value::Float(lo), Value::Float(hi)]));
            if !a.is_empty() && !b.is_empty() {
                entry.insert("hausdorff".into(), Value::Float(hausdorff_distance(&a, &b)));
            }
            comparison.insert(seed.label.clone(), Value::Table(entry));
        }
        out.report.insert(format!("versus_{}", exact.label), Value::Table(comparison));
        if let Some(msg) = &exact.truncated {
            out.fail(format!("exact trajectory {} truncated: {msg}", exact.label));
        }
    }
    Ok(out)
}
