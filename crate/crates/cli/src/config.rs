//! Run configuration: TOML with four sections, strict keys, defaults filled
//! from the core crate so the serialized config is the resolved one.

use std::path::PathBuf;

use regge_core::{
    Complex64, HankelSettings, MullerSettings, Numerics, PoleSettings, PropagationSettings, PwsSettings,
    ResidueSettings, SConvention, TraceSettings, TwoChannelTFParams,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ModelConfig {
    /// Two-channel Thomas-Fermi model; omitted parameters take the reference
    /// values.
    ThomasFermi(TfConfig),
    /// No potential beyond constant thresholds.
    Free(FreeConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TfConfig {
    pub z: f64,
    pub a: f64,
    pub b: f64,
    pub delta_v: f64,
    pub alpha: f64,
    pub r_i: f64,
    pub delta_r: f64,
}

impl Default for TfConfig {
    fn default() -> Self {
        let p = TwoChannelTFParams::paper();
        Self { z: p.z, a: p.a, b: p.b, delta_v: p.delta_v, alpha: p.alpha, r_i: p.r_i, delta_r: p.delta_r }
    }
}

impl TfConfig {
    pub fn params(&self) -> TwoChannelTFParams {
        TwoChannelTFParams {
            z: self.z,
            a: self.a,
            b: self.b,
            delta_v: self.delta_v,
            alpha: self.alpha,
            r_i: self.r_i,
            delta_r: self.delta_r,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeConfig {
    /// Channel thresholds, nonincreasing.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Paper,
    FluxNormalized,
}

impl From<Convention> for SConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Paper => SConvention::Paper,
            Convention::FluxNormalized => SConvention::FluxNormalized,
        }
    }
}

/// Every numerical knob of the pipeline, flat.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub r0: f64,
    pub j_max: usize,
    pub series_tail_tol: f64,
    pub r_match: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    pub hankel_z_min: f64,
    pub hankel_order_factor: f64,
    pub hankel_tol: f64,
    pub hankel_max_terms: usize,
    pub threshold_guard: f64,
    pub condition_limit: f64,
    pub tail_correction: bool,
    pub convention: Convention,
    pub muller_f_tol: f64,
    pub muller_step_tol: f64,
    pub muller_max_iterations: usize,
    pub muller_initial_spread: f64,
    pub muller_max_step: f64,
    pub muller_backtracks: usize,
    pub trend_baseline: f64,
    pub certificate_radius: f64,
    pub certificate_points: usize,
    pub certificate_tol: f64,
    pub jump_tol: f64,
    pub min_energy_step: f64,
    pub residue_radius: f64,
    pub residue_nodes: usize,
    pub residue_limit_offsets: [f64; 3],
    /// Direction of the limit `ε S(λ̄ + ε)` as `[re, im]`.
    pub residue_direction: [f64; 2],
    pub residue_agreement_tol: f64,
    pub residue_mismatch_tol: f64,
    pub pws_tol: f64,
    pub pws_abs_tol: f64,
    pub pws_quiet_terms: usize,
    pub pws_j_cap: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let n = Numerics::default();
        let p = PoleSettings::default();
        let t = TraceSettings::default();
        let r = ResidueSettings::default();
        let w = PwsSettings::default();
        Self {
            r0: n.r0,
            j_max: n.j_max,
            series_tail_tol: n.series_tail_tol,
            r_match: n.propagation.r_match,
            rel_tol: n.propagation.rel_tol,
            abs_tol: n.propagation.abs_tol,
            max_step: n.propagation.max_step,
            initial_step: n.propagation.initial_step,
            max_steps: n.propagation.max_steps,
            hankel_z_min: n.hankel.z_min,
            hankel_order_factor: n.hankel.order_factor,
            hankel_tol: n.hankel.tol,
            hankel_max_terms: n.hankel.max_terms,
            threshold_guard: n.threshold_guard,
            condition_limit: n.condition_limit,
            tail_correction: n.tail_correction,
            convention: match w.convention {
                SConvention::Paper => Convention::Paper,
                SConvention::FluxNormalized => Convention::FluxNormalized,
            },
            muller_f_tol: p.muller.f_tol,
            muller_step_tol: p.muller.step_tol,
            muller_max_iterations: p.muller.max_iterations,
            muller_initial_spread: p.muller.initial_spread,
            muller_max_step: p.muller.max_step,
            muller_backtracks: p.muller.backtracks,
            trend_baseline: p.trend_baseline,
            certificate_radius: p.certificate_radius,
            certificate_points: p.certificate_points,
            certificate_tol: p.certificate_tol,
            jump_tol: t.jump_tol,
            min_energy_step: t.min_energy_step,
            residue_radius: r.radius,
            residue_nodes: r.nodes,
            residue_limit_offsets: r.limit_offsets,
            residue_direction: [r.direction.re, r.direction.im],
            residue_agreement_tol: r.agreement_tol,
            residue_mismatch_tol: r.mismatch_tol,
            pws_tol: w.tol,
            pws_abs_tol: w.abs_tol,
            pws_quiet_terms: w.quiet_terms,
            pws_j_cap: w.j_cap,
        }
    }
}

impl NumericsConfig {
    pub fn pipeline(&self) -> Numerics {
        Numerics {
            r0: self.r0,
            j_max: self.j_max,
            series_tail_tol: self.series_tail_tol,
            propagation: PropagationSettings {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
                max_step: self.max_step,
                initial_step: self.initial_step,
                r_match: self.r_match,
                max_steps: self.max_steps,
            },
            hankel: HankelSettings {
                z_min: self.hankel_z_min,
                order_factor: self.hankel_order_factor,
                tol: self.hankel_tol,
                max_terms: self.hankel_max_terms,
            },
            threshold_guard: self.threshold_guard,
            condition_limit: self.condition_limit,
            tail_correction: self.tail_correction,
        }
    }

    pub fn pole(&self) -> PoleSettings {
        PoleSettings {
            muller: MullerSettings {
                f_tol: self.muller_f_tol,
                step_tol: self.muller_step_tol,
                max_iterations: self.muller_max_iterations,
                initial_spread: self.muller_initial_spread,
                max_step: self.muller_max_step,
                backtracks: self.muller_backtracks,
            },
            trend_baseline: self.trend_baseline,
            certificate_radius: self.certificate_radius,
            certificate_points: self.certificate_points,
            certificate_tol: self.certificate_tol,
            bounds: None,
        }
    }

    pub fn residues(&self) -> ResidueSettings {
        ResidueSettings {
            radius: self.residue_radius,
            nodes: self.residue_nodes,
            limit_offsets: self.residue_limit_offsets,
            direction: Complex64::new(self.residue_direction[0], self.residue_direction[1]),
            agreement_tol: self.residue_agreement_tol,
            mismatch_tol: self.residue_mismatch_tol,
        }
    }

    pub fn trace(&self, with_residues: bool) -> TraceSettings {
        TraceSettings {
            pole: self.pole(),
            jump_tol: self.jump_tol,
            min_energy_step: self.min_energy_step,
            residues: with_residues.then(|| self.residues()),
        }
    }

    pub fn pws(&self) -> PwsSettings {
        PwsSettings {
            tol: self.pws_tol,
            abs_tol: self.pws_abs_tol,
            quiet_terms: self.pws_quiet_terms,
            j_cap: self.pws_j_cap,
            convention: self.convention.into(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("r0", self.r0),
            ("series_tail_tol", self.series_tail_tol),
            ("r_match", self.r_match),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("initial_step", self.initial_step),
            ("hankel_z_min", self.hankel_z_min),
            ("hankel_order_factor", self.hankel_order_factor),
            ("hankel_tol", self.hankel_tol),
            ("threshold_guard", self.threshold_guard),
            ("condition_limit", self.condition_limit),
            ("muller_f_tol", self.muller_f_tol),
            ("muller_step_tol", self.muller_step_tol),
            ("muller_initial_spread", self.muller_initial_spread),
            ("muller_max_step", self.muller_max_step),
            ("certificate_radius", self.certificate_radius),
            ("certificate_tol", self.certificate_tol),
            ("jump_tol", self.jump_tol),
            ("min_energy_step", self.min_energy_step),
            ("residue_radius", self.residue_radius),
            ("residue_agreement_tol", self.residue_agreement_tol),
            ("residue_mismatch_tol", self.residue_mismatch_tol),
            ("pws_tol", self.pws_tol),
            ("pws_abs_tol", self.pws_abs_tol),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::config(format!("numerics.{key}"), format!("must be positive and finite, got {value}")));
            }
        }
        let counts = [
            ("j_max", self.j_max),
            ("max_steps", self.max_steps),
            ("hankel_max_terms", self.hankel_max_terms),
            ("muller_max_iterations", self.muller_max_iterations),
            ("certificate_points", self.certificate_points),
            ("residue_nodes", self.residue_nodes),
            ("pws_quiet_terms", self.pws_quiet_terms),
            ("pws_j_cap", self.pws_j_cap),
        ];
        for (key, value) in counts {
            if value == 0 {
                return Err(CliError::config(format!("numerics.{key}"), "must be at least 1"));
            }
        }
        if !(self.trend_baseline >= 0.0 && self.trend_baseline.is_finite()) {
            return Err(CliError::config("numerics.trend_baseline", "must be non-negative"));
        }
        if self.r_match <= self.r0 {
            return Err(CliError::config("numerics.r_match", format!("must exceed r0 = {}", self.r0)));
        }
        if self.residue_limit_offsets.iter().any(|e| !(*e > 0.0)) {
            return Err(CliError::config("numerics.residue_limit_offsets", "offsets must be positive"));
        }
        let [dr, di] = self.residue_direction;
        if !(dr.hypot(di) > 0.0) {
            return Err(CliError::config("numerics.residue_direction", "must be a nonzero direction"));
        }
        Ok(())
    }
}

/// An energy or λ grid: an explicit list, or `{ start, stop, step }` with
/// both ends included.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(Range),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => {
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                // Rounded so that 0.35 + 3·0.05 prints as 0.5.
                (0..=n).map(|i| ((r.start + i as f64 * r.step) * 1e10).round() / 1e10).collect()
            }
        }
    }

    fn validate(&self, key: &str) -> Result<(), CliError> {
        if let Grid::Range(r) = self {
            if !(r.step > 0.0) || !(r.stop >= r.start) || !r.start.is_finite() || !r.stop.is_finite() {
                return Err(CliError::config(key, "range needs finite start ≤ stop and step > 0"));
            }
        }
        let v = self.values();
        if v.is_empty() {
            return Err(CliError::config(key, "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::config(key, "grid must be finite and strictly increasing"));
        }
        Ok(())
    }
}

/// A trajectory seed at the first grid energy. With `anchor = true` the
/// seed is the pole nearest `lambda` among those found by scanning `|Δ|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub label: String,
    pub lambda: [f64; 2],
    #[serde(default)]
    pub anchor: bool,
    /// Adiabatic task only: 0 for the upper curve, 1 for the lower.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
}

impl SeedConfig {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.lambda[0], self.lambda[1])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub points: [usize; 2],
    pub min_depth: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { re: [0.0, 6.0], im: [0.0, 1.2], points: [61, 13], min_depth: 0.1 }
    }
}

impl ScanConfig {
    fn validate(&self, key: &str) -> Result<(), CliError> {
        if !(self.re[1] > self.re[0]) || !(self.im[1] > self.im[0]) {
            return Err(CliError::config(format!("{key}.re"), "scan ranges must be increasing"));
        }
        if self.points[0] < 3 || self.points[1] < 2 {
            return Err(CliError::config(format!("{key}.points"), "need at least 3 × 2 points"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskConfig {
    Smatrix(SmatrixTask),
    Trace(TraceTask),
    Residues(TraceTask),
    Xsec(XsecTask),
    Adiabatic(AdiabaticTask),
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::Smatrix(_) => "smatrix",
            TaskConfig::Trace(_) => "trace",
            TaskConfig::Residues(_) => "residues",
            TaskConfig::Xsec(_) => "xsec",
            TaskConfig::Adiabatic(_) => "adiabatic",
        }
    }
}

/// `Δ` and `S` on the product of an energy list and a λ grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmatrixTask {
    pub energies: Grid,
    pub lambda_re: Grid,
    #[serde(default = "zero_grid")]
    pub lambda_im: Grid,
}

fn zero_grid() -> Grid {
    Grid::List(vec![0.0])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceTask {
    pub energies: Grid,
    pub seeds: Vec<SeedConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsecTask {
    /// Energies of the decomposition; the trajectories are traced on them.
    pub energies: Grid,
    /// Poles whose Mulholland terms make up σ_res.
    pub seeds: Vec<SeedConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticTask {
    pub energies: Grid,
    /// One seed per adiabatic branch (each with `branch` set).
    pub seeds: Vec<SeedConfig>,
    /// Exact coupled trajectory compared with the branch-0 trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<SeedConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub prefix: String,
    /// Significant digits of every floating-point CSV field.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("."), prefix: String::new(), precision: 12 }
    }
}

fn validate_seeds(seeds: &[SeedConfig], key: &str) -> Result<(), CliError> {
    if seeds.is_empty() {
        return Err(CliError::config(key, "at least one seed is required"));
    }
    for (i, s) in seeds.iter().enumerate() {
        validate_label(&s.label, &format!("{key}[{i}].label"))?;
        if seeds[..i].iter().any(|t| t.label == s.label) {
            return Err(CliError::config(format!("{key}[{i}].label"), format!("duplicate label {:?}", s.label)));
        }
        if s.lambda.iter().any(|x| !x.is_finite()) {
            return Err(CliError::config(format!("{key}[{i}].lambda"), "must be finite"));
        }
    }
    Ok(())
}

/// Labels end up in file names.
fn validate_label(label: &str, key: &str) -> Result<(), CliError> {
    let ok = !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, format!("label {label:?} must be non-empty ASCII letters, digits, '-', '_' or '.'")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.model {
            ModelConfig::ThomasFermi(tf) => {
                for (key, v) in [("z", tf.z), ("a", tf.a), ("b", tf.b), ("delta_v", tf.delta_v), ("alpha", tf.alpha), ("r_i", tf.r_i)] {
                    if !v.is_finite() {
                        return Err(CliError::config(format!("model.{key}"), "must be finite"));
                    }
                }
                if !(tf.delta_r > 0.0) {
                    return Err(CliError::config("model.delta_r", "must be positive"));
                }
            }
            ModelConfig::Free(f) => {
                if f.thresholds.is_empty() || f.thresholds.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::config("model.thresholds", "need at least one finite threshold"));
                }
                if f.thresholds.windows(2).any(|w| w[0] < w[1]) {
                    return Err(CliError::config("model.thresholds", "must be nonincreasing"));
                }
            }
        }
        self.numerics.validate()?;
        match &self.task {
            TaskConfig::Smatrix(t) => {
                t.energies.validate("task.energies")?;
                t.lambda_re.validate("task.lambda_re")?;
                t.lambda_im.validate("task.lambda_im")?;
            }
            TaskConfig::Trace(t) | TaskConfig::Residues(t) => {
                t.energies.validate("task.energies")?;
                validate_seeds(&t.seeds, "task.seeds")?;
                t.scan.validate("task.scan")?;
            }
            TaskConfig::Xsec(t) => {
                t.energies.validate("task.energies")?;
                validate_seeds(&t.seeds, "task.seeds")?;
                t.scan.validate("task.scan")?;
            }
            TaskConfig::Adiabatic(t) => {
                t.energies.validate("task.energies")?;
                validate_seeds(&t.seeds, "task.seeds")?;
                t.scan.validate("task.scan")?;
                if !matches!(self.model, ModelConfig::ThomasFermi(_)) {
                    return Err(CliError::config("model.type", "the adiabatic task needs the two-channel thomas-fermi model"));
                }
                for (i, s) in t.seeds.iter().enumerate() {
                    match s.branch {
                        Some(0 | 1) => {}
                        _ => return Err(CliError::config(format!("task.seeds[{i}].branch"), "must be 0 (upper) or 1 (lower)")),
                    }
                }
                if let Some(e) = &t.exact {
                    validate_label(&e.label, "task.exact.label")?;
                }
            }
        }
        if !(1..=17).contains(&self.output.precision) {
            return Err(CliError::config("output.precision", "must be between 1 and 17"));
        }
        validate_label_or_empty(&self.output.prefix)?;
        Ok(())
    }
}

fn validate_label_or_empty(prefix: &str) -> Result<(), CliError> {
    if prefix.is_empty() {
        Ok(())
    } else {
        validate_label(prefix, "output.prefix")
    }
}

/// Apply `key=value` overrides to the parsed document. Values are read as
/// TOML (so `1e-9`, `true`, `[1, 2]` work); anything else is a string.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(item.clone(), "override must have the form key=value"))?;
        let key = key.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.trim().to_string()),
        };
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::config(key, "malformed key"));
        }
        let mut table = &mut *doc;
        for (depth, part) in parts[..parts.len() - 1].iter().enumerate() {
            let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| CliError::config(parts[..=depth].join("."), "is not a section"))?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
    }
    Ok(())
}

/// Parse and validate a config document with overrides applied.
pub fn parse(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config("<document>", e.message()))?;
    apply_overrides(&mut doc, overrides)?;
    let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path == "." { "<document>".to_string() } else { path }, e.into_inner().message())
    })?;
    config.validate()?;
    Ok(config)
}
