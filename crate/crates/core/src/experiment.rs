//! Experiment configuration, run orchestration and result files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instances::{gen_chimera, gen_ri1d, gen_sk, ChimeraCoupling, ProblemInstance};
use crate::jastrow::ParamSupport;
use crate::observables::{kde_log_density, n_repetitions, success_probability, AnnealResult, SuccessMode};
use crate::oracles::{
    brute_force_ground, exact_propagate, free_fermion_propagate, sa_success_frequency, BetaSchedule,
    GroundSolution, MAX_DENSE_SITES,
};
use crate::output::{write_rows, DiagnosticsRow, NrepRow, SummaryRow, TrajectoryRow};
use crate::sampler::{Estimate, SamplingPlan};
use crate::seed::child_seed;
use crate::tvmc::{
    integrate_annealing, Regularization, RegularizationMode, SamplingMode, Schedule, ScheduleForm, TvmcConfig,
};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "AQC_WORKERS";

/// Sizes the global worker pool from [`WORKERS_ENV`]; returns the count in use.
pub fn configure_workers() -> Result<usize> {
    let requested = match std::env::var(WORKERS_ENV) {
        Ok(text) => Some(
            text.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {text:?}")))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = requested {
        // a pool built earlier in the process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Ri1d,
    Sk,
    Chimera,
    /// A single instance read from `instance_file`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: ModelFamily,
    #[serde(default)]
    pub n_sites: usize,
    #[serde(default = "one")]
    pub chimera_rows: usize,
    #[serde(default = "one")]
    pub chimera_cols: usize,
    #[serde(default)]
    pub chimera_coupling: ChimeraCoupling,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_file: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ModelConfig {
    pub fn instance(&self, seed: u64) -> Result<ProblemInstance> {
        match self.family {
            ModelFamily::Ri1d => gen_ri1d(self.n_sites, seed),
            ModelFamily::Sk => gen_sk(self.n_sites, seed),
            ModelFamily::Chimera => gen_chimera(self.chimera_rows, self.chimera_cols, self.chimera_coupling, seed),
            ModelFamily::File => {
                let path = self
                    .instance_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("model.instance_file is required for family = \"file\"".into()))?;
                ProblemInstance::load(path)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealConfig {
    pub times: Vec<f64>,
    #[serde(default)]
    pub schedule: ScheduleForm,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self { times: vec![1.0], schedule: ScheduleForm::Linear }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    Sampled,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessKind {
    /// Ground-hit fraction of the final Metropolis samples.
    Sampled,
    ExactSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TvmcSettings {
    /// Integration steps per anneal; `dt = T / steps` unless `dt` is set.
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub sampling: SamplingKind,
    pub n_samples: usize,
    pub n_chains: usize,
    /// Defaults to `10 N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_sweeps: Option<usize>,
    pub thin_sweeps: usize,
    pub regularization: RegularizationMode,
    pub regularization_value: f64,
    pub param_support: ParamSupport,
    pub output_stride: usize,
    pub snapshots: bool,
    pub success_mode: SuccessKind,
}

impl Default for TvmcSettings {
    fn default() -> Self {
        Self {
            steps: 1000,
            dt: None,
            sampling: SamplingKind::Sampled,
            n_samples: 10_000,
            n_chains: 4,
            burn_in_sweeps: None,
            thin_sweeps: 1,
            regularization: RegularizationMode::SvdCutoff,
            regularization_value: 1e-6,
            param_support: ParamSupport::GraphEdges,
            output_stride: 10,
            snapshots: true,
            success_mode: SuccessKind::Sampled,
        }
    }
}

impl TvmcSettings {
    pub fn plan(&self, n_sites: usize) -> SamplingPlan {
        SamplingPlan {
            n_chains: self.n_chains,
            burn_in_sweeps: self.burn_in_sweeps.unwrap_or(10 * n_sites),
            n_samples: self.n_samples,
            thin_sweeps: self.thin_sweeps,
        }
    }

    pub fn config_for(&self, n_sites: usize, total_time: f64, seed: u64, e_min: Option<f64>) -> TvmcConfig {
        TvmcConfig {
            dt: self.dt.unwrap_or(total_time / self.steps as f64),
            sampling: match self.sampling {
                SamplingKind::Sampled => SamplingMode::Sampled(self.plan(n_sites)),
                SamplingKind::Exact => SamplingMode::Exact,
            },
            regularization: Regularization { mode: self.regularization, value: self.regularization_value },
            output_stride: self.output_stride,
            param_support: self.param_support,
            seed,
            e_min,
            keep_snapshots: self.snapshots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub realizations: usize,
    pub base_seed: u64,
    /// Target confidence for repetition counts.
    pub p0: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { realizations: 1, base_seed: 0, p0: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub ground_state: bool,
    pub exact_dynamics: bool,
    pub free_fermion: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { ground_state: true, exact_dynamics: false, free_fermion: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaConfig {
    pub sweeps: usize,
    pub repeats: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for SaConfig {
    fn default() -> Self {
        let b = BetaSchedule::default();
        Self { sweeps: 1000, repeats: 100, beta_start: b.beta_start, beta_end: b.beta_end }
    }
}

impl SaConfig {
    pub fn betas(&self) -> BetaSchedule {
        BetaSchedule { beta_start: self.beta_start, beta_end: self.beta_end }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    #[serde(default)]
    pub anneal: AnnealConfig,
    #[serde(default)]
    pub tvmc: TvmcSettings,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub sa: SaConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Stream index separating SA seeds from t-VMC seeds.
const SA_STREAM: u64 = u64::MAX;

impl ExperimentConfig {
    /// Parses TOML and applies `group.key=value` overrides; values are read
    /// as TOML literals, falling back to plain strings.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.anneal.times.is_empty() {
            return bad("anneal.times must list at least one annealing time".into());
        }
        if let Some(t) = self.anneal.times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("annealing time {t} must be positive"));
        }
        if self.tvmc.steps == 0 || self.tvmc.output_stride == 0 {
            return bad("tvmc.steps and tvmc.output_stride must be positive".into());
        }
        if let Some(dt) = self.tvmc.dt {
            if dt.is_nan() || dt <= 0.0 {
                return bad(format!("tvmc.dt = {dt} must be positive"));
            }
        }
        if self.tvmc.sampling == SamplingKind::Sampled {
            self.tvmc.plan(self.model.n_sites).validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.tvmc.regularization_value.is_nan() || self.tvmc.regularization_value < 0.0 {
            return bad("tvmc.regularization_value must be nonnegative".into());
        }
        if self.ensemble.realizations == 0 {
            return bad("ensemble.realizations must be at least 1".into());
        }
        if !(self.ensemble.p0 > 0.0 && self.ensemble.p0 < 1.0) {
            return bad(format!("ensemble.p0 = {} must lie in (0, 1)", self.ensemble.p0));
        }
        if self.sa.repeats == 0 {
            return bad("sa.repeats must be at least 1".into());
        }
        if self.model.family != ModelFamily::Chimera && self.model.family != ModelFamily::File && self.model.n_sites < 2 {
            return bad("model.n_sites must be at least 2".into());
        }
        Ok(())
    }

    pub fn instance_seed(&self, realization: usize) -> u64 {
        child_seed(self.ensemble.base_seed, &[realization as u64])
    }

    pub fn run_seed(&self, realization: usize, time_index: usize) -> u64 {
        child_seed(self.ensemble.base_seed, &[realization as u64, time_index as u64])
    }

    pub fn run_dir(&self, realization: usize, total_time: f64) -> PathBuf {
        self.output_dir.join(format!("r{realization:04}_T{total_time}"))
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not of the form key=value")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, groups) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for group in groups {
        node = node
            .entry(group.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {group} is not a group")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Outcome of one `(realization, T)` anneal.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub realization: usize,
    pub instance_seed: u64,
    pub run_seed: u64,
    pub result: AnnealResult,
    pub tvmc_rows: Vec<TrajectoryRow>,
    pub dir: PathBuf,
}

fn with_provenance(err: Error, realization: usize, instance_seed: u64, total_time: f64) -> Error {
    Error::Run { realization, instance_seed, total_time, source: Box::new(err) }
}

/// Generates instance `realization`, solves its ground state when enabled
/// and anneals with the `time_index`-th annealing time.
pub fn run_single(cfg: &ExperimentConfig, realization: usize, time_index: usize) -> Result<RunRecord> {
    cfg.validate()?;
    let total_time = *cfg
        .anneal
        .times
        .get(time_index)
        .ok_or_else(|| Error::Config(format!("no annealing time with index {time_index}")))?;
    let seed = cfg.instance_seed(realization);
    let prepared = prepare(cfg, realization).map_err(|e| with_provenance(e, realization, seed, total_time))?;
    run_prepared(cfg, &prepared, time_index)
}

struct Prepared {
    realization: usize,
    instance: ProblemInstance,
    ground: Option<GroundSolution>,
}

fn prepare(cfg: &ExperimentConfig, realization: usize) -> Result<Prepared> {
    let instance = cfg.model.instance(cfg.instance_seed(realization))?;
    let ground = if cfg.oracle.ground_state { Some(brute_force_ground(&instance)?) } else { None };
    Ok(Prepared { realization, instance, ground })
}

fn estimate_json(e: Option<Estimate>) -> (Value, Value) {
    match e {
        Some(e) => (json!(e.mean), e.error.map_or(Value::Null, |x| json!(x))),
        None => (Value::Null, Value::Null),
    }
}

fn n_rep_json(n: Option<f64>) -> Value {
    match n {
        Some(x) if x.is_infinite() => json!("inf"),
        Some(x) => json!(x),
        None => Value::Null,
    }
}

fn run_prepared(cfg: &ExperimentConfig, prepared: &Prepared, time_index: usize) -> Result<RunRecord> {
    let total_time = cfg.anneal.times[time_index];
    let realization = prepared.realization;
    let instance_seed = cfg.instance_seed(realization);
    let run = || -> Result<RunRecord> {
        let inst = &prepared.instance;
        let n = inst.n_sites();
        let run_seed = cfg.run_seed(realization, time_index);
        let schedule = Schedule { total_time, form: cfg.anneal.schedule };
        let e_min = prepared.ground.as_ref().map(|g| g.e_min);
        let tcfg = cfg.tvmc.config_for(n, total_time, run_seed, e_min);
        let traj = integrate_annealing(inst, &schedule, &tcfg)?;
        let p_success = match (&prepared.ground, cfg.tvmc.success_mode) {
            (Some(g), SuccessKind::ExactSum) => {
                Some(success_probability(&traj.final_params, inst, g, SuccessMode::ExactSum)?)
            }
            _ => None,
        };
        let result = AnnealResult::from_trajectory(&traj, p_success, cfg.ensemble.p0)?;

        let dir = cfg.run_dir(realization, total_time);
        fs::create_dir_all(&dir)?;
        let tvmc_rows: Vec<TrajectoryRow> = traj.points.iter().map(TrajectoryRow::from_tvmc).collect();
        let mut rows = tvmc_rows.clone();
        let e0 = e_min.map(|e| e / n as f64);
        let mut exact_final = Value::Null;
        if cfg.oracle.exact_dynamics && n <= MAX_DENSE_SITES {
            let exact = exact_propagate(inst, &schedule, tcfg.dt, tcfg.output_stride, e_min)?;
            rows.extend(exact.points.iter().map(|p| TrajectoryRow::from_exact(p, total_time, e0)));
            let last = exact.points.last().expect("final point").observables;
            exact_final = json!({
                "e_final": last.energy_density,
                "e_residual": e0.map(|e| last.classical_density - e),
                "p_success": last.p_success,
                "kink_density": last.kink_density,
            });
        }
        let mut fermion_final = Value::Null;
        if cfg.oracle.free_fermion && inst.is_chain() {
            let ff = free_fermion_propagate(inst, &schedule, tcfg.dt, tcfg.output_stride)?;
            rows.extend(ff.iter().map(|p| TrajectoryRow::from_fermion(p, total_time)));
            let last = ff.last().expect("final point");
            fermion_final = json!({ "e_final": last.energy_density, "kink_density": last.kink_density });
        }
        write_rows(&dir.join("trajectory.csv"), &rows)?;
        let diagnostics: Vec<DiagnosticsRow> = traj.diagnostics.iter().map(DiagnosticsRow::from).collect();
        write_rows(&dir.join("diagnostics.csv"), &diagnostics)?;
        for ((t, params), point) in traj.snapshots.iter().zip(&traj.points) {
            debug_assert_eq!(*t, point.t);
            fs::write(dir.join(format!("params_{:06}.json", point.step)), params.to_snapshot_json()?)?;
        }
        let (e_final, e_final_err) = estimate_json(Some(result.e_final));
        let (e_res, e_res_err) = estimate_json(result.e_residual_final);
        let (ps, ps_err) = estimate_json(result.p_success);
        let (kink, kink_err) = estimate_json(result.kink_density_final);
        let doc = json!({
            "family": inst.family(),
            "n_sites": n,
            "realization": realization,
            "instance_seed": instance_seed,
            "run_seed": run_seed,
            "T": total_time,
            "e_min": e_min,
            "degeneracy": prepared.ground.as_ref().map(|g| g.degeneracy),
            "e_final": e_final,
            "e_final_err": e_final_err,
            "e_residual": e_res,
            "e_residual_err": e_res_err,
            "p_success": ps,
            "p_success_err": ps_err,
            "n_rep": n_rep_json(result.n_rep),
            "kink_density": kink,
            "kink_density_err": kink_err,
            "exact": exact_final,
            "fermion": fermion_final,
        });
        fs::write(dir.join("result.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        fs::write(dir.join("resolved_config.toml"), cfg.to_toml()?)?;
        Ok(RunRecord { realization, instance_seed, run_seed, result, tvmc_rows, dir })
    };
    run().map_err(|e| with_provenance(e, realization, instance_seed, total_time))
}

/// Aggregate outcome of an ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<String>,
}

impl EnsembleReport {
    pub fn n_runs(&self) -> usize {
        self.summary.len()
    }

    pub fn is_partial_failure(&self) -> bool {
        !self.failures.is_empty()
    }
}

fn write_config_files(cfg: &ExperimentConfig, config_text: Option<&str>) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    if let Some(text) = config_text {
        fs::write(cfg.output_dir.join("config.toml"), text)?;
    }
    fs::write(cfg.output_dir.join("resolved_config.toml"), cfg.to_toml()?)?;
    Ok(())
}

fn summary_row(realization: usize, instance_seed: u64, total_time: f64, outcome: &Result<RunRecord>) -> SummaryRow {
    let mut row = SummaryRow {
        realization,
        instance_seed,
        total_time,
        status: "ok".into(),
        e_final: None,
        e_final_err: None,
        e_residual: None,
        e_residual_err: None,
        p_success: None,
        p_success_err: None,
        n_rep: None,
        kink_density: None,
        kink_density_err: None,
    };
    match outcome {
        Ok(rec) => {
            let r = &rec.result;
            row.e_final = Some(r.e_final.mean);
            row.e_final_err = r.e_final.error;
            row.e_residual = r.e_residual_final.map(|e| e.mean);
            row.e_residual_err = r.e_residual_final.and_then(|e| e.error);
            row.p_success = r.p_success.map(|e| e.mean);
            row.p_success_err = r.p_success.and_then(|e| e.error);
            row.n_rep = r.n_rep;
            row.kink_density = r.kink_density_final.map(|e| e.mean);
            row.kink_density_err = r.kink_density_final.and_then(|e| e.error);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Disorder mean and standard error of each trajectory column at every
/// output time shared by all successful runs.
fn write_mean_trajectory(path: &Path, runs: &[&RunRecord]) -> Result<()> {
    let len = runs.iter().map(|r| r.tvmc_rows.len()).min().unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "s", "n", "e_mean", "e_sem", "e_residual_mean", "e_residual_sem", "kink_mean", "kink_sem"])?;
    let stats = |xs: Vec<f64>| -> (String, String) {
        if xs.is_empty() {
            return (String::new(), String::new());
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sem = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt().to_string()
        } else {
            String::new()
        };
        (mean.to_string(), sem)
    };
    for k in 0..len {
        let first = &runs[0].tvmc_rows[k];
        let (e, e_sem) = stats(runs.iter().map(|r| r.tvmc_rows[k].e_inst).collect());
        let (er, er_sem) = stats(runs.iter().filter_map(|r| r.tvmc_rows[k].e_residual).collect());
        let (kk, kk_sem) = stats(runs.iter().filter_map(|r| r.tvmc_rows[k].kink_density).collect());
        w.write_record([
            first.t.to_string(),
            first.s.to_string(),
            runs.len().to_string(),
            e,
            e_sem,
            er,
            er_sem,
            kk,
            kk_sem,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_log_kde(path: &Path, label: &str, values: &[f64]) -> Result<Option<usize>> {
    let finite: Vec<f64> = values.iter().cloned().filter(|v| v.is_finite()).collect();
    if finite.iter().filter(|v| **v > 0.0).count() < 2 {
        return Ok(None);
    }
    let d = kde_log_density(&finite, None)?;
    d.curve.write_csv(path, label)?;
    Ok(Some(d.n_nonpositive + values.len() - finite.len()))
}

/// Runs every `(realization, T)` pair in parallel and writes per-run
/// directories plus ensemble summaries. Individual failures are recorded
/// and do not stop the ensemble.
pub fn run_ensemble(cfg: &ExperimentConfig, config_text: Option<&str>) -> Result<EnsembleReport> {
    cfg.validate()?;
    write_config_files(cfg, config_text)?;
    let prepared: Vec<Result<Prepared>> = (0..cfg.ensemble.realizations).into_par_iter().map(|r| prepare(cfg, r)).collect();
    let jobs: Vec<(usize, usize)> =
        (0..cfg.ensemble.realizations).flat_map(|r| (0..cfg.anneal.times.len()).map(move |k| (r, k))).collect();
    let outcomes: Vec<Result<RunRecord>> = jobs
        .par_iter()
        .map(|&(r, k)| match &prepared[r] {
            Ok(p) => run_prepared(cfg, p, k),
            Err(e) => Err(with_provenance(
                Error::InvalidInstance(e.to_string()),
                r,
                cfg.instance_seed(r),
                cfg.anneal.times[k],
            )),
        })
        .collect();

    let mut summary = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    let mut nrep_rows = Vec::new();
    for (&(r, k), outcome) in jobs.iter().zip(&outcomes) {
        let total_time = cfg.anneal.times[k];
        summary.push(summary_row(r, cfg.instance_seed(r), total_time, outcome));
        match outcome {
            Ok(rec) => nrep_rows.push(NrepRow {
                source: "tvmc".into(),
                realization: r,
                instance_seed: rec.instance_seed,
                anneal_param: total_time,
                p_success: rec.result.p_success.map(|e| e.mean),
                p_success_err: rec.result.p_success.and_then(|e| e.error),
                n_rep: rec.result.n_rep,
            }),
            Err(e) => failures.push(e.to_string()),
        }
    }
    write_rows(&cfg.output_dir.join("summary.csv"), &summary)?;
    if cfg.oracle.ground_state {
        write_rows(&cfg.output_dir.join("nrep_tvmc.csv"), &nrep_rows)?;
    }
    let mut excluded = serde_json::Map::new();
    for (k, &total_time) in cfg.anneal.times.iter().enumerate() {
        let runs: Vec<&RunRecord> =
            jobs.iter().zip(&outcomes).filter(|((_, kk), _)| *kk == k).filter_map(|(_, o)| o.as_ref().ok()).collect();
        if runs.is_empty() {
            continue;
        }
        write_mean_trajectory(&cfg.output_dir.join(format!("mean_trajectory_T{total_time}.csv")), &runs)?;
        let kinks: Vec<f64> = runs.iter().filter_map(|r| r.result.kink_density_final.map(|e| e.mean)).collect();
        let ps: Vec<f64> = runs.iter().filter_map(|r| r.result.p_success.map(|e| e.mean)).collect();
        let nrep: Vec<f64> = runs.iter().filter_map(|r| r.result.n_rep).collect();
        for (name, label, values) in
            [("log_kink", "log_kink_density", &kinks), ("log_p_success", "log_p_success", &ps), ("log_n_rep", "log_n_rep", &nrep)]
        {
            let path = cfg.output_dir.join(format!("kde_{name}_T{total_time}.csv"));
            if let Some(dropped) = write_log_kde(&path, label, values)? {
                excluded.insert(format!("{name}_T{total_time}"), json!(dropped));
            }
        }
    }
    // values without a finite logarithm, reported instead of silently dropped
    fs::write(cfg.output_dir.join("kde_excluded.json"), serde_json::to_string_pretty(&Value::Object(excluded))? + "\n")?;
    Ok(EnsembleReport { summary, failures })
}

/// Writes one instance file per realization.
pub fn generate_instances(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let dir = cfg.output_dir.join("instances");
    fs::create_dir_all(&dir)?;
    (0..cfg.ensemble.realizations)
        .map(|r| {
            let inst = cfg.model.instance(cfg.instance_seed(r))?;
            let path = dir.join(format!("instance_r{r:04}.json"));
            inst.save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Classical annealing baseline: per-instance SA success frequency over
/// `sa.repeats` seeds and the implied repetition count.
pub fn run_sa_baseline(cfg: &ExperimentConfig, config_text: Option<&str>) -> Result<(Vec<NrepRow>, Vec<String>)> {
    cfg.validate()?;
    write_config_files(cfg, config_text)?;
    let outcomes: Vec<Result<NrepRow>> = (0..cfg.ensemble.realizations)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.instance_seed(r);
            let run = || -> Result<NrepRow> {
                let inst = cfg.model.instance(seed)?;
                let ground = brute_force_ground(&inst)?;
                let p = sa_success_frequency(
                    &inst,
                    cfg.sa.sweeps,
                    cfg.sa.betas(),
                    ground.e_min,
                    cfg.sa.repeats,
                    child_seed(cfg.ensemble.base_seed, &[r as u64, SA_STREAM]),
                )?;
                Ok(NrepRow {
                    source: "sa".into(),
                    realization: r,
                    instance_seed: seed,
                    anneal_param: cfg.sa.sweeps as f64,
                    p_success: Some(p),
                    p_success_err: Some((p * (1.0 - p) / cfg.sa.repeats as f64).sqrt()),
                    n_rep: Some(n_repetitions(p, cfg.ensemble.p0)?),
                })
            };
            run().map_err(|e| with_provenance(e, r, seed, cfg.sa.sweeps as f64))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(e.to_string()),
        }
    }
    write_rows(&cfg.output_dir.join("nrep_sa.csv"), &rows)?;
    let nrep: Vec<f64> = rows.iter().filter_map(|r| r.n_rep).collect();
    write_log_kde(&cfg.output_dir.join("kde_log_n_rep_sa.csv"), "log_n_rep", &nrep)?;
    Ok((rows, failures))
}

/// Reference runs without t-VMC: ground state, dense dynamics for small
/// systems and free fermions for chains, on the t-VMC output grid.
pub fn run_oracle(cfg: &ExperimentConfig, realization: usize, time_index: usize) -> Result<PathBuf> {
    cfg.validate()?;
    let total_time = *cfg
        .anneal
        .times
        .get(time_index)
        .ok_or_else(|| Error::Config(format!("no annealing time with index {time_index}")))?;
    let instance_seed = cfg.instance_seed(realization);
    let run = || -> Result<PathBuf> {
        let inst = cfg.model.instance(instance_seed)?;
        let n = inst.n_sites();
        let ground = if cfg.oracle.ground_state { Some(brute_force_ground(&inst)?) } else { None };
        let e_min = ground.as_ref().map(|g| g.e_min);
        let schedule = Schedule { total_time, form: cfg.anneal.schedule };
        let dt = cfg.tvmc.dt.unwrap_or(total_time / cfg.tvmc.steps as f64);
        let stride = cfg.tvmc.output_stride;
        let mut rows = Vec::new();
        if n <= MAX_DENSE_SITES {
            let exact = exact_propagate(&inst, &schedule, dt, stride, e_min)?;
            let e0 = e_min.map(|e| e / n as f64);
            rows.extend(exact.points.iter().map(|p| TrajectoryRow::from_exact(p, total_time, e0)));
        }
        if inst.is_chain() {
            let ff = free_fermion_propagate(&inst, &schedule, dt, stride)?;
            rows.extend(ff.iter().map(|p| TrajectoryRow::from_fermion(p, total_time)));
        }
        if rows.is_empty() && ground.is_none() {
            return Err(Error::Resource(format!("no exact dynamics available for {n} sites off a chain")));
        }
        let dir = cfg.output_dir.join(format!("oracle_r{realization:04}_T{total_time}"));
        fs::create_dir_all(&dir)?;
        if !rows.is_empty() {
            write_rows(&dir.join("trajectory.csv"), &rows)?;
        }
        if let Some(g) = &ground {
            fs::write(dir.join("ground.json"), serde_json::to_string_pretty(g)? + "\n")?;
        }
        inst.save(&dir.join("instance.json"))?;
        fs::write(dir.join("resolved_config.toml"), cfg.to_toml()?)?;
        Ok(dir)
    };
    run().map_err(|e| with_provenance(e, realization, instance_seed, total_time))
}
