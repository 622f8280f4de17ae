//! Time-dependent variational Monte Carlo along an annealing schedule.
//!
//! Each stage estimates the metric `S_kk' = <O_k O_k'>_c` and the force
//! `f_k = <E_loc O_k>_c`, solves `S α̇ = -i f` and advances the Jastrow
//! parameters with an explicit two-stage Heun step.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::ProblemInstance;
use crate::jastrow::{JastrowParams, ParamSupport, ParamTopology};
use crate::sampler::{exact_stats, Estimate, Probes, SampleStats, SamplingPlan, Walkers};

/// Largest system integrated with exact enumeration instead of sampling.
pub const MAX_EXACT_TVMC_SITES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleForm {
    #[default]
    Linear,
}

/// Transverse-field schedule `Γ(t)` on `[0, T]` with `Γ(0) = 1`, `Γ(T) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub total_time: f64,
    pub form: ScheduleForm,
}

impl Schedule {
    pub fn linear(total_time: f64) -> Result<Self> {
        if !(total_time > 0.0 && total_time.is_finite()) {
            return Err(Error::InvalidArgument(format!("annealing time must be positive, got {total_time}")));
        }
        Ok(Self { total_time, form: ScheduleForm::Linear })
    }

    pub fn gamma(&self, t: f64) -> f64 {
        match self.form {
            ScheduleForm::Linear => (1.0 - t / self.total_time).clamp(0.0, 1.0),
        }
    }

    /// Step times `0 = t_0 < ... < t_n = T` with spacing `dt`; the last step
    /// is shortened so the grid ends exactly on `T`.
    pub fn time_grid(&self, dt: f64) -> Result<Vec<f64>> {
        if dt.is_nan() || dt <= 0.0 || dt > self.total_time * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must lie in (0, T]")));
        }
        let n = ((self.total_time / dt) - 1e-9).ceil().max(1.0) as usize;
        let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        grid.push(self.total_time);
        Ok(grid)
    }
}

/// The t-VMC linear system at one instant.
#[derive(Debug, Clone)]
pub struct TvmcLinearSystem {
    /// Connected `<O_k O_k'>`, real symmetric.
    pub s_matrix: DMatrix<f64>,
    /// Connected `<E_loc O_k>`.
    pub force: DVector<Complex64>,
    /// `1/sqrt(n_samples)` for sampled estimates, zero for exact ones.
    pub mc_error_scale: f64,
    /// Set when fewer samples than parameters went into the estimate.
    pub undersampled: bool,
}

/// Connected correlators from accumulated moments.
pub fn estimate_system(stats: &SampleStats) -> Result<TvmcLinearSystem> {
    if stats.is_empty() {
        return Err(Error::NoSamples);
    }
    let mean_o = stats.mean_o();
    let mut s_matrix = stats.mean_oo();
    s_matrix.ger(-1.0, &mean_o, &mean_o, 1.0);
    let mean_e = stats.mean_eloc();
    let force = stats.mean_eloc_o() - mean_o.map(|o| mean_e * o);
    let mc_error_scale = if stats.is_exact() { 0.0 } else { 1.0 / (stats.n_samples() as f64).sqrt() };
    Ok(TvmcLinearSystem {
        s_matrix,
        force,
        mc_error_scale,
        undersampled: (stats.n_samples() as usize) < stats.n_params(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationMode {
    /// Pseudo-inverse discarding modes with `σ_k < value · σ_max`.
    SvdCutoff,
    /// `(S + value · diag(S))⁻¹`.
    DiagonalShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub mode: RegularizationMode,
    pub value: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self { mode: RegularizationMode::SvdCutoff, value: 1e-6 }
    }
}

/// Solution of one linear system plus the spectrum bounds of `S`.
#[derive(Debug, Clone)]
pub struct ParameterDerivative {
    pub alpha_dot: DVector<Complex64>,
    pub s_min: f64,
    pub s_max: f64,
    /// Modes kept by the pseudo-inverse (all of them for a diagonal shift).
    pub kept_modes: usize,
}

/// Relative tolerance on negative eigenvalues of `S`, in units of
/// `trace(S)/K`.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// `α̇ = -i S⁺ f`, with the real and imaginary parts of `f` solved against
/// the same real metric.
pub fn solve_parameter_derivative(sys: &TvmcLinearSystem, reg: Regularization) -> Result<ParameterDerivative> {
    if !(reg.value >= 0.0 && reg.value.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization value {} must be >= 0", reg.value)));
    }
    let k = sys.s_matrix.nrows();
    if k == 0 {
        return Ok(ParameterDerivative { alpha_dot: DVector::zeros(0), s_min: 0.0, s_max: 0.0, kept_modes: 0 });
    }
    let degenerate = |reason: String| Error::DegenerateMetric { t: f64::NAN, reason };
    let trace = sys.s_matrix.trace();
    let scale = sys.s_matrix.amax();
    if scale.is_nan() || scale <= 1e-300 || !trace.is_finite() {
        return Err(degenerate(format!("metric is numerically zero (max |S| = {scale:e})")));
    }
    let eig = SymmetricEigen::new(sys.s_matrix.clone());
    let s_min = eig.eigenvalues.min();
    let s_max = eig.eigenvalues.max();
    if s_min < -PSD_TOLERANCE * trace / k as f64 {
        return Err(degenerate(format!("metric not positive semidefinite: s_min = {s_min:e}, trace = {trace:e}")));
    }
    let f_re = sys.force.map(|z| z.re);
    let f_im = sys.force.map(|z| z.im);
    let (x_re, x_im, kept) = match reg.mode {
        RegularizationMode::SvdCutoff => {
            let sigma_max = eig.eigenvalues.amax();
            let cutoff = reg.value * sigma_max;
            let inv: DVector<f64> = eig.eigenvalues.map(|l| {
                if l.abs() > cutoff && l.abs() > 0.0 && l.abs() >= 1e-300 {
                    1.0 / l
                } else {
                    0.0
                }
            });
            let kept = inv.iter().filter(|&&x| x != 0.0).count();
            let q = &eig.eigenvectors;
            let apply = |b: &DVector<f64>| -> DVector<f64> {
                let mut coeffs = q.tr_mul(b);
                coeffs.component_mul_assign(&inv);
                q * coeffs
            };
            (apply(&f_re), apply(&f_im), kept)
        }
        RegularizationMode::DiagonalShift => {
            let mut shifted = sys.s_matrix.clone();
            for i in 0..k {
                shifted[(i, i)] *= 1.0 + reg.value;
            }
            let chol = shifted
                .cholesky()
                .ok_or_else(|| degenerate("shifted metric is not positive definite".into()))?;
            (chol.solve(&f_re), chol.solve(&f_im), k)
        }
    };
    // -i (x_re + i x_im) = x_im - i x_re
    let alpha_dot = DVector::from_iterator(k, x_re.iter().zip(x_im.iter()).map(|(&r, &i)| Complex64::new(i, -r)));
    Ok(ParameterDerivative { alpha_dot, s_min, s_max, kept_modes: kept })
}

/// `‖f‖₂ / sqrt(K)`: vanishes when the state is stationary within the
/// variational manifold.
pub fn vap_residual(sys: &TvmcLinearSystem) -> f64 {
    let k = sys.force.len();
    if k == 0 {
        return 0.0;
    }
    (sys.force.iter().map(|z| z.norm_sqr()).sum::<f64>() / k as f64).sqrt()
}

/// How expectation values are obtained at each stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingMode {
    Sampled(SamplingPlan),
    /// Exact sums over all `2^N` configurations.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvmcConfig {
    pub dt: f64,
    pub sampling: SamplingMode,
    pub regularization: Regularization,
    /// Record observables every `output_stride` steps (and at `T`).
    pub output_stride: usize,
    pub param_support: ParamSupport,
    pub seed: u64,
    /// Ground energy of `H_p`, enabling residual energies and `P_s`.
    pub e_min: Option<f64>,
    /// Keep a parameter snapshot at every output time.
    pub keep_snapshots: bool,
}

impl TvmcConfig {
    /// `dt = T/1000`, default sampling plan, SVD cutoff `1e-6`.
    pub fn defaults(inst: &ProblemInstance, schedule: &Schedule) -> Self {
        Self {
            dt: schedule.total_time / 1000.0,
            sampling: SamplingMode::Sampled(SamplingPlan::default_for(inst.n_sites())),
            regularization: Regularization::default(),
            output_stride: 10,
            param_support: ParamSupport::GraphEdges,
            seed: 0,
            e_min: None,
            keep_snapshots: false,
        }
    }
}

/// Observables at one output time. Energies are per site.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub t: f64,
    pub s: f64,
    pub gamma: f64,
    pub energy: Estimate,
    pub e_residual: Option<Estimate>,
    pub kink_density: Option<Estimate>,
    pub p_success: Option<Estimate>,
    pub vap_residual: f64,
    pub acceptance_rate: Option<f64>,
    pub s_min: f64,
    pub s_max: f64,
}

/// Per-stage sampler diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct StageDiagnostics {
    pub step: usize,
    pub stage: usize,
    pub t: f64,
    pub gamma: f64,
    pub acceptance_rate: Option<f64>,
    pub eloc_autocorrelation: Option<f64>,
    pub chain_samples: Vec<u64>,
    pub kept_modes: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub schedule: Schedule,
    pub n_sites: usize,
    pub points: Vec<TrajectoryPoint>,
    /// `(t, params)` at every output time when snapshots are enabled.
    pub snapshots: Vec<(f64, JastrowParams)>,
    pub diagnostics: Vec<StageDiagnostics>,
    pub final_params: JastrowParams,
    /// Statistics at `t = T`, `Γ = 0`.
    pub final_stats: SampleStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn final_point(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory records t = T")
    }
}

/// Source of expectation values for one integration.
enum Estimator {
    Sampled { walkers: Walkers, plan: SamplingPlan },
    Exact,
}

impl Estimator {
    fn stats(&mut self, params: &JastrowParams, inst: &ProblemInstance, gamma: f64, probes: Probes) -> Result<SampleStats> {
        match self {
            Estimator::Sampled { walkers, plan } => walkers.sample(params, inst, gamma, plan, probes),
            Estimator::Exact => exact_stats(params, inst, gamma, probes),
        }
    }
}

struct StageResult {
    stats: SampleStats,
    system: TvmcLinearSystem,
    derivative: ParameterDerivative,
}

fn evaluate(
    estimator: &mut Estimator,
    params: &JastrowParams,
    inst: &ProblemInstance,
    gamma: f64,
    probes: Probes,
    reg: Regularization,
    t: f64,
) -> Result<StageResult> {
    let stats = estimator.stats(params, inst, gamma, probes)?;
    let system = estimate_system(&stats)?;
    let derivative = solve_parameter_derivative(&system, reg).map_err(|e| match e {
        Error::DegenerateMetric { reason, .. } => Error::DegenerateMetric { t, reason },
        other => other,
    })?;
    Ok(StageResult { stats, system, derivative })
}

fn point_from(
    step: usize,
    t: f64,
    schedule: &Schedule,
    n_sites: usize,
    e_min: Option<f64>,
    stage: &StageResult,
) -> TrajectoryPoint {
    let n = n_sites as f64;
    let per_site = |e: Estimate| Estimate { mean: e.mean / n, error: e.error.map(|x| x / n) };
    let energy = per_site(stage.stats.energy());
    let e_residual = e_min.map(|e0| {
        let ecl = per_site(stage.stats.classical_energy());
        Estimate { mean: ecl.mean - e0 / n, error: ecl.error }
    });
    TrajectoryPoint {
        step,
        t,
        s: t / schedule.total_time,
        gamma: schedule.gamma(t),
        energy,
        e_residual,
        kink_density: stage.stats.kink_density(),
        p_success: stage.stats.ground_fraction(),
        vap_residual: vap_residual(&stage.system),
        acceptance_rate: stage.stats.acceptance_rate(),
        s_min: stage.derivative.s_min,
        s_max: stage.derivative.s_max,
    }
}

fn diagnostics_from(step: usize, stage_no: usize, t: f64, gamma: f64, stage: &StageResult) -> StageDiagnostics {
    StageDiagnostics {
        step,
        stage: stage_no,
        t,
        gamma,
        acceptance_rate: stage.stats.acceptance_rate(),
        eloc_autocorrelation: stage.stats.energy_autocorrelation(),
        chain_samples: stage.stats.chain_samples().to_vec(),
        kept_modes: stage.derivative.kept_modes,
    }
}

fn axpy(params: &JastrowParams, h: f64, direction: &DVector<Complex64>) -> JastrowParams {
    let mut out = params.clone();
    for (v, d) in out.values_mut().iter_mut().zip(direction.iter()) {
        *v += d * h;
    }
    out
}

/// Integrates the t-VMC equations from the uniform superposition at `t = 0`
/// to `t = T`.
pub fn integrate_annealing(inst: &ProblemInstance, schedule: &Schedule, cfg: &TvmcConfig) -> Result<Trajectory> {
    let grid = schedule.time_grid(cfg.dt)?;
    if cfg.output_stride == 0 {
        return Err(Error::InvalidArgument("output_stride must be positive".into()));
    }
    let topology = Arc::new(ParamTopology::for_instance(inst, cfg.param_support));
    let mut params = JastrowParams::zeros(topology);
    let mut estimator = match cfg.sampling {
        SamplingMode::Sampled(plan) => {
            plan.validate()?;
            Estimator::Sampled { walkers: Walkers::new(&params, plan.n_chains, cfg.seed), plan }
        }
        SamplingMode::Exact => {
            if inst.n_sites() > MAX_EXACT_TVMC_SITES {
                return Err(Error::Resource(format!(
                    "exact-summation t-VMC is limited to {MAX_EXACT_TVMC_SITES} sites, got {}",
                    inst.n_sites()
                )));
            }
            Estimator::Exact
        }
    };
    let probes = Probes::for_instance(inst, cfg.e_min);
    let n_steps = grid.len() - 1;
    let mut points = Vec::new();
    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::new();

    for step in 0..n_steps {
        let (t0, t1) = (grid[step], grid[step + 1]);
        let h = t1 - t0;
        let first = evaluate(&mut estimator, &params, inst, schedule.gamma(t0), probes, cfg.regularization, t0)?;
        diagnostics.push(diagnostics_from(step, 1, t0, schedule.gamma(t0), &first));
        if step % cfg.output_stride == 0 {
            points.push(point_from(step, t0, schedule, inst.n_sites(), cfg.e_min, &first));
            if cfg.keep_snapshots {
                snapshots.push((t0, params.clone()));
            }
        }
        let predictor = axpy(&params, h, &first.derivative.alpha_dot);
        if !predictor.is_finite() {
            return Err(Error::NonFinite { t: t1, step, last_params: params.to_snapshot_json()? });
        }
        let second = evaluate(&mut estimator, &predictor, inst, schedule.gamma(t1), probes, cfg.regularization, t1)?;
        diagnostics.push(diagnostics_from(step, 2, t1, schedule.gamma(t1), &second));
        let slope = (&first.derivative.alpha_dot + &second.derivative.alpha_dot) * Complex64::new(0.5, 0.0);
        let next = axpy(&params, h, &slope);
        if !next.is_finite() {
            return Err(Error::NonFinite { t: t1, step, last_params: params.to_snapshot_json()? });
        }
        params = next;
    }

    let t_final = schedule.total_time;
    let last = evaluate(&mut estimator, &params, inst, schedule.gamma(t_final), probes, cfg.regularization, t_final)?;
    diagnostics.push(diagnostics_from(n_steps, 1, t_final, 0.0, &last));
    points.push(point_from(n_steps, t_final, schedule, inst.n_sites(), cfg.e_min, &last));
    if cfg.keep_snapshots {
        snapshots.push((t_final, params.clone()));
    }
    Ok(Trajectory {
        schedule: *schedule,
        n_sites: inst.n_sites(),
        points,
        snapshots,
        diagnostics,
        final_params: params,
        final_stats: last.stats,
    })
}
