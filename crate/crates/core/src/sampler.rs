//! Metropolis sampling of `|Ψ(σ)|²` and accumulation of the moments that
//! enter the equations of motion.
//!
//! Statistics are kept as raw weighted sums so that merging two
//! [`SampleStats`] is exactly the same as accumulating the union of their
//! samples. Sampled runs use unit weights; exact enumeration weights every
//! configuration by its normalized probability.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instances::{ProblemInstance, SpinConfig};
use crate::jastrow::{JastrowParams, ParamTopology};
use crate::seed::stream_rng;

/// Largest system for which configurations are enumerated exhaustively.
pub const MAX_EXACT_SITES: usize = 20;

const GEMM_BATCH: usize = 64;
const BINS_PER_CHAIN: u64 = 16;

/// Tolerance used to decide whether a classical energy attains `E_min`.
pub fn hits_ground(energy: f64, e_min: f64) -> bool {
    (energy - e_min).abs() <= 1e-9 * (1.0 + e_min.abs())
}

/// Per-configuration quantities recorded next to the t-VMC moments.
#[derive(Debug, Clone, Copy, Default)]
pub struct Probes {
    /// Record the kink density `Σ_i (1 - σ_i σ_{i+1}) / (2N)`; chains only.
    pub kinks: bool,
    /// Record hits of the classical ground energy.
    pub e_min: Option<f64>,
}

impl Probes {
    pub fn for_instance(inst: &ProblemInstance, e_min: Option<f64>) -> Self {
        Self { kinks: inst.is_chain(), e_min }
    }
}

/// Sampling budget for one estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplingPlan {
    pub n_chains: usize,
    pub burn_in_sweeps: usize,
    /// Total number of recorded samples over all chains.
    pub n_samples: usize,
    pub thin_sweeps: usize,
}

impl SamplingPlan {
    /// One chain per worker, `10 N` burn-in sweeps, one sweep between
    /// samples and 10 000 samples.
    pub fn default_for(n_sites: usize) -> Self {
        Self {
            n_chains: rayon::current_num_threads().max(1),
            burn_in_sweeps: 10 * n_sites,
            n_samples: 10_000,
            thin_sweeps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.n_samples == 0 || self.thin_sweeps == 0 {
            return Err(Error::InvalidArgument(format!("sampling plan values must be positive: {self:?}")));
        }
        if self.n_samples < self.n_chains {
            return Err(Error::InvalidArgument("fewer samples than chains".into()));
        }
        Ok(())
    }

    fn samples_for_chain(&self, chain: usize) -> usize {
        self.n_samples / self.n_chains + usize::from(chain < self.n_samples % self.n_chains)
    }
}

/// Equal-size bins of a scalar series, for autocorrelation-aware errors.
#[derive(Debug, Clone, Default)]
struct Binned {
    bin_means: Vec<f64>,
    partial_sum: f64,
    partial_len: u64,
    bin_size: u64,
}

impl Binned {
    fn with_bin_size(bin_size: u64) -> Self {
        Self { bin_size: bin_size.max(1), ..Self::default() }
    }

    fn push(&mut self, x: f64) {
        self.partial_sum += x;
        self.partial_len += 1;
        if self.partial_len == self.bin_size {
            self.bin_means.push(self.partial_sum / self.bin_size as f64);
            self.partial_sum = 0.0;
            self.partial_len = 0;
        }
    }

    fn merge(&mut self, other: &Binned) {
        self.bin_means.extend_from_slice(&other.bin_means);
    }

    fn std_error(&self) -> Option<f64> {
        let m = self.bin_means.len();
        if m < 2 {
            return None;
        }
        let mean = self.bin_means.iter().sum::<f64>() / m as f64;
        let var = self.bin_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        Some((var / m as f64).sqrt())
    }
}

/// Accumulated moments of one or more sample sets.
#[derive(Debug, Clone)]
pub struct SampleStats {
    n_params: usize,
    n_samples: u64,
    weight: f64,
    exact: bool,
    sum_o: Vec<f64>,
    /// Row-major `K x K`.
    sum_oo: Vec<f64>,
    sum_eloc: Complex64,
    sum_eloc_o: Vec<Complex64>,
    sum_eloc_sq: Complex64,
    sum_eloc_abs2: f64,
    sum_eloc_re2: f64,
    sum_classical: f64,
    sum_classical_sq: f64,
    sum_kinks: f64,
    sum_kinks_sq: f64,
    ground_hits: f64,
    has_kinks: bool,
    has_ground: bool,
    energy_bins: Binned,
    classical_bins: Binned,
    kink_bins: Binned,
    hit_bins: Binned,
    proposed: u64,
    accepted: u64,
    chain_samples: Vec<u64>,
}

/// Mean and standard error of a scalar estimate. The error is zero for
/// exact enumeration and `None` when too few bins were collected.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub error: Option<f64>,
}

impl SampleStats {
    pub fn empty(n_params: usize) -> Self {
        Self {
            n_params,
            n_samples: 0,
            weight: 0.0,
            exact: false,
            sum_o: vec![0.0; n_params],
            sum_oo: vec![0.0; n_params * n_params],
            sum_eloc: Complex64::new(0.0, 0.0),
            sum_eloc_o: vec![Complex64::new(0.0, 0.0); n_params],
            sum_eloc_sq: Complex64::new(0.0, 0.0),
            sum_eloc_abs2: 0.0,
            sum_eloc_re2: 0.0,
            sum_classical: 0.0,
            sum_classical_sq: 0.0,
            sum_kinks: 0.0,
            sum_kinks_sq: 0.0,
            ground_hits: 0.0,
            has_kinks: false,
            has_ground: false,
            energy_bins: Binned::default(),
            classical_bins: Binned::default(),
            kink_bins: Binned::default(),
            hit_bins: Binned::default(),
            proposed: 0,
            accepted: 0,
            chain_samples: Vec::new(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_samples(&self) -> u64 {
        self.n_samples
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0 || self.weight <= 0.0
    }

    pub fn mean_o(&self) -> DVector<f64> {
        DVector::from_iterator(self.n_params, self.sum_o.iter().map(|s| s / self.weight))
    }

    /// `<O_k O_k'>`, symmetrized.
    pub fn mean_oo(&self) -> DMatrix<f64> {
        let k = self.n_params;
        DMatrix::from_fn(k, k, |a, b| 0.5 * (self.sum_oo[a * k + b] + self.sum_oo[b * k + a]) / self.weight)
    }

    pub fn mean_eloc(&self) -> Complex64 {
        self.sum_eloc / self.weight
    }

    pub fn mean_eloc_o(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.n_params, self.sum_eloc_o.iter().map(|s| s / self.weight))
    }

    /// `<E_loc²>`.
    pub fn mean_eloc_sq(&self) -> Complex64 {
        self.sum_eloc_sq / self.weight
    }

    /// `<|E_loc|²>`.
    pub fn mean_eloc_abs2(&self) -> f64 {
        self.sum_eloc_abs2 / self.weight
    }

    fn estimate(&self, sum: f64, bins: &Binned) -> Estimate {
        let mean = sum / self.weight;
        let error = if self.exact { Some(0.0) } else { bins.std_error() };
        Estimate { mean, error }
    }

    /// Re `<E_loc>`.
    pub fn energy(&self) -> Estimate {
        self.estimate(self.sum_eloc.re, &self.energy_bins)
    }

    /// `<H_p>`, the classical energy of the sampled configurations.
    pub fn classical_energy(&self) -> Estimate {
        self.estimate(self.sum_classical, &self.classical_bins)
    }

    pub fn kink_density(&self) -> Option<Estimate> {
        self.has_kinks.then(|| self.estimate(self.sum_kinks, &self.kink_bins))
    }

    /// Weight of configurations attaining `E_min`.
    pub fn ground_fraction(&self) -> Option<Estimate> {
        if !self.has_ground {
            return None;
        }
        let mut est = self.estimate(self.ground_hits, &self.hit_bins);
        if !self.exact {
            // binomial floor: bins of identical hit fractions give zero spread
            let p = est.mean;
            let binomial = (p * (1.0 - p) / self.n_samples as f64).sqrt();
            est.error = Some(est.error.unwrap_or(0.0).max(binomial));
        }
        Some(est)
    }

    /// Sample variance of Re `E_loc`.
    pub fn energy_variance(&self) -> f64 {
        let mean = self.sum_eloc.re / self.weight;
        (self.sum_eloc_re2 / self.weight - mean * mean).max(0.0)
    }

    /// Integrated autocorrelation time of Re `E_loc` in units of recorded
    /// samples, from the ratio of binned to naive variance.
    pub fn energy_autocorrelation(&self) -> Option<f64> {
        if self.exact {
            return None;
        }
        let se = self.energy_bins.std_error()?;
        let var = self.energy_variance();
        if var <= 0.0 {
            return Some(0.5);
        }
        Some((0.5 * self.n_samples as f64 * se * se / var).max(0.5))
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    pub fn chain_samples(&self) -> &[u64] {
        &self.chain_samples
    }

    /// Adds `other` into `self`; equivalent to accumulating both sample sets.
    pub fn merge(&mut self, other: &SampleStats) -> Result<()> {
        if self.n_params != other.n_params {
            return Err(Error::Dimension { expected: self.n_params, got: other.n_params });
        }
        if self.n_samples == 0 {
            self.exact = other.exact;
            self.has_kinks = other.has_kinks;
            self.has_ground = other.has_ground;
        }
        self.n_samples += other.n_samples;
        self.weight += other.weight;
        self.exact &= other.exact;
        for (a, b) in self.sum_o.iter_mut().zip(&other.sum_o) {
            *a += b;
        }
        for (a, b) in self.sum_oo.iter_mut().zip(&other.sum_oo) {
            *a += b;
        }
        for (a, b) in self.sum_eloc_o.iter_mut().zip(&other.sum_eloc_o) {
            *a += b;
        }
        self.sum_eloc += other.sum_eloc;
        self.sum_eloc_sq += other.sum_eloc_sq;
        self.sum_eloc_abs2 += other.sum_eloc_abs2;
        self.sum_eloc_re2 += other.sum_eloc_re2;
        self.sum_classical += other.sum_classical;
        self.sum_classical_sq += other.sum_classical_sq;
        self.sum_kinks += other.sum_kinks;
        self.sum_kinks_sq += other.sum_kinks_sq;
        self.ground_hits += other.ground_hits;
        self.energy_bins.merge(&other.energy_bins);
        self.classical_bins.merge(&other.classical_bins);
        self.kink_bins.merge(&other.kink_bins);
        self.hit_bins.merge(&other.hit_bins);
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.chain_samples.extend_from_slice(&other.chain_samples);
        Ok(())
    }
}

/// Kink density of one configuration: `Σ_i (1 - σ_i σ_{i+1}) / (2N)` over
/// the open chain.
pub fn config_kinks(spins: &[i8]) -> f64 {
    let n = spins.len();
    let misaligned = spins.windows(2).filter(|w| w[0] != w[1]).count();
    // (1 - σσ) is 2 on a misaligned bond
    (2 * misaligned) as f64 / (2 * n) as f64
}

/// Streams samples into a [`SampleStats`], batching the `O Oᵀ` outer
/// products into matrix multiplications.
pub(crate) struct Accumulator<'a> {
    topology: &'a ParamTopology,
    probes: Probes,
    stats: SampleStats,
    rows: Vec<f64>,
    weighted_rows: Vec<f64>,
    fill: usize,
    weighted: bool,
}

impl<'a> Accumulator<'a> {
    pub(crate) fn new(topology: &'a ParamTopology, probes: Probes, bin_size: u64, weighted: bool) -> Self {
        let k = topology.n_params();
        let mut stats = SampleStats::empty(k);
        stats.exact = weighted;
        stats.has_kinks = probes.kinks;
        stats.has_ground = probes.e_min.is_some();
        stats.energy_bins = Binned::with_bin_size(bin_size);
        stats.classical_bins = Binned::with_bin_size(bin_size);
        stats.kink_bins = Binned::with_bin_size(bin_size);
        stats.hit_bins = Binned::with_bin_size(bin_size);
        Self {
            topology,
            probes,
            stats,
            rows: vec![0.0; GEMM_BATCH * k],
            weighted_rows: if weighted { vec![0.0; GEMM_BATCH * k] } else { Vec::new() },
            fill: 0,
            weighted,
        }
    }

    pub(crate) fn push(&mut self, spins: &[i8], eloc: Complex64, classical: f64, weight: f64) {
        let k = self.stats.n_params;
        let row = &mut self.rows[self.fill * k..(self.fill + 1) * k];
        self.topology.fill_o(spins, row);
        let s = &mut self.stats;
        let weloc = eloc * weight;
        for ((so, seo), &o) in s.sum_o.iter_mut().zip(s.sum_eloc_o.iter_mut()).zip(row.iter()) {
            *so += weight * o;
            *seo += weloc * o;
        }
        if self.weighted {
            let wrow = &mut self.weighted_rows[self.fill * k..(self.fill + 1) * k];
            for (w, &o) in wrow.iter_mut().zip(row.iter()) {
                *w = weight * o;
            }
        }
        s.n_samples += 1;
        s.weight += weight;
        s.sum_eloc += weloc;
        s.sum_eloc_sq += weloc * eloc;
        s.sum_eloc_abs2 += weight * eloc.norm_sqr();
        s.sum_eloc_re2 += weight * eloc.re * eloc.re;
        s.sum_classical += weight * classical;
        s.sum_classical_sq += weight * classical * classical;
        s.energy_bins.push(eloc.re);
        s.classical_bins.push(classical);
        if self.probes.kinks {
            let kd = config_kinks(spins);
            s.sum_kinks += weight * kd;
            s.sum_kinks_sq += weight * kd * kd;
            s.kink_bins.push(kd);
        }
        if let Some(e_min) = self.probes.e_min {
            let hit = if hits_ground(classical, e_min) { 1.0 } else { 0.0 };
            s.ground_hits += weight * hit;
            s.hit_bins.push(hit);
        }
        self.fill += 1;
        if self.fill == GEMM_BATCH {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.fill == 0 {
            return;
        }
        let k = self.stats.n_params;
        let left = if self.weighted { &self.weighted_rows } else { &self.rows };
        // sum_oo (K x K) += leftᵀ (K x B) · rows (B x K)
        unsafe {
            matrixmultiply::dgemm(
                k,
                self.fill,
                k,
                1.0,
                left.as_ptr(),
                1,
                k as isize,
                self.rows.as_ptr(),
                k as isize,
                1,
                1.0,
                self.stats.sum_oo.as_mut_ptr(),
                k as isize,
                1,
            );
        }
        self.fill = 0;
    }

    pub(crate) fn record_moves(&mut self, proposed: u64, accepted: u64) {
        self.stats.proposed += proposed;
        self.stats.accepted += accepted;
    }

    pub(crate) fn finish(mut self) -> SampleStats {
        self.flush();
        if !self.weighted {
            self.stats.chain_samples.push(self.stats.n_samples);
        }
        self.stats
    }
}

/// One Metropolis walker.
#[derive(Debug, Clone)]
pub struct ChainState {
    cfg: SpinConfig,
    /// Cached `2 Re log Ψ(cfg)`.
    log_weight: f64,
    rng: ChaCha8Rng,
    proposed: u64,
    accepted: u64,
}

impl ChainState {
    /// Uniformly random initial configuration.
    pub fn random(params: &JastrowParams, seed: u64, stream: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let n = params.n_sites();
        let cfg = SpinConfig::new((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
            .expect("spins are ±1");
        let log_weight = 2.0 * params.log_psi_spins(cfg.spins()).re;
        Self { cfg, log_weight, rng, proposed: 0, accepted: 0 }
    }

    pub fn with_config(params: &JastrowParams, cfg: SpinConfig, seed: u64, stream: u64) -> Result<Self> {
        if cfg.len() != params.n_sites() {
            return Err(Error::Dimension { expected: params.n_sites(), got: cfg.len() });
        }
        let log_weight = 2.0 * params.log_psi_spins(cfg.spins()).re;
        Ok(Self { cfg, log_weight, rng: stream_rng(seed, stream), proposed: 0, accepted: 0 })
    }

    pub fn config(&self) -> &SpinConfig {
        &self.cfg
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    /// Recomputes the cached weight after a parameter change.
    pub fn resync(&mut self, params: &JastrowParams) {
        self.log_weight = 2.0 * params.log_psi_spins(self.cfg.spins()).re;
    }

    fn take_counters(&mut self) -> (u64, u64) {
        let out = (self.proposed, self.accepted);
        self.proposed = 0;
        self.accepted = 0;
        out
    }
}

/// `n_sites` single-flip proposals at uniformly random sites, each accepted
/// with probability `min(1, |Ψ(σ')/Ψ(σ)|²)`.
pub fn metropolis_sweep(chain: &mut ChainState, params: &JastrowParams) {
    let n = chain.cfg.len();
    for _ in 0..n {
        let site = chain.rng.random_range(0..n);
        let delta = 2.0 * params.log_ratio_flip_re(chain.cfg.spins(), site);
        chain.proposed += 1;
        if delta >= 0.0 || chain.rng.random::<f64>() < delta.exp() {
            chain.cfg.flip(site);
            chain.log_weight += delta;
            chain.accepted += 1;
        }
    }
    #[cfg(debug_assertions)]
    {
        let fresh = 2.0 * params.log_psi_spins(chain.cfg.spins()).re;
        debug_assert!(
            (fresh - chain.log_weight).abs() <= 1e-10 * (1.0 + fresh.abs()),
            "cached log weight drifted: {} vs {}",
            chain.log_weight,
            fresh
        );
        chain.log_weight = fresh;
    }
}

fn run_chain(
    chain: &mut ChainState,
    params: &JastrowParams,
    inst: &ProblemInstance,
    gamma: f64,
    plan: &SamplingPlan,
    n_samples: usize,
    probes: Probes,
) -> SampleStats {
    chain.resync(params);
    for _ in 0..plan.burn_in_sweeps {
        metropolis_sweep(chain, params);
    }
    chain.take_counters();
    let bin_size = (n_samples as u64 / BINS_PER_CHAIN).max(1);
    let mut acc = Accumulator::new(params.topology(), probes, bin_size, false);
    for _ in 0..n_samples {
        for _ in 0..plan.thin_sweeps {
            metropolis_sweep(chain, params);
        }
        let spins = chain.cfg.spins();
        let classical = inst.energy_of(spins);
        let eloc = params.local_energy_spins(spins, gamma, classical);
        acc.push(spins, eloc, classical, 1.0);
    }
    let (p, a) = chain.take_counters();
    acc.record_moves(p, a);
    acc.finish()
}

fn check_dims(params: &JastrowParams, inst: &ProblemInstance, gamma: f64) -> Result<()> {
    if params.n_sites() != inst.n_sites() {
        return Err(Error::Dimension { expected: inst.n_sites(), got: params.n_sites() });
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// A set of persistent walkers. Between calls the walkers keep their
/// configurations, so each new estimate starts from the previous
/// distribution and still discards `burn_in_sweeps` sweeps.
#[derive(Debug, Clone)]
pub struct Walkers {
    chains: Vec<ChainState>,
}

impl Walkers {
    pub fn new(params: &JastrowParams, n_chains: usize, seed: u64) -> Self {
        Self { chains: (0..n_chains as u64).map(|c| ChainState::random(params, seed, c)).collect() }
    }

    pub fn chains(&self) -> &[ChainState] {
        &self.chains
    }

    pub fn sample(
        &mut self,
        params: &JastrowParams,
        inst: &ProblemInstance,
        gamma: f64,
        plan: &SamplingPlan,
        probes: Probes,
    ) -> Result<SampleStats> {
        check_dims(params, inst, gamma)?;
        plan.validate()?;
        if self.chains.len() != plan.n_chains {
            return Err(Error::InvalidArgument(format!(
                "plan asks for {} chains, walker set has {}",
                plan.n_chains,
                self.chains.len()
            )));
        }
        let parts: Vec<SampleStats> = self
            .chains
            .par_iter_mut()
            .enumerate()
            .map(|(c, chain)| run_chain(chain, params, inst, gamma, plan, plan.samples_for_chain(c), probes))
            .collect();
        let mut stats = SampleStats::empty(params.n_params());
        for part in &parts {
            stats.merge(part)?;
        }
        Ok(stats)
    }
}

/// Runs `plan.n_chains` independent chains from uniformly random starts;
/// chain `c` draws from stream `c` of `seed`.
pub fn sample_batch(
    params: &JastrowParams,
    inst: &ProblemInstance,
    gamma: f64,
    plan: &SamplingPlan,
    seed: u64,
    probes: Probes,
) -> Result<SampleStats> {
    plan.validate()?;
    Walkers::new(params, plan.n_chains, seed).sample(params, inst, gamma, plan, probes)
}

/// Moments under the exact distribution `|Ψ|²/Z`, by enumerating all `2^N`
/// configurations.
pub fn exact_stats(params: &JastrowParams, inst: &ProblemInstance, gamma: f64, probes: Probes) -> Result<SampleStats> {
    check_dims(params, inst, gamma)?;
    let n = inst.n_sites();
    if n > MAX_EXACT_SITES {
        return Err(Error::Resource(format!("exact enumeration capped at {MAX_EXACT_SITES} sites, got {n}")));
    }
    let count = 1u64 << n;
    let configs: Vec<SpinConfig> = (0..count).map(|b| SpinConfig::from_bits(b, n)).collect();
    let log_w: Vec<f64> = configs.iter().map(|c| 2.0 * params.log_psi_spins(c.spins()).re).collect();
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|lw| (lw - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    let mut acc = Accumulator::new(params.topology(), probes, count, true);
    for (cfg, w) in configs.iter().zip(&weights) {
        let spins = cfg.spins();
        let classical = inst.energy_of(spins);
        let eloc = params.local_energy_spins(spins, gamma, classical);
        acc.push(spins, eloc, classical, w / z);
    }
    Ok(acc.finish())
}
