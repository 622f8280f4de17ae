//! Physical observables and the statistics used to summarize ensembles.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::instances::{ProblemInstance, SpinConfig};
use crate::jastrow::JastrowParams;
use crate::oracles::GroundSolution;
use crate::sampler::{config_kinks, exact_stats, sample_batch, Estimate, Probes, SampleStats, SamplingPlan};
use crate::tvmc::Trajectory;

/// Re `<E_loc>/N`.
pub fn energy_density(stats: &SampleStats, n_sites: usize) -> Result<Estimate> {
    if stats.is_empty() {
        return Err(Error::NoSamples);
    }
    let e = stats.energy();
    let n = n_sites as f64;
    Ok(Estimate { mean: e.mean / n, error: e.error.map(|x| x / n) })
}

/// Mean kink density recorded in `stats`.
pub fn kink_density(stats: &SampleStats, inst: &ProblemInstance) -> Result<Estimate> {
    if !inst.is_chain() {
        return Err(Error::UnsupportedTopology("kink density needs an open chain".into()));
    }
    if stats.is_empty() {
        return Err(Error::NoSamples);
    }
    stats
        .kink_density()
        .ok_or_else(|| Error::InvalidArgument("samples were collected without the kink probe".into()))
}

/// `Σ_i (1 - σ_i σ_{i+1}) / (2N)` of one configuration.
pub fn kink_density_of(inst: &ProblemInstance, cfg: &SpinConfig) -> Result<f64> {
    if !inst.is_chain() {
        return Err(Error::UnsupportedTopology("kink density needs an open chain".into()));
    }
    if cfg.len() != inst.n_sites() {
        return Err(Error::Dimension { expected: inst.n_sites(), got: cfg.len() });
    }
    Ok(config_kinks(cfg.spins()))
}

/// `<H_p>/N - e0` with `e0` the ground energy per site.
pub fn residual_energy(stats: &SampleStats, e0: f64, n_sites: usize) -> Result<Estimate> {
    if stats.is_empty() {
        return Err(Error::NoSamples);
    }
    let ecl = stats.classical_energy();
    let n = n_sites as f64;
    Ok(Estimate { mean: ecl.mean / n - e0, error: ecl.error.map(|x| x / n) })
}

/// How the final-state success probability is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuccessMode {
    Sampled { plan: SamplingPlan, seed: u64 },
    /// Exact weight of the ground manifold under `|Ψ|²`.
    ExactSum,
}

/// Weight of `|Ψ|²` on configurations attaining the ground energy.
pub fn success_probability(
    params: &JastrowParams,
    inst: &ProblemInstance,
    ground: &GroundSolution,
    mode: SuccessMode,
) -> Result<Estimate> {
    if ground.ground_set.is_empty() {
        return Err(Error::OracleMissing);
    }
    let probes = Probes { kinks: false, e_min: Some(ground.e_min) };
    let stats = match mode {
        SuccessMode::Sampled { plan, seed } => sample_batch(params, inst, 0.0, &plan, seed, probes)?,
        SuccessMode::ExactSum => exact_stats(params, inst, 0.0, probes)?,
    };
    stats.ground_fraction().ok_or(Error::NoSamples)
}

/// Repetitions needed to observe the ground state at least once with
/// confidence `p0`: `log(1 - p0) / log(1 - p_s)`, at least one.
pub fn n_repetitions(p_s: f64, p0: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_s) {
        return Err(Error::InvalidArgument(format!("success probability {p_s} outside [0, 1]")));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {p0} outside (0, 1)")));
    }
    if p_s == 0.0 {
        return Ok(f64::INFINITY);
    }
    if p_s == 1.0 {
        return Ok(1.0);
    }
    Ok(((1.0 - p0).ln() / (1.0 - p_s).ln()).max(1.0))
}

/// Per-edge effective inverse temperatures at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaEff {
    pub t: f64,
    /// `(i, j, β_ij)`.
    pub values: Vec<(usize, usize, f64)>,
    /// Parameterized pairs without a coupling, for which no temperature is defined.
    pub excluded: Vec<(usize, usize)>,
}

impl BetaEff {
    pub fn betas(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.2).collect()
    }
}

/// `β_ij = -2 Re J_ij / V_ij`, the temperatures for which `|Ψ|²` restricted
/// to two-body terms is a Boltzmann weight of `H_p`.
pub fn effective_inverse_temperatures(params: &JastrowParams, inst: &ProblemInstance, t: f64) -> Result<BetaEff> {
    if params.n_sites() != inst.n_sites() {
        return Err(Error::Dimension { expected: inst.n_sites(), got: params.n_sites() });
    }
    let topology = params.topology();
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for (&(i, j), value) in topology.pairs().iter().zip(params.j2()) {
        let v = inst.neighbors(i).iter().find(|&&(k, _)| k == j).map(|&(_, v)| v).unwrap_or(0.0);
        if v == 0.0 {
            excluded.push((i, j));
        } else {
            values.push((i, j, -2.0 * value.re / v));
        }
    }
    Ok(BetaEff { t, values, excluded })
}

/// Linear-interpolation percentile, `q` in `[0, 100]`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("percentile of an empty set".into()));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Gaussian kernel density estimate on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Local maxima of the density rising above `rel_height` times its peak.
    pub fn mode_count(&self, rel_height: f64) -> usize {
        let peak = self.density.iter().cloned().fold(0.0, f64::max);
        let d = &self.density;
        (1..d.len().saturating_sub(1))
            .filter(|&k| d[k] > d[k - 1] && d[k] >= d[k + 1] && d[k] >= rel_height * peak)
            .count()
    }

    pub fn write_csv(&self, path: &std::path::Path, value_label: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([value_label, "density"])?;
        for (x, y) in self.grid.iter().zip(&self.density) {
            w.write_record([x.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Silverman's rule `0.9 min(σ, IQR/1.34) n^(-1/5)`, falling back to the
/// nonzero scale when the other vanishes.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let (mean, std) = mean_and_std(values);
    let iqr = percentile(values, 75.0).unwrap_or(0.0) - percentile(values, 25.0).unwrap_or(0.0);
    let spread = match (std > 0.0, iqr > 0.0) {
        (true, true) => std.min(iqr / 1.34),
        (true, false) => std,
        (false, true) => iqr / 1.34,
        (false, false) => 1e-3 * mean.abs().max(1.0),
    };
    0.9 * spread * (values.len() as f64).powf(-0.2)
}

/// Gaussian KDE of `values` on a grid covering four bandwidths beyond the
/// data, fine enough that the grid integral is within 1e-3 of one.
pub fn kde(values: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!("kernel density needs at least 2 values, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("kernel density of non-finite values".into()));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::InvalidArgument(format!("bandwidth {h} must be positive"))),
        None => silverman_bandwidth(values),
    };
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    let n_grid = (((hi - lo) / (h / 10.0)).ceil() as usize + 1).clamp(512, 20_001);
    let step = (hi - lo) / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid).map(|k| lo + k as f64 * step).collect();
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&x| values.iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>() * norm)
        .collect();
    Ok(DensityCurve { grid, density, bandwidth: h })
}

/// KDE of `ln x` over the positive entries; non-positive entries have no
/// logarithm and are counted separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDensity {
    pub curve: DensityCurve,
    pub n_nonpositive: usize,
}

pub fn kde_log_density(values: &[f64], bandwidth: Option<f64>) -> Result<LogDensity> {
    let logs: Vec<f64> = values.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).collect();
    let n_nonpositive = values.len() - logs.len();
    Ok(LogDensity { curve: kde(&logs, bandwidth)?, n_nonpositive })
}

/// Outcome of a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Shapiro-Francia normality test with Royston's log-normal approximation
/// of the null distribution; valid for `5 <= n <= 5000`.
pub fn shapiro_francia(values: &[f64]) -> Result<TestOutcome> {
    let n = values.len();
    if !(5..=5000).contains(&n) {
        return Err(Error::InvalidArgument(format!("normality test needs 5..=5000 values, got {n}")));
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let m: Vec<f64> = (1..=n).map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / (nf + 0.25))).collect();
    let mean = sorted.iter().sum::<f64>() / nf;
    let ss: f64 = sorted.iter().map(|x| (x - mean).powi(2)).sum();
    if ss == 0.0 {
        return Err(Error::InvalidArgument("normality test of constant values".into()));
    }
    let dot: f64 = m.iter().zip(&sorted).map(|(a, b)| a * b).sum();
    let mm: f64 = m.iter().map(|a| a * a).sum();
    let w = dot * dot / (mm * ss);
    let u = nf.ln();
    let v = u.ln();
    let mu = -1.2725 + 1.0521 * (v - u);
    let sigma = 1.0308 - 0.26758 * (v + 2.0 / u);
    let z = ((1.0 - w).ln() - mu) / sigma;
    Ok(TestOutcome { statistic: w, p_value: 1.0 - std_normal.cdf(z) })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS statistic of an empty sample".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / xs.len() as f64 - j as f64 / ys.len() as f64).abs());
    }
    Ok(d)
}

/// Summary of one annealing run at its final time.
#[derive(Debug, Clone, Serialize)]
pub struct AnnealResult {
    pub total_time: f64,
    #[serde(skip)]
    pub final_params: Option<JastrowParams>,
    pub e_final: Estimate,
    pub e_residual_final: Option<Estimate>,
    pub p_success: Option<Estimate>,
    pub n_rep: Option<f64>,
    pub kink_density_final: Option<Estimate>,
}

impl AnnealResult {
    /// Final-time observables of a trajectory; `p_success` overrides the
    /// trajectory's own ground-hit fraction when given.
    pub fn from_trajectory(traj: &Trajectory, p_success: Option<Estimate>, p0: f64) -> Result<Self> {
        let last = traj.final_point();
        let p_success = p_success.or(last.p_success);
        let n_rep = p_success.map(|p| n_repetitions(p.mean.clamp(0.0, 1.0), p0)).transpose()?;
        Ok(Self {
            total_time: traj.schedule.total_time,
            final_params: Some(traj.final_params.clone()),
            e_final: last.energy,
            e_residual_final: last.e_residual,
            p_success,
            n_rep,
            kink_density_final: last.kink_density,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_ri1d, gen_sk};
    use crate::jastrow::{ParamSupport, ParamTopology};
    use crate::oracles::brute_force_ground;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn zeros(inst: &ProblemInstance) -> JastrowParams {
        JastrowParams::zeros(Arc::new(ParamTopology::for_instance(inst, ParamSupport::GraphEdges)))
    }

    #[test]
    fn energy_density_of_uniform_state() {
        let inst = gen_sk(6, 0).unwrap();
        let stats = exact_stats(&zeros(&inst), &inst, 1.0, Probes::default()).unwrap();
        assert!((energy_density(&stats, 6).unwrap().mean + 1.0).abs() < 1e-14);
    }

    #[test]
    fn kink_density_of_configurations() {
        let inst = gen_ri1d(64, 0).unwrap();
        assert_eq!(kink_density_of(&inst, &SpinConfig::all_up(64)).unwrap(), 0.0);
        let afm = SpinConfig::new((0..64).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap();
        assert!((kink_density_of(&inst, &afm).unwrap() - 63.0 / 64.0).abs() < 1e-15);
        assert!(kink_density_of(&gen_sk(4, 0).unwrap(), &SpinConfig::all_up(4)).is_err());
    }

    #[test]
    fn uniform_kinks_and_single_edge_residual() {
        let inst = gen_ri1d(10, 0).unwrap();
        let stats = exact_stats(&zeros(&inst), &inst, 0.0, Probes::for_instance(&inst, None)).unwrap();
        assert!((kink_density(&stats, &inst).unwrap().mean - 9.0 / 20.0).abs() < 1e-12);
        let pair = ProblemInstance::custom(2, &[(0, 1, -1.0)]).unwrap();
        let s = exact_stats(&zeros(&pair), &pair, 0.0, Probes::default()).unwrap();
        assert!((residual_energy(&s, -0.5, 2).unwrap().mean - 0.5).abs() < 1e-14);
    }

    #[test]
    fn success_probability_of_uniform_state() {
        let inst = gen_sk(8, 5).unwrap();
        let g = brute_force_ground(&inst).unwrap();
        let p = success_probability(&zeros(&inst), &inst, &g, SuccessMode::ExactSum).unwrap();
        assert!((p.mean - g.degeneracy as f64 / 256.0).abs() < 1e-14);
        let empty = GroundSolution { ground_set: vec![], ..g };
        assert!(matches!(
            success_probability(&zeros(&inst), &inst, &empty, SuccessMode::ExactSum),
            Err(Error::OracleMissing)
        ));
    }

    #[test]
    fn boltzmann_parameters_concentrate_on_the_ground_state() {
        let inst = gen_sk(8, 2).unwrap();
        let g = brute_force_ground(&inst).unwrap();
        let mut p = zeros(&inst);
        let beta = 60.0;
        let n = inst.n_sites();
        for (k, e) in inst.edges().iter().enumerate() {
            p.values_mut()[n + k] = Complex64::new(-beta * e.v / 2.0, 0.0);
        }
        let ps = success_probability(&p, &inst, &g, SuccessMode::ExactSum).unwrap();
        assert!(ps.mean > 0.99, "{}", ps.mean);
        let beff = effective_inverse_temperatures(&p, &inst, 1.0).unwrap();
        assert!(beff.betas().iter().all(|b| (b - beta).abs() < 1e-12));
        assert!(effective_inverse_temperatures(&zeros(&inst), &inst, 0.0).unwrap().betas().iter().all(|b| *b == 0.0));
    }

    #[test]
    fn all_pairs_support_flags_uncoupled_pairs() {
        let inst = gen_ri1d(4, 0).unwrap();
        let p = JastrowParams::zeros(Arc::new(ParamTopology::for_instance(&inst, ParamSupport::AllPairs)));
        let beff = effective_inverse_temperatures(&p, &inst, 0.0).unwrap();
        assert_eq!(beff.values.len(), 3);
        assert_eq!(beff.excluded.len(), 3);
    }

    #[test]
    fn repetition_counts() {
        assert_eq!(n_repetitions(0.99, 0.99).unwrap(), 1.0);
        let r = n_repetitions(0.5, 0.99).unwrap();
        assert!((r - 0.01f64.ln() / 0.5f64.ln()).abs() < 1e-12);
        assert!((r - 6.6439).abs() < 1e-4);
        assert_eq!(n_repetitions(0.0, 0.99).unwrap(), f64::INFINITY);
        assert_eq!(n_repetitions(1.0, 0.99).unwrap(), 1.0);
        assert!(n_repetitions(1.5, 0.99).is_err());
        assert!(n_repetitions(0.5, 1.0).is_err());
    }

    #[test]
    fn kde_of_two_equal_values_is_a_sharp_peak() {
        let c = kde(&[2.0, 2.0], None).unwrap();
        let (k, _) = c.density.iter().enumerate().fold((0, 0.0), |a, (k, &d)| if d > a.1 { (k, d) } else { a });
        assert!((c.grid[k] - 2.0).abs() < c.bandwidth);
        assert!(c.bandwidth < 1e-2);
        assert_eq!(c.mode_count(0.05), 1);
        assert!((c.integral() - 1.0).abs() < 1e-3);
        assert!(kde(&[1.0], None).is_err());
    }

    #[test]
    fn kde_recovers_the_standard_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = kde(&xs, None).unwrap();
        let normal = Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::Continuous;
        let worst = c.grid.iter().zip(&c.density).map(|(x, d)| (d - normal.pdf(*x)).abs()).fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
        let sf = shapiro_francia(&xs[..2000]).unwrap();
        assert!(sf.p_value > 0.01);
    }

    #[test]
    fn log_kde_reports_nonpositive_values() {
        let d = kde_log_density(&[0.0, 1.0, std::f64::consts::E, -1.0], None).unwrap();
        assert_eq!(d.n_nonpositive, 2);
    }

    #[test]
    fn shapiro_francia_rejects_skewed_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..200).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); z.exp() }).collect();
        assert!(shapiro_francia(&xs).unwrap().p_value < 1e-3);
        let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        assert!(shapiro_francia(&logs).unwrap().p_value > 0.01);
    }

    #[test]
    fn ks_statistic_extremes() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.1], &[5.0, 6.0]).unwrap(), 1.0);
        assert!((ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn percentiles() {
        let v = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&v, 50.0).unwrap(), 3.0);
        assert_eq!(percentile(&v, 100.0).unwrap(), 5.0);
        assert_eq!(percentile(&v, 25.0).unwrap(), 2.0);
    }

    proptest! {
        #[test]
        fn repetitions_decrease_with_success(a in 0.001f64..0.999, b in 0.001f64..0.999) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(n_repetitions(lo, 0.99).unwrap() >= n_repetitions(hi, 0.99).unwrap());
        }

        #[test]
        fn kde_integrates_to_one(xs in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
            let c = kde(&xs, None).unwrap();
            prop_assert!((c.integral() - 1.0).abs() < 1e-3);
        }

        #[test]
        fn kinks_are_flip_invariant(bits in any::<u64>()) {
            let inst = gen_ri1d(64, 1).unwrap();
            let cfg = SpinConfig::from_bits(bits, 64);
            prop_assert_eq!(kink_density_of(&inst, &cfg).unwrap(), kink_density_of(&inst, &cfg.flipped()).unwrap());
        }
    }
}
