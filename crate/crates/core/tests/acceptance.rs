//! Acceptance criteria, one PASS/FAIL line each. `AQC_CRITERIA=2,5` runs a
//! subset; the default is all nine. Failures only change the exit status
//! when `AQC_STRICT=1`.

use std::sync::Arc;
use std::time::Instant;

use aqc_vmc::experiment::{run_ensemble, run_sa_baseline, ExperimentConfig};
use aqc_vmc::instances::{gen_chimera, gen_ri1d, gen_sk, ChimeraCoupling, ProblemInstance, SpinConfig};
use aqc_vmc::jastrow::{JastrowParams, ParamSupport, ParamTopology};
use aqc_vmc::observables::{
    effective_inverse_temperatures, kde, ks_statistic, n_repetitions, percentile, shapiro_francia,
};
use aqc_vmc::oracles::{brute_force_ground, exact_propagate, free_fermion_propagate};
use aqc_vmc::output::{read_rows, NrepRow};
use aqc_vmc::sampler::{
    exact_stats, metropolis_sweep, sample_batch, ChainState, Probes, SampleStats, SamplingPlan,
};
use aqc_vmc::seed::child_seed;
use aqc_vmc::tvmc::{
    estimate_system, integrate_annealing, solve_parameter_derivative, Regularization, RegularizationMode,
    SamplingMode, Schedule, TvmcConfig, TvmcLinearSystem,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const BASE_SEED: u64 = 20_170_614;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn zero_params(inst: &ProblemInstance, support: ParamSupport) -> JastrowParams {
    JastrowParams::zeros(Arc::new(ParamTopology::for_instance(inst, support)))
}

fn random_params(inst: &ProblemInstance, support: ParamSupport, scale: f64, seed: u64) -> JastrowParams {
    let topo = Arc::new(ParamTopology::for_instance(inst, support));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..topo.n_params())
        .map(|_| Complex64::new(scale * (2.0 * rng.random::<f64>() - 1.0), scale * (2.0 * rng.random::<f64>() - 1.0)))
        .collect();
    JastrowParams::from_values(topo, values).unwrap()
}

fn sampled_config(dt: f64, n_samples: usize, stride: usize, seed: u64, e_min: Option<f64>, n: usize) -> TvmcConfig {
    TvmcConfig {
        dt,
        sampling: SamplingMode::Sampled(SamplingPlan {
            n_chains: 4,
            burn_in_sweeps: 10 * n,
            n_samples,
            thin_sweeps: 1,
        }),
        regularization: Regularization::default(),
        output_stride: stride,
        param_support: ParamSupport::GraphEdges,
        seed,
        e_min,
        keep_snapshots: false,
    }
}

/// Zero parameters reproduce the transverse-field ground state exactly.
fn criterion_1() -> Verdict {
    let families = [
        ("RI1D", gen_ri1d(16, 1).unwrap()),
        ("SK", gen_sk(12, 1).unwrap()),
        ("CHIMERA", gen_chimera(1, 2, ChimeraCoupling::Normal, 1).unwrap()),
        ("CUSTOM", ProblemInstance::custom(5, &[(0, 3, 0.7), (1, 4, -1.2), (2, 3, 0.1)]).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (name, inst) in &families {
        let n = inst.n_sites();
        let p = zero_params(inst, ParamSupport::GraphEdges);
        let plan = SamplingPlan { n_chains: 4, burn_in_sweeps: 10, n_samples: 4000, thin_sweeps: 1 };
        let stats = sample_batch(&p, inst, 1.0, &plan, 7, Probes::default()).unwrap();
        let e = stats.energy();
        let dev = (e.mean / n as f64 + 1.0).abs();
        let se = e.error.unwrap_or(0.0) / n as f64;
        worst = worst.max(dev);
        // rounding of the sum of identical local energies
        if dev > 3.0 * se + 1e-12 {
            pass = false;
            eprintln!("  {name}: e(0)/N = {} ± {se}", e.mean / n as f64);
        }
    }
    verdict(pass, format!("4 families, max |e(0)/N + 1| = {worst:.1e}"))
}

/// t-VMC follows exact dynamics on short disordered chains. The sampled runs
/// use two-body terms on every pair; the nearest-neighbour ansatz is also
/// reported with exact moments.
fn criterion_2() -> Verdict {
    let times = [1.0, 4.0, 16.0];
    let jobs: Vec<(usize, usize)> = (0..20).flat_map(|r| (0..3).map(move |k| (r, k))).collect();
    let deviations = |traj: &aqc_vmc::tvmc::Trajectory, exact: &aqc_vmc::oracles::ExactTrajectory| {
        assert_eq!(traj.points.len(), exact.points.len());
        let de = traj
            .points
            .iter()
            .zip(&exact.points)
            .map(|(a, b)| {
                assert_eq!(a.t, b.t);
                (a.energy.mean - b.observables.energy_density).abs()
            })
            .fold(0.0, f64::max);
        let dk = (traj.final_point().kink_density.unwrap().mean
            - exact.points.last().unwrap().observables.kink_density.unwrap())
        .abs();
        (de, dk)
    };
    let results: Vec<((f64, f64), (f64, f64))> = jobs
        .par_iter()
        .map(|&(r, k)| {
            let inst = gen_ri1d(8, child_seed(BASE_SEED, &[2, r as u64])).unwrap();
            let t_total = times[k];
            let sched = Schedule::linear(t_total).unwrap();
            let dt = t_total / 2000.0;
            let exact = exact_propagate(&inst, &sched, dt, 20, None).unwrap();

            let mut cfg = sampled_config(dt, 10_000, 20, child_seed(BASE_SEED, &[2, r as u64, k as u64]), None, 8);
            cfg.param_support = ParamSupport::AllPairs;
            let sampled = deviations(&integrate_annealing(&inst, &sched, &cfg).unwrap(), &exact);

            let mut nn = cfg.clone();
            nn.param_support = ParamSupport::GraphEdges;
            nn.sampling = SamplingMode::Exact;
            let nearest = deviations(&integrate_annealing(&inst, &sched, &nn).unwrap(), &exact);
            (sampled, nearest)
        })
        .collect();
    let worst = |f: &dyn Fn(&((f64, f64), (f64, f64))) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let (de, dk) = (worst(&|r| r.0 .0), worst(&|r| r.0 .1));
    let (nn_de, nn_dk) = (worst(&|r| r.1 .0), worst(&|r| r.1 .1));
    verdict(
        de <= 0.02 && dk <= 0.02,
        format!(
            "60 runs, all-pair ansatz: max |Δe| = {de:.4} per site, max |Δρ_k(T)| = {dk:.4} (tolerance 0.02); \
             nearest-neighbour ansatz with exact moments: {nn_de:.4}, {nn_dk:.4}"
        ),
    )
}

/// Free fermions agree with dense propagation; at N = 64 the log kink
/// density is unimodal and compatible with a normal distribution.
fn criterion_3() -> Verdict {
    let mut dev: f64 = 0.0;
    for r in 0..5u64 {
        let inst = gen_ri1d(8, child_seed(BASE_SEED, &[3, r])).unwrap();
        for &t_total in &[1.0, 4.0, 16.0] {
            let sched = Schedule::linear(t_total).unwrap();
            let dt = t_total / 2000.0;
            let ff = free_fermion_propagate(&inst, &sched, dt, 1).unwrap();
            let ex = exact_propagate(&inst, &sched, dt, 1, None).unwrap();
            for (a, b) in ff.iter().zip(&ex.points) {
                dev = dev
                    .max((a.energy_density - b.observables.energy_density).abs())
                    .max((a.kink_density - b.observables.kink_density.unwrap()).abs());
            }
        }
    }
    let mut pass = dev <= 1e-6;
    let mut detail = format!("N=8 max deviation {dev:.1e}");
    for &t_total in &[1.0, 4.0, 16.0] {
        let sched = Schedule::linear(t_total).unwrap();
        let logs: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|r| {
                let inst = gen_ri1d(64, child_seed(BASE_SEED, &[3, 64, r])).unwrap();
                let pts = free_fermion_propagate(&inst, &sched, t_total / 2000.0, 2000).unwrap();
                pts.last().unwrap().kink_density.ln()
            })
            .collect();
        let sf = shapiro_francia(&logs).unwrap();
        let modes = kde(&logs, None).unwrap().mode_count(0.05);
        pass &= sf.p_value > 0.01 && modes == 1;
        detail += &format!("; T={t_total}: normality p = {:.3}, modes = {modes}", sf.p_value);
    }
    verdict(pass, detail)
}

/// SK success probabilities from t-VMC against exact dynamics.
fn criterion_4() -> Verdict {
    let mut pass = true;
    let mut detail = String::from("SK N=10, 100 realizations");
    for &t_total in &[5.0, 20.0] {
        let pairs: Vec<(f64, f64)> = (0..100u64)
            .into_par_iter()
            .map(|r| {
                let inst = gen_sk(10, child_seed(BASE_SEED, &[4, r])).unwrap();
                let e_min = brute_force_ground(&inst).unwrap().e_min;
                let sched = Schedule::linear(t_total).unwrap();
                let dt = t_total / 1000.0;
                let mut cfg = sampled_config(dt, 1, 1000, 0, Some(e_min), 10);
                cfg.sampling = SamplingMode::Exact;
                let traj = integrate_annealing(&inst, &sched, &cfg).unwrap();
                let exact = exact_propagate(&inst, &sched, dt, 1000, Some(e_min)).unwrap();
                (
                    traj.final_point().p_success.unwrap().mean,
                    exact.points.last().unwrap().observables.p_success.unwrap(),
                )
            })
            .collect();
        let vmc: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ex: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let ks = ks_statistic(&vmc, &ex).unwrap();
        let bias = pairs.iter().map(|p| p.0 - p.1).sum::<f64>() / pairs.len() as f64;
        pass &= ks < 0.25 && bias >= 0.0;
        detail += &format!("; T={t_total}: KS = {ks:.3}, mean bias = {bias:+.4}");
    }
    verdict(pass, detail)
}

/// The force vector shrinks for slower anneals.
fn criterion_5() -> Verdict {
    let inst = gen_ri1d(8, child_seed(BASE_SEED, &[5])).unwrap();
    let residual_at_half = |t_total: f64| {
        let sched = Schedule::linear(t_total).unwrap();
        let cfg = sampled_config(t_total / 1000.0, 10_000, 10, child_seed(BASE_SEED, &[5, t_total as u64]), None, 8);
        let traj = integrate_annealing(&inst, &sched, &cfg).unwrap();
        let p = traj.points.iter().find(|p| (p.s - 0.5).abs() < 1e-12).expect("s = 0.5 is an output time");
        p.vap_residual
    };
    let (fast, slow) = (residual_at_half(1.0), residual_at_half(16.0));
    verdict(slow < fast, format!("vap residual at s=0.5: T=1 {fast:.4e}, T=16 {slow:.4e}"))
}

fn system_of(stats: &SampleStats) -> (DMatrix<f64>, DVector<Complex64>) {
    let sys = estimate_system(stats).unwrap();
    (sys.s_matrix, sys.force)
}

/// Metropolis samples follow |Ψ|²; S and f match exact sums.
fn criterion_6() -> Verdict {
    let inst = gen_sk(6, child_seed(BASE_SEED, &[6])).unwrap();
    let params = random_params(&inst, ParamSupport::GraphEdges, 0.4, child_seed(BASE_SEED, &[6, 1]));
    let gamma = 0.6;

    let exact = exact_stats(&params, &inst, gamma, Probes::default()).unwrap();
    let logw: Vec<f64> = (0..64u64)
        .map(|b| 2.0 * params.log_psi(&SpinConfig::from_bits(b, 6)).unwrap().re)
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logw.iter().map(|l| (l - max).exp()).sum();
    let probs: Vec<f64> = logw.iter().map(|l| (l - max).exp() / z).collect();

    let n_chains = 8;
    let per_chain = 125_000;
    let counts: Vec<Vec<u64>> = (0..n_chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut chain = ChainState::random(&params, child_seed(BASE_SEED, &[6, 2]), c);
            let mut hist = vec![0u64; 64];
            for _ in 0..100 {
                metropolis_sweep(&mut chain, &params);
            }
            for _ in 0..per_chain {
                metropolis_sweep(&mut chain, &params);
                metropolis_sweep(&mut chain, &params);
                hist[chain.config().to_bits() as usize] += 1;
            }
            hist
        })
        .collect();
    let total = (n_chains * per_chain) as f64;
    let chi2: f64 = (0..64)
        .map(|b| {
            let observed = counts.iter().map(|h| h[b]).sum::<u64>() as f64;
            let expected = total * probs[b];
            (observed - expected).powi(2) / expected
        })
        .sum();
    let p_chi = 1.0 - ChiSquared::new(63.0).unwrap().cdf(chi2);

    // independent replicate batches give the entrywise error bars
    let batches = 50;
    let plan = SamplingPlan { n_chains: 4, burn_in_sweeps: 100, n_samples: 1_000_000 / batches, thin_sweeps: 2 };
    let systems: Vec<(DMatrix<f64>, DVector<Complex64>)> = (0..batches as u64)
        .into_par_iter()
        .map(|b| {
            system_of(&sample_batch(&params, &inst, gamma, &plan, child_seed(BASE_SEED, &[6, 3, b]), Probes::default()).unwrap())
        })
        .collect();
    let (s_exact, f_exact) = system_of(&exact);
    let k = s_exact.nrows();
    let mut worst_z: f64 = 0.0;
    let mut zscore = |values: Vec<f64>, target: f64| {
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let se = (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
        let z = (mean - target) / se.max(1e-300);
        worst_z = worst_z.max(z.abs());
    };
    for a in 0..k {
        for b in a..k {
            zscore(systems.iter().map(|s| s.0[(a, b)]).collect(), s_exact[(a, b)]);
        }
        zscore(systems.iter().map(|s| s.1[a].re).collect(), f_exact[a].re);
        zscore(systems.iter().map(|s| s.1[a].im).collect(), f_exact[a].im);
    }
    verdict(
        p_chi > 0.01 && worst_z < 4.0,
        format!("chi2 = {chi2:.1} (63 dof, p = {p_chi:.3}); worst S/f deviation {worst_z:.2} standard errors over {} entries", k * (k + 1) / 2 + 2 * k),
    )
}

/// Effective temperatures broaden and turn negative late in an SK anneal.
fn criterion_7() -> Verdict {
    let inst = gen_sk(24, child_seed(BASE_SEED, &[7])).unwrap();
    let t_total = 20.0;
    let sched = Schedule::linear(t_total).unwrap();
    let mut cfg = sampled_config(t_total / 500.0, 3000, 10, child_seed(BASE_SEED, &[7, 1]), None, 24);
    cfg.keep_snapshots = true;
    let traj = match integrate_annealing(&inst, &sched, &cfg) {
        Ok(t) => t,
        Err(e) => return verdict(false, format!("integration failed: {e}")),
    };
    let mut early = Vec::new();
    let mut late = Vec::new();
    for (t, params) in &traj.snapshots {
        let betas = effective_inverse_temperatures(params, &inst, *t).unwrap().betas();
        if t / t_total < 0.5 {
            early.extend(betas);
        } else if t / t_total > 0.5 {
            late.extend(betas);
        }
    }
    let spread = |v: &[f64]| percentile(v, 95.0).unwrap() - percentile(v, 5.0).unwrap();
    let (se, sl) = (spread(&early), spread(&late));
    let negative = late.iter().filter(|b| **b < 0.0).count();
    verdict(
        sl > se && negative > 0,
        format!("β spread early {se:.3}, late {sl:.3}; {negative} of {} late values negative", late.len()),
    )
}

/// Repetition counts for t-VMC and simulated annealing on Chimera.
fn criterion_8() -> Verdict {
    let analytic = n_repetitions(0.99, 0.99).unwrap() == 1.0
        && (n_repetitions(0.5, 0.99).unwrap() - 0.01f64.ln() / 0.5f64.ln()).abs() < 1e-12;
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"output_dir = {:?}
[model]
family = "chimera"
chimera_rows = 2
chimera_cols = 2
[anneal]
times = [20.0]
[tvmc]
steps = 400
n_samples = 2000
output_stride = 400
snapshots = false
[ensemble]
realizations = 50
base_seed = {BASE_SEED}
[sa]
sweeps = 1000
repeats = 100
"#,
        dir.path().display().to_string()
    );
    let cfg = ExperimentConfig::from_toml(&text, &[]).unwrap();
    let report = run_ensemble(&cfg, Some(&text)).unwrap();
    let (_, sa_failures) = run_sa_baseline(&cfg, Some(&text)).unwrap();
    let header = |name: &str| {
        std::fs::read_to_string(dir.path().join(name)).unwrap().lines().next().unwrap_or_default().to_string()
    };
    let same_schema = header("nrep_tvmc.csv") == header("nrep_sa.csv");
    let quantum: Vec<NrepRow> = read_rows(&dir.path().join("nrep_tvmc.csv")).unwrap();
    let classical: Vec<NrepRow> = read_rows(&dir.path().join("nrep_sa.csv")).unwrap();
    let sa_finite = classical.iter().filter(|r| r.n_rep.is_some_and(f64::is_finite)).count();
    let q_finite = quantum.iter().filter(|r| r.n_rep.is_some_and(f64::is_finite)).count();
    let pass = analytic
        && same_schema
        && quantum.len() == 50
        && classical.len() == 50
        && sa_failures.is_empty()
        && sa_finite as f64 >= 0.9 * 50.0;
    verdict(
        pass,
        format!(
            "analytic values {}; schema match {same_schema}; t-VMC rows {} ({q_finite} finite, {} failed runs); SA finite n_rep on {sa_finite}/50",
            if analytic { "ok" } else { "wrong" },
            quantum.len(),
            report.failures.len()
        ),
    )
}

/// Derivatives, linear solves and time-step convergence.
fn criterion_9() -> Verdict {
    // finite differences of log Ψ against O_k
    let inst = gen_sk(7, child_seed(BASE_SEED, &[9])).unwrap();
    let params = random_params(&inst, ParamSupport::AllPairs, 0.5, 3);
    let h = 1e-6;
    let mut fd_err: f64 = 0.0;
    for b in [0u64, 5, 77, 127] {
        let cfg = SpinConfig::from_bits(b, 7);
        let o = params.topology().o_vector(&cfg).unwrap();
        for (k, ok) in o.iter().enumerate() {
            let shifted = |delta: f64| {
                let mut p = params.clone();
                p.values_mut()[k] += delta;
                p.log_psi(&cfg).unwrap()
            };
            let d = (shifted(h) - shifted(-h)) / (2.0 * h);
            fd_err = fd_err.max((d - Complex64::new(*ok, 0.0)).norm());
        }
    }

    // linear-solver residual on well-conditioned systems at zero cutoff
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut solve_err: f64 = 0.0;
    for k in [5, 20, 60] {
        let a = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() - 0.5);
        let s = &a * a.transpose() + DMatrix::identity(k, k);
        let f = DVector::from_fn(k, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let sys = TvmcLinearSystem { s_matrix: s.clone(), force: f.clone(), mc_error_scale: 0.0, undersampled: false };
        let d = solve_parameter_derivative(&sys, Regularization { mode: RegularizationMode::SvdCutoff, value: 0.0 }).unwrap();
        let i_alpha = d.alpha_dot.map(|z| z * Complex64::new(0.0, 1.0));
        let residual = s.map(|x| Complex64::new(x, 0.0)) * i_alpha - f;
        solve_err = solve_err.max(residual.norm());
    }

    // dt halving, measured deterministically with exact sums
    let chain = gen_ri1d(8, child_seed(BASE_SEED, &[9, 1])).unwrap();
    let t_total = 4.0;
    let sched = Schedule::linear(t_total).unwrap();
    let final_energy = |steps: f64, sampling: Option<usize>| {
        let mut cfg = sampled_config(t_total / steps, sampling.unwrap_or(1), 1_000_000, 11, None, 8);
        if sampling.is_none() {
            cfg.sampling = SamplingMode::Exact;
        }
        integrate_annealing(&chain, &sched, &cfg).unwrap().final_point().energy
    };
    let coarse = final_energy(500.0, None).mean;
    let fine = final_energy(1000.0, None).mean;
    let mc = final_energy(500.0, Some(10_000)).error.unwrap();
    let pass = fd_err < 1e-8 && solve_err < 1e-10 && (coarse - fine).abs() < mc;
    verdict(
        pass,
        format!(
            "FD error {fd_err:.1e}; solver residual {solve_err:.1e}; dt-halving Δe(T) = {:.1e} vs MC error {mc:.1e}",
            (coarse - fine).abs()
        ),
    )
}

fn main() {
    let selected: Option<Vec<usize>> = std::env::var("AQC_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Verdict); 9] = [
        (1, "endpoint exactness", criterion_1),
        (2, "1D tracking vs exact dynamics", criterion_2),
        (3, "cross-oracle agreement and log-normal kinks", criterion_3),
        (4, "SK success probabilities", criterion_4),
        (5, "VAP residual", criterion_5),
        (6, "sampler correctness", criterion_6),
        (7, "effective temperatures", criterion_7),
        (8, "N_rep pipeline", criterion_8),
        (9, "numerical consistency", criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {id} ({name}): {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        if std::env::var("AQC_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
