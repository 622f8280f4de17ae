//! Success probability of small SK anneals, t-VMC against exact dynamics,
//! and the implied repetition counts.

use aqc_vmc::instances::gen_sk;
use aqc_vmc::observables::{n_repetitions, success_probability, SuccessMode};
use aqc_vmc::oracles::{brute_force_ground, exact_propagate};
use aqc_vmc::tvmc::{integrate_annealing, SamplingMode, Schedule, TvmcConfig};

fn main() -> aqc_vmc::Result<()> {
    for total_time in [2.0, 10.0] {
        for seed in 0..3 {
            let inst = gen_sk(8, seed)?;
            let ground = brute_force_ground(&inst)?;
            let schedule = Schedule::linear(total_time)?;
            let mut cfg = TvmcConfig::defaults(&inst, &schedule);
            cfg.dt = total_time / 400.0;
            cfg.sampling = SamplingMode::Exact;
            cfg.e_min = Some(ground.e_min);
            let traj = integrate_annealing(&inst, &schedule, &cfg)?;
            let p_vmc = success_probability(&traj.final_params, &inst, &ground, SuccessMode::ExactSum)?.mean;
            let exact = exact_propagate(&inst, &schedule, cfg.dt, 1000, Some(ground.e_min))?;
            let p_exact = exact.points.last().and_then(|p| p.observables.p_success).unwrap_or(f64::NAN);
            println!(
                "T = {total_time:4}  seed {seed}  P_s tvmc {p_vmc:.4}  exact {p_exact:.4}  N_rep {:.2}",
                n_repetitions(p_vmc, 0.99)?
            );
        }
    }
    Ok(())
}
