//! t-VMC anneal of a random Ising chain compared with exact dynamics.

use aqc_vmc::instances::gen_ri1d;
use aqc_vmc::oracles::{brute_force_ground, exact_propagate};
use aqc_vmc::sampler::SamplingPlan;
use aqc_vmc::tvmc::{integrate_annealing, SamplingMode, Schedule, TvmcConfig};

fn main() -> aqc_vmc::Result<()> {
    let inst = gen_ri1d(8, 3)?;
    let ground = brute_force_ground(&inst)?;
    let schedule = Schedule::linear(4.0)?;
    let mut cfg = TvmcConfig::defaults(&inst, &schedule);
    cfg.dt = schedule.total_time / 400.0;
    cfg.output_stride = 50;
    cfg.sampling = SamplingMode::Sampled(SamplingPlan { n_chains: 4, burn_in_sweeps: 80, n_samples: 4000, thin_sweeps: 1 });
    cfg.e_min = Some(ground.e_min);

    let traj = integrate_annealing(&inst, &schedule, &cfg)?;
    let exact = exact_propagate(&inst, &schedule, cfg.dt, cfg.output_stride, Some(ground.e_min))?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "s", "e_tvmc", "e_exact", "kinks", "kinks_ex");
    for (p, q) in traj.points.iter().zip(&exact.points) {
        println!(
            "{:6.2} {:10.5} {:10.5} {:10.5} {:10.5}",
            p.s,
            p.energy.mean,
            q.observables.energy_density,
            p.kink_density.map_or(f64::NAN, |k| k.mean),
            q.observables.kink_density.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
