//! Effective inverse temperatures read off the two-body Jastrow terms
//! during an SK anneal.

use aqc_vmc::instances::gen_sk;
use aqc_vmc::observables::{effective_inverse_temperatures, percentile};
use aqc_vmc::tvmc::{integrate_annealing, SamplingMode, Schedule, TvmcConfig};

fn main() -> aqc_vmc::Result<()> {
    let inst = gen_sk(10, 4)?;
    let schedule = Schedule::linear(10.0)?;
    let mut cfg = TvmcConfig::defaults(&inst, &schedule);
    cfg.dt = 0.02;
    cfg.sampling = SamplingMode::Exact;
    cfg.output_stride = 50;
    cfg.keep_snapshots = true;
    let traj = integrate_annealing(&inst, &schedule, &cfg)?;

    println!("{:>5} {:>9} {:>9} {:>9} {:>4}", "s", "p5", "median", "p95", "neg");
    for (t, params) in &traj.snapshots {
        let betas = effective_inverse_temperatures(params, &inst, *t)?.betas();
        let negative = betas.iter().filter(|&&b| b < 0.0).count();
        println!(
            "{:5.2} {:9.4} {:9.4} {:9.4} {negative:4}",
            t / schedule.total_time,
            percentile(&betas, 5.0)?,
            percentile(&betas, 50.0)?,
            percentile(&betas, 95.0)?
        );
    }
    Ok(())
}
