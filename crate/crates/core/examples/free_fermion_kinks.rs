//! Kink density after annealing long random chains, from the free-fermion
//! solution, and the spread of its logarithm over disorder.

use aqc_vmc::instances::gen_ri1d;
use aqc_vmc::observables::{kde_log_density, shapiro_francia};
use aqc_vmc::oracles::free_fermion_propagate;
use aqc_vmc::tvmc::Schedule;

fn main() -> aqc_vmc::Result<()> {
    let n = 64;
    for total_time in [1.0, 4.0, 16.0] {
        let schedule = Schedule::linear(total_time)?;
        let kinks = (0..40)
            .map(|seed| {
                let inst = gen_ri1d(n, seed)?;
                let points = free_fermion_propagate(&inst, &schedule, total_time / 400.0, 400)?;
                Ok(points.last().expect("final point").kink_density)
            })
            .collect::<aqc_vmc::Result<Vec<f64>>>()?;
        let mean = kinks.iter().sum::<f64>() / kinks.len() as f64;
        let logs: Vec<f64> = kinks.iter().map(|k| k.ln()).collect();
        let density = kde_log_density(&kinks, None)?;
        println!(
            "T = {total_time:5}  mean kinks {mean:.4}  log-normality p = {:.3}  KDE modes {}",
            shapiro_francia(&logs)?.p_value,
            density.curve.mode_count(0.05)
        );
    }
    Ok(())
}
