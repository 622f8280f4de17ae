//! Exact Schrödinger dynamics on a small SK instance and its classical
//! ground state.

use aqc_vmc::instances::gen_sk;
use aqc_vmc::oracles::{brute_force_ground, exact_propagate};
use aqc_vmc::tvmc::Schedule;

fn main() -> aqc_vmc::Result<()> {
    let inst = gen_sk(10, 21)?;
    let ground = brute_force_ground(&inst)?;
    println!("ground energy {:.5}, degeneracy {}", ground.e_min, ground.degeneracy);
    for total_time in [1.0, 5.0, 25.0] {
        let schedule = Schedule::linear(total_time)?;
        let traj = exact_propagate(&inst, &schedule, total_time / 1000.0, 1000, Some(ground.e_min))?;
        let last = traj.points.last().expect("final point");
        let drift = traj.points.iter().map(|p| p.norm_drift).fold(0.0, f64::max);
        println!(
            "T = {total_time:5}  e/N {:.5}  P_s {:.4}  max norm drift {drift:.1e}",
            last.observables.energy_density,
            last.observables.p_success.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
