//! Classical simulated annealing on a Chimera instance: success frequency
//! against the exact ground energy for growing sweep counts.

use aqc_vmc::instances::{gen_chimera, ChimeraCoupling};
use aqc_vmc::observables::n_repetitions;
use aqc_vmc::oracles::{brute_force_ground, sa_success_frequency, BetaSchedule};

fn main() -> aqc_vmc::Result<()> {
    let inst = gen_chimera(2, 2, ChimeraCoupling::Normal, 9)?;
    let ground = brute_force_ground(&inst)?;
    println!("e_min = {:.4} (degeneracy {})", ground.e_min, ground.degeneracy);
    for sweeps in [1, 10, 100, 1000] {
        let p = sa_success_frequency(&inst, sweeps, BetaSchedule::default(), ground.e_min, 200, 17)?;
        println!("{sweeps:5} sweeps: P_s = {p:.3}, N_rep = {:.2}", n_repetitions(p, 0.99)?);
    }
    Ok(())
}
