//! Metropolis estimates against exact enumeration for a small SK instance.

use std::sync::Arc;

use aqc_vmc::instances::gen_sk;
use aqc_vmc::jastrow::{JastrowParams, ParamSupport, ParamTopology};
use aqc_vmc::sampler::{exact_stats, sample_batch, Probes, SamplingPlan};
use num_complex::Complex64;

fn main() -> aqc_vmc::Result<()> {
    let inst = gen_sk(8, 11)?;
    let topo = Arc::new(ParamTopology::for_instance(&inst, ParamSupport::GraphEdges));
    let values = (0..topo.n_params())
        .map(|k| Complex64::new(0.3 * ((k as f64) * 0.7).sin(), 0.2 * ((k as f64) * 1.3).cos()))
        .collect();
    let params = JastrowParams::from_values(topo, values)?;
    let gamma = 0.4;

    let exact = exact_stats(&params, &inst, gamma, Probes::default())?;
    let plan = SamplingPlan { n_chains: 4, burn_in_sweeps: 80, n_samples: 50_000, thin_sweeps: 1 };
    let sampled = sample_batch(&params, &inst, gamma, &plan, 5, Probes::default())?;

    let (e, ex) = (sampled.energy(), exact.energy());
    println!("energy   sampled {:.5} ± {:.5}   exact {:.5}", e.mean, e.error.unwrap_or(f64::NAN), ex.mean);
    println!("acceptance {:.3}", sampled.acceptance_rate().unwrap_or(f64::NAN));
    println!("tau(E_loc) {:.2}", sampled.energy_autocorrelation().unwrap_or(f64::NAN));
    let worst = (sampled.mean_o() - exact.mean_o()).amax();
    println!("max |<O> - <O>_exact| = {worst:.2e}");
    Ok(())
}
