//! Jastrow amplitudes: log Ψ, single-flip ratios, log-derivatives and the
//! local energy of one configuration.

use std::sync::Arc;

use aqc_vmc::instances::{gen_sk, SpinConfig};
use aqc_vmc::jastrow::{JastrowParams, ParamSupport, ParamTopology};
use num_complex::Complex64;

fn main() -> aqc_vmc::Result<()> {
    let inst = gen_sk(5, 7)?;
    let topo = Arc::new(ParamTopology::for_instance(&inst, ParamSupport::GraphEdges));
    let values = (0..topo.n_params())
        .map(|k| Complex64::new(0.1 * k as f64 - 0.5, 0.05 * k as f64))
        .collect();
    let params = JastrowParams::from_values(topo.clone(), values)?;

    let cfg = SpinConfig::new(vec![1, -1, -1, 1, 1])?;
    println!("{} parameters", params.n_params());
    println!("log psi      = {:.6}", params.log_psi(&cfg)?);
    for site in 0..cfg.len() {
        let mut flipped = cfg.clone();
        flipped.flip(site);
        let direct = params.log_psi(&flipped)? - params.log_psi(&cfg)?;
        println!("flip {site}: ratio {:.6}, direct {:.6}", params.log_ratio_flip(&cfg, site)?, direct);
    }
    println!("O(sigma)     = {:?}", topo.o_vector(&cfg)?);
    println!("E_loc(0.5)   = {:.6}", params.local_energy(&cfg, &inst, 0.5)?);
    Ok(())
}
