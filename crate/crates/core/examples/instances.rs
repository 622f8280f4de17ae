//! Generate one instance of each family, print its size and round-trip it
//! through JSON.

use aqc_vmc::instances::{gen_chimera, gen_ri1d, gen_sk, ChimeraCoupling, ProblemInstance};

fn main() -> aqc_vmc::Result<()> {
    let instances = [
        gen_ri1d(16, 1)?,
        gen_sk(12, 2)?,
        gen_chimera(2, 2, ChimeraCoupling::Pm1, 3)?,
        ProblemInstance::custom(3, &[(0, 1, 1.0), (1, 2, -0.5)])?,
    ];
    for inst in &instances {
        let back = ProblemInstance::from_json(&inst.to_json()?)?;
        assert_eq!(&back, inst);
        let strongest = inst.edges().iter().map(|e| e.v.abs()).fold(0.0, f64::max);
        println!(
            "{:?}: {} sites, {} edges, max |V| = {strongest:.3}, chain = {}",
            inst.family(),
            inst.n_sites(),
            inst.edges().len(),
            inst.is_chain()
        );
    }
    Ok(())
}
