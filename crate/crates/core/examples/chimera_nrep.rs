//! Repetition counts of t-VMC and simulated annealing on small Chimera
//! instances, written to a scratch directory by the experiment pipeline.

use aqc_vmc::experiment::{run_ensemble, run_sa_baseline, ExperimentConfig};
use aqc_vmc::observables::percentile;

const CONFIG: &str = r#"
output_dir = "OUT"

[model]
family = "chimera"
chimera_rows = 1
chimera_cols = 2

[anneal]
times = [5.0]

[tvmc]
steps = 200
n_samples = 2000

[ensemble]
realizations = 6
base_seed = 42

[sa]
sweeps = 1000
repeats = 100
"#;

fn main() -> aqc_vmc::Result<()> {
    let out = std::env::temp_dir().join("aqc_chimera_nrep");
    let text = CONFIG.replace("OUT", &out.display().to_string());
    let cfg = ExperimentConfig::from_toml(&text, &[])?;

    let report = run_ensemble(&cfg, Some(&text))?;
    let (sa_rows, _) = run_sa_baseline(&cfg, Some(&text))?;
    let quantum: Vec<f64> = report.summary.iter().filter_map(|r| r.n_rep).filter(|n| n.is_finite()).collect();
    let classical: Vec<f64> = sa_rows.iter().filter_map(|r| r.n_rep).filter(|n| n.is_finite()).collect();
    for (label, values) in [("t-VMC", &quantum), ("SA", &classical)] {
        if values.is_empty() {
            println!("{label}: no finite N_rep");
        } else {
            println!("{label}: {} finite, median N_rep {:.2}", values.len(), percentile(values, 50.0)?);
        }
    }
    println!("files in {}", out.display());
    Ok(())
}
