//! Row types shared by every file the experiments write.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracles::{ExactPoint, FermionPoint};
use crate::tvmc::{StageDiagnostics, TrajectoryPoint};

/// One line of `trajectory.csv`. Energies are per site; blank cells mark
/// quantities a source does not provide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub source: String,
    pub t: f64,
    pub s: f64,
    pub gamma: f64,
    pub e_inst: f64,
    pub e_inst_err: Option<f64>,
    pub e_residual: Option<f64>,
    pub e_residual_err: Option<f64>,
    pub kink_density: Option<f64>,
    pub kink_density_err: Option<f64>,
    pub p_success: Option<f64>,
    pub p_success_err: Option<f64>,
    pub vap_residual: Option<f64>,
    pub acceptance_rate: Option<f64>,
    pub smin: Option<f64>,
    pub smax: Option<f64>,
}

impl TrajectoryRow {
    pub fn from_tvmc(p: &TrajectoryPoint) -> Self {
        Self {
            source: "tvmc".into(),
            t: p.t,
            s: p.s,
            gamma: p.gamma,
            e_inst: p.energy.mean,
            e_inst_err: p.energy.error,
            e_residual: p.e_residual.map(|e| e.mean),
            e_residual_err: p.e_residual.and_then(|e| e.error),
            kink_density: p.kink_density.map(|e| e.mean),
            kink_density_err: p.kink_density.and_then(|e| e.error),
            p_success: p.p_success.map(|e| e.mean),
            p_success_err: p.p_success.and_then(|e| e.error),
            vap_residual: Some(p.vap_residual),
            acceptance_rate: p.acceptance_rate,
            smin: Some(p.s_min),
            smax: Some(p.s_max),
        }
    }

    /// `e0` is the ground energy per site, when known.
    pub fn from_exact(p: &ExactPoint, total_time: f64, e0: Option<f64>) -> Self {
        let o = &p.observables;
        Self {
            source: "exact".into(),
            t: p.t,
            s: p.t / total_time,
            gamma: p.gamma,
            e_inst: o.energy_density,
            e_inst_err: None,
            e_residual: e0.map(|e0| o.classical_density - e0),
            e_residual_err: None,
            kink_density: o.kink_density,
            kink_density_err: None,
            p_success: o.p_success,
            p_success_err: None,
            vap_residual: None,
            acceptance_rate: None,
            smin: None,
            smax: None,
        }
    }

    pub fn from_fermion(p: &FermionPoint, total_time: f64) -> Self {
        Self {
            source: "fermion".into(),
            t: p.t,
            s: p.t / total_time,
            gamma: p.gamma,
            e_inst: p.energy_density,
            e_inst_err: None,
            e_residual: None,
            e_residual_err: None,
            kink_density: Some(p.kink_density),
            kink_density_err: None,
            p_success: None,
            p_success_err: None,
            vap_residual: None,
            acceptance_rate: None,
            smin: None,
            smax: None,
        }
    }
}

/// One line of `diagnostics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub stage: usize,
    pub t: f64,
    pub gamma: f64,
    pub acceptance_rate: Option<f64>,
    pub eloc_autocorrelation: Option<f64>,
    pub kept_modes: usize,
    /// Samples per chain, `;`-separated.
    pub chain_samples: String,
}

impl From<&StageDiagnostics> for DiagnosticsRow {
    fn from(d: &StageDiagnostics) -> Self {
        Self {
            step: d.step,
            stage: d.stage,
            t: d.t,
            gamma: d.gamma,
            acceptance_rate: d.acceptance_rate,
            eloc_autocorrelation: d.eloc_autocorrelation,
            kept_modes: d.kept_modes,
            chain_samples: d.chain_samples.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
        }
    }
}

/// One line of `nrep.csv`, shared by quantum and classical baselines.
/// `anneal_param` is `T` for t-VMC and the sweep count for SA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrepRow {
    pub source: String,
    pub realization: usize,
    pub instance_seed: u64,
    pub anneal_param: f64,
    pub p_success: Option<f64>,
    pub p_success_err: Option<f64>,
    pub n_rep: Option<f64>,
}

/// One line of the ensemble `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub realization: usize,
    pub instance_seed: u64,
    pub total_time: f64,
    pub status: String,
    pub e_final: Option<f64>,
    pub e_final_err: Option<f64>,
    pub e_residual: Option<f64>,
    pub e_residual_err: Option<f64>,
    pub p_success: Option<f64>,
    pub p_success_err: Option<f64>,
    pub n_rep: Option<f64>,
    pub kink_density: Option<f64>,
    pub kink_density_err: Option<f64>,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
