//! Energies against a Hamiltonian assembled from explicit Pauli matrices.

use std::sync::Arc;

use aqc_vmc::instances::{gen_sk, ProblemInstance, SpinConfig};
use aqc_vmc::jastrow::{JastrowParams, ParamSupport, ParamTopology};
use aqc_vmc::observables::energy_density;
use aqc_vmc::oracles::{exact_observables, DenseState};
use aqc_vmc::sampler::{exact_stats, sample_batch, Probes, SamplingPlan};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// `op` on `site`, identity elsewhere; site `i` is bit `i` of the basis index,
/// so it is the rightmost factor for `i = 0`.
fn embed(op: &DMatrix<C>, site: usize, n: usize) -> DMatrix<C> {
    let mut out = DMatrix::from_element(1, 1, c(1.0));
    for k in (0..n).rev() {
        let factor = if k == site { op.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

fn pauli_hamiltonian(inst: &ProblemInstance, gamma: f64) -> DMatrix<C> {
    let n = inst.n_sites();
    // bit 0 is spin up
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n {
        h -= embed(&sx, i, n) * c(gamma);
    }
    for e in inst.edges() {
        h += embed(&sz, e.i, n) * embed(&sz, e.j, n) * c((1.0 - gamma) * e.v);
    }
    h
}

fn jastrow(inst: &ProblemInstance, raw: &[(f64, f64)]) -> JastrowParams {
    let topo = Arc::new(ParamTopology::for_instance(inst, ParamSupport::AllPairs));
    let values = raw.iter().cycle().take(topo.n_params()).map(|&(a, b)| C::new(a, b)).collect();
    JastrowParams::from_values(topo, values).unwrap()
}

fn dense_energy(h: &DMatrix<C>, params: &JastrowParams) -> f64 {
    let psi = DVector::from_vec(DenseState::from_jastrow(params).unwrap().amplitudes().to_vec());
    (psi.adjoint() * h * &psi)[(0, 0)].re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_energy_matches_pauli_matrices(
        seed in 0u64..1000,
        gamma in 0.0f64..=1.0,
        raw in prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), 10),
    ) {
        let inst = gen_sk(4, seed).unwrap();
        let params = jastrow(&inst, &raw);
        let reference = dense_energy(&pauli_hamiltonian(&inst, gamma), &params);
        let stats = exact_stats(&params, &inst, gamma, Probes::default()).unwrap();
        prop_assert!((stats.energy().mean - reference).abs() < 1e-10 * (1.0 + reference.abs()));
        let state = DenseState::from_jastrow(&params).unwrap();
        let obs = exact_observables(&state, &inst, gamma, None).unwrap();
        prop_assert!((obs.energy - reference).abs() < 1e-10 * (1.0 + reference.abs()));
    }

    #[test]
    fn local_energy_is_row_of_h_psi(
        seed in 0u64..1000,
        gamma in 0.0f64..=1.0,
        raw in prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), 10),
        bits in 0u64..16,
    ) {
        let inst = gen_sk(4, seed).unwrap();
        let params = jastrow(&inst, &raw);
        let psi: Vec<C> = (0..16u64).map(|b| params.log_psi(&SpinConfig::from_bits(b, 4)).unwrap().exp()).collect();
        let h = pauli_hamiltonian(&inst, gamma);
        let h_psi: C = (0..16).map(|b| h[(bits as usize, b)] * psi[b]).sum();
        let expected = h_psi / psi[bits as usize];
        let eloc = params.local_energy(&SpinConfig::from_bits(bits, 4), &inst, gamma).unwrap();
        prop_assert!((eloc - expected).norm() < 1e-9 * (1.0 + expected.norm()));
    }
}

#[test]
fn sampled_energy_within_four_errors_of_dense_value() {
    let inst = gen_sk(8, 77).unwrap();
    let raw: Vec<(f64, f64)> = (0..36).map(|k| (0.3 * (k as f64 * 0.9).sin(), 0.3 * (k as f64 * 0.4).cos())).collect();
    let params = jastrow(&inst, &raw);
    let gamma = 0.5;
    let state = DenseState::from_jastrow(&params).unwrap();
    let reference = exact_observables(&state, &inst, gamma, None).unwrap().energy_density;
    let plan = SamplingPlan { n_chains: 4, burn_in_sweeps: 80, n_samples: 40_000, thin_sweeps: 1 };
    let stats = sample_batch(&params, &inst, gamma, &plan, 3, Probes::default()).unwrap();
    let e = energy_density(&stats, 8).unwrap();
    let err = e.error.expect("enough bins");
    assert!((e.mean - reference).abs() < 4.0 * err, "{} vs {reference} ± {err}", e.mean);
}
