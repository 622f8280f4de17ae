//! Ground-state solver against independent searches.

use aqc_vmc::instances::{gen_chimera, gen_ri1d, gen_sk, ChimeraCoupling, ProblemInstance, SpinConfig};
use aqc_vmc::oracles::brute_force_ground;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn enumerate(inst: &ProblemInstance) -> (f64, usize) {
    let n = inst.n_sites();
    let energies: Vec<f64> = (0..1u64 << n).map(|b| inst.energy_of(SpinConfig::from_bits(b, n).spins())).collect();
    let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let count = energies.iter().filter(|&&e| e - min <= 1e-9 * (1.0 + min.abs())).count();
    (min, count)
}

/// Single-flip descent from random starts; returns the lowest energy seen.
fn greedy(inst: &ProblemInstance, starts: usize, seed: u64) -> f64 {
    let n = inst.n_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        loop {
            let gains: Vec<f64> = (0..n).map(|i| -2.0 * f64::from(s[i]) * inst.local_field(&s, i)).collect();
            let (i, d) = gains.iter().cloned().enumerate().fold((0, 0.0), |a, b| if b.1 < a.1 { b } else { a });
            if d >= -1e-12 {
                break;
            }
            s[i] = -s[i];
        }
        best = best.min(inst.energy_of(&s));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chain_closed_form_matches_enumeration(seed in 0u64..10_000, n in 2usize..12) {
        let inst = gen_ri1d(n, seed).unwrap();
        let g = brute_force_ground(&inst).unwrap();
        let (min, count) = enumerate(&inst);
        prop_assert!((g.e_min - min).abs() < 1e-9);
        prop_assert_eq!(g.degeneracy as usize, count);
    }

    #[test]
    fn sk_matches_enumeration(seed in 0u64..10_000, n in 3usize..12) {
        let inst = gen_sk(n, seed).unwrap();
        let g = brute_force_ground(&inst).unwrap();
        let (min, count) = enumerate(&inst);
        prop_assert!((g.e_min - min).abs() < 1e-9);
        prop_assert_eq!(g.degeneracy as usize, count);
        for cfg in &g.ground_set {
            prop_assert!((inst.energy_of(cfg.spins()) - min).abs() < 1e-9);
        }
    }
}

#[test]
fn sk16_greedy_descent_never_beats_the_ground_state() {
    for seed in 0..5 {
        let inst = gen_sk(16, seed).unwrap();
        let g = brute_force_ground(&inst).unwrap();
        let found = greedy(&inst, 400, seed);
        assert!(found >= g.e_min - 1e-9);
        assert!((found - g.e_min).abs() < 1e-9, "descent from 400 starts should reach {} (got {found})", g.e_min);
    }
}

#[test]
fn chimera_cell_pair_matches_enumeration() {
    for coupling in [ChimeraCoupling::Pm1, ChimeraCoupling::Normal] {
        let inst = gen_chimera(1, 2, coupling, 5).unwrap();
        let g = brute_force_ground(&inst).unwrap();
        let (min, count) = enumerate(&inst);
        assert!((g.e_min - min).abs() < 1e-9);
        assert_eq!(g.degeneracy as usize, count);
    }
}

#[test]
fn chimera_32_sites_is_not_beaten_by_descent() {
    let inst = gen_chimera(2, 2, ChimeraCoupling::Normal, 11).unwrap();
    let g = brute_force_ground(&inst).unwrap();
    assert!(greedy(&inst, 2000, 1) >= g.e_min - 1e-9);
    for cfg in &g.ground_set {
        assert!((inst.energy_of(cfg.spins()) - g.e_min).abs() < 1e-9);
    }
}
