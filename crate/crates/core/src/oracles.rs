//! Exact and classical reference solvers: dense Schrödinger propagation,
//! exhaustive ground states, free-fermion chains and simulated annealing.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ProblemInstance, SpinConfig};
use crate::jastrow::JastrowParams;
use crate::sampler::{config_kinks, hits_ground};
use crate::seed::{child_seed, stream_rng};
use crate::tvmc::Schedule;

/// Largest system propagated as a dense state vector.
pub const MAX_DENSE_SITES: usize = 20;
/// Largest system enumerated configuration by configuration.
pub const MAX_ENUMERATION_SITES: usize = 30;
/// Widest elimination frontier accepted by the sparse ground-state solver.
pub const MAX_FRONTIER_WIDTH: usize = 22;
/// Ground configurations kept explicitly; the degeneracy is always counted.
pub const MAX_STORED_GROUND: usize = 4096;

/// Normalized state vector over `2^N` configurations; bit `i` of the index
/// set means `σ_i = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_sites: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn uniform(n_sites: usize) -> Result<Self> {
        check_dense_size(n_sites)?;
        let dim = 1usize << n_sites;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self { n_sites, amplitudes: vec![a; dim] })
    }

    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dense_size(n_sites)?;
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::Dimension { expected: 1 << n_sites, got: amplitudes.len() });
        }
        let mut state = Self { n_sites, amplitudes };
        state.normalize()?;
        Ok(state)
    }

    /// `Ψ(σ)/‖Ψ‖` for a Jastrow state.
    pub fn from_jastrow(params: &JastrowParams) -> Result<Self> {
        let n = params.n_sites();
        check_dense_size(n)?;
        let logs: Vec<Complex64> =
            (0..1u64 << n).map(|b| params.log_psi_spins(SpinConfig::from_bits(b, n).spins())).collect();
        let max = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        Self::from_amplitudes(n, logs.iter().map(|l| (l - max).exp()).collect())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn normalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument(format!("state norm {norm} cannot be normalized")));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn check_dense_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_SITES {
        return Err(Error::Resource(format!("dense states need 1..={MAX_DENSE_SITES} sites, got {n}")));
    }
    Ok(())
}

/// Classical energy of every basis configuration.
pub fn classical_diagonal(inst: &ProblemInstance) -> Result<Vec<f64>> {
    let n = inst.n_sites();
    check_dense_size(n)?;
    Ok((0..1u64 << n).map(|b| inst.energy_of(SpinConfig::from_bits(b, n).spins())).collect())
}

/// `out = H(γ) ψ` with `H(γ) = -γ Σ σˣ + (1-γ) H_p`.
fn apply_hamiltonian(n: usize, diag: &[f64], gamma: f64, psi: &[Complex64], out: &mut [Complex64]) {
    for (b, o) in out.iter_mut().enumerate() {
        let mut flips = Complex64::new(0.0, 0.0);
        for i in 0..n {
            flips += psi[b ^ (1 << i)];
        }
        *o = psi[b] * ((1.0 - gamma) * diag[b]) - flips * gamma;
    }
}

/// Observables of a dense state under `H(γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactObservables {
    /// `<ψ|H(γ)|ψ>`.
    pub energy: f64,
    pub energy_density: f64,
    /// `<H_p>/N`.
    pub classical_density: f64,
    pub kink_density: Option<f64>,
    pub p_success: Option<f64>,
}

pub fn exact_observables(
    state: &DenseState,
    inst: &ProblemInstance,
    gamma: f64,
    ground: Option<&GroundSolution>,
) -> Result<ExactObservables> {
    if state.n_sites != inst.n_sites() {
        return Err(Error::Dimension { expected: inst.n_sites(), got: state.n_sites });
    }
    let diag = classical_diagonal(inst)?;
    Ok(observables_with_diag(state, inst, &diag, gamma, ground.map(|g| g.e_min)))
}

fn observables_with_diag(
    state: &DenseState,
    inst: &ProblemInstance,
    diag: &[f64],
    gamma: f64,
    e_min: Option<f64>,
) -> ExactObservables {
    let n = state.n_sites;
    let mut h_psi = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    apply_hamiltonian(n, diag, gamma, &state.amplitudes, &mut h_psi);
    let energy: f64 = state.amplitudes.iter().zip(&h_psi).map(|(a, h)| (a.conj() * h).re).sum();
    let probs = state.probabilities();
    let classical: f64 = probs.iter().zip(diag).map(|(p, e)| p * e).sum();
    let kink_density = inst.is_chain().then(|| {
        probs
            .iter()
            .enumerate()
            .map(|(b, p)| p * config_kinks(SpinConfig::from_bits(b as u64, n).spins()))
            .sum()
    });
    let p_success =
        e_min.map(|e0| probs.iter().zip(diag).filter(|(_, &e)| hits_ground(e, e0)).map(|(p, _)| p).sum());
    ExactObservables {
        energy,
        energy_density: energy / n as f64,
        classical_density: classical / n as f64,
        kink_density,
        p_success,
    }
}

/// Observables recorded during an exact propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactPoint {
    pub step: usize,
    pub t: f64,
    pub gamma: f64,
    pub observables: ExactObservables,
    /// `|‖ψ‖ - 1|` before renormalization.
    pub norm_drift: f64,
}

#[derive(Debug, Clone)]
pub struct ExactTrajectory {
    pub points: Vec<ExactPoint>,
    pub final_state: DenseState,
}

/// RK4 integration of `i ψ̇ = H(Γ(t)) ψ` from the uniform superposition, on
/// the same time grid as the t-VMC integrator. Observables are recorded
/// every `output_stride` steps and at `T`.
pub fn exact_propagate(
    inst: &ProblemInstance,
    schedule: &Schedule,
    dt: f64,
    output_stride: usize,
    e_min: Option<f64>,
) -> Result<ExactTrajectory> {
    let n = inst.n_sites();
    check_dense_size(n)?;
    if output_stride == 0 {
        return Err(Error::InvalidArgument("output_stride must be positive".into()));
    }
    let grid = schedule.time_grid(dt)?;
    let diag = classical_diagonal(inst)?;
    let mut state = DenseState::uniform(n)?;
    let dim = state.amplitudes.len();
    let zero = Complex64::new(0.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    let mut points = Vec::new();
    let mut drift = 0.0;
    let n_steps = grid.len() - 1;
    let record = |step: usize, t: f64, state: &DenseState, drift: f64| ExactPoint {
        step,
        t,
        gamma: schedule.gamma(t),
        observables: observables_with_diag(state, inst, &diag, schedule.gamma(t), e_min),
        norm_drift: drift,
    };
    for step in 0..n_steps {
        let (t0, t1) = (grid[step], grid[step + 1]);
        if step % output_stride == 0 {
            points.push(record(step, t0, &state, drift));
        }
        let h = t1 - t0;
        let tm = t0 + 0.5 * h;
        let psi = &state.amplitudes;
        let deriv = |gamma: f64, input: &[Complex64], out: &mut [Complex64]| {
            apply_hamiltonian(n, &diag, gamma, input, out);
            out.iter_mut().for_each(|x| *x *= minus_i);
        };
        deriv(schedule.gamma(t0), psi, &mut k1);
        for b in 0..dim {
            tmp[b] = psi[b] + k1[b] * (0.5 * h);
        }
        deriv(schedule.gamma(tm), &tmp, &mut k2);
        for b in 0..dim {
            tmp[b] = psi[b] + k2[b] * (0.5 * h);
        }
        deriv(schedule.gamma(tm), &tmp, &mut k3);
        for b in 0..dim {
            tmp[b] = psi[b] + k3[b] * h;
        }
        deriv(schedule.gamma(t1), &tmp, &mut k4);
        for b in 0..dim {
            state.amplitudes[b] += (k1[b] + (k2[b] + k3[b]) * 2.0 + k4[b]) * (h / 6.0);
        }
        drift = (state.norm() - 1.0).abs();
        state.normalize()?;
    }
    points.push(record(n_steps, schedule.total_time, &state, drift));
    Ok(ExactTrajectory { points, final_state: state })
}

/// Classical ground energy and (part of) its degenerate manifold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundSolution {
    pub e_min: f64,
    pub ground_set: Vec<SpinConfig>,
    pub degeneracy: u64,
    /// True when `ground_set` lists every ground configuration.
    pub complete: bool,
}

impl GroundSolution {
    pub fn e_min_per_site(&self, n_sites: usize) -> f64 {
        self.e_min / n_sites as f64
    }
}

/// Exact classical ground state: closed form for open chains, frontier
/// elimination for sparse graphs and exhaustive enumeration up to
/// [`MAX_ENUMERATION_SITES`].
pub fn brute_force_ground(inst: &ProblemInstance) -> Result<GroundSolution> {
    let n = inst.n_sites();
    if inst.is_chain() {
        return Ok(chain_ground(inst));
    }
    if n <= 24 {
        return Ok(enumerate_ground(inst));
    }
    let order: Vec<usize> = (0..n).collect();
    if n <= 128 && frontier_width(inst, &order) <= MAX_FRONTIER_WIDTH {
        return frontier_ground(inst, &order);
    }
    if n <= MAX_ENUMERATION_SITES {
        return Ok(enumerate_ground(inst));
    }
    Err(Error::Resource(format!(
        "no exact ground-state method for {n} sites with frontier width {}",
        frontier_width(inst, &order)
    )))
}

fn chain_ground(inst: &ProblemInstance) -> GroundSolution {
    let n = inst.n_sites();
    let couplings: Vec<f64> = inst.edges().iter().map(|e| e.v).collect();
    let e_min = -couplings.iter().map(|v| v.abs()).sum::<f64>();
    let free_bonds = couplings.iter().filter(|v| **v == 0.0).count();
    let mut base = vec![1i8; n];
    for (i, v) in couplings.iter().enumerate() {
        base[i + 1] = if *v > 0.0 { -base[i] } else { base[i] };
    }
    let degeneracy = 2u64.saturating_pow(1 + free_bonds as u32);
    let free: Vec<usize> = couplings.iter().enumerate().filter(|(_, v)| **v == 0.0).map(|(i, _)| i).collect();
    let complete = degeneracy as usize <= MAX_STORED_GROUND;
    let mut ground_set = Vec::new();
    let patterns = if complete { 1u64 << free.len() } else { 1 };
    for mask in 0..patterns {
        let mut spins = base.clone();
        for (bit, &bond) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                spins[bond + 1..].iter_mut().for_each(|s| *s = -*s);
            }
        }
        let cfg = SpinConfig::new(spins).expect("spins are ±1");
        ground_set.push(cfg.flipped());
        ground_set.push(cfg);
    }
    GroundSolution { e_min, ground_set, degeneracy, complete }
}

fn enumerate_ground(inst: &ProblemInstance) -> GroundSolution {
    let n = inst.n_sites();
    // σ_{n-1} = +1 is fixed; the global flip supplies the other half
    let free = n - 1;
    let mut spins = vec![1i8; n];
    let mut energy = inst.energy_of(&spins);
    let mut e_min = energy;
    let mut half: Vec<u64> = vec![0];
    let mut half_count: u64 = 1;
    let mut bits: u64 = 0;
    for k in 1..(1u64 << free) {
        let site = k.trailing_zeros() as usize;
        energy -= 2.0 * f64::from(spins[site]) * inst.local_field(&spins, site);
        spins[site] = -spins[site];
        bits ^= 1 << site;
        if hits_ground(energy, e_min) {
            half_count += 1;
            if half.len() < MAX_STORED_GROUND {
                half.push(bits);
            }
        } else if energy < e_min {
            e_min = energy;
            half.clear();
            half.push(bits);
            half_count = 1;
        }
    }
    // refresh e_min from an exact evaluation to drop accumulated rounding
    let e_min = inst.energy_of(SpinConfig::from_bits(half[0], n).spins());
    let degeneracy = 2 * half_count;
    let mut ground_set = Vec::with_capacity(2 * half.len());
    for &b in &half {
        let cfg = SpinConfig::from_bits(b, n);
        ground_set.push(cfg.flipped());
        ground_set.push(cfg);
    }
    GroundSolution { e_min, ground_set, degeneracy, complete: half_count as usize == half.len() }
}

/// Largest number of sites simultaneously held when eliminating in `order`.
pub fn frontier_width(inst: &ProblemInstance, order: &[usize]) -> usize {
    let last = last_neighbor_position(inst, order);
    let mut width: usize = 0;
    let mut active: usize = 0;
    for pos in 0..order.len() {
        active += 1;
        width = width.max(active);
        active -= (0..=pos).filter(|&p| last[p] == pos).count();
    }
    width
}

fn last_neighbor_position(inst: &ProblemInstance, order: &[usize]) -> Vec<usize> {
    let mut position = vec![0; order.len()];
    for (p, &site) in order.iter().enumerate() {
        position[site] = p;
    }
    order
        .iter()
        .enumerate()
        .map(|(p, &site)| inst.neighbors(site).iter().map(|&(j, _)| position[j]).fold(p, usize::max))
        .collect()
}

#[derive(Clone, Copy)]
struct Cell {
    energy: f64,
    count: u64,
    witness: u128,
}

/// Sequential variable elimination: the table is indexed by the spins of
/// the sites that still have unprocessed neighbours.
fn frontier_ground(inst: &ProblemInstance, order: &[usize]) -> Result<GroundSolution> {
    let n = inst.n_sites();
    let last = last_neighbor_position(inst, order);
    let mut position = vec![0; n];
    for (p, &site) in order.iter().enumerate() {
        position[site] = p;
    }
    let mut active: Vec<usize> = Vec::new();
    let mut table = vec![Cell { energy: 0.0, count: 1, witness: 0 }];
    for (pos, &site) in order.iter().enumerate() {
        let slot: Vec<(usize, f64)> = inst
            .neighbors(site)
            .iter()
            .filter(|&&(j, _)| position[j] < pos)
            .map(|&(j, v)| (active.iter().position(|&a| a == j).expect("earlier neighbour is active"), v))
            .collect();
        let mut grown = Vec::with_capacity(table.len() * 2);
        for spin_bit in 0..2u128 {
            let s_new = if spin_bit == 1 { -1.0 } else { 1.0 };
            for (idx, cell) in table.iter().enumerate() {
                let coupling: f64 = slot
                    .iter()
                    .map(|&(a, v)| v * if idx >> a & 1 == 1 { -1.0 } else { 1.0 })
                    .sum();
                grown.push(Cell {
                    energy: cell.energy + s_new * coupling,
                    count: cell.count,
                    witness: cell.witness | spin_bit << site,
                });
            }
        }
        // the new site occupies the highest bit
        active.push(site);
        let keep: Vec<usize> = (0..active.len()).filter(|&a| last[position[active[a]]] > pos).collect();
        if keep.len() == active.len() {
            table = grown;
            continue;
        }
        if keep.len() > MAX_FRONTIER_WIDTH {
            return Err(Error::Resource("elimination frontier too wide".into()));
        }
        let mut reduced: Vec<Option<Cell>> = vec![None; 1 << keep.len()];
        for (idx, cell) in grown.into_iter().enumerate() {
            let target = keep.iter().enumerate().fold(0usize, |acc, (k, &a)| acc | ((idx >> a & 1) << k));
            reduced[target] = Some(match reduced[target] {
                None => cell,
                Some(best) => combine(best, cell),
            });
        }
        table = reduced.into_iter().map(|c| c.expect("every reduced index is reached")).collect();
        active = keep.iter().map(|&a| active[a]).collect();
    }
    let best = table.into_iter().reduce(combine).expect("table is nonempty");
    let spins: Vec<i8> = (0..n).map(|i| if best.witness >> i & 1 == 1 { -1 } else { 1 }).collect();
    let cfg = SpinConfig::new(spins).expect("spins are ±1");
    let e_min = inst.energy_of(cfg.spins());
    let complete = best.count == 2;
    Ok(GroundSolution { e_min, ground_set: vec![cfg.flipped(), cfg], degeneracy: best.count, complete })
}

fn combine(a: Cell, b: Cell) -> Cell {
    if hits_ground(a.energy, b.energy) {
        Cell { count: a.count.saturating_add(b.count), ..if b.energy < a.energy { b } else { a } }
    } else if b.energy < a.energy {
        b
    } else {
        a
    }
}

/// Exact chain observables at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FermionPoint {
    pub step: usize,
    pub t: f64,
    pub gamma: f64,
    pub energy_density: f64,
    pub kink_density: f64,
}

/// Majorana covariance of an open transverse-field chain, `M_kl = <i γ_k γ_l>`,
/// evolved under the quadratic Hamiltonian `(i/4) Σ A_kl γ_k γ_l`.
struct MajoranaChain {
    /// Bond couplings `V_{i,i+1}`.
    couplings: Vec<f64>,
    dim: usize,
    m: Vec<f64>,
}

impl MajoranaChain {
    fn ground_of_field(couplings: Vec<f64>) -> Self {
        let n = couplings.len() + 1;
        let dim = 2 * n;
        let mut m = vec![0.0; dim * dim];
        for i in 0..n {
            m[(2 * i) * dim + 2 * i + 1] = -1.0;
            m[(2 * i + 1) * dim + 2 * i] = 1.0;
        }
        Self { couplings, dim, m }
    }

    /// Superdiagonal of the tridiagonal generator `A`.
    fn generator(&self, gamma: f64) -> Vec<f64> {
        (0..self.dim - 1)
            .map(|k| if k % 2 == 0 { 2.0 * gamma } else { -2.0 * (1.0 - gamma) * self.couplings[k / 2] })
            .collect()
    }

    /// `out = A M - M A`.
    fn derivative(dim: usize, a: &[f64], m: &[f64], out: &mut [f64]) {
        let at = |k: usize, l: usize| m[k * dim + l];
        for k in 0..dim {
            for l in 0..dim {
                let mut x = 0.0;
                if k + 1 < dim {
                    x += a[k] * at(k + 1, l);
                }
                if k > 0 {
                    x -= a[k - 1] * at(k - 1, l);
                }
                if l > 0 {
                    x -= at(k, l - 1) * a[l - 1];
                }
                if l + 1 < dim {
                    x += at(k, l + 1) * a[l];
                }
                out[k * dim + l] = x;
            }
        }
    }

    fn step(&mut self, gamma0: f64, gamma_mid: f64, gamma1: f64, h: f64, scratch: &mut [Vec<f64>; 5]) {
        let dim = self.dim;
        let (a0, am, a1) = (self.generator(gamma0), self.generator(gamma_mid), self.generator(gamma1));
        let [k1, k2, k3, k4, tmp] = scratch;
        Self::derivative(dim, &a0, &self.m, k1);
        for (t, (m, k)) in tmp.iter_mut().zip(self.m.iter().zip(k1.iter())) {
            *t = m + 0.5 * h * k;
        }
        Self::derivative(dim, &am, tmp, k2);
        for (t, (m, k)) in tmp.iter_mut().zip(self.m.iter().zip(k2.iter())) {
            *t = m + 0.5 * h * k;
        }
        Self::derivative(dim, &am, tmp, k3);
        for (t, (m, k)) in tmp.iter_mut().zip(self.m.iter().zip(k3.iter())) {
            *t = m + h * k;
        }
        Self::derivative(dim, &a1, tmp, k4);
        for (idx, m) in self.m.iter_mut().enumerate() {
            *m += h / 6.0 * (k1[idx] + 2.0 * (k2[idx] + k3[idx]) + k4[idx]);
        }
    }

    fn observe(&self, gamma: f64) -> (f64, f64) {
        let n = self.couplings.len() + 1;
        let dim = self.dim;
        let field: f64 = (0..n).map(|i| -self.m[(2 * i) * dim + 2 * i + 1]).sum();
        let bonds: Vec<f64> = (0..n - 1).map(|i| -self.m[(2 * i + 1) * dim + 2 * i + 2]).collect();
        let coupling: f64 = bonds.iter().zip(&self.couplings).map(|(zz, v)| v * zz).sum();
        let energy = -gamma * field + (1.0 - gamma) * coupling;
        let kinks: f64 = bonds.iter().map(|zz| 1.0 - zz).sum::<f64>() / (2 * n) as f64;
        (energy / n as f64, kinks)
    }
}

/// Exact energy and kink densities of an open chain via the Jordan-Wigner
/// mapping; cost per step is `O(N²)`.
pub fn free_fermion_propagate(
    inst: &ProblemInstance,
    schedule: &Schedule,
    dt: f64,
    output_stride: usize,
) -> Result<Vec<FermionPoint>> {
    let couplings = inst.chain_couplings()?;
    if output_stride == 0 {
        return Err(Error::InvalidArgument("output_stride must be positive".into()));
    }
    let grid = schedule.time_grid(dt)?;
    let mut chain = MajoranaChain::ground_of_field(couplings);
    let size = chain.dim * chain.dim;
    let mut scratch = [vec![0.0; size], vec![0.0; size], vec![0.0; size], vec![0.0; size], vec![0.0; size]];
    let n_steps = grid.len() - 1;
    let mut points = Vec::new();
    let record = |step: usize, t: f64, chain: &MajoranaChain| {
        let gamma = schedule.gamma(t);
        let (energy_density, kink_density) = chain.observe(gamma);
        FermionPoint { step, t, gamma, energy_density, kink_density }
    };
    for step in 0..n_steps {
        let (t0, t1) = (grid[step], grid[step + 1]);
        if step % output_stride == 0 {
            points.push(record(step, t0, &chain));
        }
        let h = t1 - t0;
        chain.step(schedule.gamma(t0), schedule.gamma(t0 + 0.5 * h), schedule.gamma(t1), h, &mut scratch);
    }
    points.push(record(n_steps, schedule.total_time, &chain));
    Ok(points)
}

/// Inverse-temperature ramp for simulated annealing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self { beta_start: 0.1, beta_end: 3.0 }
    }
}

impl BetaSchedule {
    /// Linear in the sweep index, hitting both ends.
    pub fn beta(&self, sweep: usize, n_sweeps: usize) -> f64 {
        if n_sweeps <= 1 {
            return self.beta_end;
        }
        self.beta_start + (self.beta_end - self.beta_start) * sweep as f64 / (n_sweeps - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaOutcome {
    pub config: SpinConfig,
    pub energy: f64,
    /// Whether the final configuration attains `e_min`, when one was given.
    pub hit: Option<bool>,
}

/// Metropolis single-flip annealing on `exp(-β H_p)` from a uniformly random
/// configuration; `n_sweeps = 0` returns that random configuration.
pub fn simulated_annealing(
    inst: &ProblemInstance,
    n_sweeps: usize,
    betas: BetaSchedule,
    e_min: Option<f64>,
    seed: u64,
) -> SaOutcome {
    let n = inst.n_sites();
    let mut rng = stream_rng(seed, 0);
    let mut spins: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    for sweep in 0..n_sweeps {
        let beta = betas.beta(sweep, n_sweeps);
        for site in 0..n {
            let delta = -2.0 * f64::from(spins[site]) * inst.local_field(&spins, site);
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                spins[site] = -spins[site];
            }
        }
    }
    let energy = inst.energy_of(&spins);
    SaOutcome {
        config: SpinConfig::new(spins).expect("spins are ±1"),
        energy,
        hit: e_min.map(|e0| hits_ground(energy, e0)),
    }
}

/// Fraction of `repeats` independent anneals, seeded with the children of
/// `seed`, that end in a ground configuration.
pub fn sa_success_frequency(
    inst: &ProblemInstance,
    n_sweeps: usize,
    betas: BetaSchedule,
    e_min: f64,
    repeats: usize,
    seed: u64,
) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("at least one SA repeat is required".into()));
    }
    let hits = (0..repeats as u64)
        .filter(|&r| simulated_annealing(inst, n_sweeps, betas, Some(e_min), child_seed(seed, &[r])).hit == Some(true))
        .count();
    Ok(hits as f64 / repeats as f64)
}
