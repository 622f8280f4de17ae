//! Ising problem instances: coupling graphs, disorder ensembles and classical
//! energies.
//!
//! A problem Hamiltonian is `H_p = Σ_{i<j} V_ij σ_i σ_j` over an explicit edge
//! list. Generators are pure functions of their parameters and a 64-bit seed;
//! every coupling is drawn from its own ChaCha stream keyed by the site pair,
//! so an instance does not depend on the order in which edges are visited.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{child_seed, stream_rng};

const RI1D_SALT: u64 = 0x5249_3144;
const SK_SALT: u64 = 0x534B;
const CHIMERA_SALT: u64 = 0x4348_494D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "RI1D")]
    Ri1d,
    #[serde(rename = "SK")]
    Sk,
    #[serde(rename = "CHIMERA")]
    Chimera,
    #[serde(rename = "CUSTOM")]
    Custom,
}

/// How Chimera couplers are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChimeraCoupling {
    /// Uniform ±1.
    Pm1,
    /// Standard normal.
    #[default]
    Normal,
}

/// Generator parameters recorded alongside Chimera instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChimeraShape {
    pub m: usize,
    pub n: usize,
    pub coupling: ChimeraCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

/// A classical spin configuration with entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidInstance(format!("spin value {bad} is not ±1")));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Configuration encoded by the low `n` bits of `bits`; a set bit means
    /// spin down.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self((0..n).map(|i| if (bits >> i) & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| if s < 0 { acc | (1 << i) } else { acc })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

/// Coupling graph plus disorder provenance.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    n_sites: usize,
    edges: Vec<Edge>,
    family: Family,
    seed: u64,
    chimera: Option<ChimeraShape>,
    /// `adjacency[i]` lists `(j, V_ij)` for every edge touching `i`.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites
            && self.family == other.family
            && self.seed == other.seed
            && self.chimera == other.chimera
            && self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| a.i == b.i && a.j == b.j && a.v.to_bits() == b.v.to_bits())
    }
}

impl ProblemInstance {
    /// Validates and canonicalizes (sorts) an edge list.
    pub fn new(n_sites: usize, mut edges: Vec<Edge>, family: Family, seed: u64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSize("an instance needs at least one site".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.i >= e.j {
                return Err(Error::InvalidInstance(format!("edge ({}, {}) must have i < j", e.i, e.j)));
            }
            if e.j >= n_sites {
                return Err(Error::IndexOutOfRange { index: e.j, n_sites });
            }
            if !e.v.is_finite() {
                return Err(Error::InvalidInstance(format!("coupling on ({}, {}) is not finite", e.i, e.j)));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidInstance(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
        }
        edges.sort_by_key(|e| (e.i, e.j));
        let mut adjacency = vec![Vec::new(); n_sites];
        for e in &edges {
            adjacency[e.i].push((e.j, e.v));
            adjacency[e.j].push((e.i, e.v));
        }
        Ok(Self { n_sites, edges, family, seed, chimera: None, adjacency })
    }

    /// A custom instance from `(i, j, V_ij)` triples.
    pub fn custom(n_sites: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = edges.iter().map(|&(i, j, v)| Edge { i, j, v }).collect();
        Self::new(n_sites, edges, Family::Custom, 0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chimera_shape(&self) -> Option<ChimeraShape> {
        self.chimera
    }

    pub fn neighbors(&self, site: usize) -> &[(usize, f64)] {
        &self.adjacency[site]
    }

    /// True when the edge set is exactly the open chain `(i, i+1)`.
    pub fn is_chain(&self) -> bool {
        self.n_sites >= 2
            && self.edges.len() == self.n_sites - 1
            && self.edges.iter().enumerate().all(|(k, e)| e.i == k && e.j == k + 1)
    }

    /// Chain bond couplings `V_{i,i+1}`, or an error for other topologies.
    pub fn chain_couplings(&self) -> Result<Vec<f64>> {
        if !self.is_chain() {
            return Err(Error::UnsupportedTopology(
                "operation requires an open nearest-neighbour chain".into(),
            ));
        }
        Ok(self.edges.iter().map(|e| e.v).collect())
    }

    /// `Σ_edges V_ij σ_i σ_j` without length checks.
    pub fn energy_of(&self, spins: &[i8]) -> f64 {
        self.edges
            .iter()
            .map(|e| e.v * f64::from(spins[e.i] * spins[e.j]))
            .sum()
    }

    /// `Σ_j V_ij σ_j`, the local field on `site`.
    pub fn local_field(&self, spins: &[i8], site: usize) -> f64 {
        self.adjacency[site].iter().map(|&(j, v)| v * f64::from(spins[j])).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// On-disk instance layout:
/// `{"family": "SK", "n_sites": 24, "seed": 7, "edges": [[0, 1, 0.1234], ...]}`.
///
/// Couplings are written with the shortest decimal that parses back to the
/// same double, so a save/load cycle is bit-exact.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    family: Family,
    n_sites: usize,
    seed: u64,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chimera: Option<ChimeraShape>,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(inst: &ProblemInstance) -> Self {
        Self {
            family: inst.family,
            n_sites: inst.n_sites,
            seed: inst.seed,
            edges: inst.edges.iter().map(|e| (e.i, e.j, e.v)).collect(),
            chimera: inst.chimera,
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let edges = file.edges.into_iter().map(|(i, j, v)| Edge { i, j, v }).collect();
        let mut inst = ProblemInstance::new(file.n_sites, edges, file.family, file.seed)?;
        inst.chimera = file.chimera;
        Ok(inst)
    }
}

fn pair_stream(i: usize, j: usize) -> u64 {
    ((i as u64) << 32) | j as u64
}

/// 1D random-bond chain: `V_{i,i+1} = -v_i`, `v_i` uniform on `[0, 1)`.
pub fn gen_ri1d(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("RI1D needs n >= 2, got {n}")));
    }
    let key = child_seed(seed, &[RI1D_SALT]);
    let edges = (0..n - 1)
        .map(|i| {
            let v: f64 = stream_rng(key, pair_stream(i, i + 1)).random();
            Edge { i, j: i + 1, v: -v }
        })
        .collect();
    ProblemInstance::new(n, edges, Family::Ri1d, seed)
}

/// Sherrington-Kirkpatrick: complete graph with `V_ij = v_ij / sqrt(n)`,
/// `v_ij` standard normal.
pub fn gen_sk(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("SK needs n >= 2, got {n}")));
    }
    let key = child_seed(seed, &[SK_SALT]);
    let scale = 1.0 / (n as f64).sqrt();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = stream_rng(key, pair_stream(i, j)).sample(StandardNormal);
            edges.push(Edge { i, j, v: v * scale });
        }
    }
    ProblemInstance::new(n, edges, Family::Sk, seed)
}

/// Site index of qubit `k` (0..8) in unit cell `(row, col)` of an `m x n`
/// Chimera lattice. Qubits 0..4 form the partition coupled vertically,
/// 4..8 the partition coupled horizontally.
pub fn chimera_site(n: usize, row: usize, col: usize, k: usize) -> usize {
    8 * (row * n + col) + k
}

/// Chimera graph of `m x n` K_{4,4} unit cells.
pub fn gen_chimera(m: usize, n: usize, coupling: ChimeraCoupling, seed: u64) -> Result<ProblemInstance> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidSize(format!("Chimera needs m, n >= 1, got {m}x{n}")));
    }
    let key = child_seed(seed, &[CHIMERA_SALT]);
    let draw = |i: usize, j: usize| -> f64 {
        let mut rng = stream_rng(key, pair_stream(i, j));
        match coupling {
            ChimeraCoupling::Normal => rng.sample(StandardNormal),
            ChimeraCoupling::Pm1 => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    };
    let mut pairs = Vec::new();
    for row in 0..m {
        for col in 0..n {
            for a in 0..4 {
                for b in 4..8 {
                    pairs.push((chimera_site(n, row, col, a), chimera_site(n, row, col, b)));
                }
            }
            if col + 1 < n {
                for k in 4..8 {
                    pairs.push((chimera_site(n, row, col, k), chimera_site(n, row, col + 1, k)));
                }
            }
            if row + 1 < m {
                for k in 0..4 {
                    pairs.push((chimera_site(n, row, col, k), chimera_site(n, row + 1, col, k)));
                }
            }
        }
    }
    let edges = pairs.into_iter().map(|(i, j)| Edge { i, j, v: draw(i, j) }).collect();
    let mut inst = ProblemInstance::new(8 * m * n, edges, Family::Chimera, seed)?;
    inst.chimera = Some(ChimeraShape { m, n, coupling });
    Ok(inst)
}

/// `Σ_edges V_ij σ_i σ_j`.
pub fn classical_energy(inst: &ProblemInstance, cfg: &SpinConfig) -> Result<f64> {
    if cfg.len() != inst.n_sites {
        return Err(Error::Dimension { expected: inst.n_sites, got: cfg.len() });
    }
    Ok(inst.energy_of(cfg.spins()))
}
