//! Complex two-body Jastrow wavefunction
//! `Ψ(σ) = exp[Σ_i J_i σ_i + Σ_{(i,j)} J_ij σ_i σ_j]`.
//!
//! Amplitudes are only ever handled through the log-amplitude, and ratios
//! through exponent differences.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ProblemInstance, SpinConfig};

/// Which site pairs carry a two-body parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamSupport {
    /// Edges of the problem graph with non-zero coupling.
    #[default]
    GraphEdges,
    /// Every pair `i < j`.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    OneBody(usize),
    TwoBody(usize, usize),
}

/// Position of a parameter in the flat vector: one-body terms first, then
/// two-body terms in pair-list order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamIndex {
    pub kind: ParamKind,
    pub flat_index: usize,
}

/// Pair structure of the ansatz, shared by every parameter vector built on it.
#[derive(Debug, Clone)]
pub struct ParamTopology {
    n_sites: usize,
    support: ParamSupport,
    pairs: Vec<(usize, usize)>,
    /// `site_pairs[i]` lists `(j, pair index)` for every pair containing `i`.
    site_pairs: Vec<Vec<(usize, usize)>>,
    pair_lookup: HashMap<(usize, usize), usize>,
}

impl ParamTopology {
    pub fn new(n_sites: usize, pairs: Vec<(usize, usize)>, support: ParamSupport) -> Result<Self> {
        let mut site_pairs = vec![Vec::new(); n_sites];
        let mut pair_lookup = HashMap::with_capacity(pairs.len());
        for (p, &(i, j)) in pairs.iter().enumerate() {
            if i >= j || j >= n_sites {
                return Err(Error::InvalidInstance(format!("bad parameter pair ({i}, {j})")));
            }
            if pair_lookup.insert((i, j), p).is_some() {
                return Err(Error::InvalidInstance(format!("duplicate parameter pair ({i}, {j})")));
            }
            site_pairs[i].push((j, p));
            site_pairs[j].push((i, p));
        }
        Ok(Self { n_sites, support, pairs, site_pairs, pair_lookup })
    }

    pub fn for_instance(inst: &ProblemInstance, support: ParamSupport) -> Self {
        let n = inst.n_sites();
        let pairs = match support {
            ParamSupport::GraphEdges => inst
                .edges()
                .iter()
                .filter(|e| e.v != 0.0)
                .map(|e| (e.i, e.j))
                .collect(),
            ParamSupport::AllPairs => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        };
        Self::new(n, pairs, support).expect("instance edges are validated")
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn support(&self) -> ParamSupport {
        self.support
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Total parameter count `K = n_sites + n_pairs`.
    pub fn n_params(&self) -> usize {
        self.n_sites + self.pairs.len()
    }

    pub fn index(&self, flat_index: usize) -> Option<ParamIndex> {
        let kind = if flat_index < self.n_sites {
            ParamKind::OneBody(flat_index)
        } else {
            let (i, j) = *self.pairs.get(flat_index - self.n_sites)?;
            ParamKind::TwoBody(i, j)
        };
        Some(ParamIndex { kind, flat_index })
    }

    pub fn flat_index(&self, kind: ParamKind) -> Option<usize> {
        match kind {
            ParamKind::OneBody(i) if i < self.n_sites => Some(i),
            ParamKind::OneBody(_) => None,
            ParamKind::TwoBody(i, j) => {
                let key = if i < j { (i, j) } else { (j, i) };
                self.pair_lookup.get(&key).map(|p| self.n_sites + p)
            }
        }
    }

    /// Log-derivatives `O_k(σ)`: `σ_i` for one-body, `σ_i σ_j` for two-body.
    pub fn o_vector(&self, cfg: &SpinConfig) -> Result<Vec<f64>> {
        self.check(cfg)?;
        let mut out = vec![0.0; self.n_params()];
        self.fill_o(cfg.spins(), &mut out);
        Ok(out)
    }

    pub(crate) fn fill_o(&self, spins: &[i8], out: &mut [f64]) {
        let n = self.n_sites;
        for (o, &s) in out[..n].iter_mut().zip(spins) {
            *o = f64::from(s);
        }
        for (o, &(i, j)) in out[n..].iter_mut().zip(&self.pairs) {
            *o = f64::from(spins[i] * spins[j]);
        }
    }

    fn check(&self, cfg: &SpinConfig) -> Result<()> {
        if cfg.len() != self.n_sites {
            return Err(Error::Dimension { expected: self.n_sites, got: cfg.len() });
        }
        Ok(())
    }
}

/// Complex one- and two-body Jastrow parameters.
#[derive(Debug, Clone)]
pub struct JastrowParams {
    topology: Arc<ParamTopology>,
    values: Vec<Complex64>,
}

impl JastrowParams {
    /// The uniform superposition, exact ground state of `-Σ σ^x`.
    pub fn zeros(topology: Arc<ParamTopology>) -> Self {
        let k = topology.n_params();
        Self { topology, values: vec![Complex64::new(0.0, 0.0); k] }
    }

    pub fn from_values(topology: Arc<ParamTopology>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != topology.n_params() {
            return Err(Error::Dimension { expected: topology.n_params(), got: values.len() });
        }
        Ok(Self { topology, values })
    }

    pub fn topology(&self) -> &Arc<ParamTopology> {
        &self.topology
    }

    pub fn n_sites(&self) -> usize {
        self.topology.n_sites
    }

    pub fn n_params(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn j1(&self) -> &[Complex64] {
        &self.values[..self.topology.n_sites]
    }

    pub fn j2(&self) -> &[Complex64] {
        &self.values[self.topology.n_sites..]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn log_psi(&self, cfg: &SpinConfig) -> Result<Complex64> {
        self.topology.check(cfg)?;
        Ok(self.log_psi_spins(cfg.spins()))
    }

    pub(crate) fn log_psi_spins(&self, spins: &[i8]) -> Complex64 {
        let n = self.topology.n_sites;
        let one: Complex64 = self.values[..n].iter().zip(spins).map(|(j, &s)| j * f64::from(s)).sum();
        let two: Complex64 = self.values[n..]
            .iter()
            .zip(&self.topology.pairs)
            .map(|(j, &(a, b))| j * f64::from(spins[a] * spins[b]))
            .sum();
        one + two
    }

    /// `log Ψ(σ with site flipped) - log Ψ(σ)` in O(degree).
    pub fn log_ratio_flip(&self, cfg: &SpinConfig, site: usize) -> Result<Complex64> {
        self.topology.check(cfg)?;
        if site >= self.topology.n_sites {
            return Err(Error::IndexOutOfRange { index: site, n_sites: self.topology.n_sites });
        }
        Ok(self.log_ratio_flip_spins(cfg.spins(), site))
    }

    #[inline]
    pub(crate) fn log_ratio_flip_spins(&self, spins: &[i8], site: usize) -> Complex64 {
        let n = self.topology.n_sites;
        let mut field = self.values[site];
        for &(j, p) in &self.topology.site_pairs[site] {
            field += self.values[n + p] * f64::from(spins[j]);
        }
        field * (-2.0 * f64::from(spins[site]))
    }

    /// Real part of the flip log-ratio, all that the Metropolis test needs.
    #[inline]
    pub(crate) fn log_ratio_flip_re(&self, spins: &[i8], site: usize) -> f64 {
        let n = self.topology.n_sites;
        let mut field = self.values[site].re;
        for &(j, p) in &self.topology.site_pairs[site] {
            field += self.values[n + p].re * f64::from(spins[j]);
        }
        -2.0 * f64::from(spins[site]) * field
    }

    /// `E_loc(σ) = <σ|H(γ)|Ψ>/<σ|Ψ>` for
    /// `H(γ) = -γ Σ σ^x + (1-γ) Σ V_ij σ^z_i σ^z_j`.
    pub fn local_energy(&self, cfg: &SpinConfig, inst: &ProblemInstance, gamma: f64) -> Result<Complex64> {
        self.topology.check(cfg)?;
        if inst.n_sites() != self.topology.n_sites {
            return Err(Error::Dimension { expected: self.topology.n_sites, got: inst.n_sites() });
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!("gamma {gamma} outside [0, 1]")));
        }
        Ok(self.local_energy_spins(cfg.spins(), gamma, inst.energy_of(cfg.spins())))
    }

    /// Local energy given the precomputed classical energy of `spins`.
    pub(crate) fn local_energy_spins(&self, spins: &[i8], gamma: f64, classical: f64) -> Complex64 {
        let mut eloc = Complex64::new((1.0 - gamma) * classical, 0.0);
        if gamma != 0.0 {
            let flips: Complex64 = (0..self.topology.n_sites)
                .map(|i| self.log_ratio_flip_spins(spins, i).exp())
                .sum();
            eloc -= flips * gamma;
        }
        eloc
    }

    /// Parameter snapshot: `[[re, im], ...]` in flat-index order.
    pub fn to_snapshot_json(&self) -> Result<String> {
        let pairs: Vec<[f64; 2]> = self.values.iter().map(|z| [z.re, z.im]).collect();
        Ok(serde_json::to_string(&pairs)?)
    }

    pub fn from_snapshot_json(topology: Arc<ParamTopology>, text: &str) -> Result<Self> {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
        Self::from_values(topology, pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}
