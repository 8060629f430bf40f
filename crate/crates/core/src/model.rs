//! Disorder sampling and dense Hamiltonians.
//!
//! Basis convention: bit `k` of a basis index is spin `k`, and a bit value `b`
//! corresponds to the `σ^z` eigenvalue `1 - 2b`. The all-zeros index is the
//! all-up state.

use serde::{Deserialize, Serialize};

use crate::chimera::ChimeraGraph;
use crate::error::{Error, Result};
use crate::rng::Stream;

pub const DEFAULT_MAX_SPINS: usize = 14;

/// One sample of couplings `J_ij` (one per graph edge, in graph edge order)
/// and longitudinal fields `h_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub n_spins: usize,
    pub edges: Vec<(usize, usize)>,
    pub j_couplings: Vec<f64>,
    pub h_fields: Vec<f64>,
    pub disorder_strength: f64,
    pub seed: u64,
}

impl DisorderRealization {
    /// Uniform couplings `J` on every edge and zero fields.
    pub fn uniform(g: &ChimeraGraph, coupling: f64) -> Self {
        DisorderRealization {
            n_spins: g.n_spins(),
            edges: g.edges().to_vec(),
            j_couplings: vec![coupling; g.edges().len()],
            h_fields: vec![0.0; g.n_spins()],
            disorder_strength: coupling.abs(),
            seed: 0,
        }
    }

    /// Checks that the realization belongs to `g` and respects its bound.
    pub fn validate(&self, g: &ChimeraGraph) -> Result<()> {
        if self.n_spins != g.n_spins() || self.h_fields.len() != g.n_spins() {
            return Err(Error::InvalidRealization(format!(
                "realization has {} spins / {} fields, graph has {}",
                self.n_spins,
                self.h_fields.len(),
                g.n_spins()
            )));
        }
        if self.edges.as_slice() != g.edges() || self.j_couplings.len() != self.edges.len() {
            return Err(Error::InvalidRealization(
                "edge keys do not match the graph".into(),
            ));
        }
        let bound = self.disorder_strength;
        let ok = |x: &f64| x.is_finite() && x.abs() <= bound;
        if !self.j_couplings.iter().all(ok) || !self.h_fields.iter().all(ok) {
            return Err(Error::InvalidRealization(format!(
                "values exceed disorder strength {bound}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("realization serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidRealization(e.to_string()))
    }

    /// Classical Ising energy `Σ J_ij z_i z_j + Σ h_i z_i` of a ±1 configuration.
    pub fn ising_energy(&self, spins: &[i8]) -> f64 {
        let pair: f64 = self
            .edges
            .iter()
            .zip(&self.j_couplings)
            .map(|(&(i, j), &c)| c * f64::from(spins[i]) * f64::from(spins[j]))
            .sum();
        let field: f64 = self
            .h_fields
            .iter()
            .zip(spins)
            .map(|(&h, &z)| h * f64::from(z))
            .sum();
        pair + field
    }
}

/// Draws every `J_ij` and then every `h_i` i.i.d. uniform on `[-J, J)` from one
/// stream seeded by `seed`.
pub fn sample_disorder(g: &ChimeraGraph, strength: f64, seed: u64) -> Result<DisorderRealization> {
    if !(strength >= 0.0 && strength.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "disorder strength must be finite and non-negative, got {strength}"
        )));
    }
    let mut stream = Stream::new(seed);
    let j_couplings = (0..g.edges().len())
        .map(|_| strength * stream.symmetric())
        .collect();
    let h_fields = (0..g.n_spins())
        .map(|_| strength * stream.symmetric())
        .collect();
    Ok(DisorderRealization {
        n_spins: g.n_spins(),
        edges: g.edges().to_vec(),
        j_couplings,
        h_fields,
        disorder_strength: strength,
        seed,
    })
}

/// Coefficients of `A·H_TF + B·H_I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleWeights {
    pub a_value: f64,
    pub b_value: f64,
}

impl ScheduleWeights {
    pub fn new(a_value: f64, b_value: f64) -> Result<Self> {
        let w = ScheduleWeights { a_value, b_value };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.a_value.is_finite() && self.b_value.is_finite();
        if !finite || self.a_value < 0.0 || self.b_value < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "schedule weights must be finite and non-negative, got A={} B={}",
                self.a_value, self.b_value
            )));
        }
        if self.a_value == 0.0 && self.b_value == 0.0 {
            return Err(Error::InvalidParameter("A and B are both zero".into()));
        }
        Ok(())
    }
}

/// Row-major dense real symmetric matrix over the `2^N` computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHamiltonian {
    n_spins: usize,
    dim: usize,
    data: Vec<f64>,
    seed: Option<u64>,
}

impl DenseHamiltonian {
    pub fn from_row_major(data: Vec<f64>, dim: usize, seed: Option<u64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "{} entries do not form a {dim}x{dim} matrix",
                data.len()
            )));
        }
        Ok(DenseHamiltonian {
            n_spins: dim.trailing_zeros() as usize,
            dim,
            data,
            seed,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Builds dense Hamiltonians, refusing systems above `max_spins`.
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianBuilder {
    pub max_spins: usize,
}

impl Default for HamiltonianBuilder {
    fn default() -> Self {
        HamiltonianBuilder {
            max_spins: DEFAULT_MAX_SPINS,
        }
    }
}

impl HamiltonianBuilder {
    /// `-Δ Σ σ^x_k + Σ J_ij σ^z_i σ^z_j + Σ h_i σ^z_i`.
    pub fn tfi(&self, g: &ChimeraGraph, d: &DisorderRealization, delta: f64) -> Result<DenseHamiltonian> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transverse field must be finite and non-negative, got {delta}"
            )));
        }
        self.assemble(g, d, delta, 1.0)
    }

    /// `A·H_TF + B·H_I` with `H_TF = -Σ σ^x_k`.
    pub fn scaled(&self, g: &ChimeraGraph, d: &DisorderRealization, w: ScheduleWeights) -> Result<DenseHamiltonian> {
        w.validate()?;
        self.assemble(g, d, w.a_value, w.b_value)
    }

    fn assemble(
        &self,
        g: &ChimeraGraph,
        d: &DisorderRealization,
        transverse: f64,
        ising: f64,
    ) -> Result<DenseHamiltonian> {
        let n = g.n_spins();
        if n > self.max_spins {
            return Err(Error::DimensionOverflow {
                n_spins: n,
                max: self.max_spins,
            });
        }
        d.validate(g)?;
        let dim = 1usize << n;
        let mut data = vec![0.0; dim * dim];
        let diag = ising_diagonal(d);
        for (idx, e) in diag.into_iter().enumerate() {
            data[idx * dim + idx] = ising * e;
            if transverse != 0.0 {
                for k in 0..n {
                    data[idx * dim + (idx ^ (1 << k))] = -transverse;
                }
            }
        }
        Ok(DenseHamiltonian {
            n_spins: n,
            dim,
            data,
            seed: Some(d.seed),
        })
    }
}

/// Classical energies `Σ J_ij z_i z_j + Σ h_i z_i` for every basis index.
pub fn ising_diagonal(d: &DisorderRealization) -> Vec<f64> {
    let n = d.n_spins;
    (0..1usize << n)
        .map(|idx| {
            let z = |k: usize| if idx >> k & 1 == 0 { 1.0 } else { -1.0 };
            let pair: f64 = d
                .edges
                .iter()
                .zip(&d.j_couplings)
                .map(|(&(i, j), &c)| c * z(i) * z(j))
                .sum();
            let field: f64 = d.h_fields.iter().enumerate().map(|(k, &h)| h * z(k)).sum();
            pair + field
        })
        .collect()
}

pub fn build_tfi(g: &ChimeraGraph, d: &DisorderRealization, delta: f64) -> Result<DenseHamiltonian> {
    HamiltonianBuilder::default().tfi(g, d, delta)
}

pub fn build_scaled(g: &ChimeraGraph, d: &DisorderRealization, w: ScheduleWeights) -> Result<DenseHamiltonian> {
    HamiltonianBuilder::default().scaled(g, d, w)
}
