//! Reduced density matrices and von Neumann block entropy.
//!
//! For a bipartition `A | B` the state amplitudes are gathered into a
//! `2^|A| × 2^|B|` matrix `M` with `M[a][b] = ψ(index(a, b))`, where bit `t` of
//! `a` (resp. `b`) is spin `A[t]` (resp. `B[t]`) with both parts sorted
//! ascending. Then `ρ_A = M Mᵀ`. Non-contiguous parts need no special casing.

use crate::chimera::Bipartition;
use crate::eigen::{symmetric_eigenvalues, EigenDecomposition};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-6;
const NEGATIVE_TOL: f64 = 1e-8;
const CLAMP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    dim: usize,
    matrix: Vec<f64>,
    partition: Bipartition,
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn partition(&self) -> &Bipartition {
        &self.partition
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        symmetric_eigenvalues(&self.matrix, self.dim)
    }
}

/// Entropy in bits of one eigenstate of one realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropySample {
    pub value: f64,
    pub realization_seed: Option<u64>,
    pub eigenstate_index: usize,
}

/// Basis-index offsets for every assignment of the given spins.
fn offsets(spins: &[usize]) -> Vec<usize> {
    (0..1usize << spins.len())
        .map(|local| {
            spins
                .iter()
                .enumerate()
                .filter(|&(t, _)| local >> t & 1 == 1)
                .fold(0, |acc, (_, &k)| acc | 1 << k)
        })
        .collect()
}

/// Precomputed gather tables for one bipartition, reusable across states.
#[derive(Clone, Debug)]
pub struct Reducer {
    partition: Bipartition,
    a_offsets: Vec<usize>,
    b_offsets: Vec<usize>,
}

impl Reducer {
    pub fn new(partition: &Bipartition) -> Self {
        Reducer {
            a_offsets: offsets(partition.part_a()),
            b_offsets: offsets(partition.part_b()),
            partition: partition.clone(),
        }
    }

    pub fn reduce(&self, state: &[f64]) -> Result<ReducedDensityMatrix> {
        let n_spins = self.partition.n_spins();
        if state.len() != 1 << n_spins {
            return Err(Error::StateSizeMismatch {
                len: state.len(),
                n_spins,
            });
        }
        let norm = state.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let da = self.a_offsets.len();
        let db = self.b_offsets.len();
        let gathered: Vec<f64> = self
            .a_offsets
            .iter()
            .flat_map(|&oa| self.b_offsets.iter().map(move |&ob| state[oa | ob]))
            .collect();
        let mut matrix = vec![0.0; da * da];
        for i in 0..da {
            let row_i = &gathered[i * db..(i + 1) * db];
            for j in 0..=i {
                let row_j = &gathered[j * db..(j + 1) * db];
                let v: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                matrix[i * da + j] = v;
                matrix[j * da + i] = v;
            }
        }
        Ok(ReducedDensityMatrix {
            dim: da,
            matrix,
            partition: self.partition.clone(),
        })
    }

    pub fn entropy_of(&self, state: &[f64]) -> Result<f64> {
        entropy(&self.reduce(state)?)
    }
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|` for a real unit vector over `N` spins.
pub fn reduce(state: &[f64], p: &Bipartition) -> Result<ReducedDensityMatrix> {
    Reducer::new(p).reduce(state)
}

/// Von Neumann entropy `−Σ p log₂ p` in bits.
pub fn entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
    }
    let values = rho.eigenvalues()?;
    if let Some(&min) = values.iter().find(|&&p| p < -NEGATIVE_TOL) {
        return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
    }
    Ok(values
        .into_iter()
        .map(|p| p.min(1.0))
        .filter(|&p| p > CLAMP)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0))
}

/// Block entropy of eigenstate `n`.
pub fn block_entropy(e: &EigenDecomposition, n: usize, p: &Bipartition) -> Result<EntropySample> {
    if n >= e.dim() {
        return Err(Error::InvalidParameter(format!(
            "eigenstate index {n} out of range for dimension {}",
            e.dim()
        )));
    }
    Ok(EntropySample {
        value: Reducer::new(p).entropy_of(e.vector(n))?,
        realization_seed: e.seed(),
        eigenstate_index: n,
    })
}
