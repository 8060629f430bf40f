//! Full eigendecomposition of dense real symmetric matrices.
//!
//! Backed by faer's self-adjoint EVD (blocked Householder tridiagonalization
//! followed by a divide-and-conquer / QR tridiagonal solve), always run
//! sequentially so that identical input gives bit-identical output. Eigenvalues
//! are returned ascending; eigenvectors are stored column-major so that each
//! eigenvector is a contiguous slice.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{ColMut, MatMut, MatRef, Par};

use crate::error::{Error, Result};
use crate::model::DenseHamiltonian;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    vectors: Vec<f64>,
    dim: usize,
    seed: Option<u64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector `n` (ascending energy order), unit norm.
    pub fn vector(&self, n: usize) -> &[f64] {
        &self.vectors[n * self.dim..(n + 1) * self.dim]
    }

    /// Seed of the disorder realization the source matrix was built from.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Worst-case deviations from the decomposition contract, relative where noted.
#[derive(Clone, Copy, Debug)]
pub struct Diagnostics {
    /// `max_n ‖H v_n − λ_n v_n‖ / ‖H‖_F`
    pub residual: f64,
    /// `|Σ λ_n − Tr H| / ‖H‖_F`
    pub trace_error: f64,
    /// `max |VᵀV − I|` entrywise
    pub orthonormality: f64,
    pub sorted: bool,
}

impl Diagnostics {
    pub fn within_contract(&self) -> bool {
        self.sorted && self.residual <= 1e-10 && self.trace_error <= 1e-9 && self.orthonormality <= 1e-10
    }
}

fn run_evd(a: MatRef<'_, f64>, vectors: Option<&mut [f64]>, seed: Option<u64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut values = vec![0.0; n];
    let compute = if vectors.is_some() {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        compute,
        par,
        Default::default(),
    ));
    let u = vectors.map(|v| MatMut::from_column_major_slice_mut(v, n, n));
    evd::self_adjoint_evd(
        a,
        ColMut::from_slice_mut(&mut values).as_diagonal_mut(),
        u,
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence { seed })?;
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence { seed });
    }
    Ok(values)
}

fn check_finite(h: &DenseHamiltonian) -> Result<()> {
    if h.as_slice().iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("matrix has non-finite entries".into()))
    }
}

/// Eigenvalues and eigenvectors of `h`.
pub fn diagonalize(h: &DenseHamiltonian) -> Result<EigenDecomposition> {
    check_finite(h)?;
    let dim = h.dim();
    // The matrix is symmetric, so the row-major buffer is also its column-major
    // layout.
    let a = MatRef::from_column_major_slice(h.as_slice(), dim, dim);
    let mut vectors = vec![0.0; dim * dim];
    let values = run_evd(a, Some(&mut vectors), h.seed())?;
    Ok(EigenDecomposition {
        values,
        vectors,
        dim,
        seed: h.seed(),
    })
}

/// Ascending eigenvalues only; several times cheaper than [`diagonalize`].
pub fn eigenvalues(h: &DenseHamiltonian) -> Result<Vec<f64>> {
    check_finite(h)?;
    let dim = h.dim();
    let a = MatRef::from_column_major_slice(h.as_slice(), dim, dim);
    run_evd(a, None, h.seed())
}

/// Ascending eigenvalues of a small symmetric matrix given row-major.
pub fn symmetric_eigenvalues(data: &[f64], dim: usize) -> Result<Vec<f64>> {
    assert_eq!(data.len(), dim * dim);
    let a = MatRef::from_column_major_slice(data, dim, dim);
    run_evd(a, None, None)
}

/// Index of the eigenstate in the middle of the spectrum, `⌊D/2⌋`.
pub fn middle_index(dim: usize) -> usize {
    dim / 2
}

pub fn middle_state(e: &EigenDecomposition) -> &[f64] {
    e.vector(middle_index(e.dim()))
}

pub fn diagnostics(h: &DenseHamiltonian, e: &EigenDecomposition) -> Diagnostics {
    let dim = e.dim();
    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    for n in 0..dim {
        let v = e.vector(n);
        let hv = h.apply(v);
        let r = hv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - e.values[n] * b).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = residual.max(r / norm);
    }
    let trace_error = (e.values.iter().sum::<f64>() - h.trace()).abs() / norm;
    let mut orthonormality: f64 = 0.0;
    for i in 0..dim {
        for j in i..dim {
            let dot: f64 = e.vector(i).iter().zip(e.vector(j)).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((dot - target).abs());
        }
    }
    let sorted = e.values.windows(2).all(|w| w[0] <= w[1]);
    Diagnostics {
        residual,
        trace_error,
        orthonormality,
        sorted,
    }
}

/// Writes `index,value` rows for debugging.
pub fn eigenvalues_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chimera::build_cell;
    use crate::model::{build_tfi, sample_disorder};
    use approx::assert_abs_diff_eq;

    fn matrix(rows: &[&[f64]]) -> DenseHamiltonian {
        let dim = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        DenseHamiltonian::from_row_major(data, dim, Some(7)).unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let h = matrix(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 2.0, 0.0, 0.0], &[0.0, 0.0, 3.0, 0.0], &[0.0, 0.0, 0.0, 4.0]]);
        let e = diagonalize(&h).unwrap();
        assert_eq!(e.values(), &[1.0, 2.0, 3.0, 4.0]);
        for n in 0..4 {
            for (i, &x) in e.vector(n).iter().enumerate() {
                assert_abs_diff_eq!(x.abs(), if i == n { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn transverse_two_by_two() {
        let h = matrix(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        let e = diagonalize(&h).unwrap();
        assert_abs_diff_eq!(e.values()[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values()[1], 1.0, epsilon = 1e-15);
        assert_eq!(e.seed(), Some(7));
    }

    #[test]
    fn random_cell_trace_and_contract() {
        let g = build_cell(2).unwrap();
        for seed in 0..10 {
            let d = sample_disorder(&g, 3.0, seed).unwrap();
            let h = build_tfi(&g, &d, 1.0).unwrap();
            let e = diagonalize(&h).unwrap();
            assert!(e.values().iter().sum::<f64>().abs() < 1e-9);
            let diag = diagnostics(&h, &e);
            assert!(diag.within_contract(), "{diag:?}");
        }
    }

    #[test]
    fn values_only_matches_full() {
        let g = build_cell(3).unwrap();
        let d = sample_disorder(&g, 2.0, 1).unwrap();
        let h = build_tfi(&g, &d, 1.0).unwrap();
        let full = diagonalize(&h).unwrap();
        let vals = eigenvalues(&h).unwrap();
        for (a, b) in full.values().iter().zip(&vals) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        }
    }

    #[test]
    fn deterministic() {
        let g = build_cell(4).unwrap();
        let d = sample_disorder(&g, 4.0, 3).unwrap();
        let h = build_tfi(&g, &d, 1.0).unwrap();
        assert_eq!(diagonalize(&h).unwrap(), diagonalize(&h).unwrap());
    }

    #[test]
    fn middle_index_convention() {
        assert_eq!(middle_index(4), 2);
        assert_eq!(middle_index(256), 128);
        let g = build_cell(1).unwrap();
        let d = sample_disorder(&g, 1.0, 0).unwrap();
        let e = diagonalize(&build_tfi(&g, &d, 1.0).unwrap()).unwrap();
        let v = middle_state(&e);
        assert_abs_diff_eq!(v.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(v, e.vector(2));
    }

    #[test]
    fn non_finite_rejected() {
        let h = matrix(&[&[f64::NAN, 0.0], &[0.0, 1.0]]);
        assert!(diagonalize(&h).is_err());
    }

    #[test]
    fn csv_dump() {
        assert_eq!(eigenvalues_csv(&[-1.0, 0.5]), "index,value\n0,-1\n1,0.5\n");
    }
}
