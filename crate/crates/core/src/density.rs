//! Density matrices with labelled bases.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::network::basis_string;
use crate::walk::position_label;
use crate::C64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues between this and zero are rounding noise and read as zero.
pub const NEG_EIG_TOL: f64 = 1e-10;

/// What each row/column of a density matrix stands for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Basis {
    /// Coin-position basis, index `c * n_vertices + n`.
    Walker { n_vertices: usize },
    /// Parity-even network configurations, given as edge-bit integers.
    Network { n_edges: usize, configs: Vec<usize> },
    /// Computational basis of `n_qubits` physical qubits; bit `k` of the index is qubit `k`.
    Qubits { n_qubits: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Walker { n_vertices } => 2 * n_vertices,
            Basis::Network { configs, .. } => configs.len(),
            Basis::Qubits { n_qubits } => 1 << n_qubits,
        }
    }

    /// Full reduced network basis `0..2^n_edges`.
    pub fn network(n_edges: usize) -> Self {
        Basis::Network { n_edges, configs: (0..1 << n_edges).collect() }
    }

    pub fn label(&self, k: usize) -> String {
        match self {
            Basis::Walker { n_vertices } => {
                format!("c{} n{}", k / n_vertices, position_label(k % n_vertices, *n_vertices))
            }
            Basis::Network { n_edges, configs } => {
                basis_string(configs[k], *n_edges).unwrap_or_else(|_| configs[k].to_string())
            }
            Basis::Qubits { n_qubits } => {
                (0..*n_qubits).rev().map(|q| if (k >> q) & 1 == 1 { '1' } else { '0' }).collect()
            }
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|k| self.label(k)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    basis: Basis,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: DMatrix<C64>, basis: Basis) -> Result<Self> {
        let rho = Self::from_parts(matrix, basis)?;
        rho.eigenvalues()?;
        Ok(rho)
    }

    /// Checks shape, Hermiticity and trace but not positivity; spectral
    /// routines still reject significantly negative eigenvalues.
    pub fn from_parts(matrix: DMatrix<C64>, basis: Basis) -> Result<Self> {
        let d = basis.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidDensity(format!(
                "matrix is {}x{} but the basis has {d} states",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut herm = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                herm = herm.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {tr}, expected 1")));
        }
        Ok(DensityMatrix { matrix, basis })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.matrix[(k, k)].re).collect()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Ascending spectrum with noise-level negatives set to zero.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut ev = hermitian_eigenvalues(&self.matrix)?;
        if let Some(&low) = ev.first() {
            if low < -NEG_EIG_TOL {
                return Err(Error::InvalidDensity(format!("negative eigenvalue {low:.3e}")));
            }
        }
        for x in &mut ev {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        Ok(ev)
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&x| x > tol).count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let z = C64::new(0.0, 0.0);
        let half = C64::new(0.5, 0.0);
        let ok = DMatrix::from_row_slice(2, 2, &[half, z, z, half]);
        assert!(DensityMatrix::new(ok, Basis::Qubits { n_qubits: 1 }).is_ok());
        let bad_trace = DMatrix::from_row_slice(2, 2, &[half, z, z, C64::new(0.6, 0.0)]);
        assert!(DensityMatrix::new(bad_trace, Basis::Qubits { n_qubits: 1 }).is_err());
        let non_herm = DMatrix::from_row_slice(2, 2, &[half, C64::new(0.1, 0.0), z, half]);
        assert!(DensityMatrix::new(non_herm, Basis::Qubits { n_qubits: 1 }).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), z, z, C64::new(-0.5, 0.0)]);
        assert!(DensityMatrix::new(negative, Basis::Qubits { n_qubits: 1 }).is_err());
        let wrong_dim = DMatrix::from_row_slice(2, 2, &[half, z, z, half]);
        assert!(DensityMatrix::new(wrong_dim, Basis::Walker { n_vertices: 3 }).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(Basis::network(3).label(1), "000011");
        assert_eq!(Basis::Qubits { n_qubits: 3 }.label(1), "001");
        assert_eq!(Basis::Walker { n_vertices: 5 }.label(9), "c1 n-1");
    }
}
