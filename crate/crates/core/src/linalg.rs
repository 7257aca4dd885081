//! Dense eigensolvers used by the observables and the spectral module.

use std::f64::consts::PI;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Mat, Par};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// Above this dimension Hermitian spectra go through faer, which is several
/// times faster than nalgebra at the 1024 x 1024 size of a ten-edge network.
const FAER_THRESHOLD: usize = 64;

/// Eigenvalues of a Hermitian matrix in ascending order. Only the lower triangle is read.
/// Sequential, so the result is bit-identical for any thread count.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Eigen(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    let mut ev = if n >= FAER_THRESHOLD {
        let f = Mat::<C64>::from_fn(n, n, |i, j| m[(i, j)]);
        let mut s = Diag::<C64>::zeros(n);
        let scratch = evd::self_adjoint_evd_scratch::<C64>(n, ComputeEigenvectors::No, Par::Seq, Default::default());
        evd::self_adjoint_evd(
            f.as_ref(),
            s.as_mut(),
            None,
            Par::Seq,
            MemStack::new(&mut MemBuffer::new(scratch)),
            Default::default(),
        )
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        s.column_vector().iter().map(|x| x.re).collect::<Vec<f64>>()
    } else {
        let lower = DMatrix::from_fn(n, n, |i, j| if i >= j { m[(i, j)] } else { m[(j, i)].conj() });
        nalgebra::SymmetricEigen::new(lower).eigenvalues.iter().copied().collect()
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigen-decomposition of a unitary: `U = V diag(e^{i phase}) V^dagger`.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Eigenphases in `(-pi, pi]`.
    pub phases: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `phases`.
    pub vectors: DMatrix<C64>,
}

/// Diagonalizes a unitary. Runs sequentially so results do not depend on the thread count.
///
/// Eigenvectors come from a general complex eigensolver and are then
/// re-orthonormalized inside each cluster of (near-)equal phases, so a
/// degenerate eigenspace gets an orthonormal basis.
pub fn unitary_eigen(u: &DMatrix<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::Eigen(format!("matrix is {}x{}, not square", n, u.ncols())));
    }
    if n == 0 {
        return Ok(UnitaryEigen { phases: Vec::new(), vectors: DMatrix::zeros(0, 0) });
    }
    let f = Mat::<C64>::from_fn(n, n, |i, j| u[(i, j)]);
    let mut s = Diag::<C64>::zeros(n);
    let mut v = Mat::<C64>::zeros(n, n);
    let scratch = evd::evd_scratch::<C64>(n, ComputeEigenvectors::No, ComputeEigenvectors::Yes, Par::Seq, Default::default());
    evd::evd_cplx(
        f.as_ref(),
        s.as_mut(),
        None,
        Some(v.as_mut()),
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let phases: Vec<f64> = (0..n).map(|k| s[k].arg()).collect();
    let raw = DMatrix::from_fn(n, n, |i, j| v[(i, j)]);
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for cluster in cluster_phases(&phases, CLUSTER_TOL) {
        let block = DMatrix::from_fn(n, cluster.len(), |i, j| raw[(i, cluster[j])]);
        let q = block.qr().q();
        for (j, &k) in cluster.iter().enumerate() {
            vectors.set_column(k, &q.column(j));
        }
    }
    let mut worst = 0.0f64;
    for k in 0..n {
        let v = vectors.column(k);
        let r = u * v - v * C64::from_polar(1.0, phases[k]);
        worst = worst.max(r.norm());
    }
    if worst > 1e-8 {
        return Err(Error::Eigen(format!("eigenvector residual {worst:.3e}; input is not unitary")));
    }
    Ok(UnitaryEigen { phases, vectors })
}

/// Phases closer than this are treated as one eigenspace when orthonormalizing.
const CLUSTER_TOL: f64 = 1e-9;

/// Groups eigenphases whose circular distance is below `tol` (single linkage,
/// wrapping across `+-pi`). Each cluster lists indices into `phases`.
pub fn cluster_phases(phases: &[f64], tol: f64) -> Vec<Vec<usize>> {
    if phases.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..phases.len()).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
    let mut clusters: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        if phases[w[1]] - phases[w[0]] < tol {
            clusters.last_mut().unwrap().push(w[1]);
        } else {
            clusters.push(vec![w[1]]);
        }
    }
    if clusters.len() > 1 {
        let first = phases[order[0]];
        let last = phases[*order.last().unwrap()];
        if first + 2.0 * PI - last < tol {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hermitian_small_and_large_paths_agree() {
        for n in [5, 70] {
            let m = DMatrix::from_fn(n, n, |i, j| {
                let x = ((i * 7 + j * 3) % 11) as f64 - 5.0;
                let y = if i == j { 0.0 } else { ((i * j) % 5) as f64 * if i > j { 1.0 } else { -1.0 } };
                C64::new(x + ((j * 7 + i * 3) % 11) as f64 - 5.0, y)
            });
            let ev = hermitian_eigenvalues(&m).unwrap();
            let tr: f64 = (0..n).map(|k| m[(k, k)].re).sum();
            assert_abs_diff_eq!(ev.iter().sum::<f64>(), tr, epsilon = 1e-9);
            let fro: f64 = m.iter().map(|x| x.norm_sqr()).sum();
            assert_abs_diff_eq!(ev.iter().map(|x| x * x).sum::<f64>(), fro, epsilon = 1e-8 * fro);
        }
    }

    #[test]
    fn unitary_eigen_reconstructs() {
        let u = crate::walk::dcqw_ring_step(6);
        let e = unitary_eigen(&u).unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            12,
            e.phases.iter().map(|&p| C64::from_polar(1.0, p)),
        ));
        let r = &e.vectors * d * e.vectors.adjoint();
        assert_abs_diff_eq!((r - u).norm(), 0.0, epsilon = 1e-12);
        let g = e.vectors.adjoint() * &e.vectors - DMatrix::identity(12, 12);
        assert_abs_diff_eq!(g.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn clustering_wraps() {
        let c = cluster_phases(&[PI - 1e-12, -PI + 1e-12, 0.0, 0.5, 0.5 + 1e-11], 1e-9);
        assert_eq!(c.len(), 3);
        let mut sizes: Vec<usize> = c.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 2]);
    }
}
