//! Parity-reduced engine: the joint state is `sum_i f_i |G_i> (x) |W_i(t)>`,
//! with one independent `2N`-dimensional walk per network configuration `i`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::density::{Basis, DensityMatrix};
use crate::error::{Error, Result};
use crate::network::{odd_vertex_mask, NetworkSpec, WeightVector};
use crate::observables::Distribution;
use crate::walk::{conditional_step, CoinState, WalkState};
use crate::C64;

/// Walks per parallel task; partial sums are combined in chunk order so
/// results do not depend on the thread count.
const CHUNK: usize = 256;

/// Deliberate defects for exercising the verification harness.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinFault {
    /// Uses `(1/sqrt 2)[[1, 1], [-1, 1]]` in place of the Hadamard.
    FlipCoinSign,
}

#[derive(Clone, Debug)]
pub struct ConditionalEnsemble {
    spec: NetworkSpec,
    n0: usize,
    coin0: CoinState,
    /// Configurations kept in the ensemble, ascending.
    indices: Vec<usize>,
    /// `f_i` for each kept configuration.
    weights: Vec<f64>,
    masks: Vec<u64>,
    /// Walk `k` occupies `amps[k * 2N .. (k + 1) * 2N]`.
    amps: Vec<C64>,
    time: usize,
    fault: Option<CoinFault>,
}

impl ConditionalEnsemble {
    pub fn new(spec: &NetworkSpec, coin0: CoinState, n0: usize) -> Result<Self> {
        Self::with_cutoff(spec, coin0, n0, 0.0)
    }

    /// Drops walks with `f_i^2 < cutoff` and renormalizes the rest.
    /// A cutoff of 0 keeps every walk, including zero-weight ones.
    pub fn with_cutoff(spec: &NetworkSpec, coin0: CoinState, n0: usize, cutoff: f64) -> Result<Self> {
        let n = spec.n_vertices();
        if n0 >= n {
            return Err(Error::VertexOutOfRange { vertex: n0, n_vertices: n });
        }
        if n >= 40 {
            return Err(Error::DimensionCap { n, cap: 39, hint: "2^N walks must fit in memory" });
        }
        let coin0 = CoinState::new(coin0.c0, coin0.c1)?;
        let all = spec.weights();
        let (indices, mut weights): (Vec<usize>, Vec<f64>) = all
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, w)| cutoff <= 0.0 || w.powi(2) >= cutoff)
            .map(|(i, &w)| (i, w))
            .unzip();
        if indices.is_empty() {
            return Err(Error::InvalidDistribution(format!("cutoff {cutoff} removes every walk")));
        }
        if cutoff > 0.0 {
            let s = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            for w in &mut weights {
                *w /= s;
            }
        }
        let masks = indices.iter().map(|&i| odd_vertex_mask(i, n)).collect();
        let d = 2 * n;
        let mut amps = vec![C64::new(0.0, 0.0); indices.len() * d];
        for w in amps.chunks_mut(d) {
            w[n0] = coin0.c0;
            w[n + n0] = coin0.c1;
        }
        Ok(ConditionalEnsemble {
            spec: spec.clone(),
            n0,
            coin0,
            indices,
            weights,
            masks,
            amps,
            time: 0,
            fault: None,
        })
    }

    #[doc(hidden)]
    pub fn inject_fault(&mut self, fault: Option<CoinFault>) {
        self.fault = fault;
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn n_vertices(&self) -> usize {
        self.spec.n_vertices()
    }

    pub fn start(&self) -> usize {
        self.n0
    }

    pub fn coin0(&self) -> CoinState {
        self.coin0
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn n_walks(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> WeightVector {
        WeightVector::from_amplitudes(self.weights.clone())
    }

    /// Branch probabilities `f_i^2` of the kept walks.
    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w * w).collect()
    }

    /// Walk number `k` (configuration `indices()[k]`).
    pub fn walk(&self, k: usize) -> WalkState {
        let d = 2 * self.n_vertices();
        WalkState::from_amplitudes(self.n_vertices(), self.amps[k * d..(k + 1) * d].to_vec())
            .expect("walk slice has 2N entries")
    }

    pub fn walk_amplitudes(&self, k: usize) -> &[C64] {
        let d = 2 * self.n_vertices();
        &self.amps[k * d..(k + 1) * d]
    }

    /// Advances every walk by its own conditional unitary.
    pub fn step(&mut self) {
        let n = self.n_vertices();
        let d = 2 * n;
        let fault = self.fault;
        self.amps
            .par_chunks_mut(d * CHUNK)
            .zip(self.masks.par_chunks(CHUNK))
            .for_each(|(block, masks)| {
                let mut buf = vec![C64::new(0.0, 0.0); d];
                for (w, &mask) in block.chunks_mut(d).zip(masks) {
                    match fault {
                        None => conditional_step(mask, n, w, &mut buf),
                        Some(CoinFault::FlipCoinSign) => faulty_step(mask, n, w, &mut buf),
                    }
                    w.copy_from_slice(&buf);
                }
            });
        self.time += 1;
    }

    pub fn step_many(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Site probabilities (index = ring site) with per-walk weights `probs`.
    pub fn site_probabilities_with(&self, probs: &[f64]) -> Result<Vec<f64>> {
        if probs.len() != self.n_walks() {
            return Err(Error::EdgeCountMismatch { expected: self.n_walks(), got: probs.len() });
        }
        let n = self.n_vertices();
        let d = 2 * n;
        let partials: Vec<Vec<f64>> = self
            .amps
            .par_chunks(d * CHUNK)
            .zip(probs.par_chunks(CHUNK))
            .map(|(block, ps)| {
                let mut acc = vec![0.0; n];
                for (w, &p) in block.chunks(d).zip(ps) {
                    if p == 0.0 {
                        continue;
                    }
                    for site in 0..n {
                        acc[site] += p * (w[site].norm_sqr() + w[n + site].norm_sqr());
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; n];
        for part in partials {
            for (t, x) in total.iter_mut().zip(part) {
                *t += x;
            }
        }
        Ok(total)
    }

    /// Walker-position distribution, labelled relative to the start site.
    pub fn distribution(&self) -> Distribution {
        self.distribution_with(&self.probabilities()).expect("own weights have matching length")
    }

    /// Position distribution for another set of branch probabilities over the
    /// same walks. Per-walk dynamics do not depend on the edge parameters, so
    /// one evolution serves every homogeneous or inhomogeneous network.
    pub fn distribution_with(&self, probs: &[f64]) -> Result<Distribution> {
        Ok(Distribution::from_ring(&self.site_probabilities_with(probs)?, self.n0))
    }

    /// Walks as matrix columns, each scaled by `scale[k]`.
    fn walk_matrix(&self, scale: &[f64]) -> DMatrix<C64> {
        let d = 2 * self.n_vertices();
        let mut m = DMatrix::zeros(d, self.n_walks());
        for (k, (w, &s)) in self.amps.chunks(d).zip(scale).enumerate() {
            for r in 0..d {
                m[(r, k)] = w[r] * s;
            }
        }
        m
    }

    /// Overlaps `gram[(j, i)] = <W_j|W_i>`.
    pub fn gram(&self) -> DMatrix<C64> {
        let m = self.walk_matrix(&vec![1.0; self.n_walks()]);
        m.adjoint() * m
    }

    /// `rho_W = sum_i f_i^2 |W_i><W_i|`.
    pub fn walker_density(&self) -> Result<DensityMatrix> {
        self.walker_density_with(&self.weights)
    }

    /// Walker density for other branch amplitudes `f` over the same walks.
    pub fn walker_density_with(&self, f: &[f64]) -> Result<DensityMatrix> {
        if f.len() != self.n_walks() {
            return Err(Error::EdgeCountMismatch { expected: self.n_walks(), got: f.len() });
        }
        let a = self.walk_matrix(f);
        let rho = &a * a.adjoint();
        DensityMatrix::from_parts(hermitize(rho), Basis::Walker { n_vertices: self.n_vertices() })
    }

    /// `rho_G[(i, j)] = f_i f_j <W_j|W_i>` over the kept configurations.
    pub fn network_density(&self) -> Result<DensityMatrix> {
        self.network_density_with(&self.weights)
    }

    pub fn network_density_with(&self, f: &[f64]) -> Result<DensityMatrix> {
        if f.len() != self.n_walks() {
            return Err(Error::EdgeCountMismatch { expected: self.n_walks(), got: f.len() });
        }
        let a = self.walk_matrix(f);
        let rho = (a.adjoint() * a).map(|x| x.conj());
        DensityMatrix::from_parts(
            hermitize(rho),
            Basis::Network { n_edges: self.spec.n_edges(), configs: self.indices.clone() },
        )
    }
}

/// Averages `m` with its adjoint to remove rounding asymmetry.
pub(crate) fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj).map(|x| x * 0.5)
}

fn faulty_step(odd_mask: u64, n: usize, src: &[C64], dst: &mut [C64]) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..n {
        let (mut a, mut b) = (src[p], src[n + p]);
        if (odd_mask >> p) & 1 == 1 {
            (a, b) = ((a + b) * s, (b - a) * s);
        }
        dst[(p + 1) % n] = a;
        dst[n + (p + n - 1) % n] = b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn init_examples() {
        let e = ConditionalEnsemble::new(&NetworkSpec::homogeneous(3, 0.5).unwrap(), CoinState::symmetric(), 0).unwrap();
        assert_eq!(e.n_walks(), 8);
        for p in e.probabilities() {
            assert_abs_diff_eq!(p, 0.125, epsilon = 1e-15);
        }
        let e = ConditionalEnsemble::new(&NetworkSpec::homogeneous(4, 0.0).unwrap(), CoinState::symmetric(), 2).unwrap();
        let p = e.probabilities();
        assert_eq!(p.iter().filter(|&&x| x > 0.0).count(), 1);
        assert_abs_diff_eq!(p[15], 1.0, epsilon = 1e-15);
        let d = e.distribution();
        assert_abs_diff_eq!(d.prob_at(0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ballistic_walk_moves_deterministically() {
        let spec = NetworkSpec::homogeneous(7, 0.0).unwrap();
        let mut e = ConditionalEnsemble::new(&spec, CoinState::zero(), 0).unwrap();
        e.step_many(3);
        assert_eq!(e.distribution().prob_at(3), Some(1.0));
    }

    #[test]
    fn norms_after_many_steps() {
        let spec = NetworkSpec::homogeneous(6, 0.3).unwrap();
        let mut e = ConditionalEnsemble::new(&spec, CoinState::symmetric(), 0).unwrap();
        e.step_many(100);
        for k in 0..e.n_walks() {
            assert_abs_diff_eq!(e.walk(k).norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_and_densities() {
        let spec = NetworkSpec::homogeneous(5, 0.3).unwrap();
        let mut e = ConditionalEnsemble::new(&spec, CoinState::symmetric(), 0).unwrap();
        let g = e.gram();
        assert!(g.iter().all(|x| (x - C64::new(1.0, 0.0)).norm() < 1e-15));
        assert_eq!(e.network_density().unwrap().rank(1e-10).unwrap(), 1);
        assert_eq!(e.walker_density().unwrap().rank(1e-10).unwrap(), 1);
        let d0 = e.network_density().unwrap().diagonal();
        e.step_many(50);
        let g = e.gram();
        for k in 0..32 {
            assert_abs_diff_eq!(g[(k, k)].re, 1.0, epsilon = 1e-12);
        }
        assert!(g.iter().all(|x| x.norm() <= 1.0 + 1e-12));
        let d50 = e.network_density().unwrap().diagonal();
        for (a, b) in d0.iter().zip(&d50) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn cutoff_renormalizes() {
        let spec = NetworkSpec::homogeneous(6, 0.1).unwrap();
        let e = ConditionalEnsemble::with_cutoff(&spec, CoinState::symmetric(), 0, 1e-3).unwrap();
        assert!(e.n_walks() < 64);
        assert_abs_diff_eq!(e.probabilities().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let spec = NetworkSpec::homogeneous(11, 0.3).unwrap();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut e = ConditionalEnsemble::new(&spec, CoinState::symmetric(), 0).unwrap();
                e.step_many(25);
                e.distribution()
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.probs(), b.probs());
    }
}
