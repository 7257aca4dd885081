//! Exact engine over the unreduced space `H_G (x) H_c (x) H_p`.
//!
//! The network has `2N` physical qubits; edge `j` owns qubit `2j` (held at
//! vertex `j`) and qubit `2j + 1` (held at vertex `j + 1`). Qubit `k` is bit
//! `k` of the configuration integer `g`. The amplitude of `|g, c, n>` lives at
//! index `g * 2N + c * N + n`.
//!
//! Nothing here relies on edge parities being conserved; the coin layer reads
//! the parity of each vertex directly from `g`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::conditional::hermitize;
use crate::density::{Basis, DensityMatrix};
use crate::error::{Error, Result};
use crate::network::NetworkSpec;
use crate::observables::Distribution;
use crate::walk::{conditional_step, CoinState};
use crate::C64;

/// Largest ring the exact engine accepts by default (16 MiB of amplitudes at N = 8).
pub const DEFAULT_CAP: usize = 8;
/// Physical-qubit density matrices are `4^N x 4^N`.
pub const PHYSICAL_DENSITY_CAP: usize = 5;

const SNAPSHOT_MAGIC: &[u8; 4] = b"QWFS";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct FullState {
    n: usize,
    n0: usize,
    coin0: CoinState,
    time: usize,
    amps: Vec<C64>,
}

/// Pair of qubits held at vertex `n`: `(2n - 1 mod 2N, 2n)`.
pub fn vertex_qubits(n: usize, n_vertices: usize) -> (usize, usize) {
    ((2 * n + 2 * n_vertices - 1) % (2 * n_vertices), 2 * n)
}

/// Bit `v` set iff the two qubits of vertex `v` differ in configuration `g`.
pub fn odd_vertices_of(g: usize, n_vertices: usize) -> u64 {
    let mut mask = 0u64;
    for v in 0..n_vertices {
        let (l, r) = vertex_qubits(v, n_vertices);
        if (g >> l) & 1 != (g >> r) & 1 {
            mask |= 1 << v;
        }
    }
    mask
}

/// What [`FullState::reduce`] keeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subsystem {
    /// Coin and position.
    Walker,
    /// Network qubits, restricted to the configurations that carry population.
    Network,
    /// The two qubits at one vertex.
    VertexPair(usize),
    /// An arbitrary set of network qubits; bit `k` of the result index is `qubits[k]`.
    Qubits(Vec<usize>),
}

impl FullState {
    pub fn new(spec: &NetworkSpec, coin0: CoinState, n0: usize) -> Result<Self> {
        Self::with_cap(spec, coin0, n0, DEFAULT_CAP)
    }

    pub fn with_cap(spec: &NetworkSpec, coin0: CoinState, n0: usize, cap: usize) -> Result<Self> {
        let n = spec.n_vertices();
        if n > cap {
            return Err(Error::DimensionCap { n, cap, hint: "use the conditional engine" });
        }
        if n0 >= n {
            return Err(Error::VertexOutOfRange { vertex: n0, n_vertices: n });
        }
        let coin0 = CoinState::new(coin0.c0, coin0.c1)?;
        let d = 2 * n;
        let mut amps = vec![C64::new(0.0, 0.0); (1usize << (2 * n)) * d];
        let alphas = spec.edge_alphas();
        for (g, block) in amps.chunks_mut(d).enumerate() {
            let mut f = 1.0;
            for (j, &a) in alphas.iter().enumerate() {
                f *= match (g >> (2 * j)) & 0b11 {
                    0b00 => a.sqrt(),
                    0b11 => (1.0 - a).sqrt(),
                    _ => 0.0,
                };
            }
            block[n0] = coin0.c0 * f;
            block[n + n0] = coin0.c1 * f;
        }
        Ok(FullState { n, n0, coin0, time: 0, amps })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn start(&self) -> usize {
        self.n0
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// One application of the position-conditioned coin layer followed by the shift.
    pub fn step(&mut self) {
        let n = self.n;
        let d = 2 * n;
        self.amps.par_chunks_mut(d).enumerate().for_each(|(g, block)| {
            let mut buf = vec![C64::new(0.0, 0.0); d];
            conditional_step(odd_vertices_of(g, n), n, block, &mut buf);
            block.copy_from_slice(&buf);
        });
        self.time += 1;
    }

    pub fn step_many(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Image of basis vector `index` under one step, as sparse `(index, amplitude)` pairs.
    pub fn basis_image(n: usize, index: usize) -> Vec<(usize, C64)> {
        let d = 2 * n;
        let (g, local) = (index / d, index % d);
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[local] = C64::new(1.0, 0.0);
        let mut out = vec![C64::new(0.0, 0.0); d];
        conditional_step(odd_vertices_of(g, n), n, &e, &mut out);
        out.iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(k, &a)| (g * d + k, a))
            .collect()
    }

    /// Population of each network configuration `g`.
    pub fn network_populations(&self) -> Vec<f64> {
        self.amps.chunks(2 * self.n).map(|b| b.iter().map(|a| a.norm_sqr()).sum()).collect()
    }

    /// Configurations with nonzero population, ascending.
    pub fn populated_configurations(&self) -> Vec<usize> {
        self.network_populations()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(g, _)| g)
            .collect()
    }

    pub fn site_probabilities(&self) -> Vec<f64> {
        let n = self.n;
        let mut p = vec![0.0; n];
        for block in self.amps.chunks(2 * n) {
            for site in 0..n {
                p[site] += block[site].norm_sqr() + block[n + site].norm_sqr();
            }
        }
        p
    }

    /// Walker-position distribution, labelled relative to the start site.
    pub fn position_distribution(&self) -> Distribution {
        Distribution::from_ring(&self.site_probabilities(), self.n0)
    }

    /// Probabilities that the qubits at vertex `v` have even and odd parity.
    pub fn parity_probs(&self, v: usize) -> Result<(f64, f64)> {
        if v >= self.n {
            return Err(Error::VertexOutOfRange { vertex: v, n_vertices: self.n });
        }
        let (l, r) = vertex_qubits(v, self.n);
        let (mut even, mut odd) = (0.0, 0.0);
        for (g, p) in self.network_populations().into_iter().enumerate() {
            if (g >> l) & 1 == (g >> r) & 1 {
                even += p;
            } else {
                odd += p;
            }
        }
        Ok((even, odd))
    }

    pub fn reduce(&self, keep: &Subsystem) -> Result<DensityMatrix> {
        let n = self.n;
        let d = 2 * n;
        match keep {
            Subsystem::Walker => {
                let mut rho = DMatrix::<C64>::zeros(d, d);
                for block in self.amps.chunks(d) {
                    for i in 0..d {
                        if block[i].norm_sqr() == 0.0 {
                            continue;
                        }
                        for j in 0..d {
                            rho[(i, j)] += block[i] * block[j].conj();
                        }
                    }
                }
                DensityMatrix::from_parts(hermitize(rho), Basis::Walker { n_vertices: n })
            }
            Subsystem::Network => {
                let support = self.populated_configurations();
                let mut configs = Vec::with_capacity(support.len());
                for &g in &support {
                    let mut i = 0;
                    for j in 0..n {
                        let pair = (g >> (2 * j)) & 0b11;
                        if pair == 0b01 || pair == 0b10 {
                            return Err(Error::InvalidDensity(format!(
                                "configuration {g:#b} with unequal edge bits carries population"
                            )));
                        }
                        i |= (pair & 1) << j;
                    }
                    configs.push(i);
                }
                let m = DMatrix::from_fn(d, support.len(), |r, k| self.amps[support[k] * d + r]);
                let rho = (m.adjoint() * m).map(|x| x.conj());
                DensityMatrix::from_parts(hermitize(rho), Basis::Network { n_edges: n, configs })
            }
            Subsystem::VertexPair(v) => {
                if *v >= n {
                    return Err(Error::VertexOutOfRange { vertex: *v, n_vertices: n });
                }
                let (l, r) = vertex_qubits(*v, n);
                self.reduce_qubits(&[r, l])
            }
            Subsystem::Qubits(qs) => self.reduce_qubits(qs),
        }
    }

    fn reduce_qubits(&self, qubits: &[usize]) -> Result<DensityMatrix> {
        let n = self.n;
        let d = 2 * n;
        let nq = 2 * n;
        if qubits.iter().any(|&q| q >= nq) {
            return Err(Error::Bipartition(format!("qubit index out of range for {nq} qubits")));
        }
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() {
            return Err(Error::Bipartition("repeated qubit".into()));
        }
        let k = qubits.len();
        if k > 2 * PHYSICAL_DENSITY_CAP {
            return Err(Error::DimensionCap { n: k / 2, cap: PHYSICAL_DENSITY_CAP, hint: "qubit reduction too large" });
        }
        let keep_mask: usize = qubits.iter().map(|&q| 1 << q).sum();
        let rest_bits: Vec<usize> = (0..nq).filter(|q| keep_mask >> q & 1 == 0).collect();
        let cols = (1usize << rest_bits.len()) * d;
        let mut m = DMatrix::<C64>::zeros(1 << k, cols);
        for (g, block) in self.amps.chunks(d).enumerate() {
            let row = qubits.iter().enumerate().fold(0, |acc, (b, &q)| acc | ((g >> q) & 1) << b);
            let rest = rest_bits.iter().enumerate().fold(0, |acc, (b, &q)| acc | ((g >> q) & 1) << b);
            for (s, a) in block.iter().enumerate() {
                m[(row, rest * d + s)] = *a;
            }
        }
        let rho = &m * m.adjoint();
        DensityMatrix::from_parts(hermitize(rho), Basis::Qubits { n_qubits: k })
    }

    /// Density matrix of all `2N` network qubits (`4^N x 4^N`), `N <= 5`.
    pub fn physical_network_density(&self) -> Result<DensityMatrix> {
        if self.n > PHYSICAL_DENSITY_CAP {
            return Err(Error::DimensionCap {
                n: self.n,
                cap: PHYSICAL_DENSITY_CAP,
                hint: "use the reduced network density",
            });
        }
        let all: Vec<usize> = (0..2 * self.n).collect();
        self.reduce_qubits(&all)
    }

    /// Writes a little-endian snapshot: magic, version, N, t, n0, coin0, then
    /// every amplitude as `(re, im)` in index order.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        for x in [self.n as u64, self.time as u64, self.n0 as u64] {
            w.write_all(&x.to_le_bytes())?;
        }
        for x in [self.coin0.c0.re, self.coin0.c0.im, self.coin0.c1.re, self.coin0.c1.im] {
            w.write_all(&x.to_le_bytes())?;
        }
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {}", u32::from_le_bytes(b4))));
        }
        let mut b8 = [0u8; 8];
        let mut u64s = [0u64; 3];
        for x in &mut u64s {
            r.read_exact(&mut b8)?;
            *x = u64::from_le_bytes(b8);
        }
        let mut f = [0f64; 4];
        for x in &mut f {
            r.read_exact(&mut b8)?;
            *x = f64::from_le_bytes(b8);
        }
        let n = u64s[0] as usize;
        if !(3..=DEFAULT_CAP).contains(&n) {
            return Err(Error::Snapshot(format!("ring size {n} outside 3..={DEFAULT_CAP}")));
        }
        let len = (1usize << (2 * n)) * 2 * n;
        let mut amps = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            amps.push(C64::new(re, f64::from_le_bytes(b8)));
        }
        Ok(FullState {
            n,
            time: u64s[1] as usize,
            n0: u64s[2] as usize,
            coin0: CoinState { c0: C64::new(f[0], f[1]), c1: C64::new(f[2], f[3]) },
            amps,
        })
    }
}
