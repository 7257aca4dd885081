//! Stationary (time-averaged) distributions from eigenprojectors, approach
//! times, revival scans and momentum-basis analysis.
//!
//! For a unitary `U` with eigenprojectors `P_theta`, the Cesaro average of
//! `p_n(t)` converges to `sum_theta <psi0| P_theta Pi_n P_theta |psi0>`, where
//! `Pi_n` projects onto position `n`. Degenerate phases must be grouped:
//! summing over individual eigenvectors inside a degenerate eigenspace would
//! drop the cross terms.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditional::ConditionalEnsemble;
use crate::error::{Error, Result};
use crate::exact::FullState;
use crate::linalg::{cluster_phases, unitary_eigen};
use crate::network::{full_mask, odd_vertex_mask, EdgeBasisIndex, NetworkSpec};
use crate::observables::{tv_distance, Distribution, RunningAverage};
use crate::walk::{dcqw_ring_step, step_matrix, CoinState};
use crate::C64;

/// Eigenphases closer than this (radians) share an eigenprojector.
pub const PHASE_TOL: f64 = 1e-9;
/// Largest ring for [`stationary_full`].
pub const FULL_CAP: usize = 6;
/// Default closeness threshold for [`time_to_stationary`].
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Full,
    Conditional,
}

/// Eigenphase cluster counts, accumulated over every diagonalized block.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// Number of unitaries (walks or blocks) diagonalized.
    pub blocks: usize,
    /// Total eigenvectors, equal to the summed projector ranks.
    pub dimension: usize,
    pub clusters: usize,
    /// Cluster size -> number of clusters of that size.
    pub multiplicities: BTreeMap<usize, usize>,
}

impl DegeneracyReport {
    fn add(&mut self, clusters: &[Vec<usize>]) {
        self.blocks += 1;
        for c in clusters {
            self.dimension += c.len();
            self.clusters += 1;
            *self.multiplicities.entry(c.len()).or_default() += 1;
        }
    }

    fn merge(&mut self, other: &DegeneracyReport) {
        self.blocks += other.blocks;
        self.dimension += other.dimension;
        self.clusters += other.clusters;
        for (k, v) in &other.multiplicities {
            *self.multiplicities.entry(*k).or_default() += v;
        }
    }

    pub fn max_multiplicity(&self) -> usize {
        self.multiplicities.keys().next_back().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    pub pi: Distribution,
    pub method: Method,
    pub degeneracy: DegeneracyReport,
}

/// Time-averaged weight on each basis index of `u` starting from `psi0`,
/// i.e. `sum_theta |(P_theta psi0)_k|^2` for every `k`.
pub fn time_averaged_populations(u: &DMatrix<C64>, psi0: &[C64], report: &mut DegeneracyReport) -> Result<Vec<f64>> {
    let eig = unitary_eigen(u)?;
    let clusters = cluster_phases(&eig.phases, PHASE_TOL);
    report.add(&clusters);
    let q = &eig.vectors;
    let d = u.nrows();
    let coeff: Vec<C64> = (0..d)
        .map(|k| q.column(k).iter().zip(psi0).map(|(v, p)| v.conj() * p).sum())
        .collect();
    let mut pops = vec![0.0; d];
    let mut proj = vec![C64::new(0.0, 0.0); d];
    for cluster in &clusters {
        proj.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for &k in cluster {
            if coeff[k].norm_sqr() == 0.0 {
                continue;
            }
            for (r, x) in proj.iter_mut().enumerate() {
                *x += q[(r, k)] * coeff[k];
            }
        }
        for (p, x) in pops.iter_mut().zip(&proj) {
            *p += x.norm_sqr();
        }
    }
    Ok(pops)
}

/// Stationary site distributions `pi^i` of every conditional walk on a ring.
///
/// They do not depend on the edge parameters, so one table serves every
/// network of that size via [`PerWalkStationary::combine`].
#[derive(Clone, Debug)]
pub struct PerWalkStationary {
    n: usize,
    n0: usize,
    coin0: CoinState,
    /// `2^N x N`, row `i` is `pi^i` indexed by site.
    table: Vec<f64>,
    pub degeneracy: DegeneracyReport,
}

impl PerWalkStationary {
    pub fn compute(n: usize, coin0: CoinState, n0: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewVertices(n));
        }
        if n > 22 {
            return Err(Error::DimensionCap { n, cap: 22, hint: "2^N diagonalizations" });
        }
        if n0 >= n {
            return Err(Error::VertexOutOfRange { vertex: n0, n_vertices: n });
        }
        let d = 2 * n;
        let mut psi0 = vec![C64::new(0.0, 0.0); d];
        psi0[n0] = coin0.c0;
        psi0[n + n0] = coin0.c1;
        // A configuration and its complement have the same vertex parities,
        // hence the same walk; diagonalize only those with the top edge bit clear.
        let half = 1usize << (n - 1);
        let rows: Vec<(Vec<f64>, DegeneracyReport)> = (0..half)
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                let mut rep = DegeneracyReport::default();
                let u = step_matrix(odd_vertex_mask(i, n), n);
                let pops = time_averaged_populations(&u, &psi0, &mut rep)?;
                let sites = (0..n).map(|s| pops[s] + pops[n + s]).collect();
                Ok((sites, rep))
            })
            .collect::<Result<_>>()?;
        let mut table = vec![0.0; (1 << n) * n];
        let mut degeneracy = DegeneracyReport::default();
        for (i, (sites, rep)) in rows.iter().enumerate() {
            let c = i ^ full_mask(n);
            table[i * n..(i + 1) * n].copy_from_slice(sites);
            table[c * n..(c + 1) * n].copy_from_slice(sites);
            degeneracy.merge(rep);
            degeneracy.merge(rep);
        }
        Ok(PerWalkStationary { n, n0, coin0, table, degeneracy })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn coin0(&self) -> CoinState {
        self.coin0
    }

    /// `pi^i` indexed by site.
    pub fn walk(&self, i: usize) -> &[f64] {
        &self.table[i * self.n..(i + 1) * self.n]
    }

    /// `sum_i probs[i] pi^i`, labelled relative to the start site.
    pub fn combine(&self, probs: &[f64]) -> Result<Distribution> {
        if probs.len() != 1 << self.n {
            return Err(Error::EdgeCountMismatch { expected: 1 << self.n, got: probs.len() });
        }
        let mut sites = vec![0.0; self.n];
        for (row, &p) in self.table.chunks(self.n).zip(probs) {
            if p == 0.0 {
                continue;
            }
            for (s, x) in sites.iter_mut().zip(row) {
                *s += p * x;
            }
        }
        Ok(Distribution::from_ring(&sites, self.n0))
    }

    pub fn stationary(&self, spec: &NetworkSpec) -> Result<StationaryResult> {
        if spec.n_vertices() != self.n {
            return Err(Error::EdgeCountMismatch { expected: self.n, got: spec.n_vertices() });
        }
        Ok(StationaryResult {
            pi: self.combine(&spec.weights().probabilities())?,
            method: Method::Conditional,
            degeneracy: self.degeneracy.clone(),
        })
    }
}

/// `pi_n = sum_i f_i^2 pi^i_n` from per-walk eigenprojectors.
pub fn stationary_conditional(spec: &NetworkSpec, coin0: CoinState, n0: usize) -> Result<StationaryResult> {
    PerWalkStationary::compute(spec.n_vertices(), coin0, n0)?.stationary(spec)
}

/// Stationary distribution from the full walk operator on `H_G (x) H_c (x) H_p`.
///
/// The operator is assembled sparsely from the exact engine's action on basis
/// vectors and split into its connected components; only components that
/// overlap the initial state are diagonalized. The position projector is
/// diagonal in this basis, so distinct components never interfere.
pub fn stationary_full(spec: &NetworkSpec, coin0: CoinState, n0: usize) -> Result<StationaryResult> {
    let n = spec.n_vertices();
    if n > FULL_CAP {
        return Err(Error::DimensionCap { n, cap: FULL_CAP, hint: "use stationary_conditional" });
    }
    let psi = FullState::new(spec, coin0, n0)?;
    let dim = psi.dim();
    let images: Vec<Vec<(usize, C64)>> = (0..dim).map(|k| FullState::basis_image(n, k)).collect();

    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (k, img) in images.iter().enumerate() {
        for &(t, _) in img {
            let (a, b) = (find(&mut parent, k), find(&mut parent, t));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in 0..dim {
        let r = find(&mut parent, k);
        components.entry(r).or_default().push(k);
    }
    let amps = psi.amplitudes();
    let touched: Vec<Vec<usize>> = components
        .into_values()
        .filter(|members| members.iter().any(|&k| amps[k].norm_sqr() > 0.0))
        .collect();

    let d = 2 * n;
    let parts: Vec<(Vec<f64>, DegeneracyReport)> = touched
        .par_iter()
        .map(|members| {
            let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(a, &k)| (k, a)).collect();
            let m = members.len();
            let mut u = DMatrix::<C64>::zeros(m, m);
            for (col, &k) in members.iter().enumerate() {
                for &(t, a) in &images[k] {
                    u[(local[&t], col)] = a;
                }
            }
            let psi0: Vec<C64> = members.iter().map(|&k| amps[k]).collect();
            let mut rep = DegeneracyReport::default();
            let pops = time_averaged_populations(&u, &psi0, &mut rep)?;
            let mut sites = vec![0.0; n];
            for (&k, p) in members.iter().zip(pops) {
                sites[(k % d) % n] += p;
            }
            Ok((sites, rep))
        })
        .collect::<Result<_>>()?;
    let mut sites = vec![0.0; n];
    let mut degeneracy = DegeneracyReport::default();
    for (s, rep) in &parts {
        for (a, b) in sites.iter_mut().zip(s) {
            *a += b;
        }
        degeneracy.merge(rep);
    }
    Ok(StationaryResult { pi: Distribution::from_ring(&sites, n0), method: Method::Full, degeneracy })
}

/// `D(t) = TV(pbar(t), pi)` for `t = 1..=horizon`, where `pbar(t)` averages
/// `p(1), ..., p(t)`. Entry `t - 1` holds `D(t)`.
pub fn distance_series(spec: &NetworkSpec, coin0: CoinState, n0: usize, horizon: usize) -> Result<Vec<f64>> {
    let table = PerWalkStationary::compute(spec.n_vertices(), coin0, n0)?;
    let mut out = distance_series_many(&table, std::slice::from_ref(spec), horizon)?;
    Ok(out.remove(0))
}

/// [`distance_series`] for several networks of one ring size, sharing a single
/// evolution of the conditional walks.
pub fn distance_series_many(table: &PerWalkStationary, specs: &[NetworkSpec], horizon: usize) -> Result<Vec<Vec<f64>>> {
    let n = table.n;
    let probe = NetworkSpec::homogeneous(n, 0.5)?;
    let mut ens = ConditionalEnsemble::new(&probe, table.coin0, table.n0)?;
    let mut targets = Vec::with_capacity(specs.len());
    for s in specs {
        if s.n_vertices() != n {
            return Err(Error::EdgeCountMismatch { expected: n, got: s.n_vertices() });
        }
        let probs = s.weights().probabilities();
        targets.push((table.combine(&probs)?, probs));
    }
    let mut avgs = vec![RunningAverage::default(); specs.len()];
    let mut out = vec![Vec::with_capacity(horizon); specs.len()];
    for _ in 0..horizon {
        ens.step();
        for ((pi, probs), (avg, series)) in targets.iter().zip(avgs.iter_mut().zip(out.iter_mut())) {
            avg.push(&ens.distribution_with(probs)?)?;
            series.push(tv_distance(&avg.mean()?, pi)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachTime {
    Reached(usize),
    HorizonExceeded,
}

impl ApproachTime {
    pub fn value(self) -> Option<usize> {
        match self {
            ApproachTime::Reached(t) => Some(t),
            ApproachTime::HorizonExceeded => None,
        }
    }
}

/// Smallest sampled `t` with `D(t') <= epsilon` at every sampled `t'` in
/// `[t, t + window]`, given `series[t - 1] = D(t)`. Sampled times are the
/// multiples of `stride`; the whole window must lie inside the series.
pub fn first_sustained_crossing(series: &[f64], epsilon: f64, window: usize, stride: usize) -> ApproachTime {
    let stride = stride.max(1);
    let horizon = series.len();
    let d = |t: usize| series[t - 1];
    let mut t = stride;
    while t + window <= horizon {
        match (t..=t + window).step_by(stride).find(|&u| d(u) > epsilon) {
            None => return ApproachTime::Reached(t),
            // no window containing the failing sample can succeed
            Some(bad) => t = (bad / stride + 1) * stride,
        }
    }
    ApproachTime::HorizonExceeded
}

/// `t_pi`: first time the running average stays within `epsilon` of `pi` for
/// `N` steps, checking every step.
pub fn time_to_stationary(
    spec: &NetworkSpec,
    coin0: CoinState,
    n0: usize,
    epsilon: f64,
    horizon: usize,
) -> Result<ApproachTime> {
    time_to_stationary_sampled(spec, coin0, n0, epsilon, horizon, 1)
}

/// [`time_to_stationary`] checking only times that are multiples of `stride`.
pub fn time_to_stationary_sampled(
    spec: &NetworkSpec,
    coin0: CoinState,
    n0: usize,
    epsilon: f64,
    horizon: usize,
    stride: usize,
) -> Result<ApproachTime> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidDistribution(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = distance_series(spec, coin0, n0, horizon)?;
    Ok(first_sustained_crossing(&d, epsilon, spec.n_vertices(), stride))
}

/// Mean `|D(t+1) - D(t)|` over `t >= t_pi`.
pub fn fluctuation_amplitude(series: &[f64], t_pi: usize) -> Result<f64> {
    let start = t_pi.max(1) - 1;
    if start + 1 >= series.len() {
        return Err(Error::EmptySeries);
    }
    let tail = &series[start..];
    Ok(tail.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (tail.len() - 1) as f64)
}

/// Times `t` in `1..=t_max` with `||U^t - I|| <= epsilon` (spectral norm).
pub fn quasi_period_scan(u: &DMatrix<C64>, t_max: usize, epsilon: f64) -> Result<Vec<usize>> {
    if u.nrows() > 2048 {
        return Err(Error::DimensionCap { n: u.nrows(), cap: 2048, hint: "revival scan dimension" });
    }
    Ok(quasi_period_scan_phases(&unitary_eigen(u)?.phases, t_max, epsilon))
}

/// [`quasi_period_scan`] for a unitary given by its eigenphases:
/// `||U^t - I|| = max_l |e^{i theta_l t} - 1| = max_l 2 |sin(theta_l t / 2)|`.
pub fn quasi_period_scan_phases(phases: &[f64], t_max: usize, epsilon: f64) -> Vec<usize> {
    (1..=t_max)
        .filter(|&t| {
            phases.iter().all(|&th| {
                let x = (th * t as f64).rem_euclid(2.0 * PI);
                2.0 * (x / 2.0).sin().abs() <= epsilon
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// Frobenius norm of the entries coupling different momenta.
    pub off_block_norm: f64,
    /// Frobenius norm of the whole operator.
    pub total_norm: f64,
    /// `off_block_norm / total_norm`.
    pub normalized: f64,
}

/// Transforms a `2N x 2N` walk operator to the momentum basis
/// `|k> = N^{-1/2} sum_j w^{jk} |j>`, `w = exp(2 pi i / N)`, and measures the
/// weight outside the `2 x 2` blocks of equal momentum.
pub fn momentum_coupling(u: &DMatrix<C64>, n: usize) -> Result<CouplingReport> {
    let d = 2 * n;
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::EdgeCountMismatch { expected: d, got: u.nrows() });
    }
    let s = (n as f64).sqrt();
    let f = DMatrix::from_fn(d, d, |r, col| {
        if r / n != col / n {
            C64::new(0.0, 0.0)
        } else {
            let (j, k) = (r % n, col % n);
            C64::from_polar(1.0 / s, 2.0 * PI * ((j * k) % n) as f64 / n as f64)
        }
    });
    let v = f.adjoint() * u * &f;
    let mut off = 0.0;
    let mut total = 0.0;
    for r in 0..d {
        for c in 0..d {
            let x = v[(r, c)].norm_sqr();
            total += x;
            if r % n != c % n {
                off += x;
            }
        }
    }
    let (off, total) = (off.sqrt(), total.sqrt());
    Ok(CouplingReport { off_block_norm: off, total_norm: total, normalized: off / total })
}

pub fn momentum_coupling_conditional(i: EdgeBasisIndex, n: usize) -> Result<CouplingReport> {
    let i = EdgeBasisIndex::new(i.value(), n)?;
    momentum_coupling(&step_matrix(odd_vertex_mask(i.value(), n), n), n)
}

pub fn momentum_coupling_dcqw(n: usize) -> Result<CouplingReport> {
    momentum_coupling(&dcqw_ring_step(n), n)
}
