//! Coin and shift primitives, per-configuration walk unitaries, and the
//! standard Hadamard walk (DCQW) on a ring or an unbounded line.
//!
//! A [`WalkState`] on a ring of `N` sites stores `2N` amplitudes at index
//! `c * N + n` (coin `c`, position `n`). Coin 0 moves the walker to `n + 1`,
//! coin 1 to `n - 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{full_mask, odd_vertex_mask, EdgeBasisIndex};
use crate::observables::Distribution;
use crate::C64;

/// Initial coin state `c0|0> + c1|1>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinState {
    pub c0: C64,
    pub c1: C64,
}

impl CoinState {
    pub const NORM_TOL: f64 = 1e-9;

    /// Rejects coins whose squared norm is off by more than [`Self::NORM_TOL`].
    pub fn new(c0: C64, c1: C64) -> Result<Self> {
        let n = c0.norm_sqr() + c1.norm_sqr();
        if (n - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::CoinNotNormalized(n));
        }
        Ok(CoinState { c0, c1 })
    }

    /// Rescales to unit norm, logging a warning when that changes anything.
    pub fn normalized(c0: C64, c1: C64) -> Result<Self> {
        let n = c0.norm_sqr() + c1.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::CoinNotNormalized(n));
        }
        if (n - 1.0).abs() > Self::NORM_TOL {
            warn!("coin state had squared norm {n}; normalizing");
        }
        let s = n.sqrt();
        Ok(CoinState { c0: c0 / s, c1: c1 / s })
    }

    /// `(|0> + i|1>)/sqrt(2)`, which gives a left-right symmetric Hadamard walk.
    pub fn symmetric() -> Self {
        CoinState {
            c0: C64::new(FRAC_1_SQRT_2, 0.0),
            c1: C64::new(0.0, FRAC_1_SQRT_2),
        }
    }

    pub fn zero() -> Self {
        CoinState { c0: C64::new(1.0, 0.0), c1: C64::new(0.0, 0.0) }
    }

    pub fn one() -> Self {
        CoinState { c0: C64::new(0.0, 0.0), c1: C64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }
}

impl Default for CoinState {
    fn default() -> Self {
        Self::symmetric()
    }
}

/// `(1/sqrt 2) [[1, 1], [1, -1]]`.
pub fn hadamard_coin() -> [[C64; 2]; 2] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

#[inline]
fn hadamard_pair(a: C64, b: C64) -> (C64, C64) {
    ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2)
}

/// Coin-position state of a walker on a ring.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    n_vertices: usize,
    amps: Vec<C64>,
}

impl WalkState {
    pub fn new(n_vertices: usize, coin: CoinState, n0: usize) -> Result<Self> {
        if n0 >= n_vertices {
            return Err(Error::VertexOutOfRange { vertex: n0, n_vertices });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 2 * n_vertices];
        amps[n0] = coin.c0;
        amps[n_vertices + n0] = coin.c1;
        Ok(WalkState { n_vertices, amps })
    }

    pub fn from_amplitudes(n_vertices: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 2 * n_vertices {
            return Err(Error::EdgeCountMismatch { expected: 2 * n_vertices, got: amps.len() });
        }
        Ok(WalkState { n_vertices, amps })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Amplitude of coin `c` at position `n`.
    pub fn amp(&self, c: usize, n: usize) -> C64 {
        self.amps[c * self.n_vertices + n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &WalkState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Position marginal `|a_n|^2 + |b_n|^2`, indexed by site.
    pub fn site_probabilities(&self) -> Vec<f64> {
        let n = self.n_vertices;
        (0..n).map(|p| self.amps[p].norm_sqr() + self.amps[n + p].norm_sqr()).collect()
    }
}

/// Moves coin-0 amplitudes one site forward and coin-1 amplitudes one site back.
pub fn shift(state: &WalkState) -> WalkState {
    let n = state.n_vertices;
    let mut out = vec![C64::new(0.0, 0.0); 2 * n];
    for p in 0..n {
        out[(p + 1) % n] = state.amps[p];
        out[n + (p + n - 1) % n] = state.amps[n + p];
    }
    WalkState { n_vertices: n, amps: out }
}

/// Hadamard on the coin at every odd-parity vertex of configuration `i`, identity elsewhere.
pub fn conditional_coin_layer(i: EdgeBasisIndex, state: &WalkState) -> WalkState {
    let n = state.n_vertices;
    let mask = odd_vertex_mask(i.value(), n);
    let mut out = state.clone();
    for p in 0..n {
        if (mask >> p) & 1 == 1 {
            let (a, b) = hadamard_pair(state.amps[p], state.amps[n + p]);
            out.amps[p] = a;
            out.amps[n + p] = b;
        }
    }
    out
}

/// One walk step (coin layer then shift) from `src` into `dst`, both laid out as
/// `c * n + position`. Bit `p` of `odd_mask` selects a Hadamard at position `p`.
#[inline]
pub fn conditional_step(odd_mask: u64, n: usize, src: &[C64], dst: &mut [C64]) {
    debug_assert!(src.len() == 2 * n && dst.len() == 2 * n);
    for p in 0..n {
        let (mut a, mut b) = (src[p], src[n + p]);
        if (odd_mask >> p) & 1 == 1 {
            (a, b) = hadamard_pair(a, b);
        }
        dst[if p + 1 == n { 0 } else { p + 1 }] = a;
        dst[n + if p == 0 { n - 1 } else { p - 1 }] = b;
    }
}

/// Matrix of one conditional walk step for network configuration `i`.
#[derive(Clone, Debug)]
pub struct ConditionalUnitary {
    pub source: EdgeBasisIndex,
    pub matrix: DMatrix<C64>,
}

pub fn build_conditional_unitary(i: EdgeBasisIndex, n: usize) -> Result<ConditionalUnitary> {
    let i = EdgeBasisIndex::new(i.value(), n)?;
    let matrix = step_matrix(odd_vertex_mask(i.value(), n), n);
    Ok(ConditionalUnitary { source: i, matrix })
}

/// Builds the `2N x 2N` step operator column by column from unit vectors.
pub fn step_matrix(odd_mask: u64, n: usize) -> DMatrix<C64> {
    let d = 2 * n;
    let mut m = DMatrix::zeros(d, d);
    let mut e = vec![C64::new(0.0, 0.0); d];
    let mut col = vec![C64::new(0.0, 0.0); d];
    for k in 0..d {
        e[k] = C64::new(1.0, 0.0);
        conditional_step(odd_mask, n, &e, &mut col);
        m.column_mut(k).copy_from_slice(&col);
        e[k] = C64::new(0.0, 0.0);
    }
    m
}

/// Step matrix of the standard Hadamard walk on an `n`-cycle.
pub fn dcqw_ring_step(n: usize) -> DMatrix<C64> {
    step_matrix(full_mask(n) as u64, n)
}

/// Symmetric display label of ring site `n`: `0..=N/2` stay, the rest map to `n - N`.
pub fn position_label(n: usize, n_vertices: usize) -> i64 {
    if n <= n_vertices / 2 {
        n as i64
    } else {
        n as i64 - n_vertices as i64
    }
}

/// Where the standard walk runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Graph {
    Ring { n_vertices: usize },
    /// Positions `-half_width..=half_width`; `None` allocates exactly `t`.
    Line { half_width: Option<usize> },
}

/// Final state and the position distribution after every step (index 0 is `t = 0`).
#[derive(Clone, Debug)]
pub struct DcqwRun {
    /// Position labels, ascending.
    pub labels: Vec<i64>,
    /// Final amplitudes as `(label, a, b)` rows.
    pub amplitudes: Vec<(i64, C64, C64)>,
    pub series: Vec<Distribution>,
}

/// Iterates the Hadamard walk `t` times from `coin0` at position `n0`.
///
/// On a ring, `n0` is a site index and labels are taken relative to it. On a
/// line the walk starts at label 0 and `n0` must be 0.
pub fn dcqw_run(graph: Graph, coin0: CoinState, n0: usize, t: usize) -> Result<DcqwRun> {
    match graph {
        Graph::Ring { n_vertices } => {
            if n_vertices < 3 {
                return Err(Error::TooFewVertices(n_vertices));
            }
            let mask = full_mask(n_vertices) as u64;
            let mut state = WalkState::new(n_vertices, coin0, n0)?;
            let mut next = state.amps.clone();
            let mut series = Vec::with_capacity(t + 1);
            series.push(Distribution::from_ring(&state.site_probabilities(), n0));
            for _ in 0..t {
                conditional_step(mask, n_vertices, &state.amps, &mut next);
                std::mem::swap(&mut state.amps, &mut next);
                series.push(Distribution::from_ring(&state.site_probabilities(), n0));
            }
            let labels = series[0].labels().to_vec();
            let amplitudes = labels
                .iter()
                .map(|&l| {
                    let site = (n0 as i64 + l).rem_euclid(n_vertices as i64) as usize;
                    (l, state.amp(0, site), state.amp(1, site))
                })
                .collect();
            Ok(DcqwRun { labels, amplitudes, series })
        }
        Graph::Line { half_width } => {
            if n0 != 0 {
                return Err(Error::VertexOutOfRange { vertex: n0, n_vertices: 1 });
            }
            let h = half_width.unwrap_or(t);
            if h < t {
                return Err(Error::BoundaryOverflow { steps: t, half_width: h });
            }
            let m = 2 * h + 1;
            let labels: Vec<i64> = (-(h as i64)..=h as i64).collect();
            let mut a = vec![C64::new(0.0, 0.0); m];
            let mut b = vec![C64::new(0.0, 0.0); m];
            a[h] = coin0.c0;
            b[h] = coin0.c1;
            let probs = |a: &[C64], b: &[C64]| -> Vec<f64> {
                a.iter().zip(b).map(|(x, y)| x.norm_sqr() + y.norm_sqr()).collect()
            };
            let mut series = Vec::with_capacity(t + 1);
            series.push(Distribution::new(labels.clone(), probs(&a, &b))?);
            for step in 1..=t {
                let mut na = vec![C64::new(0.0, 0.0); m];
                let mut nb = vec![C64::new(0.0, 0.0); m];
                // after `step - 1` steps the support lies in [h - step + 1, h + step - 1]
                for p in (h + 1 - step)..(h + step) {
                    let (x, y) = hadamard_pair(a[p], b[p]);
                    na[p + 1] = x;
                    nb[p - 1] = y;
                }
                a = na;
                b = nb;
                series.push(Distribution::new(labels.clone(), probs(&a, &b))?);
            }
            let amplitudes = labels.iter().enumerate().map(|(k, &l)| (l, a[k], b[k])).collect();
            Ok(DcqwRun { labels, amplitudes, series })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn apply(h: &[[C64; 2]; 2], v: [C64; 2]) -> [C64; 2] {
        [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]]
    }

    #[test]
    fn hadamard_examples() {
        let h = hadamard_coin();
        let v = apply(&h, [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_abs_diff_eq!(v[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        let w = apply(&h, v);
        assert_abs_diff_eq!((w[0] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1].norm(), 0.0, epsilon = 1e-15);
        let s = CoinState::symmetric();
        let v = apply(&h, [s.c0, s.c1]);
        assert_abs_diff_eq!((v[0] - c(0.5, 0.5)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((v[1] - c(0.5, -0.5)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn shift_examples() {
        let s = shift(&WalkState::new(5, CoinState::zero(), 0).unwrap());
        assert_eq!(s.amp(0, 1), c(1.0, 0.0));
        let s = shift(&WalkState::new(5, CoinState::one(), 0).unwrap());
        assert_eq!(s.amp(1, 4), c(1.0, 0.0));
        for coin in [CoinState::zero(), CoinState::one()] {
            let start = WalkState::new(7, coin, 3).unwrap();
            let mut s = start.clone();
            for _ in 0..7 {
                s = shift(&s);
            }
            assert_eq!(s, start);
        }
    }

    #[test]
    fn coin_layer_examples() {
        let st = WalkState::new(6, CoinState::symmetric(), 2).unwrap();
        assert_eq!(conditional_coin_layer(EdgeBasisIndex::new(0, 6).unwrap(), &st), st);
        // alternating edge bits make every vertex odd
        let alt = EdgeBasisIndex::new(0b010101, 6).unwrap();
        for n0 in 0..6 {
            let st = WalkState::new(6, CoinState::zero(), n0).unwrap();
            let out = conditional_coin_layer(alt, &st);
            assert_abs_diff_eq!(out.amp(0, n0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
            assert_abs_diff_eq!(out.amp(1, n0).re, FRAC_1_SQRT_2, epsilon = 1e-15);
        }
    }

    #[test]
    fn unitary_examples() {
        let u0 = build_conditional_unitary(EdgeBasisIndex::new(0, 5).unwrap(), 5).unwrap();
        for k in 0..10 {
            let col = u0.matrix.column(k);
            assert_eq!(col.iter().filter(|x| x.norm() > 0.0).count(), 1);
            assert_eq!(col.iter().map(|x| x.re).sum::<f64>(), 1.0);
        }
        let alt = build_conditional_unitary(EdgeBasisIndex::new(0b0101, 4).unwrap(), 4).unwrap();
        assert_abs_diff_eq!((alt.matrix - dcqw_ring_step(4)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unitary_is_shift_after_coin_layer() {
        let n = 5;
        for i in 0..32 {
            let idx = EdgeBasisIndex::new(i, n).unwrap();
            let u = build_conditional_unitary(idx, n).unwrap().matrix;
            for k in 0..2 * n {
                let mut v = vec![c(0.0, 0.0); 2 * n];
                v[k] = c(1.0, 0.0);
                let st = WalkState::from_amplitudes(n, v).unwrap();
                let expect = shift(&conditional_coin_layer(idx, &st));
                for r in 0..2 * n {
                    assert_abs_diff_eq!((u[(r, k)] - expect.amplitudes()[r]).norm(), 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn interference_fixture() {
        // all-odd configuration on a ring of 6; site 0 is the start, site 5 is label -1
        let n = 6;
        let mask = odd_vertex_mask(0b010101, n);
        assert_eq!(mask, 0b111111);
        let w0 = WalkState::new(n, CoinState::symmetric(), 0).unwrap();
        let mut w1 = vec![c(0.0, 0.0); 2 * n];
        conditional_step(mask, n, w0.amplitudes(), &mut w1);
        let mut expect1 = vec![c(0.0, 0.0); 2 * n];
        expect1[1] = c(0.5, 0.5);
        expect1[n + 5] = c(0.5, -0.5);
        for k in 0..2 * n {
            assert!((w1[k] - expect1[k]).norm() <= 1e-12);
        }
        let mut w2 = vec![c(0.0, 0.0); 2 * n];
        conditional_step(mask, n, &w1, &mut w2);
        let r = 0.5 * FRAC_1_SQRT_2;
        let mut expect2 = vec![c(0.0, 0.0); 2 * n];
        expect2[2] = c(r, r);
        expect2[n] = c(r, r);
        expect2[0] = c(r, -r);
        expect2[n + 4] = -c(r, -r);
        for k in 0..2 * n {
            assert!((w2[k] - expect2[k]).norm() <= 1e-12);
        }
    }

    #[test]
    fn dcqw_short_runs() {
        let run = dcqw_run(Graph::Line { half_width: None }, CoinState::zero(), 0, 1).unwrap();
        let d = &run.series[1];
        assert_abs_diff_eq!(d.prob_at(1).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.prob_at(-1).unwrap(), 0.5, epsilon = 1e-15);
        let run = dcqw_run(Graph::Line { half_width: None }, CoinState::symmetric(), 0, 2).unwrap();
        let d = &run.series[2];
        for (l, p) in [(-2, 0.25), (0, 0.5), (2, 0.25)] {
            assert_abs_diff_eq!(d.prob_at(l).unwrap(), p, epsilon = 1e-15);
        }
        assert!(matches!(
            dcqw_run(Graph::Line { half_width: Some(3) }, CoinState::zero(), 0, 4),
            Err(Error::BoundaryOverflow { .. })
        ));
    }

    #[test]
    fn line_and_ring_agree_before_wraparound() {
        let line = dcqw_run(Graph::Line { half_width: None }, CoinState::symmetric(), 0, 10).unwrap();
        let ring = dcqw_run(Graph::Ring { n_vertices: 23 }, CoinState::symmetric(), 4, 10).unwrap();
        for l in -10..=10 {
            assert_abs_diff_eq!(
                line.series[10].prob_at(l).unwrap(),
                ring.series[10].prob_at(l).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn labels() {
        assert_eq!(position_label(0, 15), 0);
        assert_eq!(position_label(7, 15), 7);
        assert_eq!(position_label(8, 15), -7);
        assert_eq!(position_label(5, 10), 5);
        assert_eq!(position_label(6, 10), -4);
    }

    #[test]
    fn coin_normalization() {
        assert!(CoinState::new(c(1.0, 0.0), c(1.0, 0.0)).is_err());
        let s = CoinState::normalized(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        assert!(CoinState::normalized(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn step_preserves_norm(n in 3usize..12, seed in any::<u64>(), re in proptest::collection::vec(-1.0f64..1.0, 48)) {
            let i = (seed as usize) & full_mask(n);
            let amps: Vec<C64> = (0..2 * n).map(|k| c(re[k], re[2 * n + k])).collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            prop_assume!(norm > 1e-6);
            let st = WalkState::from_amplitudes(n, amps).unwrap();
            let idx = EdgeBasisIndex::new(i, n).unwrap();
            let out = shift(&conditional_coin_layer(idx, &st));
            prop_assert!((out.norm_sqr() - norm).abs() <= 1e-12 * norm.max(1.0));
        }

        #[test]
        fn conditional_unitary_is_unitary(n in 3usize..10, seed in any::<u64>()) {
            let i = (seed as usize) & full_mask(n);
            let u = build_conditional_unitary(EdgeBasisIndex::new(i, n).unwrap(), n).unwrap().matrix;
            let d = u.adjoint() * &u - DMatrix::<C64>::identity(2 * n, 2 * n);
            prop_assert!(d.iter().all(|x| x.norm() <= 1e-12));
        }
    }
}
