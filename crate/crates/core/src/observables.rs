//! Walk statistics and entanglement measures. Entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::density::{Basis, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::network::{Bipartition, CutKind, NetworkSpec};
use crate::walk::position_label;
use crate::C64;

/// Eigenvalues at or below this are dropped from entropy sums.
pub const EIG_FLOOR: f64 = 1e-12;
pub const DIST_SUM_TOL: f64 = 1e-9;

/// Walker-position distribution over integer labels, stored in ascending label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    labels: Vec<i64>,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(labels: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() || labels.is_empty() {
            return Err(Error::InvalidDistribution(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution("labels must be strictly increasing".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= -EIG_FLOOR)) {
            return Err(Error::InvalidDistribution(format!("negative or NaN probability {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {s}")));
        }
        Ok(Distribution { labels, probs })
    }

    /// Reorders per-site ring probabilities by symmetric label relative to start site `n0`.
    ///
    /// Panics if `n0` is not a site of the ring.
    pub fn from_ring(site_probs: &[f64], n0: usize) -> Self {
        let n = site_probs.len();
        assert!(n0 < n, "start site {n0} outside ring of {n}");
        let mut rows: Vec<(i64, f64)> = (0..n)
            .map(|k| (position_label(k, n), site_probs[(k + n0) % n]))
            .collect();
        rows.sort_by_key(|r| r.0);
        Distribution {
            labels: rows.iter().map(|r| r.0).collect(),
            probs: rows.iter().map(|r| r.1).collect(),
        }
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob_at(&self, label: i64) -> Option<f64> {
        self.labels.binary_search(&label).ok().map(|k| self.probs[k])
    }

    /// Label with the largest probability (smallest label on ties).
    pub fn argmax(&self) -> i64 {
        let mut best = 0;
        for k in 1..self.probs.len() {
            if self.probs[k] > self.probs[best] {
                best = k;
            }
        }
        self.labels[best]
    }

    pub fn uniform(labels: Vec<i64>) -> Result<Self> {
        let p = 1.0 / labels.len() as f64;
        let n = labels.len();
        Self::new(labels, vec![p; n])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// `<n^2>`, equal to the variance for a centred distribution.
    pub second_moment: f64,
}

pub fn moments(dist: &Distribution) -> MomentSummary {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (&l, &p) in dist.labels.iter().zip(&dist.probs) {
        let x = l as f64;
        mean += x * p;
        second += x * x * p;
    }
    MomentSummary { mean, variance: (second - mean * mean).max(0.0), second_moment: second }
}

/// Least-squares fit `y = a N^2 + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a: f64,
    pub b: f64,
    /// Euclidean norm of the residual vector.
    pub residual: f64,
}

pub fn variance_scaling_fit(points: &[(usize, f64)]) -> Result<ScalingFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 distinct ring sizes, got {}",
            ns.len()
        )));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 * p.0) as f64).collect();
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - x_mean) * (p.1 - y_mean)).sum();
    let a = sxy / sxx;
    let b = y_mean - a * x_mean;
    let residual = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (p.1 - a * x - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ScalingFit { a, b, residual })
}

/// Total-variation distance `(1/2) sum |p_n - q_n|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.labels != q.labels {
        return Err(Error::LabelMismatch);
    }
    Ok(0.5 * p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Elementwise mean of a series of distributions over one label set.
pub fn running_time_average(series: &[Distribution]) -> Result<Distribution> {
    let mut acc = RunningAverage::default();
    for d in series {
        acc.push(d)?;
    }
    acc.mean()
}

/// Incremental form of [`running_time_average`].
#[derive(Clone, Debug, Default)]
pub struct RunningAverage {
    labels: Vec<i64>,
    sum: Vec<f64>,
    count: usize,
}

impl RunningAverage {
    pub fn push(&mut self, d: &Distribution) -> Result<()> {
        if self.count == 0 {
            self.labels = d.labels.clone();
            self.sum = vec![0.0; d.len()];
        } else if self.labels != d.labels {
            return Err(Error::LabelMismatch);
        }
        for (s, p) in self.sum.iter_mut().zip(&d.probs) {
            *s += p;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Result<Distribution> {
        if self.count == 0 {
            return Err(Error::EmptySeries);
        }
        let c = self.count as f64;
        Ok(Distribution { labels: self.labels.clone(), probs: self.sum.iter().map(|s| s / c).collect() })
    }
}

/// `-sum lambda log2 lambda` over a spectrum, skipping eigenvalues at or below [`EIG_FLOOR`].
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let s: f64 = eigenvalues
        .iter()
        .filter(|&&l| l > EIG_FLOOR)
        .map(|&l| -l * l.log2())
        .sum();
    s.max(0.0)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&rho.eigenvalues()?))
}

/// `-a log2 a - (1-a) log2 (1-a)`: entanglement entropy of one edge state.
pub fn binary_entropy(alpha: f64) -> f64 {
    entropy_of_spectrum(&[alpha, 1.0 - alpha])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBounds {
    pub lower: f64,
    /// `sum_e S(|a_e>)`, the Shannon entropy of the weights `f_i^2`.
    pub concavity_upper: f64,
    /// `log2(2N)`, the log of the walker's Hilbert-space dimension.
    pub dimension_upper: f64,
}

impl EntropyBounds {
    pub fn min_upper(&self) -> f64 {
        self.concavity_upper.min(self.dimension_upper)
    }
}

pub fn entropy_bounds(spec: &NetworkSpec) -> EntropyBounds {
    EntropyBounds {
        lower: 0.0,
        concavity_upper: spec.edge_alphas().iter().map(|&a| binary_entropy(a)).sum(),
        dimension_upper: ((2 * spec.n_vertices()) as f64).log2(),
    }
}

/// Concurrence `2 |psi_00 psi_11 - psi_01 psi_10|` of a pure two-qubit state
/// given in the order `|00>, |01>, |10>, |11>`.
pub fn concurrence_pure(psi: [C64; 4]) -> f64 {
    2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()
}

/// Amplitudes of the edge state `sqrt(a)|00> + sqrt(1-a)|11>`.
pub fn edge_state(alpha: f64) -> [C64; 4] {
    let z = C64::new(0.0, 0.0);
    [C64::new(alpha.sqrt(), 0.0), z, z, C64::new((1.0 - alpha).sqrt(), 0.0)]
}

/// Sum of the magnitudes of the negative eigenvalues of a Hermitian matrix.
fn negative_part(m: &nalgebra::DMatrix<C64>) -> Result<f64> {
    let ev = hermitian_eigenvalues(m)?;
    // eigenvalues within rounding of zero are zero
    Ok(ev.iter().filter(|&&l| l < -EIG_FLOOR).fold(0.0, |acc, &l| acc - l))
}

/// Negativity of a network state in the parity-reduced basis across an L1 cut.
///
/// Every basis label factorizes into side-A and side-B edge bits, so the
/// partial transpose swaps the A bits between row and column index.
pub fn negativity(rho_g: &DensityMatrix, cut: &Bipartition) -> Result<f64> {
    let Basis::Network { n_edges, configs } = rho_g.basis() else {
        return Err(Error::InvalidDensity("negativity needs a density matrix in the reduced network basis".into()));
    };
    let n_edges = *n_edges;
    if cut.n_edges() != n_edges {
        return Err(Error::Bipartition(format!(
            "cut is over {} edges, state over {n_edges}",
            cut.n_edges()
        )));
    }
    if let CutKind::L3 { .. } = cut.kind() {
        return Err(Error::Bipartition(
            "a cut through an edge does not factorize the reduced basis; use negativity_initial".into(),
        ));
    }
    let d = 1usize << n_edges;
    // configurations outside the support carry no weight
    let mut m = nalgebra::DMatrix::<C64>::zeros(d, d);
    let src = rho_g.matrix();
    for (r, &gi) in configs.iter().enumerate() {
        for (c, &gj) in configs.iter().enumerate() {
            m[(gi, gj)] = src[(r, c)];
        }
    }
    let a = cut.a_mask();
    let pt = nalgebra::DMatrix::from_fn(d, d, |i, j| {
        let r = (i & !a) | (j & a);
        let c = (j & !a) | (i & a);
        m[(r, c)]
    });
    negative_part(&pt)
}

/// Negativity of a density matrix over physical qubits, transposing the qubits in `a_mask`.
pub fn negativity_qubits(rho: &DensityMatrix, a_mask: u64) -> Result<f64> {
    let Basis::Qubits { .. } = rho.basis() else {
        return Err(Error::InvalidDensity("negativity_qubits needs a qubit basis".into()));
    };
    let a = a_mask as usize;
    let m = rho.matrix();
    let d = m.nrows();
    let pt = nalgebra::DMatrix::from_fn(d, d, |i, j| {
        let r = (i & !a) | (j & a);
        let c = (j & !a) | (i & a);
        m[(r, c)]
    });
    negative_part(&pt)
}

/// Negativity of the initial product network across `cut`.
///
/// Whole edges contribute nothing; each split edge `e` is a pure two-qubit
/// state with negativity `sqrt(a_e (1 - a_e))`, and negativities of product
/// states combine as `(prod (1 + 2 N_e) - 1) / 2`.
pub fn negativity_initial(spec: &NetworkSpec, cut: &Bipartition) -> f64 {
    match cut.kind() {
        CutKind::L1 => 0.0,
        CutKind::L3 { split_edge } => {
            let a = spec.edge_alphas()[split_edge];
            let ne = (a * (1.0 - a)).sqrt();
            ((1.0 + 2.0 * ne) - 1.0) / 2.0
        }
    }
}

/// Mean over the second half of a series, the default saturation estimate.
pub fn saturation_mean(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let tail = &series[series.len() / 2..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dist(probs: &[f64]) -> Distribution {
        let n = probs.len() as i64;
        Distribution::new((0..n).collect(), probs.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let z = C64::new(0.0, 0.0);
        let pure = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), z, z, z]);
        let rho = DensityMatrix::new(pure, Basis::Qubits { n_qubits: 1 }).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&rho).unwrap(), 0.0, epsilon = 1e-15);
        let mixed = DMatrix::from_diagonal_element(4, 4, C64::new(0.25, 0.0));
        let rho = DensityMatrix::new(mixed, Basis::Qubits { n_qubits: 2 }).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&rho).unwrap(), 2.0, epsilon = 1e-14);
        // one-qubit reduction of the edge state with a = 0.2
        let expected = -0.2 * 0.2f64.log2() - 0.8 * 0.8f64.log2();
        assert_abs_diff_eq!(binary_entropy(0.2), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(0.2), 0.7219280948873623, epsilon = 1e-12);
    }

    #[test]
    fn bounds_examples() {
        let b = entropy_bounds(&NetworkSpec::homogeneous(10, 0.5).unwrap());
        assert_abs_diff_eq!(b.concavity_upper, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.dimension_upper, 20f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(b.dimension_upper, 4.321928, epsilon = 1e-6);
        let b = entropy_bounds(&NetworkSpec::homogeneous(10, 0.0).unwrap());
        assert_eq!(b.concavity_upper, 0.0);
    }

    #[test]
    fn concurrence_of_edge_state() {
        for a in [0.0, 0.1, 0.25, 0.5] {
            assert_abs_diff_eq!(
                concurrence_pure(edge_state(a)),
                2.0 * (a * (1.0 - a)).sqrt(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn negativity_of_single_edge_state() {
        // two physical qubits, qubit 0 on side A
        for a in [0.0, 0.2, 0.5] {
            let psi = edge_state(a);
            let m = DMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
            let rho = DensityMatrix::new(m, Basis::Qubits { n_qubits: 2 }).unwrap();
            assert_abs_diff_eq!(negativity_qubits(&rho, 0b01).unwrap(), (a * (1.0 - a)).sqrt(), epsilon = 1e-12);
            let spec = NetworkSpec::homogeneous(4, a).unwrap();
            let cut = Bipartition::l3(4, 0, 1, 1).unwrap();
            assert_abs_diff_eq!(negativity_initial(&spec, &cut), (a * (1.0 - a)).sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn negativity_of_product_reduced_state_is_zero() {
        // rho = |psi><psi| with psi = sum_i f_i |i>, a product across any arc cut
        let spec = NetworkSpec::homogeneous(6, 0.3).unwrap();
        let f = spec.weights();
        let w = f.amplitudes();
        let m = DMatrix::from_fn(64, 64, |i, j| C64::new(w[i] * w[j], 0.0));
        let rho = DensityMatrix::new(m, Basis::network(6)).unwrap();
        let cut = Bipartition::equipartition(6).unwrap();
        assert_abs_diff_eq!(negativity(&rho, &cut).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_examples() {
        let d = Distribution::new(vec![-1, 0, 1], vec![0.0, 1.0, 0.0]).unwrap();
        let m = moments(&d);
        assert_eq!((m.mean, m.variance), (0.0, 0.0));
        let u = Distribution::uniform((-7..=7).collect()).unwrap();
        let m = moments(&u);
        assert_abs_diff_eq!(m.mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.variance, 56.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(usize, f64)> = (7..=15).map(|n| (n, 0.06 * (n * n) as f64 + 0.9)).collect();
        let f = variance_scaling_fit(&pts).unwrap();
        assert_abs_diff_eq!(f.a, 0.06, epsilon = 1e-9);
        assert_abs_diff_eq!(f.b, 0.9, epsilon = 1e-9);
        assert!(f.residual < 1e-9);
        assert!(variance_scaling_fit(&[(5, 1.0), (5, 2.0), (5, 3.0)]).is_err());
        assert!(variance_scaling_fit(&[(5, 1.0), (6, 2.0)]).is_err());
    }

    #[test]
    fn tv_examples() {
        let p = dist(&[0.5, 0.5, 0.0]);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 1.0);
        assert!(matches!(tv_distance(&p, &dist(&[1.0, 0.0])), Err(Error::LabelMismatch)));
    }

    #[test]
    fn averaging() {
        let p = dist(&[0.2, 0.8]);
        assert_eq!(running_time_average(&[p.clone(), p.clone()]).unwrap(), p);
        assert!(matches!(running_time_average(&[]), Err(Error::EmptySeries)));
    }

    #[test]
    fn ring_labels() {
        let d = Distribution::from_ring(&[0.1, 0.2, 0.3, 0.4], 1);
        assert_eq!(d.labels(), &[-1, 0, 1, 2]);
        assert_eq!(d.probs(), &[0.1, 0.2, 0.3, 0.4]);
    }

    fn arb_dist(n: usize) -> impl Strategy<Value = Distribution> {
        proptest::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", move |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| dist(&v.iter().map(|x| x / s).collect::<Vec<_>>()))
        })
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(p in arb_dist(7), q in arb_dist(7), r in arb_dist(7)) {
            let pq = tv_distance(&p, &q).unwrap();
            prop_assert!((pq - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
            prop_assert!(pq <= tv_distance(&p, &r).unwrap() + tv_distance(&r, &q).unwrap() + 1e-12);
        }
    }
}
