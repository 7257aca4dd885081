//! Ring quantum networks: two qubits per vertex, one entangled pair per edge.
//!
//! Edge `j` joins vertex `j` and vertex `j + 1 (mod N)` and carries the pure
//! state `sqrt(a_j)|00> + sqrt(1 - a_j)|11>`. Vertex `n` therefore holds one
//! qubit of edge `n - 1` and one qubit of edge `n`.
//!
//! Every configuration reachable by the walk has equal bits inside each edge
//! pair, so it is labelled by an `N`-bit integer ([`EdgeBasisIndex`]). Bit `j`
//! (least significant = edge 0) is the shared bit of edge `j`. Bit value 0
//! carries amplitude `sqrt(a_j)`, bit value 1 carries `sqrt(1 - a_j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible edge parameter; `a` and `1 - a` give equivalent walks.
pub const MAX_ALPHA: f64 = 0.5;

/// Static configuration of a ring network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkSpecDoc", into = "NetworkSpecDoc")]
pub struct NetworkSpec {
    n_vertices: usize,
    edge_alphas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetworkSpecDoc {
    n_vertices: usize,
    edge_alphas: Vec<f64>,
}

impl TryFrom<NetworkSpecDoc> for NetworkSpec {
    type Error = Error;

    fn try_from(doc: NetworkSpecDoc) -> Result<Self> {
        NetworkSpec::new(doc.n_vertices, doc.edge_alphas)
    }
}

impl From<NetworkSpec> for NetworkSpecDoc {
    fn from(spec: NetworkSpec) -> Self {
        NetworkSpecDoc {
            n_vertices: spec.n_vertices,
            edge_alphas: spec.edge_alphas,
        }
    }
}

impl NetworkSpec {
    pub fn new(n_vertices: usize, edge_alphas: Vec<f64>) -> Result<Self> {
        if n_vertices < 3 {
            return Err(Error::TooFewVertices(n_vertices));
        }
        if edge_alphas.len() != n_vertices {
            return Err(Error::EdgeCountMismatch {
                expected: n_vertices,
                got: edge_alphas.len(),
            });
        }
        if let Some((edge, &alpha)) = edge_alphas
            .iter()
            .enumerate()
            .find(|(_, a)| !(0.0..=MAX_ALPHA).contains(*a))
        {
            return Err(Error::AlphaOutOfRange { edge, alpha });
        }
        Ok(NetworkSpec {
            n_vertices,
            edge_alphas,
        })
    }

    pub fn homogeneous(n_vertices: usize, alpha: f64) -> Result<Self> {
        Self::new(n_vertices, vec![alpha; n_vertices])
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Ring topology: one edge per vertex.
    pub fn n_edges(&self) -> usize {
        self.n_vertices
    }

    pub fn edge_alphas(&self) -> &[f64] {
        &self.edge_alphas
    }

    pub fn is_homogeneous(&self) -> bool {
        self.edge_alphas.iter().all(|&a| a == self.edge_alphas[0])
    }

    /// The common edge parameter of a homogeneous network.
    pub fn alpha(&self) -> Option<f64> {
        self.is_homogeneous().then(|| self.edge_alphas[0])
    }

    /// Average of the edge parameters.
    pub fn initial_network_entanglement(&self) -> f64 {
        self.edge_alphas.iter().sum::<f64>() / self.n_edges() as f64
    }

    pub fn basis_dim(&self) -> usize {
        1usize << self.n_vertices
    }

    /// Amplitude `f_i` of the network basis state `|G_i>`.
    pub fn weight(&self, i: EdgeBasisIndex) -> f64 {
        self.edge_alphas
            .iter()
            .enumerate()
            .map(|(j, &a)| if i.bit(j) { (1.0 - a).sqrt() } else { a.sqrt() })
            .product()
    }

    /// All `2^N` amplitudes, built by doubling one edge at a time.
    pub fn weights(&self) -> WeightVector {
        let mut w = Vec::with_capacity(self.basis_dim());
        w.push(1.0);
        for &a in &self.edge_alphas {
            let (zero, one) = (a.sqrt(), (1.0 - a).sqrt());
            let len = w.len();
            w.extend_from_within(..len);
            for x in &mut w[..len] {
                *x *= zero;
            }
            for x in &mut w[len..] {
                *x *= one;
            }
        }
        WeightVector { weights: w }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Label `i` of a parity-even network configuration `|G_i>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeBasisIndex(usize);

impl EdgeBasisIndex {
    pub fn new(value: usize, n_edges: usize) -> Result<Self> {
        if n_edges >= usize::BITS as usize || value >> n_edges != 0 {
            return Err(Error::IndexOutOfRange { index: value, n_edges });
        }
        Ok(EdgeBasisIndex(value))
    }

    pub fn value(self) -> usize {
        self.0
    }

    /// Shared bit of edge `edge`'s two qubits.
    pub fn bit(self, edge: usize) -> bool {
        (self.0 >> edge) & 1 == 1
    }

    pub fn hamming_weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Bitwise complement on `n_edges` bits (global spin flip).
    pub fn complement(self, n_edges: usize) -> Self {
        EdgeBasisIndex(!self.0 & full_mask(n_edges))
    }
}

pub(crate) fn full_mask(n: usize) -> usize {
    if n >= usize::BITS as usize {
        usize::MAX
    } else {
        (1usize << n) - 1
    }
}

/// Display string of `|G_i>`: `2N` characters, MSB first, each edge bit
/// duplicated next to itself. Edge `N - 1` is leftmost.
pub fn basis_string(i: usize, n_edges: usize) -> Result<String> {
    let i = EdgeBasisIndex::new(i, n_edges)?;
    let mut s = String::with_capacity(2 * n_edges);
    for edge in (0..n_edges).rev() {
        let c = if i.bit(edge) { '1' } else { '0' };
        s.push(c);
        s.push(c);
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Parity of the two qubits at vertex `n`, i.e. of the bits of edges `n - 1` and `n`.
pub fn vertex_parity(i: EdgeBasisIndex, n: usize, n_vertices: usize) -> Result<Parity> {
    if n >= n_vertices {
        return Err(Error::VertexOutOfRange {
            vertex: n,
            n_vertices,
        });
    }
    let left = (n + n_vertices - 1) % n_vertices;
    Ok(if i.bit(left) == i.bit(n) {
        Parity::Even
    } else {
        Parity::Odd
    })
}

/// Bitmask with bit `n` set iff vertex `n` has odd parity under configuration `i`.
pub fn odd_vertex_mask(i: usize, n_vertices: usize) -> u64 {
    let i = i as u64;
    let full = full_mask(n_vertices) as u64;
    let rotated = ((i << 1) | (i >> (n_vertices - 1))) & full;
    (i ^ rotated) & full
}

/// Normalized weights `f_i` over the `2^N` parity-even configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn from_amplitudes(weights: Vec<f64>) -> Self {
        WeightVector { weights }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.weights
    }

    /// Branch probabilities `f_i^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w * w).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    /// Crosses two vertices; no edge pair straddles the cut.
    L1,
    /// Crosses one edge, whose two qubits end up on opposite sides.
    L3 { split_edge: usize },
}

/// A bipartition of the network qubits described by whole edges.
///
/// For an `L3` cut the split edge is listed in `part_b_edges`; one of its
/// qubits belongs to side A.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    n_edges: usize,
    part_a_edges: Vec<usize>,
    part_b_edges: Vec<usize>,
    kind: CutKind,
}

impl Bipartition {
    /// Contiguous arc of `len` edges starting at edge `start`.
    pub fn l1_arc(n_edges: usize, start: usize, len: usize) -> Result<Self> {
        if len == 0 || len >= n_edges {
            return Err(Error::Bipartition(format!(
                "arc length {len} must be in 1..{n_edges}"
            )));
        }
        if start >= n_edges {
            return Err(Error::Bipartition(format!("start edge {start} out of range")));
        }
        let a: Vec<usize> = (0..len).map(|k| (start + k) % n_edges).collect();
        Self::from_edges(n_edges, a, CutKind::L1)
    }

    /// `floor(N/2)` consecutive edges starting at edge 0.
    pub fn equipartition(n_edges: usize) -> Result<Self> {
        Self::l1_arc(n_edges, 0, n_edges / 2)
    }

    /// L1 arc of `len` edges plus one qubit of `split_edge` on side A.
    pub fn l3(n_edges: usize, start: usize, len: usize, split_edge: usize) -> Result<Self> {
        let arc = if len == 0 {
            Vec::new()
        } else {
            Self::l1_arc(n_edges, start, len)?.part_a_edges
        };
        if split_edge >= n_edges || arc.contains(&split_edge) {
            return Err(Error::Bipartition(format!(
                "split edge {split_edge} must be an edge outside side A"
            )));
        }
        Self::from_edges(n_edges, arc, CutKind::L3 { split_edge })
    }

    pub fn from_edges(n_edges: usize, mut part_a: Vec<usize>, kind: CutKind) -> Result<Self> {
        part_a.sort_unstable();
        part_a.dedup();
        if part_a.iter().any(|&e| e >= n_edges) {
            return Err(Error::Bipartition("edge index out of range".into()));
        }
        if kind == CutKind::L1 {
            if part_a.is_empty() || part_a.len() == n_edges {
                return Err(Error::Bipartition("both sides must be non-empty".into()));
            }
            if !is_ring_arc(&part_a, n_edges) {
                return Err(Error::Bipartition(format!(
                    "side A edges {part_a:?} do not form a contiguous arc"
                )));
            }
        }
        let part_b = (0..n_edges).filter(|e| !part_a.contains(e)).collect();
        Ok(Bipartition {
            n_edges,
            part_a_edges: part_a,
            part_b_edges: part_b,
            kind,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn part_a_edges(&self) -> &[usize] {
        &self.part_a_edges
    }

    pub fn part_b_edges(&self) -> &[usize] {
        &self.part_b_edges
    }

    pub fn kind(&self) -> CutKind {
        self.kind
    }

    /// Bitmask over edge bits of the edges wholly on side A.
    pub fn a_mask(&self) -> usize {
        self.part_a_edges.iter().fold(0, |m, &e| m | (1 << e))
    }

    /// Number of physical qubits on side A.
    pub fn qubits_a(&self) -> usize {
        2 * self.part_a_edges.len() + usize::from(matches!(self.kind, CutKind::L3 { .. }))
    }

    /// Bitmask over the `2N` physical qubits (edge `j` owns qubits `2j`, `2j+1`).
    /// For an L3 cut, side A takes the first qubit of the split edge.
    pub fn physical_a_mask(&self) -> u64 {
        let mut m = self
            .part_a_edges
            .iter()
            .fold(0u64, |m, &e| m | (0b11 << (2 * e)));
        if let CutKind::L3 { split_edge } = self.kind {
            m |= 1 << (2 * split_edge);
        }
        m
    }
}

fn is_ring_arc(sorted: &[usize], n: usize) -> bool {
    // An arc on a ring has at most one gap between consecutive members (cyclically).
    let gaps = sorted
        .iter()
        .zip(sorted.iter().cycle().skip(1))
        .filter(|(&a, &b)| (b + n - a) % n != 1)
        .count();
    gaps <= 1
}

/// Largest negativity attainable across a cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativityBounds {
    /// `(2^{n_A} - 1)/2` with `n_A` physical qubits on side A.
    pub physical: f64,
    /// Same bound on the parity-reduced space, one effective qubit per edge.
    pub effective: f64,
}

pub fn max_negativity_bound(cut: &Bipartition) -> NegativityBounds {
    let bound = |k: usize| (2f64.powi(k as i32) - 1.0) / 2.0;
    NegativityBounds {
        physical: bound(cut.qubits_a()),
        effective: bound(cut.part_a_edges.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn make_network_examples() {
        let s = NetworkSpec::homogeneous(15, 0.1).unwrap();
        assert!(s.is_homogeneous());
        assert_eq!(s.n_edges(), 15);
        assert!(NetworkSpec::homogeneous(3, 0.0).is_ok());
        assert!(matches!(
            NetworkSpec::new(4, vec![0.1, 0.6, 0.2, 0.3]),
            Err(Error::AlphaOutOfRange { edge: 1, .. })
        ));
        assert!(matches!(
            NetworkSpec::new(4, vec![0.1; 3]),
            Err(Error::EdgeCountMismatch { .. })
        ));
        assert!(matches!(NetworkSpec::new(2, vec![0.1; 2]), Err(Error::TooFewVertices(2))));
        assert!(!NetworkSpec::new(3, vec![0.1, 0.1, 0.2]).unwrap().is_homogeneous());
    }

    #[test]
    fn ine_is_mean_alpha() {
        assert_abs_diff_eq!(
            NetworkSpec::homogeneous(10, 0.3).unwrap().initial_network_entanglement(),
            0.3,
            epsilon = 1e-15
        );
        let s = NetworkSpec::new(4, vec![0.1, 0.3, 0.1, 0.3]).unwrap();
        assert_abs_diff_eq!(s.initial_network_entanglement(), 0.2, epsilon = 1e-15);
        assert_eq!(NetworkSpec::homogeneous(5, 0.0).unwrap().initial_network_entanglement(), 0.0);
    }

    #[test]
    fn basis_strings_match_n3_listing() {
        let expected = [
            "000000", "000011", "001100", "001111", "110000", "110011", "111100", "111111",
        ];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(basis_string(i, 3).unwrap(), *e);
        }
        assert!(matches!(basis_string(8, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn weight_examples() {
        let s = NetworkSpec::homogeneous(3, 0.5).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(
                s.weight(EdgeBasisIndex(i)),
                2f64.powf(-1.5),
                epsilon = 1e-15
            );
        }
        let s = NetworkSpec::homogeneous(3, 0.2).unwrap();
        assert_abs_diff_eq!(s.weight(EdgeBasisIndex(0)), 0.2f64.powf(1.5), epsilon = 1e-15);
        // weights() agrees with the per-index product
        let s = NetworkSpec::new(5, vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let w = s.weights();
        for i in 0..32 {
            assert_abs_diff_eq!(w.amplitudes()[i], s.weight(EdgeBasisIndex(i)), epsilon = 1e-15);
        }
    }

    #[test]
    fn homogeneous_weight_depends_on_hamming_weight_only() {
        let a: f64 = 0.27;
        let s = NetworkSpec::homogeneous(6, a).unwrap();
        for i in 0..64usize {
            let wt = i.count_ones() as f64;
            let closed = a.powf((6.0 - wt) / 2.0) * (1.0 - a).powf(wt / 2.0);
            assert_abs_diff_eq!(s.weight(EdgeBasisIndex(i)), closed, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertex_parity_examples() {
        for n in 0..5 {
            assert_eq!(vertex_parity(EdgeBasisIndex(0), n, 5).unwrap(), Parity::Even);
        }
        // alternating edge bits 0101 on N = 4
        for n in 0..4 {
            assert_eq!(vertex_parity(EdgeBasisIndex(0b1010), n, 4).unwrap(), Parity::Odd);
        }
        // edge bits (e0, e1, e2) = (1, 0, 0): vertex 0 sees edges 2 and 0
        assert_eq!(vertex_parity(EdgeBasisIndex(0b001), 0, 3).unwrap(), Parity::Odd);
        assert_eq!(vertex_parity(EdgeBasisIndex(0b001), 2, 3).unwrap(), Parity::Even);
        assert!(vertex_parity(EdgeBasisIndex(0), 3, 3).is_err());
    }

    #[test]
    fn odd_mask_matches_vertex_parity() {
        for n in 3..8 {
            for i in 0..(1usize << n) {
                let mask = odd_vertex_mask(i, n);
                for v in 0..n {
                    let odd = vertex_parity(EdgeBasisIndex(i), v, n).unwrap() == Parity::Odd;
                    assert_eq!((mask >> v) & 1 == 1, odd);
                }
            }
        }
    }

    #[test]
    fn bounds() {
        let eq = Bipartition::equipartition(10).unwrap();
        let b = max_negativity_bound(&eq);
        assert_eq!(eq.qubits_a(), 10);
        assert_eq!(b.physical, 511.5);
        assert_eq!(b.effective, 15.5);
        let single = Bipartition::l1_arc(6, 2, 1).unwrap();
        assert_eq!(max_negativity_bound(&single).physical, 1.5);
    }

    #[test]
    fn bipartition_validation() {
        assert!(Bipartition::from_edges(6, vec![0, 2], CutKind::L1).is_err());
        assert!(Bipartition::from_edges(6, vec![5, 0, 1], CutKind::L1).is_ok());
        assert!(Bipartition::l1_arc(6, 0, 6).is_err());
        let l3 = Bipartition::l3(6, 0, 2, 2).unwrap();
        assert_eq!(l3.part_b_edges(), &[2, 3, 4, 5]);
        assert_eq!(l3.qubits_a(), 5);
        assert!(Bipartition::l3(6, 0, 2, 1).is_err());
        let eq = Bipartition::equipartition(10).unwrap();
        assert_eq!(eq.a_mask(), 0b11111);
        assert_eq!(eq.physical_a_mask(), (1 << 10) - 1);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = NetworkSpec::new(3, vec![0.1, 0.2, 0.3]).unwrap();
        let back = NetworkSpec::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
        let bad = r#"{"n_vertices": 3, "edge_alphas": [0.1, 0.7, 0.2]}"#;
        assert!(NetworkSpec::from_json(bad).is_err());
    }
}
