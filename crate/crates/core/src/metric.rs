//! Finite metric spaces, scale graphs, and chain components.
//!
//! A [`FiniteMetricSpace`] is an immutable validated distance matrix. Every
//! scale-indexed structure in the crate (chains, Rips complexes, covers,
//! towers) reads distances from here and nowhere else. Comparisons against a
//! scale are exact on the stored values: an edge exists at scale `eps` iff
//! `d < eps`, never `<=`.

use crate::scalar::Scalar;
use thiserror::Error;

/// Errors from metric space construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("distance matrix is not square: row {row} has length {len}, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("asymmetric matrix at ({i},{j}): {dij} vs {dji}")]
    AsymmetricMatrix { i: usize, j: usize, dij: f64, dji: f64 },
    #[error("negative distance at ({i},{j}): {d}")]
    NegativeDistance { i: usize, j: usize, d: f64 },
    #[error("nonzero diagonal at ({i},{i}): {d}")]
    NonzeroDiagonal { i: usize, d: f64 },
    #[error("zero distance between distinct points {i} and {j}")]
    DuplicatePoint { i: usize, j: usize },
    #[error("triangle inequality violated by ({i},{j},{k}): d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("graph is disconnected: no path reaches point {unreached}")]
    DisconnectedGraph { unreached: usize },
    #[error("scale must be positive, got {scale}")]
    NonpositiveScale { scale: f64 },
    #[error("point index {index} out of range for space with {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("graph edge ({i},{j}) has nonpositive weight {w}")]
    BadEdgeWeight { i: usize, j: usize, w: f64 },
}

/// A finite metric space: `n` points and a validated symmetric distance
/// matrix. `geodesic_flag` marks spaces whose metric came from shortest
/// paths over a connected weighted graph; such spaces remember their source
/// edges so they serialize through the graph schema and reload bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace<S: Scalar> {
    n: usize,
    dist: Vec<S>,
    labels: Option<Vec<String>>,
    geodesic_flag: bool,
    source_edges: Option<Vec<(usize, usize, S)>>,
}

impl<S: Scalar> FiniteMetricSpace<S> {
    /// Validates a square distance matrix and builds the space.
    ///
    /// Checks, in order per entry: zero diagonal, symmetry, nonnegativity,
    /// positivity off the diagonal, and the triangle inequality at relative
    /// tolerance [`Scalar::validation_tolerance`].
    pub fn build(matrix: &[Vec<S>], labels: Option<Vec<String>>) -> Result<Self, MetricError> {
        let n = matrix.len();
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare { row, len: r.len(), n });
            }
        }
        let mut dist = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = matrix[i][j];
            }
        }
        Self::from_flat(n, dist, labels, false)
    }

    fn from_flat(
        n: usize,
        dist: Vec<S>,
        labels: Option<Vec<String>>,
        geodesic_flag: bool,
    ) -> Result<Self, MetricError> {
        let at = |i: usize, j: usize| dist[i * n + j];
        for i in 0..n {
            if at(i, i) != S::zero() {
                return Err(MetricError::NonzeroDiagonal { i, d: at(i, i).to_f64().unwrap_or(f64::NAN) });
            }
            for j in 0..n {
                let d = at(i, j);
                if d < S::zero() {
                    return Err(MetricError::NegativeDistance { i, j, d: d.to_f64().unwrap_or(f64::NAN) });
                }
                if d != at(j, i) {
                    return Err(MetricError::AsymmetricMatrix {
                        i,
                        j,
                        dij: d.to_f64().unwrap_or(f64::NAN),
                        dji: at(j, i).to_f64().unwrap_or(f64::NAN),
                    });
                }
                if i != j && d == S::zero() {
                    return Err(MetricError::DuplicatePoint { i: i.min(j), j: i.max(j) });
                }
            }
        }
        // Triangle inequality with relative tolerance: shortest-path sums
        // accumulate rounding, real violations at fixture magnitudes do not.
        let tol = S::validation_tolerance();
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    let lhs = at(i, k);
                    let rhs = at(i, j) + at(j, k);
                    let slack = tol * (S::one() + lhs.abs() + rhs.abs());
                    if lhs > rhs + slack {
                        return Err(MetricError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { n, dist, labels, geodesic_flag, source_edges: None })
    }

    /// Shortest-path metric of a connected weighted graph; sets the geodesic
    /// flag. Edges are undirected `(i, j, w)` with `w > 0`.
    pub fn from_graph(n: usize, edges: &[(usize, usize, S)], labels: Option<Vec<String>>) -> Result<Self, MetricError> {
        let inf = S::infinity();
        let mut dist = vec![inf; n * n];
        for i in 0..n {
            dist[i * n + i] = S::zero();
        }
        for &(i, j, w) in edges {
            if i >= n {
                return Err(MetricError::IndexOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(MetricError::IndexOutOfRange { index: j, n });
            }
            if w <= S::zero() {
                return Err(MetricError::BadEdgeWeight { i, j, w: w.to_f64().unwrap_or(f64::NAN) });
            }
            if w < dist[i * n + j] {
                dist[i * n + j] = w;
                dist[j * n + i] = w;
            }
        }
        // Floyd-Warshall; n stays at desk scale.
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i * n + k];
                if dik == inf {
                    continue;
                }
                for j in 0..n {
                    let via = dik + dist[k * n + j];
                    if via < dist[i * n + j] {
                        dist[i * n + j] = via;
                    }
                }
            }
        }
        if let Some(unreached) = (0..n).find(|&j| dist[j] == inf) {
            return Err(MetricError::DisconnectedGraph { unreached });
        }
        let mut space = Self::from_flat(n, dist, labels, true)?;
        space.source_edges = Some(edges.to_vec());
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> S {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_geodesic(&self) -> bool {
        self.geodesic_flag
    }

    /// The weighted edges this space was built from, when it came from a
    /// graph.
    pub fn source_edges(&self) -> Option<&[(usize, usize, S)]> {
        self.source_edges.as_deref()
    }

    pub fn check_index(&self, i: usize) -> Result<(), MetricError> {
        if i < self.n {
            Ok(())
        } else {
            Err(MetricError::IndexOutOfRange { index: i, n: self.n })
        }
    }

    /// Largest pairwise distance (0 for a single point).
    pub fn diameter(&self) -> S {
        let mut d = S::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.dist(i, j) > d {
                    d = self.dist(i, j);
                }
            }
        }
        d
    }

    /// Sorted distinct positive pairwise distances.
    pub fn distance_values(&self) -> Vec<S> {
        let mut vals: Vec<S> = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                vals.push(self.dist(i, j));
            }
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        vals
    }

    /// Restriction of the metric to a subset of points (subspace metric,
    /// not re-shortest-pathed). Index order follows `points`.
    pub fn subspace(&self, points: &[usize]) -> Result<Self, MetricError> {
        for &p in points {
            self.check_index(p)?;
        }
        let m = points.len();
        let mut dist = vec![S::zero(); m * m];
        for (a, &p) in points.iter().enumerate() {
            for (b, &q) in points.iter().enumerate() {
                dist[a * m + b] = self.dist(p, q);
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|ls| points.iter().map(|&p| ls[p].clone()).collect());
        Self::from_flat(m, dist, labels, false)
    }
}

/// The scale-`eps` graph: edges are exactly the pairs at distance strictly
/// below the scale. Monotone nondecreasing in `eps`.
#[derive(Debug, Clone)]
pub struct ScaleGraph<S: Scalar> {
    scale: S,
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

impl<S: Scalar> ScaleGraph<S> {
    pub fn new(space: &FiniteMetricSpace<S>, scale: S) -> Result<Self, MetricError> {
        if scale <= S::zero() {
            return Err(MetricError::NonpositiveScale { scale: scale.to_f64().unwrap_or(f64::NAN) });
        }
        let n = space.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && space.dist(i, j) < scale {
                    adjacency[i].push(j);
                }
            }
        }
        Ok(ScaleGraph { scale, n, adjacency })
    }

    pub fn scale(&self) -> S {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Neighbors in ascending index order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Undirected edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for &j in &self.adjacency[i] {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|a| a.len()).sum::<usize>() / 2
    }
}

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind { parent: (0..len).collect(), size: vec![1; len] }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[i] != root {
            let next = self.parent[i];
            self.parent[i] = root;
            i = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        if self.size[ra] >= self.size[rb] {
            self.parent[rb] = ra;
            self.size[ra] += self.size[rb];
        } else {
            self.parent[ra] = rb;
            self.size[rb] += self.size[ra];
        }
    }
}

/// Partition of point indices into chain components. Component ids are
/// canonicalized to the minimum member index, so outputs are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    representative: Vec<usize>,
    count: usize,
}

impl Partition {
    pub fn from_union_find(mut uf: UnionFind, n: usize) -> Self {
        let mut min_member = vec![usize::MAX; n];
        for i in 0..n {
            let r = uf.find(i);
            if i < min_member[r] {
                min_member[r] = i;
            }
        }
        let mut representative = vec![0; n];
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..n {
            let r = uf.find(i);
            representative[i] = min_member[r];
            seen.insert(min_member[r]);
        }
        Partition { representative, count: seen.len() }
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.representative[i]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn same_component(&self, i: usize, j: usize) -> bool {
        self.representative[i] == self.representative[j]
    }

    /// Members of the component containing `i`, ascending.
    pub fn members(&self, i: usize) -> Vec<usize> {
        let id = self.representative[i];
        (0..self.representative.len())
            .filter(|&j| self.representative[j] == id)
            .collect()
    }

    /// Does `other` (at a coarser scale) merge every block of `self` whole?
    pub fn refines(&self, other: &Partition) -> bool {
        self.representative
            .iter()
            .enumerate()
            .all(|(i, &r)| other.representative[i] == other.representative[r])
    }
}

/// Components of the scale-`eps` graph via disjoint-set union.
pub fn chain_components<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    scale: S,
) -> Result<Partition, MetricError> {
    let graph = ScaleGraph::new(space, scale)?;
    let mut uf = UnionFind::new(space.len());
    for (i, j) in graph.edges() {
        uf.union(i, j);
    }
    Ok(Partition::from_union_find(uf, space.len()))
}

/// Largest edge weight on a minimum spanning tree of the complete distance
/// graph. The space is chain connected at every scale strictly above this
/// value and disconnected at or below it whenever the maximum is attained.
pub fn connectivity_threshold<S: Scalar>(space: &FiniteMetricSpace<S>) -> S {
    let n = space.len();
    if n <= 1 {
        return S::zero();
    }
    // Prim's algorithm on the complete graph.
    let mut in_tree = vec![false; n];
    let mut best = vec![S::infinity(); n];
    best[0] = S::zero();
    let mut max_edge = S::zero();
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if best[u] > max_edge {
            max_edge = best[u];
        }
        for v in 0..n {
            if !in_tree[v] && space.dist(u, v) < best[v] {
                best[v] = space.dist(u, v);
            }
        }
    }
    max_edge
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> FiniteMetricSpace<f64> {
        FiniteMetricSpace::build(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap()
    }

    pub(crate) fn unit_six_cycle() -> FiniteMetricSpace<f64> {
        let edges: Vec<(usize, usize, f64)> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
        FiniteMetricSpace::from_graph(6, &edges, None).unwrap()
    }

    #[test]
    fn one_point_space_is_valid() {
        let s = FiniteMetricSpace::build(&[vec![0.0]], None).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn two_point_space_is_valid() {
        assert_eq!(two_point().len(), 2);
    }

    #[test]
    fn triangle_violation_names_the_triple() {
        let err = FiniteMetricSpace::build(
            &[vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]],
            None,
        )
        .unwrap_err();
        assert_eq!(err, MetricError::TriangleViolation { i: 0, j: 1, k: 2 });
    }

    #[test]
    fn asymmetry_and_negativity_are_rejected() {
        let err = FiniteMetricSpace::build(&[vec![0.0, 1.0], vec![2.0, 0.0]], None).unwrap_err();
        assert!(matches!(err, MetricError::AsymmetricMatrix { .. }));
        let err = FiniteMetricSpace::build(&[vec![0.0, -1.0], vec![-1.0, 0.0]], None).unwrap_err();
        assert!(matches!(err, MetricError::NegativeDistance { .. }));
    }

    #[test]
    fn path_graph_metric_concatenates() {
        let s = FiniteMetricSpace::from_graph(3, &[(0, 1, 1.0), (1, 2, 1.0)], None).unwrap();
        assert_eq!(s.dist(0, 2), 2.0);
        assert!(s.is_geodesic());
    }

    #[test]
    fn four_cycle_opposite_distance() {
        let edges: Vec<(usize, usize, f64)> = (0..4).map(|i| (i, (i + 1) % 4, 1.0)).collect();
        let s = FiniteMetricSpace::from_graph(4, &edges, None).unwrap();
        assert_eq!(s.dist(0, 2), 2.0);
    }

    #[test]
    fn six_cycle_distances_match_brute_force_path_oracle() {
        // Oracle: enumerate all simple paths on the 6-cycle's edge set and
        // take the minimum total weight, independently of Floyd-Warshall.
        let s = unit_six_cycle();
        let edges: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let adj = |a: usize, b: usize| edges.iter().any(|&(x, y)| (x, y) == (a.min(b), a.max(b)) || (y, x) == (a.min(b), a.max(b)));
        fn paths(adj: &dyn Fn(usize, usize) -> bool, from: usize, to: usize, seen: &mut Vec<usize>, best: &mut f64) {
            let cur = *seen.last().unwrap();
            if cur == to {
                if (seen.len() as f64 - 1.0) < *best {
                    *best = seen.len() as f64 - 1.0;
                }
                return;
            }
            for next in 0..6 {
                if !seen.contains(&next) && adj(cur, next) {
                    seen.push(next);
                    paths(adj, from, to, seen, best);
                    seen.pop();
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let mut best = f64::INFINITY;
                paths(&adj, i, j, &mut vec![i], &mut best);
                assert_eq!(s.dist(i, j), best, "pair ({i},{j})");
            }
        }
        assert_eq!(s.dist(0, 3), 3.0);
        assert_eq!(s.dist(0, 2), 2.0);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let err = FiniteMetricSpace::<f64>::from_graph(3, &[(0, 1, 1.0)], None).unwrap_err();
        assert!(matches!(err, MetricError::DisconnectedGraph { .. }));
    }

    #[test]
    fn components_respect_strict_inequality() {
        let s = two_point();
        assert_eq!(chain_components(&s, 1.0).unwrap().count(), 2);
        assert_eq!(chain_components(&s, 1.01).unwrap().count(), 1);
        assert_eq!(chain_components(&s, 5.0).unwrap().count(), 1);
    }

    #[test]
    fn nonpositive_scale_is_rejected() {
        let s = two_point();
        assert!(matches!(chain_components(&s, 0.0), Err(MetricError::NonpositiveScale { .. })));
    }

    #[test]
    fn component_ids_are_minimum_member() {
        let s = FiniteMetricSpace::build(
            &[
                vec![0.0, 10.0, 1.0],
                vec![10.0, 0.0, 10.0],
                vec![1.0, 10.0, 0.0],
            ],
            None,
        )
        .unwrap();
        let p = chain_components(&s, 2.0).unwrap();
        assert_eq!(p.component_of(0), 0);
        assert_eq!(p.component_of(2), 0);
        assert_eq!(p.component_of(1), 1);
        assert_eq!(p.count(), 2);
    }

    #[test]
    fn threshold_two_point() {
        assert_eq!(connectivity_threshold(&two_point()), 1.0);
    }

    #[test]
    fn threshold_collinear() {
        let s = FiniteMetricSpace::build(
            &[vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 4.0], vec![5.0, 4.0, 0.0]],
            None,
        )
        .unwrap();
        assert_eq!(connectivity_threshold(&s), 4.0);
    }

    #[test]
    fn threshold_six_cycle_matches_grid_scan() {
        let s = unit_six_cycle();
        assert_eq!(connectivity_threshold(&s), 1.0);
        // Grid scan oracle: smallest distance value whose immediate upside
        // makes the space one component.
        let mut scan = None;
        for &v in &s.distance_values() {
            let just_above = v * (1.0 + 1e-9) + 1e-12;
            if chain_components(&s, just_above).unwrap().count() == 1 {
                scan = Some(v);
                break;
            }
        }
        assert_eq!(scan, Some(1.0));
    }

    #[test]
    fn partition_refinement_is_monotone() {
        let s = unit_six_cycle();
        let fine = chain_components(&s, 1.1).unwrap();
        let coarse = chain_components(&s, 2.5).unwrap();
        assert!(fine.refines(&coarse));
        assert!(fine.count() >= coarse.count());
    }

    #[test]
    fn f32_space_works() {
        let s = FiniteMetricSpace::<f32>::build(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        assert_eq!(connectivity_threshold(&s), 1.0f32);
    }

    #[test]
    fn subspace_restricts_metric() {
        let s = unit_six_cycle();
        let sub = s.subspace(&[0, 2, 3]).unwrap();
        assert_eq!(sub.dist(0, 1), 2.0);
        assert_eq!(sub.dist(1, 2), 1.0);
        assert_eq!(sub.dist(0, 2), 3.0);
    }
}
