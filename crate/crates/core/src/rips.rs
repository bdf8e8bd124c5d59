//! The scale-indexed Rips 2-complex: vertices, strict-threshold edges, and
//! triangles. Basic chain moves are exactly edge-path moves across these
//! triangles, plus the degenerate repeated-point moves.

use crate::metric::{FiniteMetricSpace, MetricError, ScaleGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct RipsComplex2<S: Scalar> {
    pub scale: S,
    pub n: usize,
    /// Edges `(i, j)` with `i < j`, lexicographic.
    pub edges: Vec<(usize, usize)>,
    /// Triangles `(i, j, k)` with `i < j < k`, lexicographic.
    pub triangles: Vec<(usize, usize, usize)>,
}

/// Builds the 2-skeleton at a scale: edges and triangles by strict
/// threshold.
pub fn rips2<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    scale: S,
) -> Result<RipsComplex2<S>, MetricError> {
    let graph = ScaleGraph::new(space, scale)?;
    let n = space.len();
    let edges = graph.edges();
    let mut triangles = Vec::new();
    for i in 0..n {
        for &j in graph.neighbors(i) {
            if j <= i {
                continue;
            }
            for &k in graph.neighbors(j) {
                if k <= j {
                    continue;
                }
                if space.dist(i, k) < scale {
                    triangles.push((i, j, k));
                }
            }
        }
    }
    Ok(RipsComplex2 { scale, n, edges, triangles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> FiniteMetricSpace<f64> {
        let r = std::f64::consts::SQRT_2;
        FiniteMetricSpace::build(
            &[
                vec![0.0, 1.0, r, 1.0],
                vec![1.0, 0.0, 1.0, r],
                vec![r, 1.0, 0.0, 1.0],
                vec![1.0, r, 1.0, 0.0],
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn two_points_one_edge() {
        let s = FiniteMetricSpace::build(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        let c = rips2(&s, 2.0).unwrap();
        assert_eq!(c.edges.len(), 1);
        assert!(c.triangles.is_empty());
    }

    #[test]
    fn square_below_diagonal_has_no_triangles() {
        let c = rips2(&unit_square(), 1.2).unwrap();
        assert_eq!(c.edges.len(), 4);
        assert!(c.triangles.is_empty());
    }

    #[test]
    fn square_above_diagonal_fills_in() {
        let c = rips2(&unit_square(), 1.5).unwrap();
        assert_eq!(c.edges.len(), 6);
        assert_eq!(c.triangles.len(), 4);
    }

    #[test]
    fn triangle_edges_are_present_and_monotone() {
        let s = unit_square();
        let small = rips2(&s, 1.2).unwrap();
        let big = rips2(&s, 1.5).unwrap();
        for e in &small.edges {
            assert!(big.edges.contains(e));
        }
        for &(i, j, k) in &big.triangles {
            assert!(big.edges.contains(&(i, j)));
            assert!(big.edges.contains(&(j, k)));
            assert!(big.edges.contains(&(i, k)));
        }
    }
}
