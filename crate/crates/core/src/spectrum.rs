//! Scale scan: invariants per interval between consecutive candidate
//! scales, and the critical values where they jump.
//!
//! Candidate scales are the distinct positive pairwise distances. Each open
//! interval between consecutive candidates is represented by its midpoint
//! (the interval below the smallest candidate by half of it, the ray above
//! the diameter by a point just beyond), since the invariants are constant
//! on these intervals: the scale graph and Rips complex only change when
//! the scale crosses a distance value.

use crate::metric::{chain_components, FiniteMetricSpace};
use crate::presentation::{presentation, PresentationError};
use crate::scalar::Scalar;

/// Invariants on one scale interval, evaluated at `probe`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow<S: Scalar> {
    /// Interval `(lo, hi)`; `hi` is infinite on the final ray.
    pub lo: S,
    pub hi: S,
    pub probe: S,
    pub components: usize,
    pub betti1: usize,
    pub torsion: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<S: Scalar> {
    pub basepoint: usize,
    pub rows: Vec<SpectrumRow<S>>,
    /// Candidate scales where adjacent intervals differ.
    pub critical_values: Vec<S>,
}

/// Probe scales covering every interval of constant invariants: half the
/// smallest distance, the midpoints, and one value above the diameter.
pub fn probe_grid<S: Scalar>(space: &FiniteMetricSpace<S>) -> Vec<(S, S, S)> {
    let two = S::from_f64(2.0).unwrap();
    let values = space.distance_values();
    if values.is_empty() {
        let one = S::one();
        return vec![(S::zero(), S::infinity(), one)];
    }
    let mut out = Vec::with_capacity(values.len() + 1);
    out.push((S::zero(), values[0], values[0] / two));
    for w in values.windows(2) {
        out.push((w[0], w[1], (w[0] + w[1]) / two));
    }
    let top = *values.last().unwrap();
    out.push((top, S::infinity(), top * two));
    out
}

/// Midpoint scales strictly inside `(lo, hi)`, for quantifying over
/// fineness parameters on the same grid the spectrum uses.
pub fn probe_scales_between<S: Scalar>(space: &FiniteMetricSpace<S>, lo: S, hi: S) -> Vec<S> {
    probe_grid(space)
        .into_iter()
        .map(|(_, _, probe)| probe)
        .filter(|&p| p > lo && p < hi)
        .collect()
}

/// Per-interval component count, betti number, and torsion at the
/// basepoint's component, with the critical values between intervals.
pub fn critical_spectrum<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    basepoint: usize,
) -> Result<Spectrum<S>, PresentationError> {
    space.check_index(basepoint)?;
    let grid = probe_grid(space);
    let mut rows = Vec::with_capacity(grid.len());
    for (lo, hi, probe) in grid {
        let components = chain_components(space, probe)?.count();
        let h = presentation(space, probe, basepoint)?.homology()?;
        rows.push(SpectrumRow { lo, hi, probe, components, betti1: h.betti, torsion: h.torsion });
    }
    let mut critical_values = Vec::new();
    for pair in rows.windows(2) {
        let differs = pair[0].components != pair[1].components
            || pair[0].betti1 != pair[1].betti1
            || pair[0].torsion != pair[1].torsion;
        if differs {
            critical_values.push(pair[1].lo);
        }
    }
    Ok(Spectrum { basepoint, rows, critical_values })
}

impl<S: Scalar> Spectrum<S> {
    /// Largest critical value at which the betti number changes.
    pub fn largest_betti_critical(&self) -> Option<S> {
        let mut last = None;
        for pair in self.rows.windows(2) {
            if pair[0].betti1 != pair[1].betti1 {
                last = Some(pair[1].lo);
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_space_has_single_critical_value() {
        let s = FiniteMetricSpace::build(&[vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        let spec = critical_spectrum(&s, 0).unwrap();
        assert_eq!(spec.critical_values, vec![1.0]);
        assert_eq!(spec.rows[0].components, 2);
        assert_eq!(spec.rows[1].components, 1);
    }

    #[test]
    fn unit_square_critical_values() {
        let r = std::f64::consts::SQRT_2;
        let s = FiniteMetricSpace::build(
            &[
                vec![0.0, 1.0, r, 1.0],
                vec![1.0, 0.0, 1.0, r],
                vec![r, 1.0, 0.0, 1.0],
                vec![1.0, r, 1.0, 0.0],
            ],
            None,
        )
        .unwrap();
        let spec = critical_spectrum(&s, 0).unwrap();
        assert_eq!(spec.critical_values, vec![1.0, r]);
        // Connectivity at 1, betti death at sqrt(2).
        assert_eq!(spec.largest_betti_critical(), Some(r));
        let rows = &spec.rows;
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].components, rows[0].betti1), (4, 0));
        assert_eq!((rows[1].components, rows[1].betti1), (1, 1));
        assert_eq!((rows[2].components, rows[2].betti1), (1, 0));
        assert!(rows.iter().all(|r| r.torsion.is_empty()));
    }

    #[test]
    fn probe_grid_covers_all_intervals() {
        let s = FiniteMetricSpace::build(
            &[vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 4.0], vec![5.0, 4.0, 0.0]],
            None,
        )
        .unwrap();
        let grid = probe_grid(&s);
        assert_eq!(grid.len(), 4); // below 1, (1,4), (4,5), above 5
        assert_eq!(grid[0].2, 0.5);
        assert_eq!(grid[1].2, 2.5);
        assert_eq!(grid[2].2, 4.5);
        assert!(grid[3].2 > 5.0);
    }

    #[test]
    fn single_point_space_spectrum() {
        let s = FiniteMetricSpace::build(&[vec![0.0]], None).unwrap();
        let spec = critical_spectrum(&s, 0).unwrap();
        assert!(spec.critical_values.is_empty());
        assert_eq!(spec.rows.len(), 1);
        assert_eq!(spec.rows[0].components, 1);
    }
}
