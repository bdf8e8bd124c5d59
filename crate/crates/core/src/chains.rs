//! Epsilon-chains, the two basic moves, and verified homotopies.
//!
//! A homotopy is stored as a start chain plus a move list, never as a list
//! of chains: every intermediate is reconstructible and a witness replays in
//! O(total moves). Moves never change endpoint values. Interior insertions
//! and removals are the ordinary basic moves; adding or removing a repeated
//! point is legal anywhere, including at an endpoint, which is how a null
//! homotopy takes its final step from a two-point loop down to the basepoint.

use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A scale together with a point-index sequence whose consecutive distances
/// are strictly below the scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<S: Scalar> {
    pub scale: S,
    pub points: Vec<usize>,
}

impl<S: Scalar> Chain<S> {
    pub fn new(scale: S, points: Vec<usize>) -> Self {
        Chain { scale, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> usize {
        self.points[0]
    }

    pub fn last(&self) -> usize {
        *self.points.last().unwrap()
    }

    pub fn is_loop(&self) -> bool {
        self.first() == self.last()
    }
}

/// One basic move. `Insert { pos, point }` puts `point` at index `pos`;
/// `Remove { pos }` deletes index `pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum BasicMove {
    #[serde(rename = "ins")]
    Insert { pos: usize, #[serde(rename = "pt")] point: usize },
    #[serde(rename = "rem")]
    Remove { pos: usize },
}

impl BasicMove {
    /// The move that undoes this one on the chain it was applied to.
    pub fn inverse_on(&self, before: &[usize]) -> BasicMove {
        match *self {
            BasicMove::Insert { pos, .. } => BasicMove::Remove { pos },
            BasicMove::Remove { pos } => BasicMove::Insert { pos, point: before[pos] },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveViolation {
    /// The move would change an endpoint value.
    Endpoint,
    /// A required distance is not strictly below the scale.
    Distance,
    /// Position out of range for the chain.
    Position,
}

/// Errors from chain validation and move application.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("point index {index} out of range for space with {n} points")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("chain is empty")]
    EmptyChain,
    #[error("consecutive points {i} and {j} at positions {pos},{pos1} are not within scale", pos1 = pos + 1)]
    StepTooLong { pos: usize, i: usize, j: usize },
    #[error("illegal move at position {pos}: {reason:?}")]
    IllegalMove { pos: usize, reason: MoveViolation },
    #[error("concatenation junction mismatch: first ends at {left}, second starts at {right}")]
    JunctionMismatch { left: usize, right: usize },
    #[error("scale mismatch: {a} vs {b}")]
    ScaleMismatch { a: f64, b: f64 },
    #[error("homotopy fails at step {step}: {source}")]
    HomotopyStep { step: usize, source: Box<ChainError> },
}

/// Ok iff every consecutive distance is strictly below the chain's scale.
/// Reports the first failing pair.
pub fn validate_chain<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    chain: &Chain<S>,
) -> Result<(), ChainError> {
    if chain.points.is_empty() {
        return Err(ChainError::EmptyChain);
    }
    for &p in &chain.points {
        if p >= space.len() {
            return Err(ChainError::IndexOutOfRange { index: p, n: space.len() });
        }
    }
    for pos in 0..chain.points.len() - 1 {
        let (i, j) = (chain.points[pos], chain.points[pos + 1]);
        if !(space.dist(i, j) < chain.scale) {
            return Err(ChainError::StepTooLong { pos, i, j });
        }
    }
    Ok(())
}

fn check_move<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    chain: &Chain<S>,
    mv: BasicMove,
) -> Result<(), ChainError> {
    let pts = &chain.points;
    let n = pts.len();
    let eps = chain.scale;
    match mv {
        BasicMove::Insert { pos, point } => {
            if point >= space.len() {
                return Err(ChainError::IndexOutOfRange { index: point, n: space.len() });
            }
            if pos > n {
                return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Position });
            }
            if pos == 0 {
                // Prepending is only the degenerate repeated-point move.
                if point != pts[0] {
                    return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Endpoint });
                }
                return Ok(());
            }
            if pos == n {
                if point != pts[n - 1] {
                    return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Endpoint });
                }
                return Ok(());
            }
            if !(space.dist(pts[pos - 1], point) < eps) || !(space.dist(point, pts[pos]) < eps) {
                return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Distance });
            }
            Ok(())
        }
        BasicMove::Remove { pos } => {
            if pos >= n {
                return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Position });
            }
            if n == 1 {
                return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Endpoint });
            }
            if pos == 0 {
                // Removing an endpoint is legal only when it is a duplicate.
                if pts[0] != pts[1] {
                    return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Endpoint });
                }
                return Ok(());
            }
            if pos == n - 1 {
                if pts[n - 1] != pts[n - 2] {
                    return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Endpoint });
                }
                return Ok(());
            }
            if !(space.dist(pts[pos - 1], pts[pos + 1]) < eps) {
                return Err(ChainError::IllegalMove { pos, reason: MoveViolation::Distance });
            }
            Ok(())
        }
    }
}

/// Applies a basic move, returning the new chain. The input chain is assumed
/// valid; the move is checked.
pub fn apply_move<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    chain: &Chain<S>,
    mv: BasicMove,
) -> Result<Chain<S>, ChainError> {
    check_move(space, chain, mv)?;
    let mut points = chain.points.clone();
    match mv {
        BasicMove::Insert { pos, point } => points.insert(pos, point),
        BasicMove::Remove { pos } => {
            points.remove(pos);
        }
    }
    Ok(Chain { scale: chain.scale, points })
}

/// Concatenation, first argument traversed first; the shared junction point
/// is stored once.
pub fn concatenate<S: Scalar>(a: &Chain<S>, b: &Chain<S>) -> Result<Chain<S>, ChainError> {
    if a.scale != b.scale {
        return Err(ChainError::ScaleMismatch {
            a: a.scale.to_f64().unwrap_or(f64::NAN),
            b: b.scale.to_f64().unwrap_or(f64::NAN),
        });
    }
    if a.last() != b.first() {
        return Err(ChainError::JunctionMismatch { left: a.last(), right: b.first() });
    }
    let mut points = a.points.clone();
    points.extend_from_slice(&b.points[1..]);
    Ok(Chain { scale: a.scale, points })
}

pub fn reverse<S: Scalar>(a: &Chain<S>) -> Chain<S> {
    let mut points = a.points.clone();
    points.reverse();
    Chain { scale: a.scale, points }
}

/// A start chain plus a move list; every intermediate chain is an
/// epsilon-chain with the same endpoint values as the start.
#[derive(Debug, Clone, PartialEq)]
pub struct Homotopy<S: Scalar> {
    pub start: Chain<S>,
    pub moves: Vec<BasicMove>,
}

impl<S: Scalar> Homotopy<S> {
    pub fn identity(start: Chain<S>) -> Self {
        Homotopy { start, moves: Vec::new() }
    }
}

/// Replays the move list, checking each step. Ok returns the final chain.
pub fn verify_homotopy<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    homotopy: &Homotopy<S>,
) -> Result<Chain<S>, ChainError> {
    validate_chain(space, &homotopy.start)?;
    let mut current = homotopy.start.clone();
    for (step, &mv) in homotopy.moves.iter().enumerate() {
        current = apply_move(space, &current, mv)
            .map_err(|e| ChainError::HomotopyStep { step, source: Box::new(e) })?;
    }
    Ok(current)
}

/// Pushes a chain through an index map into another space. Distances do not
/// increase under a 1-Lipschitz map, so validity is preserved at the same
/// scale.
pub fn map_chain<S: Scalar>(chain: &Chain<S>, index_map: &[usize]) -> Chain<S> {
    Chain {
        scale: chain.scale,
        points: chain.points.iter().map(|&p| index_map[p]).collect(),
    }
}

/// Pushes a homotopy through an index map, move for move.
pub fn map_homotopy<S: Scalar>(h: &Homotopy<S>, index_map: &[usize]) -> Homotopy<S> {
    let start = map_chain(&h.start, index_map);
    let moves = h
        .moves
        .iter()
        .map(|&mv| match mv {
            BasicMove::Insert { pos, point } => BasicMove::Insert { pos, point: index_map[point] },
            BasicMove::Remove { pos } => BasicMove::Remove { pos },
        })
        .collect();
    Homotopy { start, moves }
}
