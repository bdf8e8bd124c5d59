//! Spanning-tree presentation of the scale-indexed fundamental group.
//!
//! The group at scale `eps` is the edge-path group of the Rips 2-complex on
//! the basepoint's chain component: one generator per non-tree edge, one
//! relator per triangle. Tree edges read as the empty word, so a loop's
//! word is computed edge by edge and freely reduced. The spanning tree is a
//! deterministic BFS tree (ascending neighbor order), which makes
//! generators, words, and witnesses reproducible run to run.

use crate::chains::{validate_chain, Chain, ChainError};
use crate::metric::{chain_components, FiniteMetricSpace, MetricError, ScaleGraph};
use crate::rips::{rips2, RipsComplex2};
use crate::scalar::Scalar;
use crate::snf::{homology_from_relators, Homology1, SnfError};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PresentationError {
    #[error("chain is not a loop: starts at {start}, ends at {end}")]
    NotALoop { start: usize, end: usize },
    #[error("loop lives at {found}, outside the presentation based at {basepoint}")]
    WrongComponent { basepoint: usize, found: usize },
    #[error("scale mismatch: presentation at {pres}, chain at {chain}")]
    ScaleMismatch { pres: f64, chain: f64 },
    #[error("scale order violated: map goes from finer {from} to coarser {to}")]
    ScaleOrderViolation { from: f64, to: f64 },
    #[error("({a},{b}) is not an edge at this scale")]
    NotAnEdge { a: usize, b: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Snf(#[from] SnfError),
}

/// A freely reduced word over the presentation's generators. Letters are
/// `+(g+1)` / `-(g+1)` for generator `g` traversed forwards / backwards.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<i32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds from raw letters, cancelling adjacent inverse pairs.
    pub fn from_letters(letters: impl IntoIterator<Item = i32>) -> Self {
        let mut stack: Vec<i32> = Vec::new();
        for l in letters {
            if l == 0 {
                continue;
            }
            if stack.last() == Some(&-l) {
                stack.pop();
            } else {
                stack.push(l);
            }
        }
        Word(stack)
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::from_letters(self.0.iter().chain(other.0.iter()).copied())
    }

    /// Exponent-sum vector over the generators.
    pub fn abelianize(&self, ngens: usize) -> Vec<i64> {
        let mut v = vec![0i64; ngens];
        for &l in &self.0 {
            let g = (l.unsigned_abs() as usize) - 1;
            v[g] += l.signum() as i64;
        }
        v
    }
}

/// Spanning-tree presentation of the group at one scale and basepoint.
#[derive(Debug, Clone)]
pub struct Presentation<S: Scalar> {
    pub scale: S,
    pub basepoint: usize,
    /// Points of the basepoint's chain component, ascending.
    pub component: Vec<usize>,
    in_component: Vec<bool>,
    /// BFS tree parent; `None` for the basepoint and points outside the
    /// component.
    parent: Vec<Option<usize>>,
    /// Non-tree edges `(i, j)` with `i < j`, lexicographic: the generators.
    pub generators: Vec<(usize, usize)>,
    gen_of_edge: HashMap<(usize, usize), usize>,
    tree_edges: std::collections::HashSet<(usize, usize)>,
    /// One word per triangle of the component, lexicographic triangle order.
    pub relators: Vec<Word>,
    pub relator_triangles: Vec<(usize, usize, usize)>,
}

/// Deterministic presentation of the scale group at a basepoint.
pub fn presentation<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    scale: S,
    basepoint: usize,
) -> Result<Presentation<S>, PresentationError> {
    space.check_index(basepoint)?;
    let graph = ScaleGraph::new(space, scale)?;
    let n = space.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut in_component = vec![false; n];
    in_component[basepoint] = true;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(basepoint);
    let mut tree_edges = std::collections::HashSet::new();
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if !in_component[v] {
                in_component[v] = true;
                parent[v] = Some(u);
                tree_edges.insert((u.min(v), u.max(v)));
                queue.push_back(v);
            }
        }
    }
    let component: Vec<usize> = (0..n).filter(|&i| in_component[i]).collect();

    let mut generators = Vec::new();
    let mut gen_of_edge = HashMap::new();
    for (i, j) in graph.edges() {
        if in_component[i] && !tree_edges.contains(&(i, j)) {
            gen_of_edge.insert((i, j), generators.len());
            generators.push((i, j));
        }
    }

    let complex: RipsComplex2<S> = rips2(space, scale)?;
    let mut pres = Presentation {
        scale,
        basepoint,
        component,
        in_component,
        parent,
        generators,
        gen_of_edge,
        tree_edges,
        relators: Vec::new(),
        relator_triangles: Vec::new(),
    };
    for &(i, j, k) in &complex.triangles {
        if !pres.in_component[i] {
            continue;
        }
        let w = Word::from_letters([
            pres.edge_letter(i, j)?,
            pres.edge_letter(j, k)?,
            pres.edge_letter(k, i)?,
        ]);
        pres.relator_triangles.push((i, j, k));
        pres.relators.push(w);
    }
    Ok(pres)
}

impl<S: Scalar> Presentation<S> {
    pub fn gen_count(&self) -> usize {
        self.generators.len()
    }

    pub fn contains(&self, point: usize) -> bool {
        self.in_component[point]
    }

    pub fn is_tree_edge(&self, a: usize, b: usize) -> bool {
        self.tree_edges.contains(&(a.min(b), a.max(b)))
    }

    /// The letter read when traversing `a -> b`: 0 for a repeated point or a
    /// tree edge, a signed generator otherwise.
    pub fn edge_letter(&self, a: usize, b: usize) -> Result<i32, PresentationError> {
        if a == b {
            return Ok(0);
        }
        let key = (a.min(b), a.max(b));
        if self.tree_edges.contains(&key) {
            return Ok(0);
        }
        match self.gen_of_edge.get(&key) {
            Some(&g) => Ok(if a < b { g as i32 + 1 } else { -(g as i32 + 1) }),
            None => Err(PresentationError::NotAnEdge { a, b }),
        }
    }

    /// Directed edge of a letter: positive letters traverse `(i, j)` with
    /// `i < j` forwards.
    pub fn letter_edge(&self, letter: i32) -> (usize, usize) {
        let (i, j) = self.generators[(letter.unsigned_abs() as usize) - 1];
        if letter > 0 {
            (i, j)
        } else {
            (j, i)
        }
    }

    /// Tree path from `x` to `y` inclusive, through their lowest common
    /// ancestor.
    pub fn tree_path(&self, x: usize, y: usize) -> Vec<usize> {
        let mut up_x = vec![x];
        let mut cur = x;
        while let Some(p) = self.parent[cur] {
            up_x.push(p);
            cur = p;
        }
        let pos_in_x: HashMap<usize, usize> = up_x.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut up_y = vec![y];
        cur = y;
        while !pos_in_x.contains_key(&cur) {
            let p = self.parent[cur].expect("tree paths meet at the basepoint");
            up_y.push(p);
            cur = p;
        }
        let meet = pos_in_x[&cur];
        let mut path: Vec<usize> = up_x[..=meet].to_vec();
        up_y.pop();
        while let Some(p) = up_y.pop() {
            path.push(p);
        }
        path
    }

    fn check_loop(&self, chain: &Chain<S>) -> Result<(), PresentationError> {
        if chain.scale != self.scale {
            return Err(PresentationError::ScaleMismatch {
                pres: self.scale.to_f64().unwrap_or(f64::NAN),
                chain: chain.scale.to_f64().unwrap_or(f64::NAN),
            });
        }
        if chain.first() != chain.last() {
            return Err(PresentationError::NotALoop { start: chain.first(), end: chain.last() });
        }
        if chain.first() != self.basepoint {
            return Err(PresentationError::WrongComponent {
                basepoint: self.basepoint,
                found: chain.first(),
            });
        }
        if let Some(&outside) = chain.points.iter().find(|&&p| !self.in_component[p]) {
            return Err(PresentationError::WrongComponent { basepoint: self.basepoint, found: outside });
        }
        Ok(())
    }

    /// Word of a based loop: each consecutive edge maps to its letter, then
    /// the result is freely reduced. Repeated points contribute nothing.
    pub fn chain_word(
        &self,
        space: &FiniteMetricSpace<S>,
        loop_chain: &Chain<S>,
    ) -> Result<Word, PresentationError> {
        self.check_loop(loop_chain)?;
        validate_chain(space, loop_chain)?;
        let mut letters = Vec::new();
        for w in loop_chain.points.windows(2) {
            letters.push(self.edge_letter(w[0], w[1])?);
        }
        Ok(Word::from_letters(letters))
    }

    /// Word of a loop based anywhere in the component, conjugated to the
    /// basepoint along the tree. Nullity is unchanged by the conjugation.
    pub fn loop_word_at(
        &self,
        space: &FiniteMetricSpace<S>,
        loop_chain: &Chain<S>,
    ) -> Result<Word, PresentationError> {
        let based = self.conjugate_to_basepoint(loop_chain)?;
        self.chain_word(space, &based)
    }

    /// `T(* -> x) * loop * T(x -> *)` for a loop at `x`.
    pub fn conjugate_to_basepoint(&self, loop_chain: &Chain<S>) -> Result<Chain<S>, PresentationError> {
        if loop_chain.first() != loop_chain.last() {
            return Err(PresentationError::NotALoop {
                start: loop_chain.first(),
                end: loop_chain.last(),
            });
        }
        let x = loop_chain.first();
        if !self.in_component[x] {
            return Err(PresentationError::WrongComponent { basepoint: self.basepoint, found: x });
        }
        let mut points = self.tree_path(self.basepoint, x);
        points.extend_from_slice(&loop_chain.points[1..]);
        points.extend_from_slice(&self.tree_path(x, self.basepoint)[1..]);
        Ok(Chain { scale: self.scale, points })
    }

    /// The canonical loop of a word: for each letter the tree path out to the
    /// edge, across it, and back. The empty word gives the one-point loop.
    pub fn canonical_loop(&self, word: &Word) -> Chain<S> {
        let mut points = vec![self.basepoint];
        for &l in word.letters() {
            let (a, b) = self.letter_edge(l);
            let out = self.tree_path(self.basepoint, a);
            points.extend_from_slice(&out[1..]);
            points.extend_from_slice(&self.tree_path(b, self.basepoint));
        }
        Chain { scale: self.scale, points }
    }

    /// Sparse abelianized relator rows over the generators.
    pub fn relator_rows(&self) -> Vec<Vec<(usize, i64)>> {
        self.relators
            .iter()
            .map(|w| {
                let mut row: HashMap<usize, i64> = HashMap::new();
                for &l in w.letters() {
                    *row.entry((l.unsigned_abs() as usize) - 1).or_insert(0) += l.signum() as i64;
                }
                let mut row: Vec<(usize, i64)> = row.into_iter().filter(|&(_, v)| v != 0).collect();
                row.sort_unstable();
                row
            })
            .collect()
    }

    /// Betti number and torsion of the component's first homology at this
    /// scale.
    pub fn homology(&self) -> Result<Homology1, SnfError> {
        homology_from_relators(&self.relator_rows(), self.gen_count())
    }
}

/// Re-expresses a finer-scale loop in a coarser presentation's generators.
/// Any loop at the finer scale is literally a loop at the coarser one.
pub fn scale_map<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    from: &Presentation<S>,
    to: &Presentation<S>,
    input: ScaleMapInput<'_, S>,
) -> Result<Word, PresentationError> {
    if from.scale > to.scale {
        return Err(PresentationError::ScaleOrderViolation {
            from: from.scale.to_f64().unwrap_or(f64::NAN),
            to: to.scale.to_f64().unwrap_or(f64::NAN),
        });
    }
    let fine_loop = match input {
        ScaleMapInput::Loop(c) => {
            from.check_loop(c)?;
            validate_chain(space, c)?;
            c.clone()
        }
        ScaleMapInput::Word(w) => from.canonical_loop(w),
    };
    let coarse_loop = Chain { scale: to.scale, points: fine_loop.points };
    to.chain_word(space, &coarse_loop)
}

/// Input to [`scale_map`]: an explicit loop or a word in the finer
/// presentation.
pub enum ScaleMapInput<'a, S: Scalar> {
    Loop(&'a Chain<S>),
    Word(&'a Word),
}

/// Convenience: betti number and torsion for the basepoint's component at a
/// scale.
pub fn h1<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    scale: S,
    basepoint: usize,
) -> Result<Homology1, PresentationError> {
    Ok(presentation(space, scale, basepoint)?.homology()?)
}

/// Chain-components partition together with component count, for reports.
pub fn component_count<S: Scalar>(space: &FiniteMetricSpace<S>, scale: S) -> Result<usize, MetricError> {
    Ok(chain_components(space, scale)?.count())
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

    fn six_cycle() -> FiniteMetricSpace<f64> {
        let edges: Vec<(usize, usize, f64)> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
        FiniteMetricSpace::from_graph(6, &edges, None).unwrap()
    }

    #[test]
    fn word_reduction() {
        let w = Word::from_letters([1, 2, -2, -1, 3]);
        assert_eq!(w.letters(), &[3]);
        assert!(Word::from_letters([1, -1]).is_empty());
        let u = Word::from_letters([1, 2]);
        assert!(u.concat(&u.inverse()).is_empty());
    }

    #[test]
    fn square_tight_scale_is_free_of_rank_one() {
        let s = unit_square();
        let p = presentation(&s, 1.2, 0).unwrap();
        assert_eq!(p.gen_count(), 1);
        assert!(p.relators.is_empty());
        let h = p.homology().unwrap();
        assert_eq!(h.betti, 1);
        assert!(h.torsion.is_empty());
        // Cycle rank oracle: E - V + 1 = 4 - 4 + 1.
        assert_eq!(p.gen_count(), 4 - 4 + 1);
    }

    #[test]
    fn square_loose_scale_is_simply_connected() {
        let s = unit_square();
        let p = presentation(&s, 1.5, 0).unwrap();
        assert_eq!(p.gen_count(), 3);
        assert_eq!(p.relators.len(), 4);
        let h = p.homology().unwrap();
        assert_eq!(h.betti, 0);
        assert!(h.torsion.is_empty());
    }

    #[test]
    fn one_point_space_has_no_generators() {
        let s = FiniteMetricSpace::build(&[vec![0.0]], None).unwrap();
        let p = presentation(&s, 1.0, 0).unwrap();
        assert_eq!(p.gen_count(), 0);
    }

    #[test]
    fn constant_loop_reads_empty() {
        let s = unit_square();
        let p = presentation(&s, 1.2, 0).unwrap();
        let w = p.chain_word(&s, &Chain::new(1.2, vec![0, 0, 0])).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn boundary_loop_reads_one_generator() {
        let s = unit_square();
        let p = presentation(&s, 1.2, 0).unwrap();
        let w = p.chain_word(&s, &Chain::new(1.2, vec![0, 1, 2, 3, 0])).unwrap();
        assert_eq!(w.len(), 1);
        let back = p.chain_word(&s, &Chain::new(1.2, vec![0, 3, 2, 1, 0])).unwrap();
        assert_eq!(back, w.inverse());
    }

    #[test]
    fn loop_times_reverse_reads_empty() {
        let s = six_cycle();
        let p = presentation(&s, 1.5, 0).unwrap();
        let w = p
            .chain_word(&s, &Chain::new(1.5, vec![0, 1, 2, 3, 4, 5, 0, 5, 4, 3, 2, 1, 0]))
            .unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn hexagon_h1_is_a_circle_below_triangle_scale() {
        let s = six_cycle();
        let h = h1(&s, 1.5, 0).unwrap();
        assert_eq!(h.betti, 1);
        assert!(h.torsion.is_empty());
    }

    #[test]
    fn canonical_loop_reproduces_word() {
        let s = unit_square();
        let p = presentation(&s, 1.2, 0).unwrap();
        let w = p.chain_word(&s, &Chain::new(1.2, vec![0, 1, 2, 3, 0])).unwrap();
        let canon = p.canonical_loop(&w);
        validate_chain(&s, &canon).unwrap();
        assert_eq!(p.chain_word(&s, &canon).unwrap(), w);
    }

    #[test]
    fn scale_map_keeps_class_and_respects_order() {
        let s = six_cycle();
        let fine = presentation(&s, 1.2, 0).unwrap();
        let coarse = presentation(&s, 1.9, 0).unwrap();
        let hex = Chain::new(1.2, vec![0, 1, 2, 3, 4, 5, 0]);
        let w_fine = fine.chain_word(&s, &hex).unwrap();
        assert!(!w_fine.is_empty());
        let w_coarse = scale_map(&s, &fine, &coarse, ScaleMapInput::Loop(&hex)).unwrap();
        assert!(!w_coarse.is_empty());
        let via_word = scale_map(&s, &fine, &coarse, ScaleMapInput::Word(&w_fine)).unwrap();
        // Same class: the difference evaluates to zero in homology, and here
        // the group is free so word equality holds outright.
        assert_eq!(via_word, w_coarse);
        assert!(matches!(
            scale_map(&s, &coarse, &fine, ScaleMapInput::Word(&Word::empty())),
            Err(PresentationError::ScaleOrderViolation { .. })
        ));
    }

    #[test]
    fn loop_errors_are_reported() {
        let s = unit_square();
        let p = presentation(&s, 1.2, 0).unwrap();
        assert!(matches!(
            p.chain_word(&s, &Chain::new(1.2, vec![0, 1])),
            Err(PresentationError::NotALoop { .. })
        ));
        assert!(matches!(
            p.chain_word(&s, &Chain::new(1.2, vec![1, 2, 1])),
            Err(PresentationError::WrongComponent { .. })
        ));
        assert!(matches!(
            p.chain_word(&s, &Chain::new(1.3, vec![0, 1, 0])),
            Err(PresentationError::ScaleMismatch { .. })
        ));
    }

    #[test]
    fn disconnected_basepoint_gets_local_presentation() {
        let s = FiniteMetricSpace::build(
            &[
                vec![0.0, 1.0, 9.0],
                vec![1.0, 0.0, 9.0],
                vec![9.0, 9.0, 0.0],
            ],
            None,
        )
        .unwrap();
        let p = presentation(&s, 2.0, 2).unwrap();
        assert_eq!(p.component, vec![2]);
        assert_eq!(p.gen_count(), 0);
    }
}
