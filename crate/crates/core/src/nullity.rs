//! Deciding whether a loop contracts to its basepoint, with certificates.
//!
//! The decision is staged and semi-decided. Free reduction of the loop's
//! word settles the trivial direction with an explicit witness. A nonzero
//! class in first homology is a sound non-nullity certificate. What remains
//! goes to a bounded search over words modulo the triangle relators; a hit
//! is translated back into a replayable move list, and budget exhaustion is
//! reported as unknown rather than guessed.
//!
//! Witness translation works on canonical chains: the chain of a word is
//! the concatenation of one gadget per letter, where a gadget walks the
//! spanning tree out to an edge, across it, and home. Every word-level
//! step (insert a relator, cancel an inverse pair, drop a tree edge) is a
//! short palindrome insertion or contraction, all legal basic moves.

use crate::chains::{apply_move, validate_chain, BasicMove, Chain, ChainError, Homotopy};
use crate::metric::FiniteMetricSpace;
use crate::presentation::{presentation, Presentation, PresentationError, Word};
use crate::scalar::Scalar;
use crate::snf::{RowspaceTester, SnfError};
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NullityError {
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Snf(#[from] SnfError),
    #[error("witness construction broke an invariant: {0}")]
    Witness(String),
}

/// Search budgets. `max_words` caps visited words in the relator search;
/// `word_len_cap` bounds word length during rewriting.
#[derive(Debug, Clone, Copy)]
pub struct NullBudget {
    pub max_words: usize,
    pub word_len_cap: usize,
}

impl Default for NullBudget {
    fn default() -> Self {
        NullBudget { max_words: 1_000_000, word_len_cap: 64 }
    }
}

/// Nonzero first-homology class of a loop: its coordinates after the Smith
/// change of basis, reduced modulo the diagonal. Zero everywhere would mean
/// the class vanishes; a certificate is only ever emitted nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct H1Certificate {
    pub residue: Vec<i64>,
    /// `(column, modulus)` pairs of the diagonal, for interpreting residues.
    pub moduli: Vec<(usize, i64)>,
}

impl H1Certificate {
    pub fn is_nonzero(&self) -> bool {
        self.residue.iter().any(|&x| x != 0)
    }
}

/// Outcome of the nullity decision.
#[derive(Debug, Clone)]
pub enum NullVerdict<S: Scalar> {
    Null { witness: Homotopy<S> },
    NonNull { certificate: H1Certificate },
    Unknown { budget_spent: usize },
}

impl<S: Scalar> NullVerdict<S> {
    pub fn is_null(&self) -> bool {
        matches!(self, NullVerdict::Null { .. })
    }

    pub fn is_non_null(&self) -> bool {
        matches!(self, NullVerdict::NonNull { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, NullVerdict::Unknown { .. })
    }
}

/// Decides nullity of a loop at its own basepoint. The presentation is
/// built at the loop's first point.
pub fn is_null<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    scale: S,
    loop_chain: &Chain<S>,
    budget: NullBudget,
) -> Result<NullVerdict<S>, NullityError> {
    if loop_chain.scale != scale {
        return Err(PresentationError::ScaleMismatch {
            pres: scale.to_f64().unwrap_or(f64::NAN),
            chain: loop_chain.scale.to_f64().unwrap_or(f64::NAN),
        }
        .into());
    }
    if loop_chain.first() != loop_chain.last() {
        return Err(PresentationError::NotALoop {
            start: loop_chain.first(),
            end: loop_chain.last(),
        }
        .into());
    }
    validate_chain(space, loop_chain)?;
    let pres = presentation(space, scale, loop_chain.first())?;
    is_null_with(space, &pres, loop_chain, budget)
}

/// Same decision against a caller-supplied presentation based at the loop's
/// first point.
pub fn is_null_with<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    pres: &Presentation<S>,
    loop_chain: &Chain<S>,
    budget: NullBudget,
) -> Result<NullVerdict<S>, NullityError> {
    let word = pres.chain_word(space, loop_chain)?;

    // Stage one: freely trivial words contract by tree moves alone.
    if word.is_empty() {
        let mut builder = WitnessBuilder::new(space, pres, loop_chain.clone())?;
        builder.normalize()?;
        let witness = builder.finish(loop_chain)?;
        return Ok(NullVerdict::Null { witness });
    }

    // Cheap contraction next: if removals alone reach the basepoint, the
    // verdict is settled without touching the relator matrix.
    if let Some(witness) = greedy_contract(space, loop_chain) {
        return Ok(NullVerdict::Null { witness });
    }

    // Stage two: a nonzero homology class certifies non-nullity.
    let tester = RowspaceTester::new(&pres.relator_rows(), pres.gen_count())?;
    let residue = tester.residue(&word.abelianize(pres.gen_count()))?;
    if residue.iter().any(|&x| x != 0) {
        let moduli = tester.outcome().pivots.clone();
        return Ok(NullVerdict::NonNull { certificate: H1Certificate { residue, moduli } });
    }

    // Stage three: bounded search over words modulo the relators.
    let variants = relator_variants(pres);
    match word_search(&word, &variants, budget) {
        SearchOutcome::Found(steps) => {
            let mut builder = WitnessBuilder::new(space, pres, loop_chain.clone())?;
            builder.normalize()?;
            for (pos, vid) in steps {
                builder.apply_relator(pos, variants[vid].cycle)?;
            }
            if !builder.gadget_edges.is_empty() {
                return Err(NullityError::Witness("search ended on a nonempty word".into()));
            }
            let witness = builder.finish(loop_chain)?;
            Ok(NullVerdict::Null { witness })
        }
        SearchOutcome::Exhausted(spent) => Ok(NullVerdict::Unknown { budget_spent: spent }),
    }
}

/// Word-level variant of the pipeline for callers that already track group
/// elements (covers, refining checks). No witness is produced.
pub fn is_null_word<S: Scalar>(
    pres: &Presentation<S>,
    tester: &RowspaceTester,
    word: &Word,
    budget: NullBudget,
) -> Result<NullVerdict<S>, NullityError> {
    if word.is_empty() {
        return Ok(NullVerdict::Null {
            witness: Homotopy::identity(Chain::new(pres.scale, vec![pres.basepoint])),
        });
    }
    let residue = tester.residue(&word.abelianize(pres.gen_count()))?;
    if residue.iter().any(|&x| x != 0) {
        let moduli = tester.outcome().pivots.clone();
        return Ok(NullVerdict::NonNull { certificate: H1Certificate { residue, moduli } });
    }
    let variants = relator_variants(pres);
    match word_search(word, &variants, budget) {
        SearchOutcome::Found(_) => Ok(NullVerdict::Null {
            witness: Homotopy::identity(Chain::new(pres.scale, vec![pres.basepoint])),
        }),
        SearchOutcome::Exhausted(spent) => Ok(NullVerdict::Unknown { budget_spent: spent }),
    }
}

/// Repeated removals while any are legal; a witness if the loop bottoms out
/// at its basepoint. Handles every loop whose points sit within one scale
/// ball, the way a chain on a geodesic contracts.
pub(crate) fn greedy_contract<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    loop_chain: &Chain<S>,
) -> Option<Homotopy<S>> {
    let mut current = loop_chain.clone();
    let mut moves = Vec::new();
    loop {
        if current.len() == 1 {
            return Some(Homotopy { start: loop_chain.clone(), moves });
        }
        let mut progressed = false;
        for pos in 1..current.len().saturating_sub(1) {
            let mv = BasicMove::Remove { pos };
            if let Ok(next) = apply_move(space, &current, mv) {
                current = next;
                moves.push(mv);
                progressed = true;
                break;
            }
        }
        if !progressed {
            if current.len() == 2 && current.points[0] == current.points[1] {
                let mv = BasicMove::Remove { pos: 1 };
                current = apply_move(space, &current, mv).ok()?;
                moves.push(mv);
                continue;
            }
            return None;
        }
    }
}

/// A directed triangle cycle and the letters it spells.
#[derive(Debug, Clone)]
struct RelatorVariant {
    letters: Vec<i32>,
    cycle: (usize, usize, usize),
}

fn relator_variants<S: Scalar>(pres: &Presentation<S>) -> Vec<RelatorVariant> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for &(i, j, k) in &pres.relator_triangles {
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j), (k, j, i), (j, i, k), (i, k, j)] {
            let letters: Vec<i32> = [
                pres.edge_letter(a, b).expect("triangle edge"),
                pres.edge_letter(b, c).expect("triangle edge"),
                pres.edge_letter(c, a).expect("triangle edge"),
            ]
            .into_iter()
            .filter(|&l| l != 0)
            .collect();
            debug_assert!(!letters.is_empty(), "a triangle cannot be all tree edges");
            if seen.insert(letters.clone()) {
                out.push(RelatorVariant { letters, cycle: (a, b, c) });
            }
        }
    }
    out
}

enum SearchOutcome {
    Found(Vec<(usize, usize)>),
    Exhausted(usize),
}

/// Bounded search over freely reduced words; a step inserts one relator
/// variant at one position and reduces. Shortest words are expanded first
/// (ties by arrival order), so shrinking derivations surface early; the
/// budget counts visited words. Returns the step list on reaching the
/// empty word.
fn word_search(start: &Word, variants: &[RelatorVariant], budget: NullBudget) -> SearchOutcome {
    if variants.is_empty() {
        return SearchOutcome::Exhausted(1);
    }
    let mut ids: HashMap<Word, usize> = HashMap::new();
    let mut arena: Vec<Word> = Vec::new();
    let mut parent: Vec<Option<(usize, usize, usize)>> = Vec::new();
    let mut queue: std::collections::BinaryHeap<std::cmp::Reverse<(usize, usize)>> =
        std::collections::BinaryHeap::new();

    ids.insert(start.clone(), 0);
    arena.push(start.clone());
    parent.push(None);
    queue.push(std::cmp::Reverse((start.len(), 0)));

    while let Some(std::cmp::Reverse((_, id))) = queue.pop() {
        let word = arena[id].clone();
        for pos in 0..=word.len() {
            for (vid, variant) in variants.iter().enumerate() {
                let mut letters: Vec<i32> = Vec::with_capacity(word.len() + variant.letters.len());
                letters.extend_from_slice(&word.letters()[..pos]);
                letters.extend_from_slice(&variant.letters);
                letters.extend_from_slice(&word.letters()[pos..]);
                let next = Word::from_letters(letters);
                if next.len() > budget.word_len_cap || ids.contains_key(&next) {
                    continue;
                }
                let next_id = arena.len();
                ids.insert(next.clone(), next_id);
                arena.push(next.clone());
                parent.push(Some((id, pos, vid)));
                if next.is_empty() {
                    let mut steps = Vec::new();
                    let mut cur = next_id;
                    while let Some((p, pos, vid)) = parent[cur] {
                        steps.push((pos, vid));
                        cur = p;
                    }
                    steps.reverse();
                    return SearchOutcome::Found(steps);
                }
                if arena.len() >= budget.max_words {
                    return SearchOutcome::Exhausted(arena.len());
                }
                queue.push(std::cmp::Reverse((arena[next_id].len(), next_id)));
            }
        }
    }
    SearchOutcome::Exhausted(arena.len())
}

/// Maintains a chain in canonical gadget form alongside its directed edge
/// list, logging every basic move.
struct WitnessBuilder<'a, S: Scalar> {
    space: &'a FiniteMetricSpace<S>,
    pres: &'a Presentation<S>,
    chain: Chain<S>,
    moves: Vec<BasicMove>,
    /// Directed edges of the current gadgets; after normalization these are
    /// exactly the non-tree letters of the current word.
    gadget_edges: Vec<(usize, usize)>,
}

impl<'a, S: Scalar> WitnessBuilder<'a, S> {
    fn new(
        space: &'a FiniteMetricSpace<S>,
        pres: &'a Presentation<S>,
        start: Chain<S>,
    ) -> Result<Self, NullityError> {
        let gadget_edges = start.points.windows(2).map(|w| (w[0], w[1])).collect();
        Ok(WitnessBuilder { space, pres, chain: start, moves: Vec::new(), gadget_edges })
    }

    fn mv(&mut self, mv: BasicMove) -> Result<(), NullityError> {
        self.chain = apply_move(self.space, &self.chain, mv).map_err(|e| {
            NullityError::Witness(format!("illegal internal move {mv:?}: {e}"))
        })?;
        self.moves.push(mv);
        Ok(())
    }

    fn insert(&mut self, pos: usize, point: usize) -> Result<(), NullityError> {
        self.mv(BasicMove::Insert { pos, point })
    }

    fn remove(&mut self, pos: usize) -> Result<(), NullityError> {
        self.mv(BasicMove::Remove { pos })
    }

    /// Inserts the palindrome `ray[1..] ++ reverse(ray[1..]) ++ [base]`
    /// right after `at`, where `ray[0]` must equal `chain[at]`. Two moves
    /// per ray point.
    fn insert_palindrome(&mut self, at: usize, ray: &[usize]) -> Result<(), NullityError> {
        let m = ray.len() - 1;
        if m == 0 {
            return Ok(());
        }
        debug_assert_eq!(self.chain.points[at], ray[0]);
        self.insert(at + 1, ray[0])?;
        self.insert(at + 1, ray[1])?;
        for k in 2..=m {
            self.insert(at + k, ray[k - 1])?;
            self.insert(at + k, ray[k])?;
        }
        Ok(())
    }

    /// Contracts the palindrome based at `at` with `m` ray points: removes
    /// positions through the mirror base inclusive.
    fn contract_palindrome(&mut self, at: usize, m: usize) -> Result<(), NullityError> {
        for k in (1..=m).rev() {
            self.remove(at + k)?;
            self.remove(at + k)?;
        }
        Ok(())
    }

    /// Length contributed by gadget `(a, b)` after its shared leading
    /// junction point.
    fn gadget_len(&self, a: usize, b: usize) -> usize {
        let base = self.pres.basepoint;
        (self.pres.tree_path(base, a).len() - 1) + self.pres.tree_path(b, base).len()
    }

    /// Chain index of the junction before gadget `pos`.
    fn junction_index(&self, pos: usize) -> usize {
        self.gadget_edges[..pos]
            .iter()
            .map(|&(a, b)| self.gadget_len(a, b))
            .sum()
    }

    /// Rewrites the start loop into canonical gadget form and erases the
    /// tree, degenerate, and freely cancelling gadgets, leaving exactly the
    /// reduced word's gadgets.
    fn normalize(&mut self) -> Result<(), NullityError> {
        let base = self.pres.basepoint;
        // Spike every interior vertex out to the basepoint, right to left.
        for i in (1..self.chain.len() - 1).rev() {
            let ray = self.pres.tree_path(self.chain.points[i], base);
            self.insert_palindrome(i, &ray)?;
        }
        // Drop identity gadgets, then cancel inverse pairs to the reduced
        // word.
        self.sweep()?;
        Ok(())
    }

    fn letter_of(&self, a: usize, b: usize) -> i32 {
        self.pres.edge_letter(a, b).expect("gadget edges are scale edges")
    }

    /// Removes identity gadgets and cancels adjacent inverse gadget pairs
    /// until the edge list spells a freely reduced word.
    fn sweep(&mut self) -> Result<(), NullityError> {
        // Identity gadgets first, right to left so junctions stay put.
        for pos in (0..self.gadget_edges.len()).rev() {
            let (a, b) = self.gadget_edges[pos];
            if self.letter_of(a, b) == 0 {
                self.contract_gadget(pos)?;
            }
        }
        // Inverse pairs; restart one step back after each cancellation.
        let mut pos = 0;
        while self.gadget_edges.len() >= 2 && pos + 1 < self.gadget_edges.len() {
            let (a, b) = self.gadget_edges[pos];
            let (c, d) = self.gadget_edges[pos + 1];
            if self.letter_of(a, b) == -self.letter_of(c, d) {
                debug_assert!((c, d) == (b, a));
                self.cancel_pair(pos)?;
                pos = pos.saturating_sub(1);
            } else {
                pos += 1;
            }
        }
        Ok(())
    }

    /// Contracts the identity gadget at `pos` (a tree edge or a repeated
    /// point) down to its left junction.
    fn contract_gadget(&mut self, pos: usize) -> Result<(), NullityError> {
        let (a, b) = self.gadget_edges[pos];
        let jl = self.junction_index(pos);
        let mut jr = jl + self.gadget_len(a, b);
        if (jr - jl) % 2 == 1 {
            // Repeated point: drop one of the duplicated tips.
            let h = (jr - jl - 1) / 2;
            debug_assert_eq!(self.chain.points[jl + h], self.chain.points[jl + h + 1]);
            self.remove(jl + h + 1)?;
            jr -= 1;
        }
        self.contract_palindrome(jl, (jr - jl) / 2)?;
        self.gadget_edges.remove(pos);
        Ok(())
    }

    /// Cancels the inverse gadget pair at `pos`, `pos + 1`.
    fn cancel_pair(&mut self, pos: usize) -> Result<(), NullityError> {
        let base = self.pres.basepoint;
        let (a, b) = self.gadget_edges[pos];
        let jl = self.junction_index(pos);
        let b_left = jl + self.pres.tree_path(base, a).len();
        let depth_b = self.pres.tree_path(b, base).len() - 1;
        // The two copies of b flank a spike through the junction.
        self.contract_palindrome(b_left, depth_b)?;
        // Now ... a, b, a ...: drop b, then the remaining even palindrome.
        self.remove(b_left)?;
        let h = self.pres.tree_path(base, a).len() - 1;
        debug_assert_eq!(self.chain.points[jl + h], self.chain.points[jl + h + 1]);
        self.remove(jl + h + 1)?;
        self.contract_palindrome(jl, h)?;
        self.gadget_edges.drain(pos..pos + 2);
        Ok(())
    }

    /// Splices a triangle cycle `a -> b -> c -> a` in at word position
    /// `pos`, then re-sweeps. The new gadgets multiply in as the relator,
    /// so the group element is unchanged.
    fn apply_relator(&mut self, pos: usize, cycle: (usize, usize, usize)) -> Result<(), NullityError> {
        let base = self.pres.basepoint;
        let (a, b, c) = cycle;
        let j = self.junction_index(pos);
        // L(a,b) and its mirror L(b,a): the ray runs base .. a, b, .. base,
        // so the palindrome's center is the middle junction.
        let mut ray = self.pres.tree_path(base, a);
        ray.extend_from_slice(&self.pres.tree_path(b, base));
        self.insert_palindrome(j, &ray)?;
        self.gadget_edges.insert(pos, (a, b));
        self.gadget_edges.insert(pos + 1, (b, a));
        // Split the mirror across the triangle: L(b,a) -> L(b,c) L(c,a).
        let j2 = self.junction_index(pos + 1);
        let b_idx = j2 + self.pres.tree_path(base, b).len() - 1;
        debug_assert_eq!(self.chain.points[b_idx], b);
        self.insert(b_idx + 1, c)?;
        self.insert_palindrome(b_idx + 1, &self.pres.tree_path(c, base).clone())?;
        self.gadget_edges[pos + 1] = (b, c);
        self.gadget_edges.insert(pos + 2, (c, a));
        self.sweep()
    }

    /// Verifies the builder ended at the one-point loop and wraps the move
    /// log as a homotopy from the original start.
    fn finish(self, original: &Chain<S>) -> Result<Homotopy<S>, NullityError> {
        if self.chain.points != vec![self.pres.basepoint] {
            return Err(NullityError::Witness(format!(
                "builder ended at {:?}, not the basepoint",
                self.chain.points
            )));
        }
        Ok(Homotopy { start: original.clone(), moves: self.moves })
    }
}

/// Verdict of the brute-force search: exact within the stated length bound.
#[derive(Debug, Clone)]
pub enum OracleVerdict<S: Scalar> {
    Null { witness: Homotopy<S> },
    /// The whole reachable set of chains within the length bound was
    /// explored and the basepoint was never reached.
    NonNullWithinBound { states: usize },
    /// State budget ran out before the reachable set was exhausted.
    Exhausted { states: usize },
}

/// Breadth-first search over the graph whose nodes are loops of bounded
/// length and whose edges are basic moves. Independent of the presentation
/// and word machinery; used to validate [`is_null`] on small spaces.
pub fn bfs_homotopy_oracle<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    loop_chain: &Chain<S>,
    max_chain_len: usize,
    max_states: usize,
) -> Result<OracleVerdict<S>, NullityError> {
    validate_chain(space, loop_chain)?;
    let n = space.len();
    let start = loop_chain.points.clone();
    if start.len() == 1 {
        return Ok(OracleVerdict::Null { witness: Homotopy::identity(loop_chain.clone()) });
    }
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut arena: Vec<Vec<usize>> = Vec::new();
    let mut parent: Vec<Option<(usize, BasicMove)>> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    ids.insert(start.clone(), 0);
    arena.push(start);
    parent.push(None);
    queue.push_back(0);

    let reconstruct = |parent: &[Option<(usize, BasicMove)>], mut id: usize| {
        let mut moves = Vec::new();
        while let Some((p, mv)) = parent[id] {
            moves.push(mv);
            id = p;
        }
        moves.reverse();
        Homotopy { start: loop_chain.clone(), moves }
    };

    while let Some(id) = queue.pop_front() {
        let current = Chain::new(loop_chain.scale, arena[id].clone());
        let len = current.len();
        let mut candidates: Vec<BasicMove> = Vec::new();
        if len < max_chain_len {
            for pos in 0..=len {
                if pos == 0 || pos == len {
                    let point = if pos == 0 { current.points[0] } else { current.points[len - 1] };
                    candidates.push(BasicMove::Insert { pos, point });
                } else {
                    for point in 0..n {
                        candidates.push(BasicMove::Insert { pos, point });
                    }
                }
            }
        }
        for pos in 0..len {
            candidates.push(BasicMove::Remove { pos });
        }
        for mv in candidates {
            let Ok(next) = apply_move(space, &current, mv) else { continue };
            if ids.contains_key(&next.points) {
                continue;
            }
            let next_id = arena.len();
            ids.insert(next.points.clone(), next_id);
            arena.push(next.points.clone());
            parent.push(Some((id, mv)));
            if arena[next_id].len() == 1 {
                return Ok(OracleVerdict::Null { witness: reconstruct(&parent, next_id) });
            }
            if arena.len() >= max_states {
                return Ok(OracleVerdict::Exhausted { states: arena.len() });
            }
            queue.push_back(next_id);
        }
    }
    Ok(OracleVerdict::NonNullWithinBound { states: arena.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::verify_homotopy;

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

    fn replay_null(space: &FiniteMetricSpace<f64>, v: &NullVerdict<f64>, basepoint: usize) {
        match v {
            NullVerdict::Null { witness } => {
                let end = verify_homotopy(space, witness).unwrap();
                assert_eq!(end.points, vec![basepoint]);
            }
            other => panic!("expected Null, got {other:?}"),
        }
    }

    #[test]
    fn constant_loop_is_null() {
        let s = unit_square();
        let v = is_null(&s, 1.2, &Chain::new(1.2, vec![0, 0, 0]), NullBudget::default()).unwrap();
        replay_null(&s, &v, 0);
    }

    #[test]
    fn square_boundary_non_null_at_tight_scale() {
        let s = unit_square();
        let v = is_null(&s, 1.2, &Chain::new(1.2, vec![0, 1, 2, 3, 0]), NullBudget::default()).unwrap();
        match v {
            NullVerdict::NonNull { certificate } => {
                assert!(certificate.is_nonzero());
                // Free of rank 1: the residue is the winding number.
                assert_eq!(certificate.residue.iter().map(|x| x.abs()).sum::<i64>(), 1);
            }
            other => panic!("expected NonNull, got {other:?}"),
        }
    }

    #[test]
    fn square_boundary_null_at_loose_scale_with_witness() {
        let s = unit_square();
        let v = is_null(&s, 1.5, &Chain::new(1.5, vec![0, 1, 2, 3, 0]), NullBudget::default()).unwrap();
        replay_null(&s, &v, 0);
    }

    #[test]
    fn freely_trivial_loop_contracts_through_tree_moves() {
        let s = unit_square();
        // Out and back across a non-tree edge: word reduces freely.
        let loop_chain = Chain::new(1.2, vec![0, 1, 2, 1, 0]);
        let v = is_null(&s, 1.2, &loop_chain, NullBudget::default()).unwrap();
        replay_null(&s, &v, 0);
    }

    #[test]
    fn hexagon_loop_dies_at_octahedral_scale() {
        // At scale 2.5 the two-hop edges fill in triangles and the loop
        // contracts; the greedy pass is disabled by going through a word
        // whose chain needs insertions first? No: greedy suffices here,
        // which is fine. The word search path is exercised below.
        let s = six_cycle();
        let loop_chain = Chain::new(2.5, vec![0, 1, 2, 3, 4, 5, 0]);
        let v = is_null(&s, 2.5, &loop_chain, NullBudget::default()).unwrap();
        replay_null(&s, &v, 0);
    }

    #[test]
    fn hexagon_loop_non_null_below_triangle_scale() {
        let s = six_cycle();
        let v = is_null(&s, 1.5, &Chain::new(1.5, vec![0, 1, 2, 3, 4, 5, 0]), NullBudget::default()).unwrap();
        assert!(v.is_non_null());
    }

    #[test]
    fn word_search_witness_is_replayable() {
        // Force the relator path: a loop whose greedy contraction jams.
        // On the square at 1.5, start from the doubled boundary: greedy
        // removals still work there, so instead jam greedy with the
        // zig-zag loop on the hexagon at 2.5 traversing two-hop chords;
        // bridging distances are 3 > 2.5 until a relator reroutes it.
        let s = six_cycle();
        let loop_chain = Chain::new(2.5, vec![0, 2, 4, 0]);
        // d(0,2)=d(2,4)=d(4,0)=2 < 2.5: valid. Interior removals bridge
        // d(0,4)=2 and d(0,2)... removable actually. Just assert the full
        // pipeline agrees with the oracle whatever path it takes.
        let v = is_null(&s, 2.5, &loop_chain, NullBudget::default()).unwrap();
        let o = bfs_homotopy_oracle(&s, &loop_chain, 10, 200_000).unwrap();
        match (&v, &o) {
            (NullVerdict::Null { witness }, OracleVerdict::Null { .. }) => {
                let end = verify_homotopy(&s, witness).unwrap();
                assert_eq!(end.points, vec![0]);
            }
            (NullVerdict::NonNull { .. }, OracleVerdict::NonNullWithinBound { .. }) => {}
            other => panic!("pipeline and oracle disagree: {other:?}"),
        }
    }

    #[test]
    fn relator_witness_path_replays() {
        // Drive the word-level machinery directly so the greedy shortcut
        // cannot mask it: normalize the hexagon loop, then replay the
        // search's relator insertions move by move.
        let s = six_cycle();
        let pres = presentation(&s, 2.5, 0).unwrap();
        let loop_chain = Chain::new(2.5, vec![0, 1, 2, 3, 4, 5, 0]);
        let word = pres.chain_word(&s, &loop_chain).unwrap();
        assert!(!word.is_empty());
        let variants = relator_variants(&pres);
        let steps = match word_search(&word, &variants, NullBudget::default()) {
            SearchOutcome::Found(steps) => steps,
            SearchOutcome::Exhausted(n) => panic!("search exhausted after {n} words"),
        };
        let mut builder = WitnessBuilder::new(&s, &pres, loop_chain.clone()).unwrap();
        builder.normalize().unwrap();
        for (pos, vid) in steps {
            builder.apply_relator(pos, variants[vid].cycle).unwrap();
        }
        assert!(builder.gadget_edges.is_empty());
        let witness = builder.finish(&loop_chain).unwrap();
        let end = verify_homotopy(&s, &witness).unwrap();
        assert_eq!(end.points, vec![0]);
    }

    #[test]
    fn oracle_square_both_scales() {
        let s = unit_square();
        let tight = bfs_homotopy_oracle(&s, &Chain::new(1.2, vec![0, 1, 2, 3, 0]), 8, 500_000).unwrap();
        assert!(matches!(tight, OracleVerdict::NonNullWithinBound { .. }));
        let loose = bfs_homotopy_oracle(&s, &Chain::new(1.5, vec![0, 1, 2, 3, 0]), 8, 500_000).unwrap();
        match loose {
            OracleVerdict::Null { witness } => {
                let end = verify_homotopy(&s, &witness).unwrap();
                assert_eq!(end.points.len(), 1);
            }
            other => panic!("expected Null, got {other:?}"),
        }
    }

    #[test]
    fn null_remains_null_at_larger_scales() {
        let s = unit_square();
        let pts = vec![0, 1, 2, 3, 0];
        for eps in [1.5, 1.8, 2.2] {
            let v = is_null(&s, eps, &Chain::new(eps, pts.clone()), NullBudget::default()).unwrap();
            assert!(v.is_null(), "scale {eps}");
        }
    }
}
