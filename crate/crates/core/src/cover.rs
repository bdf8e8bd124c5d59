//! Finite realizations of the space of chain classes at one scale.
//!
//! A vertex is a homotopy class of chains from the basepoint, realized as a
//! pair (endpoint, group element): coset ids when the enumeration closes,
//! reduced class words on a breadth-first ball otherwise. Following the
//! edge labeled `q` from a class appends the step to `q`; the endpoint map
//! projects back to the space. Chain lifting walks labeled edges and is
//! unique by construction.

use crate::chains::{validate_chain, Chain, ChainError};
use crate::coset::{enumerate_trivial, CosetTable, Enumeration};
use crate::metric::{FiniteMetricSpace, Partition, UnionFind};
use crate::nullity::{is_null_word, NullBudget, NullVerdict, NullityError};
use crate::presentation::{presentation, Presentation, PresentationError, Word};
use crate::scalar::Scalar;
use crate::snf::RowspaceTester;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("start vertex has endpoint {found}, chain starts at {expected}")]
    StartMismatch { expected: usize, found: usize },
    #[error("walk left the truncated ball after {steps} steps")]
    OutsideTruncation { steps: usize },
    #[error("vertex id {id} out of range ({count} vertices)")]
    NotAVertex { id: usize, count: usize },
    #[error("chain at scale {chain} against cover at scale {cover}")]
    ScaleMismatch { cover: f64, chain: f64 },
    #[error("point {point} is outside the covered component")]
    OutsideComponent { point: usize },
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Nullity(#[from] NullityError),
}

/// Whether the class enumeration closed or was cut at a ball.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverStatus {
    Complete,
    /// Ball of the given radius in lifted-edge steps. `dedup_exact` is
    /// false when some class-equality query exhausted its budget and the
    /// ball may split one class into several vertices.
    Truncated { radius: usize, dedup_exact: bool },
}

#[derive(Debug, Clone, Copy)]
pub struct CoverBudget {
    /// Coset definitions allowed before giving up on a closed enumeration.
    pub max_cosets: usize,
    /// Ball radius for truncated covers, in lifted-edge steps.
    pub truncation_radius: usize,
    /// Budget for class-equality checks during truncated deduplication.
    pub dedup: NullBudget,
}

impl Default for CoverBudget {
    fn default() -> Self {
        CoverBudget {
            max_cosets: 200_000,
            truncation_radius: 12,
            dedup: NullBudget { max_words: 20_000, word_len_cap: 64 },
        }
    }
}

#[derive(Debug)]
enum Backend {
    Complete {
        table: CosetTable,
        reps: Vec<Word>,
        /// position of each component point in the component list
        point_pos: HashMap<usize, usize>,
    },
    Truncated {
        words: Vec<Word>,
        index: HashMap<usize, Vec<usize>>,
        edges: HashMap<(usize, usize), usize>,
        radius: usize,
        dedup_exact: bool,
    },
}

/// The covering graph at one scale and basepoint.
#[derive(Debug)]
pub struct CoveringGraph<S: Scalar> {
    pres: Presentation<S>,
    /// Endpoint per vertex id.
    endpoints: Vec<usize>,
    backend: Backend,
}

/// A lifted chain: the vertex path and where it ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftResult {
    pub vertices: Vec<usize>,
    pub end: usize,
}

pub fn build_cover<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    scale: S,
    basepoint: usize,
    budget: CoverBudget,
) -> Result<CoveringGraph<S>, CoverError> {
    let pres = presentation(space, scale, basepoint)?;
    let has_relations = pres.relators.iter().any(|r| !r.is_empty());
    if pres.gen_count() == 0 || has_relations {
        if let Enumeration::Complete(table) =
            enumerate_trivial(pres.gen_count(), &pres.relators, budget.max_cosets)
        {
            let order = table.order();
            let reps = table.representatives();
            let point_pos: HashMap<usize, usize> =
                pres.component.iter().enumerate().map(|(i, &p)| (p, i)).collect();
            let mut endpoints = Vec::with_capacity(pres.component.len() * order);
            for &p in &pres.component {
                endpoints.extend(std::iter::repeat(p).take(order));
            }
            return Ok(CoveringGraph {
                pres,
                endpoints,
                backend: Backend::Complete { table, reps, point_pos },
            });
        }
    }
    build_truncated(space, pres, budget)
}

fn build_truncated<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    pres: Presentation<S>,
    budget: CoverBudget,
) -> Result<CoveringGraph<S>, CoverError> {
    let free = pres.relators.iter().all(|r| r.is_empty());
    let tester = if free {
        None
    } else {
        Some(RowspaceTester::new(&pres.relator_rows(), pres.gen_count()).map_err(NullityError::from)?)
    };
    let mut dedup_exact = true;

    let mut endpoints = vec![pres.basepoint];
    let mut words = vec![Word::empty()];
    let mut depth = vec![0usize];
    let mut index: HashMap<usize, Vec<usize>> = HashMap::new();
    index.insert(pres.basepoint, vec![0]);
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::from([0usize]);

    while let Some(v) = queue.pop_front() {
        if depth[v] >= budget.truncation_radius {
            continue;
        }
        let p = endpoints[v];
        for &q in pres.component.clone().iter() {
            if !(space.dist(p, q) < pres.scale) {
                continue;
            }
            if edges.contains_key(&(v, q)) {
                continue;
            }
            let letter = pres.edge_letter(p, q)?;
            let next_word = words[v].concat(&Word::from_letters([letter]));
            // Identify the class among known vertices at q.
            let mut target = None;
            for &cand in index.get(&q).into_iter().flatten() {
                let equal = if free {
                    words[cand] == next_word
                } else {
                    let diff = next_word.concat(&words[cand].inverse());
                    match is_null_word::<S>(&pres, tester.as_ref().unwrap(), &diff, budget.dedup)? {
                        NullVerdict::Null { .. } => true,
                        NullVerdict::NonNull { .. } => false,
                        NullVerdict::Unknown { .. } => {
                            dedup_exact = false;
                            false
                        }
                    }
                };
                if equal {
                    target = Some(cand);
                    break;
                }
            }
            let target = match target {
                Some(t) => t,
                None => {
                    let id = endpoints.len();
                    endpoints.push(q);
                    words.push(next_word);
                    depth.push(depth[v] + 1);
                    index.entry(q).or_default().push(id);
                    queue.push_back(id);
                    id
                }
            };
            edges.insert((v, q), target);
            edges.insert((target, p), v);
        }
    }
    let radius = budget.truncation_radius;
    Ok(CoveringGraph {
        pres,
        endpoints,
        backend: Backend::Truncated { words, index, edges, radius, dedup_exact },
    })
}

impl<S: Scalar> CoveringGraph<S> {
    pub fn scale(&self) -> S {
        self.pres.scale
    }

    pub fn basepoint(&self) -> usize {
        self.pres.basepoint
    }

    pub fn presentation(&self) -> &Presentation<S> {
        &self.pres
    }

    pub fn status(&self) -> CoverStatus {
        match &self.backend {
            Backend::Complete { .. } => CoverStatus::Complete,
            Backend::Truncated { radius, dedup_exact, .. } => {
                CoverStatus::Truncated { radius: *radius, dedup_exact: *dedup_exact }
            }
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.backend, Backend::Complete { .. })
    }

    pub fn vertex_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn endpoint(&self, v: usize) -> usize {
        self.endpoints[v]
    }

    fn check_vertex(&self, v: usize) -> Result<(), CoverError> {
        if v < self.endpoints.len() {
            Ok(())
        } else {
            Err(CoverError::NotAVertex { id: v, count: self.endpoints.len() })
        }
    }

    /// The class of the one-point chain at the basepoint.
    pub fn basepoint_vertex(&self) -> usize {
        match &self.backend {
            Backend::Complete { table, point_pos, .. } => {
                point_pos[&self.pres.basepoint] * table.order()
            }
            Backend::Truncated { .. } => 0,
        }
    }

    /// Group order when the enumeration closed.
    pub fn group_order(&self) -> Option<usize> {
        match &self.backend {
            Backend::Complete { table, .. } => Some(table.order()),
            Backend::Truncated { .. } => None,
        }
    }

    /// A reduced word representing the vertex's class.
    pub fn class_word(&self, v: usize) -> Word {
        match &self.backend {
            Backend::Complete { table, reps, .. } => reps[v % table.order()].clone(),
            Backend::Truncated { words, .. } => words[v].clone(),
        }
    }

    /// All vertices over a point, ascending.
    pub fn fiber(&self, point: usize) -> Vec<usize> {
        match &self.backend {
            Backend::Complete { table, point_pos, .. } => point_pos
                .get(&point)
                .map(|&pos| (pos * table.order()..(pos + 1) * table.order()).collect())
                .unwrap_or_default(),
            Backend::Truncated { index, .. } => {
                let mut f = index.get(&point).cloned().unwrap_or_default();
                f.sort_unstable();
                f
            }
        }
    }

    /// Follows the edge labeled `q` from `v`. `Ok(None)` when `q` is not
    /// within the scale of the vertex's endpoint; an error when the edge
    /// exists but leaves the truncated ball.
    pub fn edge(
        &self,
        space: &FiniteMetricSpace<S>,
        v: usize,
        q: usize,
    ) -> Result<Option<usize>, CoverError> {
        self.check_vertex(v)?;
        let p = self.endpoints[v];
        if !(space.dist(p, q) < self.pres.scale) || !self.pres.contains(q) {
            return Ok(None);
        }
        match &self.backend {
            Backend::Complete { table, point_pos, .. } => {
                let order = table.order();
                let coset = v % order;
                let letter = self.pres.edge_letter(p, q)?;
                let next = if letter == 0 { coset } else { table.step(coset, letter) };
                Ok(Some(point_pos[&q] * order + next))
            }
            Backend::Truncated { edges, .. } => match edges.get(&(v, q)) {
                Some(&t) => Ok(Some(t)),
                None => Err(CoverError::OutsideTruncation { steps: 0 }),
            },
        }
    }
}

/// Unique lift of a chain starting at a given vertex over its first point.
pub fn lift_chain<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    cover: &CoveringGraph<S>,
    chain: &Chain<S>,
    start_vertex: usize,
) -> Result<LiftResult, CoverError> {
    cover.check_vertex(start_vertex)?;
    if chain.scale != cover.scale() {
        return Err(CoverError::ScaleMismatch {
            cover: cover.scale().to_f64().unwrap_or(f64::NAN),
            chain: chain.scale.to_f64().unwrap_or(f64::NAN),
        });
    }
    validate_chain(space, chain)?;
    if cover.endpoint(start_vertex) != chain.first() {
        return Err(CoverError::StartMismatch {
            expected: chain.first(),
            found: cover.endpoint(start_vertex),
        });
    }
    let mut vertices = vec![start_vertex];
    for (steps, w) in chain.points.windows(2).enumerate() {
        let v = *vertices.last().unwrap();
        match cover.edge(space, v, w[1]) {
            Ok(Some(next)) => vertices.push(next),
            Ok(None) => unreachable!("validated chain steps are scale edges"),
            Err(CoverError::OutsideTruncation { .. }) => {
                return Err(CoverError::OutsideTruncation { steps: steps + 1 })
            }
            Err(e) => return Err(e),
        }
    }
    let end = *vertices.last().unwrap();
    Ok(LiftResult { vertices, end })
}

/// The entourage relation on classes: related at `delta` when the
/// difference of the classes is the two-point chain of their
/// `delta`-close endpoints. Concretely: endpoints within `delta` and the
/// labeled edge from one leads to the other. On a truncated cover an edge
/// that walks outside reports unrelated.
pub fn fstar_related<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    cover: &CoveringGraph<S>,
    v: usize,
    w: usize,
    delta: S,
) -> bool {
    if v >= cover.vertex_count() || w >= cover.vertex_count() {
        return false;
    }
    if !(space.dist(cover.endpoint(v), cover.endpoint(w)) < delta) {
        return false;
    }
    matches!(cover.edge(space, v, cover.endpoint(w)), Ok(Some(t)) if t == w)
}

/// The deck translate of a vertex by a loop class, acting by
/// pre-concatenation.
pub fn deck_action<S: Scalar>(
    cover: &CoveringGraph<S>,
    loop_word: &Word,
    v: usize,
) -> Result<usize, CoverError> {
    cover.check_vertex(v)?;
    match &cover.backend {
        Backend::Complete { table, reps, point_pos } => {
            let order = table.order();
            let coset = v % order;
            let moved = table.trace(table.trace(0, loop_word), &reps[coset]);
            Ok(point_pos[&cover.endpoints[v]] * order + moved)
        }
        Backend::Truncated { words, index, .. } => {
            let target = loop_word.concat(&words[v]);
            let p = cover.endpoints[v];
            let free = cover.pres.relators.iter().all(|r| r.is_empty());
            let tester = if free {
                None
            } else {
                Some(
                    RowspaceTester::new(&cover.pres.relator_rows(), cover.pres.gen_count())
                        .map_err(NullityError::from)?,
                )
            };
            for &cand in index.get(&p).into_iter().flatten() {
                let equal = if free {
                    words[cand] == target
                } else {
                    let diff = target.concat(&words[cand].inverse());
                    matches!(
                        is_null_word::<S>(
                            &cover.pres,
                            tester.as_ref().unwrap(),
                            &diff,
                            CoverBudget::default().dedup
                        )?,
                        NullVerdict::Null { .. }
                    )
                };
                if equal {
                    return Ok(cand);
                }
            }
            Err(CoverError::OutsideTruncation { steps: 0 })
        }
    }
}

/// Deck translate by an explicit loop at the basepoint.
pub fn deck_action_loop<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    cover: &CoveringGraph<S>,
    loop_chain: &Chain<S>,
    v: usize,
) -> Result<usize, CoverError> {
    let word = cover.pres.chain_word(space, loop_chain)?;
    deck_action(cover, &word, v)
}

/// Components of the graph on cover vertices whose edges are the related
/// pairs at `delta`. Near the boundary of a truncated cover the partition
/// is approximate: edges that walk outside are simply absent.
pub fn cover_chain_components<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    cover: &CoveringGraph<S>,
    delta: S,
) -> Partition {
    let n = cover.vertex_count();
    let mut uf = UnionFind::new(n);
    for v in 0..n {
        let p = cover.endpoint(v);
        for &q in &cover.pres.component {
            if !(space.dist(p, q) < delta) {
                continue;
            }
            if let Ok(Some(t)) = cover.edge(space, v, q) {
                uf.union(v, t);
            }
        }
    }
    Partition::from_union_find(uf, n)
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
    fn one_point_cover_is_complete() {
        let s = FiniteMetricSpace::build(&[vec![0.0]], None).unwrap();
        let c = build_cover(&s, 1.0, 0, CoverBudget::default()).unwrap();
        assert_eq!(c.status(), CoverStatus::Complete);
        assert_eq!(c.vertex_count(), 1);
    }

    #[test]
    fn square_loose_scale_cover_is_the_space() {
        let s = unit_square();
        let c = build_cover(&s, 1.5, 0, CoverBudget::default()).unwrap();
        assert_eq!(c.status(), CoverStatus::Complete);
        assert_eq!(c.vertex_count(), 4);
        assert_eq!(c.group_order(), Some(1));
        for p in 0..4 {
            assert_eq!(c.fiber(p).len(), 1);
        }
    }

    #[test]
    fn square_tight_scale_cover_is_a_line_ball() {
        let s = unit_square();
        let budget = CoverBudget { truncation_radius: 6, ..CoverBudget::default() };
        let c = build_cover(&s, 1.2, 0, budget).unwrap();
        match c.status() {
            CoverStatus::Truncated { radius: 6, dedup_exact: true } => {}
            other => panic!("unexpected status {other:?}"),
        }
        // The universal cover of a 4-cycle is a line: the radius-6 ball
        // around the basepoint vertex holds 13 vertices.
        assert_eq!(c.vertex_count(), 13);
        let bv = c.basepoint_vertex();
        assert_eq!(c.endpoint(bv), 0);
    }

    #[test]
    fn lift_constant_chain_stays_put() {
        let s = unit_square();
        let c = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let bv = c.basepoint_vertex();
        let lift = lift_chain(&s, &c, &Chain::new(1.2, vec![0, 0]), bv).unwrap();
        assert_eq!(lift.end, bv);
    }

    #[test]
    fn boundary_loop_lifts_to_deck_translate_or_closes() {
        let s = unit_square();
        let boundary = Chain::new(1.2, vec![0, 1, 2, 3, 0]);
        let tight = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let lift = lift_chain(&s, &tight, &boundary, tight.basepoint_vertex()).unwrap();
        assert_eq!(tight.endpoint(lift.end), 0);
        assert_ne!(lift.end, tight.basepoint_vertex());

        let loose = build_cover(&s, 1.5, 0, CoverBudget::default()).unwrap();
        let boundary = Chain::new(1.5, vec![0, 1, 2, 3, 0]);
        let lift = lift_chain(&s, &loose, &boundary, loose.basepoint_vertex()).unwrap();
        assert_eq!(lift.end, loose.basepoint_vertex());
    }

    #[test]
    fn projection_recovers_the_chain() {
        let s = unit_square();
        let c = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let chain = Chain::new(1.2, vec![0, 1, 2, 1, 0, 3]);
        let lift = lift_chain(&s, &c, &chain, c.basepoint_vertex()).unwrap();
        let projected: Vec<usize> = lift.vertices.iter().map(|&v| c.endpoint(v)).collect();
        assert_eq!(projected, chain.points);
    }

    #[test]
    fn fstar_identity_and_fiber_pairs() {
        let s = unit_square();
        let c = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let bv = c.basepoint_vertex();
        assert!(fstar_related(&s, &c, bv, bv, 0.5));
        // Two distinct vertices in the basepoint fiber: endpoints agree but
        // the labeled edge is a self-loop on each class.
        let fiber = c.fiber(0);
        assert!(fiber.len() >= 2);
        let (a, b) = (fiber[0], fiber[1]);
        assert!(!fstar_related(&s, &c, a, b, 0.5));
    }

    #[test]
    fn lifted_steps_are_fstar_related_at_finer_scale() {
        // A chain strictly finer than the cover scale lifts to steps that
        // are related at its own fineness.
        let s = unit_square();
        let c = build_cover(&s, 1.5, 0, CoverBudget::default()).unwrap();
        let chain = Chain::new(1.5, vec![0, 1, 2]);
        let lift = lift_chain(&s, &c, &chain, c.basepoint_vertex()).unwrap();
        for w in lift.vertices.windows(2) {
            assert!(fstar_related(&s, &c, w[0], w[1], 1.2));
        }
    }

    #[test]
    fn deck_action_shifts_the_line_cover() {
        let s = unit_square();
        let c = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let word = c.pres.chain_word(&s, &Chain::new(1.2, vec![0, 1, 2, 3, 0])).unwrap();
        let bv = c.basepoint_vertex();
        let moved = deck_action(&c, &word, bv).unwrap();
        assert_eq!(c.endpoint(moved), 0);
        assert_ne!(moved, bv);
        let back = deck_action(&c, &word.inverse(), moved).unwrap();
        assert_eq!(back, bv);
        // Identity acts trivially.
        assert_eq!(deck_action(&c, &Word::empty(), bv).unwrap(), bv);
    }

    #[test]
    fn deck_action_commutes_with_endpoint_and_preserves_fstar() {
        // Act on the truncated line cover where the group is infinite.
        let s = unit_square();
        let c = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let word = c.pres.chain_word(&s, &Chain::new(1.2, vec![0, 1, 2, 3, 0])).unwrap();
        let v = c.basepoint_vertex();
        let w = c.edge(&s, v, 1).unwrap().unwrap();
        assert!(fstar_related(&s, &c, v, w, 1.1));
        if let (Ok(mv), Ok(mw)) = (deck_action(&c, &word, v), deck_action(&c, &word, w)) {
            assert_eq!(c.endpoint(mv), c.endpoint(v));
            assert_eq!(c.endpoint(mw), c.endpoint(w));
            assert!(fstar_related(&s, &c, mv, mw, 1.1));
        }
    }

    #[test]
    fn cover_components_at_scale_boundaries() {
        let s = unit_square();
        let loose = build_cover(&s, 1.5, 0, CoverBudget::default()).unwrap();
        // At the full scale the cover of the connected graph is connected.
        assert_eq!(cover_chain_components(&s, &loose, 1.5).count(), 1);
        // Below the minimum distance there are no related pairs at all.
        assert_eq!(cover_chain_components(&s, &loose, 0.5).count(), loose.vertex_count());
        // The truncated line cover is connected at side scale.
        let tight = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        assert_eq!(cover_chain_components(&s, &tight, 1.1).count(), 1);
    }

    #[test]
    fn start_mismatch_is_reported() {
        let s = unit_square();
        let c = build_cover(&s, 1.2, 0, CoverBudget::default()).unwrap();
        let fiber1 = c.fiber(1);
        let err = lift_chain(&s, &c, &Chain::new(1.2, vec![0, 1]), fiber1[0]).unwrap_err();
        assert!(matches!(err, CoverError::StartMismatch { .. }));
    }

    #[test]
    fn walking_off_the_truncation_is_an_error() {
        let s = unit_square();
        let budget = CoverBudget { truncation_radius: 2, ..CoverBudget::default() };
        let c = build_cover(&s, 1.2, 0, budget).unwrap();
        let long_walk = Chain::new(1.2, vec![0, 1, 2, 3, 0, 1, 2, 3, 0]);
        let err = lift_chain(&s, &c, &long_walk, c.basepoint_vertex()).unwrap_err();
        assert!(matches!(err, CoverError::OutsideTruncation { .. }));
    }
}
