//! Fine-chain connectors with class constraints.
//!
//! The recurring question, for the weak-chainedness check on one space and
//! for the refining check on a bonding map: given endpoints in a domain
//! space and a 1-Lipschitz index map into an image space, is there a chain
//! of fineness `kappa` between them whose image is homotopic at scale
//! `eps` to the two-point chain of the image endpoints?
//!
//! Search alone cannot answer "no". The negative certificate is abelian:
//! the image class of any `kappa`-path from `a` to `b` lies in a fixed
//! coset of the lattice spanned by the `kappa`-cycle classes, taken
//! together with the image relators. If the required class misses that
//! coset, every reachable image class is non-null and no chain exists.
//! Positive answers are explicit chains whose image loop passes the
//! nullity pipeline.

use crate::chains::Chain;
use crate::metric::{chain_components, FiniteMetricSpace, Partition, ScaleGraph};
use crate::nullity::{is_null_word, NullBudget, NullVerdict, NullityError};
use crate::presentation::{presentation, Presentation, PresentationError, Word};
use crate::scalar::Scalar;
use crate::snf::RowspaceTester;
use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConnectError {
    #[error("kappa {kappa} must not exceed delta {delta}, and delta must be below eps {eps}")]
    ScaleOrder { kappa: f64, delta: f64, eps: f64 },
    #[error("image map must assign every domain point, got {len} entries for {n} points")]
    BadImageMap { len: usize, n: usize },
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Nullity(#[from] NullityError),
    #[error(transparent)]
    Metric(#[from] crate::metric::MetricError),
}

/// Budgets for one connector query.
#[derive(Debug, Clone, Copy)]
pub struct ConnectorBudget {
    /// States (point, class word) visited in the chain search.
    pub max_states: usize,
    /// Length cap on tracked class words.
    pub word_len_cap: usize,
    /// Budget of each nullity check on a candidate image loop.
    pub null_check: NullBudget,
}

impl Default for ConnectorBudget {
    fn default() -> Self {
        ConnectorBudget {
            max_states: 200_000,
            word_len_cap: 64,
            null_check: NullBudget { max_words: 50_000, word_len_cap: 64 },
        }
    }
}

/// Answer to one connector query.
#[derive(Debug, Clone)]
pub enum ConnectorOutcome<S: Scalar> {
    /// An explicit fine chain whose image class is the two-point class.
    Connected { chain: Chain<S> },
    /// Certified: no fine chain of any length can have the required class.
    Impossible,
    Undecided { budget_spent: usize },
}

struct ImageData<S: Scalar> {
    pres: Rc<Presentation<S>>,
    tester: Rc<RowspaceTester>,
}

struct ComponentData<S: Scalar> {
    image: Rc<Presentation<S>>,
    image_tester: Rc<RowspaceTester>,
    /// Lattice of reachable class shifts: cycle rows plus image relators.
    lattice: RowspaceTester,
    /// Abelianized image class of the tree path from the component root.
    shift: HashMap<usize, Vec<i64>>,
}

/// Shared state for many queries against one (domain, kappa, image, eps)
/// configuration.
pub struct ConnectorEngine<'a, S: Scalar> {
    image_space: &'a FiniteMetricSpace<S>,
    image_map: Option<&'a [usize]>,
    kappa: S,
    eps: S,
    kappa_graph: ScaleGraph<S>,
    kappa_parts: Partition,
    image_parts: Partition,
    images: HashMap<usize, ImageData<S>>,
    components: HashMap<usize, Rc<ComponentData<S>>>,
}

impl<'a, S: Scalar> ConnectorEngine<'a, S> {
    /// `image_map = None` means the identity on `domain == image_space`.
    pub fn new(
        domain: &'a FiniteMetricSpace<S>,
        image_space: &'a FiniteMetricSpace<S>,
        image_map: Option<&'a [usize]>,
        kappa: S,
        eps: S,
    ) -> Result<Self, ConnectError> {
        if let Some(m) = image_map {
            if m.len() != domain.len() {
                return Err(ConnectError::BadImageMap { len: m.len(), n: domain.len() });
            }
        }
        Ok(ConnectorEngine {
            image_space,
            image_map,
            kappa,
            eps,
            kappa_graph: ScaleGraph::new(domain, kappa)?,
            kappa_parts: chain_components(domain, kappa)?,
            image_parts: chain_components(image_space, eps)?,
            images: HashMap::new(),
            components: HashMap::new(),
        })
    }

    fn project(&self, p: usize) -> usize {
        match self.image_map {
            Some(m) => m[p],
            None => p,
        }
    }

    fn image_data(&mut self, image_point: usize) -> Result<ImageData<S>, ConnectError> {
        let root = self.image_parts.component_of(image_point);
        if let Some(d) = self.images.get(&root) {
            return Ok(ImageData { pres: d.pres.clone(), tester: d.tester.clone() });
        }
        let pres = Rc::new(presentation(self.image_space, self.eps, root)?);
        let tester = Rc::new(
            RowspaceTester::new(&pres.relator_rows(), pres.gen_count()).map_err(NullityError::from)?,
        );
        self.images.insert(root, ImageData { pres: pres.clone(), tester: tester.clone() });
        Ok(ImageData { pres, tester })
    }

    fn component_data(&mut self, domain_point: usize) -> Result<Rc<ComponentData<S>>, ConnectError> {
        let root = self.kappa_parts.component_of(domain_point);
        if let Some(d) = self.components.get(&root) {
            return Ok(d.clone());
        }
        let image = self.image_data(self.project(root))?;
        let ngens = image.pres.gen_count();
        // Breadth-first forest of the kappa component, accumulating the
        // abelianized image class of each tree path.
        let mut shift: HashMap<usize, Vec<i64>> = HashMap::new();
        shift.insert(root, vec![0i64; ngens]);
        let mut order = vec![root];
        let mut queue = VecDeque::from([root]);
        let mut cycles: Vec<Vec<(usize, i64)>> = Vec::new();
        let mut seen_edges: HashSet<(usize, usize)> = HashSet::new();
        while let Some(u) = queue.pop_front() {
            for &v in self.kappa_graph.neighbors(u) {
                let l = image.pres.edge_letter(self.project(u), self.project(v))?;
                if !shift.contains_key(&v) {
                    let mut s = shift[&u].clone();
                    if l != 0 {
                        s[(l.unsigned_abs() as usize) - 1] += l.signum() as i64;
                    }
                    shift.insert(v, s);
                    order.push(v);
                    queue.push_back(v);
                } else if seen_edges.insert((u.min(v), u.max(v))) {
                    // Cycle class: shift(u) + letter - shift(v).
                    let mut row: HashMap<usize, i64> = HashMap::new();
                    for (g, &x) in shift[&u].iter().enumerate() {
                        if x != 0 {
                            *row.entry(g).or_insert(0) += x;
                        }
                    }
                    if l != 0 {
                        *row.entry((l.unsigned_abs() as usize) - 1).or_insert(0) += l.signum() as i64;
                    }
                    for (g, &x) in shift[&v].iter().enumerate() {
                        if x != 0 {
                            *row.entry(g).or_insert(0) -= x;
                        }
                    }
                    let mut row: Vec<(usize, i64)> = row.into_iter().filter(|&(_, x)| x != 0).collect();
                    row.sort_unstable();
                    if !row.is_empty() {
                        cycles.push(row);
                    }
                }
            }
        }
        let mut lattice_rows = cycles;
        lattice_rows.extend(image.pres.relator_rows());
        let lattice =
            RowspaceTester::new(&lattice_rows, ngens).map_err(NullityError::from)?;
        let data = Rc::new(ComponentData {
            image: image.pres,
            image_tester: image.tester,
            lattice,
            shift,
        });
        self.components.insert(root, data.clone());
        Ok(data)
    }

    /// Searches for a `kappa`-chain from `a` to `b` whose image is
    /// `eps`-homotopic to the two-point chain of the image endpoints.
    /// Requires the image endpoints within `eps` of each other.
    pub fn connect(
        &mut self,
        a: usize,
        b: usize,
        budget: ConnectorBudget,
    ) -> Result<ConnectorOutcome<S>, ConnectError> {
        if !self.kappa_parts.same_component(a, b) {
            return Ok(ConnectorOutcome::Impossible);
        }
        let data = self.component_data(a)?;
        let (ia, ib) = (self.project(a), self.project(b));
        let closing = data.image.edge_letter(ib, ia)?;
        let closing_word = Word::from_letters([closing]);
        let ngens = data.image.gen_count();

        // Abelian feasibility: needed class must land in the cycle-relator
        // lattice.
        let mut needed = vec![0i64; ngens];
        for g in 0..ngens {
            needed[g] = data.shift[&a][g] - data.shift[&b][g];
        }
        if closing != 0 {
            needed[(closing.unsigned_abs() as usize) - 1] -= closing.signum() as i64;
        }
        if !data.lattice.contains(&needed).map_err(NullityError::from)? {
            return Ok(ConnectorOutcome::Impossible);
        }

        // Explicit search over (point, image class word).
        let mut arena: Vec<(usize, Word)> = vec![(a, Word::empty())];
        let mut parent: Vec<Option<usize>> = vec![None];
        let mut seen: HashSet<(usize, Word)> = HashSet::from([(a, Word::empty())]);
        let mut queue = VecDeque::from([0usize]);
        let mut null_cache: HashMap<Word, bool> = HashMap::new();

        let domain_path = |arena: &Vec<(usize, Word)>, parent: &Vec<Option<usize>>, id: usize| {
            let mut points = Vec::new();
            let mut cur = Some(id);
            while let Some(c) = cur {
                points.push(arena[c].0);
                cur = parent[c];
            }
            points.reverse();
            points
        };

        let check_state = |id: usize,
                           arena: &Vec<(usize, Word)>,
                           parent: &Vec<Option<usize>>,
                           null_cache: &mut HashMap<Word, bool>|
         -> Result<bool, ConnectError> {
            let (p, ref w) = arena[id];
            if p != b {
                return Ok(false);
            }
            // Cheap geometric test first: the image loop often contracts by
            // removals alone (single-ball scales, chains along geodesics).
            let mut image_loop: Vec<usize> =
                domain_path(arena, parent, id).iter().map(|&x| self.project(x)).collect();
            image_loop.push(ia);
            let candidate = Chain::new(self.eps, image_loop);
            if crate::nullity::greedy_contract(self.image_space, &candidate).is_some() {
                return Ok(true);
            }
            let u = w.concat(&closing_word);
            if let Some(&known) = null_cache.get(&u) {
                return Ok(known);
            }
            let verdict =
                is_null_word::<S>(&data.image, &data.image_tester, &u, budget.null_check)?;
            let ok = matches!(verdict, NullVerdict::Null { .. });
            null_cache.insert(u, ok);
            Ok(ok)
        };

        if check_state(0, &arena, &parent, &mut null_cache)? {
            return Ok(ConnectorOutcome::Connected {
                chain: Chain::new(self.kappa, vec![a]),
            });
        }
        while let Some(id) = queue.pop_front() {
            let (p, w) = arena[id].clone();
            for &q in self.kappa_graph.neighbors(p) {
                let l = data.image.edge_letter(self.project(p), self.project(q))?;
                let w2 = w.concat(&Word::from_letters([l]));
                if w2.len() > budget.word_len_cap {
                    continue;
                }
                let key = (q, w2.clone());
                if !seen.insert(key) {
                    continue;
                }
                let id2 = arena.len();
                arena.push((q, w2));
                parent.push(Some(id));
                if check_state(id2, &arena, &parent, &mut null_cache)? {
                    return Ok(ConnectorOutcome::Connected {
                        chain: Chain::new(self.kappa, domain_path(&arena, &parent, id2)),
                    });
                }
                if arena.len() >= budget.max_states {
                    return Ok(ConnectorOutcome::Undecided { budget_spent: arena.len() });
                }
                queue.push_back(id2);
            }
        }
        // The bounded reachable set is exhausted; longer class words might
        // still work, so this is indeterminate, not a refutation.
        Ok(ConnectorOutcome::Undecided { budget_spent: arena.len() })
    }
}

/// Verdict of the weak-chainedness check on one space at `(eps, delta)`
/// with fineness `kappa`.
#[derive(Debug, Clone)]
pub enum RefinedConnectivity<S: Scalar> {
    Holds { witnesses: Vec<((usize, usize), Chain<S>)> },
    Fails { pair: (usize, usize) },
    Undecided { pair: (usize, usize), budget_spent: usize },
}

impl<S: Scalar> RefinedConnectivity<S> {
    pub fn holds(&self) -> bool {
        matches!(self, RefinedConnectivity::Holds { .. })
    }
}

/// For every pair within `delta`, searches for a `kappa`-chain joining it
/// whose class at `eps` is the two-point class. `kappa <= delta <= eps`.
pub fn check_refined_connectivity<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    eps: S,
    delta: S,
    kappa: S,
    budget: ConnectorBudget,
) -> Result<RefinedConnectivity<S>, ConnectError> {
    if !(kappa <= delta && delta <= eps) {
        return Err(ConnectError::ScaleOrder {
            kappa: kappa.to_f64().unwrap_or(f64::NAN),
            delta: delta.to_f64().unwrap_or(f64::NAN),
            eps: eps.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut engine = ConnectorEngine::new(space, space, None, kappa, eps)?;
    let mut witnesses = Vec::new();
    let mut undecided: Option<((usize, usize), usize)> = None;
    for a in 0..space.len() {
        for b in a..space.len() {
            if !(space.dist(a, b) < delta) {
                continue;
            }
            match engine.connect(a, b, budget)? {
                ConnectorOutcome::Connected { chain } => witnesses.push(((a, b), chain)),
                ConnectorOutcome::Impossible => {
                    return Ok(RefinedConnectivity::Fails { pair: (a, b) })
                }
                ConnectorOutcome::Undecided { budget_spent } => {
                    undecided.get_or_insert(((a, b), budget_spent));
                }
            }
        }
    }
    if let Some((pair, budget_spent)) = undecided {
        return Ok(RefinedConnectivity::Undecided { pair, budget_spent });
    }
    Ok(RefinedConnectivity::Holds { witnesses })
}
