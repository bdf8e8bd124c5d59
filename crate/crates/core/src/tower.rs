//! Inverse systems of finite metric spaces with surjective 1-Lipschitz
//! bonds: validation, preimage diameters, entourage comparison, refining
//! checks against the inverse-limit hypothesis pattern, and lifts of chains
//! and homotopies to thread points with specified endpoints.

use crate::chains::{apply_move, BasicMove, Chain, ChainError, Homotopy};
use crate::connect::{ConnectError, ConnectorBudget, ConnectorEngine, ConnectorOutcome};
use crate::metric::{connectivity_threshold, FiniteMetricSpace};
use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TowerError {
    #[error("tower needs at least one stage")]
    Empty,
    #[error("indices must be strictly increasing; stage {stage} breaks the order")]
    IndicesNotIncreasing { stage: usize },
    #[error("bond {bond} maps {got} points, stage {stage} has {expected}")]
    BondSizeMismatch { bond: usize, got: usize, stage: usize, expected: usize },
    #[error("bond {bond} sends point {point} to {image}, beyond stage size {size}")]
    BondOutOfRange { bond: usize, point: usize, image: usize, size: usize },
    #[error("stage index {stage} out of range ({count} stages)")]
    StageOutOfRange { stage: usize, count: usize },
    #[error("expected stage order r < t, got {r} and {t}")]
    StageOrder { r: usize, t: usize },
    #[error(transparent)]
    Connect(#[from] ConnectError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("thread is inconsistent under the bonds at stage {stage}")]
    InconsistentThread { stage: usize },
    #[error("thread projects to {found} at stage {stage}, expected {expected}")]
    ThreadProjection { stage: usize, expected: usize, found: usize },
    #[error("input homotopy does not verify: {0}")]
    NotAHomotopy(String),
}

/// A validation failure, naming the stage pair and witness points.
#[derive(Debug, Clone, PartialEq)]
pub enum TowerViolation {
    NotSurjective { bond: usize, missing: usize },
    NotLipschitz { bond: usize, x: usize, y: usize, upstairs: f64, downstairs: f64 },
}

/// Stages indexed by strictly increasing positive reals, with a surjective
/// 1-Lipschitz index map from each stage onto the previous one.
#[derive(Debug, Clone)]
pub struct Tower<S: Scalar> {
    indices: Vec<S>,
    stages: Vec<FiniteMetricSpace<S>>,
    bonds: Vec<Vec<usize>>,
}

impl<S: Scalar> Tower<S> {
    pub fn new(
        indices: Vec<S>,
        stages: Vec<FiniteMetricSpace<S>>,
        bonds: Vec<Vec<usize>>,
    ) -> Result<Self, TowerError> {
        if stages.is_empty() {
            return Err(TowerError::Empty);
        }
        if indices.len() != stages.len() {
            return Err(TowerError::BondSizeMismatch {
                bond: 0,
                got: indices.len(),
                stage: 0,
                expected: stages.len(),
            });
        }
        for i in 1..indices.len() {
            if !(indices[i - 1] < indices[i]) {
                return Err(TowerError::IndicesNotIncreasing { stage: i });
            }
        }
        if bonds.len() + 1 != stages.len() {
            return Err(TowerError::BondSizeMismatch {
                bond: bonds.len(),
                got: bonds.len() + 1,
                stage: 0,
                expected: stages.len(),
            });
        }
        for (b, bond) in bonds.iter().enumerate() {
            if bond.len() != stages[b + 1].len() {
                return Err(TowerError::BondSizeMismatch {
                    bond: b,
                    got: bond.len(),
                    stage: b + 1,
                    expected: stages[b + 1].len(),
                });
            }
            for (p, &img) in bond.iter().enumerate() {
                if img >= stages[b].len() {
                    return Err(TowerError::BondOutOfRange {
                        bond: b,
                        point: p,
                        image: img,
                        size: stages[b].len(),
                    });
                }
            }
        }
        Ok(Tower { indices, stages, bonds })
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn index_value(&self, stage: usize) -> S {
        self.indices[stage]
    }

    pub fn stage(&self, i: usize) -> &FiniteMetricSpace<S> {
        &self.stages[i]
    }

    pub fn indices(&self) -> &[S] {
        &self.indices
    }

    fn check_stage(&self, i: usize) -> Result<(), TowerError> {
        if i < self.stages.len() {
            Ok(())
        } else {
            Err(TowerError::StageOutOfRange { stage: i, count: self.stages.len() })
        }
    }

    /// Surjectivity and the Lipschitz bound for every consecutive bond;
    /// composition consistency is automatic because longer bonds are
    /// composed from consecutive ones.
    pub fn validate(&self) -> Result<(), TowerViolation> {
        let tol = S::validation_tolerance();
        for (b, bond) in self.bonds.iter().enumerate() {
            let down = &self.stages[b];
            let up = &self.stages[b + 1];
            let mut hit = vec![false; down.len()];
            for &img in bond {
                hit[img] = true;
            }
            if let Some(missing) = hit.iter().position(|&h| !h) {
                return Err(TowerViolation::NotSurjective { bond: b, missing });
            }
            for x in 0..up.len() {
                for y in (x + 1)..up.len() {
                    let upstairs = up.dist(x, y);
                    let downstairs = down.dist(bond[x], bond[y]);
                    if downstairs > upstairs + tol {
                        return Err(TowerViolation::NotLipschitz {
                            bond: b,
                            x,
                            y,
                            upstairs: upstairs.to_f64().unwrap_or(f64::NAN),
                            downstairs: downstairs.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Composed index map from stage `t` down to stage `r`.
    pub fn bond_map(&self, r: usize, t: usize) -> Result<Vec<usize>, TowerError> {
        self.check_stage(r)?;
        self.check_stage(t)?;
        if r > t {
            return Err(TowerError::StageOrder { r, t });
        }
        let mut map: Vec<usize> = (0..self.stages[t].len()).collect();
        for b in (r..t).rev() {
            map = map.into_iter().map(|p| self.bonds[b][p]).collect();
        }
        Ok(map)
    }

    /// Largest fiber diameter of the composed bond from stage `t` to stage
    /// `r`, measured with the stage-`t` metric.
    pub fn preimage_diameter(&self, r: usize, t: usize) -> Result<S, TowerError> {
        let map = self.bond_map(r, t)?;
        let up = &self.stages[t];
        let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); self.stages[r].len()];
        for (p, &img) in map.iter().enumerate() {
            fibers[img].push(p);
        }
        let mut pd = S::zero();
        for fiber in fibers {
            for i in 0..fiber.len() {
                for j in (i + 1)..fiber.len() {
                    let d = up.dist(fiber[i], fiber[j]);
                    if d > pd {
                        pd = d;
                    }
                }
            }
        }
        Ok(pd)
    }

    /// The thread determined by a point of stage `depth`, projected down
    /// through the bonds.
    pub fn thread_from(&self, depth: usize, top: usize) -> Result<ThreadPoint, TowerError> {
        self.check_stage(depth)?;
        if top >= self.stages[depth].len() {
            return Err(TowerError::BondOutOfRange {
                bond: depth,
                point: top,
                image: top,
                size: self.stages[depth].len(),
            });
        }
        let mut coords = vec![0usize; depth + 1];
        coords[depth] = top;
        for i in (0..depth).rev() {
            coords[i] = self.bonds[i][coords[i + 1]];
        }
        Ok(ThreadPoint { coords })
    }

    /// The least stage-`depth` preimage of a stage-`r` point, as a thread.
    pub fn canonical_thread_over(
        &self,
        r: usize,
        point: usize,
        depth: usize,
    ) -> Result<ThreadPoint, TowerError> {
        let map = self.bond_map(r, depth)?;
        let top = map
            .iter()
            .position(|&img| img == point)
            .expect("validated bonds are surjective");
        self.thread_from(depth, top)
    }

    pub fn check_thread(&self, t: &ThreadPoint) -> Result<(), TowerError> {
        if t.coords.is_empty() || t.coords.len() > self.stages.len() {
            return Err(TowerError::InconsistentThread { stage: t.coords.len() });
        }
        for i in 0..t.coords.len() - 1 {
            if t.coords[i + 1] >= self.stages[i + 1].len()
                || self.bonds[i][t.coords[i + 1]] != t.coords[i]
            {
                return Err(TowerError::InconsistentThread { stage: i });
            }
        }
        Ok(())
    }
}

/// A consistent choice of one point per stage up to some depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadPoint {
    pub coords: Vec<usize>,
}

impl ThreadPoint {
    pub fn at_stage(&self, i: usize) -> usize {
        self.coords[i]
    }

    pub fn depth(&self) -> usize {
        self.coords.len() - 1
    }
}

/// A basis entourage of the limit: thread pairs whose stage-`stage`
/// projections are within `scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntourageSpec<S: Scalar> {
    pub stage: usize,
    pub scale: S,
}

/// Does entourage `a` contain... is every `a`-related pair `b`-related?
/// Deeper stage and smaller scale is sufficient; anything else is decided
/// by exhausting thread pairs, which at finite depth are the points of the
/// deepest stage.
pub fn entourage_contains<S: Scalar>(
    tower: &Tower<S>,
    a: EntourageSpec<S>,
    b: EntourageSpec<S>,
) -> Result<bool, TowerError> {
    tower.check_stage(a.stage)?;
    tower.check_stage(b.stage)?;
    if tower.index_value(a.stage) >= tower.index_value(b.stage) && a.scale <= b.scale {
        return Ok(true);
    }
    let top = tower.stage_count() - 1;
    let to_a = tower.bond_map(a.stage, top)?;
    let to_b = tower.bond_map(b.stage, top)?;
    let sa = tower.stage(a.stage);
    let sb = tower.stage(b.stage);
    let n = tower.stage(top).len();
    for x in 0..n {
        for y in (x + 1)..n {
            if sa.dist(to_a[x], to_a[y]) < a.scale && !(sb.dist(to_b[x], to_b[y]) < b.scale) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One positive witness of the refining property: a fine chain between the
/// preimages whose image class is the two-point class.
#[derive(Debug, Clone)]
pub struct RefiningWitness<S: Scalar> {
    pub image_pair: (usize, usize),
    pub preimages: (usize, usize),
    pub chain: Chain<S>,
}

#[derive(Debug, Clone)]
pub enum RefiningVerdict<S: Scalar> {
    Refining { witnesses: Vec<RefiningWitness<S>> },
    NotRefining { image_pair: (usize, usize), preimages: (usize, usize) },
    Undecided { image_pair: (usize, usize), preimages: (usize, usize), budget_spent: usize },
}

impl<S: Scalar> RefiningVerdict<S> {
    pub fn is_refining(&self) -> bool {
        matches!(self, RefiningVerdict::Refining { .. })
    }
}

/// Checks the refining property of the bond from stage `t` onto stage `r`
/// at scales `eps > delta >= kappa`: every pair within `delta` downstairs,
/// and every pair of preimages upstairs, must be joined by a `kappa`-chain
/// whose image is homotopic at `eps` to the two-point chain. A negative
/// verdict is certified through the reachable-class lattice.
pub fn check_refining<S: Scalar>(
    tower: &Tower<S>,
    r: usize,
    t: usize,
    eps: S,
    delta: S,
    kappa: S,
    budget: ConnectorBudget,
) -> Result<RefiningVerdict<S>, TowerError> {
    if r >= t {
        return Err(TowerError::StageOrder { r, t });
    }
    if !(kappa <= delta && delta < eps) {
        return Err(ConnectError::ScaleOrder {
            kappa: kappa.to_f64().unwrap_or(f64::NAN),
            delta: delta.to_f64().unwrap_or(f64::NAN),
            eps: eps.to_f64().unwrap_or(f64::NAN),
        }
        .into());
    }
    let map = tower.bond_map(r, t)?;
    let down = tower.stage(r);
    let up = tower.stage(t);
    let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); down.len()];
    for (p, &img) in map.iter().enumerate() {
        fibers[img].push(p);
    }
    let mut engine = ConnectorEngine::new(up, down, Some(&map), kappa, eps)?;
    let mut witnesses = Vec::new();
    let mut undecided: Option<((usize, usize), (usize, usize), usize)> = None;
    for a in 0..down.len() {
        for b in a..down.len() {
            if !(down.dist(a, b) < delta) {
                continue;
            }
            let preimage_pairs: Vec<(usize, usize)> = if a == b {
                let f = &fibers[a];
                (0..f.len())
                    .flat_map(|i| (i..f.len()).map(move |j| (i, j)))
                    .map(|(i, j)| (f[i], f[j]))
                    .collect()
            } else {
                fibers[a]
                    .iter()
                    .flat_map(|&x| fibers[b].iter().map(move |&y| (x, y)))
                    .collect()
            };
            for (x, y) in preimage_pairs {
                match engine.connect(x, y, budget)? {
                    ConnectorOutcome::Connected { chain } => {
                        witnesses.push(RefiningWitness { image_pair: (a, b), preimages: (x, y), chain })
                    }
                    ConnectorOutcome::Impossible => {
                        return Ok(RefiningVerdict::NotRefining {
                            image_pair: (a, b),
                            preimages: (x, y),
                        })
                    }
                    ConnectorOutcome::Undecided { budget_spent } => {
                        undecided.get_or_insert(((a, b), (x, y), budget_spent));
                    }
                }
            }
        }
    }
    if let Some((image_pair, preimages, budget_spent)) = undecided {
        return Ok(RefiningVerdict::Undecided { image_pair, preimages, budget_spent });
    }
    Ok(RefiningVerdict::Refining { witnesses })
}

/// Outcome of the geodesic-space sufficiency certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum GrefOutcome<S: Scalar> {
    /// `eps` exceeds the preimage diameter and a positive `delta` was found
    /// below which joint preimages stay within `eps`; for a geodesic upper
    /// stage this certifies the refining property.
    Certified { delta_found: S, preimage_diameter: S },
    NotApplicable { reason: String },
}

pub fn gref_certificate<S: Scalar>(
    tower: &Tower<S>,
    r: usize,
    t: usize,
    eps: S,
) -> Result<GrefOutcome<S>, TowerError> {
    if r >= t {
        return Err(TowerError::StageOrder { r, t });
    }
    if !tower.stage(t).is_geodesic() {
        return Ok(GrefOutcome::NotApplicable {
            reason: format!("stage {t} does not carry a geodesic metric"),
        });
    }
    let pd = tower.preimage_diameter(r, t)?;
    if !(pd < eps) {
        return Ok(GrefOutcome::NotApplicable {
            reason: format!(
                "preimage diameter {} is not below eps {}",
                pd.to_f64().unwrap_or(f64::NAN),
                eps.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    // Largest delta (capped at eps) under which joint preimages of close
    // pairs stay within eps.
    let map = tower.bond_map(r, t)?;
    let down = tower.stage(r);
    let up = tower.stage(t);
    let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); down.len()];
    for (p, &img) in map.iter().enumerate() {
        fibers[img].push(p);
    }
    let mut delta_found = eps;
    for a in 0..down.len() {
        for b in (a + 1)..down.len() {
            let mut joint = S::zero();
            for &x in fibers[a].iter().chain(fibers[b].iter()) {
                for &y in fibers[a].iter().chain(fibers[b].iter()) {
                    if up.dist(x, y) > joint {
                        joint = up.dist(x, y);
                    }
                }
            }
            if !(joint < eps) && down.dist(a, b) < delta_found {
                delta_found = down.dist(a, b);
            }
        }
    }
    if delta_found <= S::zero() {
        return Ok(GrefOutcome::NotApplicable { reason: "no positive delta survives".into() });
    }
    Ok(GrefOutcome::Certified { delta_found, preimage_diameter: pd })
}

/// One cell of the hypothesis scan.
#[derive(Debug, Clone, PartialEq)]
pub enum CellVerdict {
    True { via_geodesic_certificate: bool },
    False,
    Undecided,
}

#[derive(Debug, Clone)]
pub struct ScanCell<S: Scalar> {
    pub r: usize,
    pub t: usize,
    pub eps: S,
    pub delta: S,
    pub kappa: S,
    pub verdict: CellVerdict,
}

#[derive(Debug, Clone)]
pub struct ScanReport<S: Scalar> {
    pub cells: Vec<ScanCell<S>>,
}

impl<S: Scalar> ScanReport<S> {
    /// Per scale: does the sampled-grid hypothesis pattern hold across all
    /// consecutive stage pairs?
    pub fn holds_at(&self, eps: S) -> CellVerdict {
        let mut verdict = CellVerdict::True { via_geodesic_certificate: false };
        for c in self.cells.iter().filter(|c| c.eps == eps) {
            match c.verdict {
                CellVerdict::False => return CellVerdict::False,
                CellVerdict::Undecided => verdict = CellVerdict::Undecided,
                CellVerdict::True { .. } => {}
            }
        }
        verdict
    }
}

/// Scans every consecutive stage pair over a scale grid. In each cell the
/// geodesic certificate is tried first; otherwise the search runs with
/// `delta` three quarters of the scale and `kappa` clamped to `delta`
/// (a `kappa` of zero asks for one and a half times the upper stage's
/// connectivity threshold, the finest grid on which chains move point to
/// point). Cells are independent and run on `jobs` threads.
pub fn invlim_scan<S: Scalar + Send + Sync>(
    tower: &Tower<S>,
    eps_grid: &[S],
    kappa: S,
    budget: ConnectorBudget,
    jobs: usize,
) -> Result<ScanReport<S>, TowerError>
where
    TowerError: Send,
{
    let three_quarters = S::from_f64(0.75).unwrap();
    let mut tasks: Vec<(usize, usize, S, S, S)> = Vec::new();
    for t in 1..tower.stage_count() {
        let r = t - 1;
        for &eps in eps_grid {
            let delta = eps * three_quarters;
            let base_kappa = if kappa > S::zero() {
                kappa
            } else {
                connectivity_threshold(tower.stage(t)) * S::from_f64(1.5).unwrap()
            };
            let cell_kappa = if base_kappa > delta { delta } else { base_kappa };
            tasks.push((r, t, eps, delta, cell_kappa));
        }
    }
    let jobs = jobs.max(1);
    let results: Vec<Result<ScanCell<S>, TowerError>> = if jobs == 1 {
        tasks.iter().map(|&task| scan_cell(tower, task, budget)).collect()
    } else {
        let chunks: Vec<Vec<(usize, usize, S, S, S)>> = (0..jobs)
            .map(|w| tasks.iter().copied().skip(w).step_by(jobs).collect())
            .collect();
        let mut collected: Vec<(usize, Result<ScanCell<S>, TowerError>)> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .enumerate()
                .map(|(w, chunk)| {
                    scope.spawn(move || {
                        chunk
                            .into_iter()
                            .enumerate()
                            .map(|(i, task)| (i * jobs + w, scan_cell(tower, task, budget)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                collected.extend(h.join().expect("scan worker panicked"));
            }
        });
        collected.sort_by_key(|&(i, _)| i);
        collected.into_iter().map(|(_, r)| r).collect()
    };
    let mut cells = Vec::with_capacity(results.len());
    for r in results {
        cells.push(r?);
    }
    Ok(ScanReport { cells })
}

fn scan_cell<S: Scalar>(
    tower: &Tower<S>,
    (r, t, eps, delta, kappa): (usize, usize, S, S, S),
    budget: ConnectorBudget,
) -> Result<ScanCell<S>, TowerError> {
    if let GrefOutcome::Certified { .. } = gref_certificate(tower, r, t, eps)? {
        return Ok(ScanCell {
            r,
            t,
            eps,
            delta,
            kappa,
            verdict: CellVerdict::True { via_geodesic_certificate: true },
        });
    }
    let verdict = match check_refining(tower, r, t, eps, delta, kappa, budget)? {
        RefiningVerdict::Refining { .. } => CellVerdict::True { via_geodesic_certificate: false },
        RefiningVerdict::NotRefining { .. } => CellVerdict::False,
        RefiningVerdict::Undecided { .. } => CellVerdict::Undecided,
    };
    Ok(ScanCell { r, t, eps, delta, kappa, verdict })
}

/// A move on thread chains; legality is measured on stage-`r` projections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThreadMove {
    Insert { pos: usize, thread: ThreadPoint },
    Remove { pos: usize },
}

/// A homotopy among thread points, legal for the entourage at one stage
/// and scale.
#[derive(Debug, Clone)]
pub struct ThreadHomotopy<S: Scalar> {
    pub entourage: EntourageSpec<S>,
    pub start: Vec<ThreadPoint>,
    pub moves: Vec<ThreadMove>,
}

/// Replays a thread homotopy: every thread must be bond-consistent and
/// every move legal in the stage-`r` projection. Returns the final thread
/// chain.
pub fn verify_thread_homotopy<S: Scalar>(
    tower: &Tower<S>,
    h: &ThreadHomotopy<S>,
) -> Result<Vec<ThreadPoint>, TowerError> {
    let r = h.entourage.stage;
    tower.check_stage(r)?;
    for tp in &h.start {
        tower.check_thread(tp)?;
    }
    let space = tower.stage(r);
    let project = |threads: &[ThreadPoint]| Chain {
        scale: h.entourage.scale,
        points: threads.iter().map(|tp| tp.at_stage(r)).collect(),
    };
    let mut threads = h.start.clone();
    crate::chains::validate_chain(space, &project(&threads)).map_err(TowerError::Chain)?;
    for mv in &h.moves {
        match mv {
            ThreadMove::Insert { pos, thread } => {
                tower.check_thread(thread)?;
                let shadow = BasicMove::Insert { pos: *pos, point: thread.at_stage(r) };
                apply_move(space, &project(&threads), shadow).map_err(TowerError::Chain)?;
                threads.insert(*pos, thread.clone());
            }
            ThreadMove::Remove { pos } => {
                let shadow = BasicMove::Remove { pos: *pos };
                apply_move(space, &project(&threads), shadow).map_err(TowerError::Chain)?;
                threads.remove(*pos);
            }
        }
    }
    Ok(threads)
}

/// Lifts a stage-`r` homotopy to thread points at depth `depth`, with
/// specified endpoint threads, splicing the produced final lift into the
/// requested one through zero-distance projections.
pub fn lift_homotopy_with_endpoints<S: Scalar>(
    tower: &Tower<S>,
    r: usize,
    homotopy: &Homotopy<S>,
    depth: usize,
    endpoints: Option<(ThreadPoint, ThreadPoint)>,
    final_lift: Option<Vec<ThreadPoint>>,
) -> Result<ThreadHomotopy<S>, TowerError> {
    tower.check_stage(r)?;
    tower.check_stage(depth)?;
    if depth < r {
        return Err(TowerError::StageOrder { r, t: depth });
    }
    let space = tower.stage(r);
    let final_chain = crate::chains::verify_homotopy(space, homotopy)
        .map_err(|e| TowerError::NotAHomotopy(e.to_string()))?;
    let eps = homotopy.start.scale;

    let canonical = |p: usize| tower.canonical_thread_over(r, p, depth);
    let (start_thread, end_thread) = match endpoints {
        Some((a, b)) => (a, b),
        None => (canonical(homotopy.start.first())?, canonical(homotopy.start.last())?),
    };
    for (tp, expected) in [
        (&start_thread, homotopy.start.first()),
        (&end_thread, homotopy.start.last()),
    ] {
        tower.check_thread(tp)?;
        if tp.depth() != depth {
            return Err(TowerError::InconsistentThread { stage: tp.depth() });
        }
        if tp.at_stage(r) != expected {
            return Err(TowerError::ThreadProjection {
                stage: r,
                expected,
                found: tp.at_stage(r),
            });
        }
    }

    // Lift of the start chain: specified endpoints, canonical interior.
    let mut threads: Vec<ThreadPoint> = Vec::with_capacity(homotopy.start.len());
    for (i, &p) in homotopy.start.points.iter().enumerate() {
        if i == 0 {
            threads.push(start_thread.clone());
        } else if i == homotopy.start.len() - 1 {
            threads.push(end_thread.clone());
        } else {
            threads.push(canonical(p)?);
        }
    }
    let start_threads = threads.clone();
    let mut moves: Vec<ThreadMove> = Vec::new();

    // Replay each basic move with a canonical thread over inserted points.
    for &mv in &homotopy.moves {
        match mv {
            BasicMove::Insert { pos, point } => {
                let thread = canonical(point)?;
                threads.insert(pos, thread.clone());
                moves.push(ThreadMove::Insert { pos, thread });
            }
            BasicMove::Remove { pos } => {
                threads.remove(pos);
                moves.push(ThreadMove::Remove { pos });
            }
        }
    }

    // Splice the produced final lift into the requested one: insert the
    // target thread against its zero-distance projection, drop ours.
    if let Some(target) = final_lift {
        if target.len() != final_chain.len() {
            return Err(TowerError::NotAHomotopy(format!(
                "final lift has {} threads, final chain has {} points",
                target.len(),
                final_chain.len()
            )));
        }
        for (i, tp) in target.iter().enumerate() {
            tower.check_thread(tp)?;
            if tp.at_stage(r) != final_chain.points[i] {
                return Err(TowerError::ThreadProjection {
                    stage: r,
                    expected: final_chain.points[i],
                    found: tp.at_stage(r),
                });
            }
        }
        if !target.is_empty() {
            if target[0] != threads[0] || target[target.len() - 1] != threads[threads.len() - 1] {
                return Err(TowerError::InconsistentThread { stage: r });
            }
            for i in 1..target.len().saturating_sub(1) {
                if threads[i] == target[i] {
                    continue;
                }
                threads.insert(i, target[i].clone());
                moves.push(ThreadMove::Insert { pos: i, thread: target[i].clone() });
                threads.remove(i + 1);
                moves.push(ThreadMove::Remove { pos: i + 1 });
            }
        }
    }

    let lifted = ThreadHomotopy {
        entourage: EntourageSpec { stage: r, scale: eps },
        start: start_threads,
        moves,
    };
    // The construction is legal by the projection rule; replay to be sure.
    verify_thread_homotopy(tower, &lifted)?;
    Ok(lifted)
}
