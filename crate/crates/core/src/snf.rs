//! Smith normal form over exact 64-bit integers with overflow checking.
//!
//! Used for first homology (betti number and torsion of the relator
//! cokernel), for rowspace membership tests backing non-nullity
//! certificates, and for lattice membership in refining checks. Arithmetic
//! is checked: overflow is an error, never a silent wraparound.
//!
//! The elimination runs in two phases. Phase one retires unit pivots with a
//! fill-minimizing heuristic, which covers nearly everything arising from
//! triangle relators (entries start in {-1, 0, 1}). Phase two runs the
//! textbook dense algorithm with divisibility fixups on whatever small
//! residual remains.

use std::collections::{BinaryHeap, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnfError {
    #[error("integer overflow during Smith normal form elimination")]
    Overflow,
}

fn cadd(a: i64, b: i64) -> Result<i64, SnfError> {
    a.checked_add(b).ok_or(SnfError::Overflow)
}

fn cmul(a: i64, b: i64) -> Result<i64, SnfError> {
    a.checked_mul(b).ok_or(SnfError::Overflow)
}

/// Outcome of an elimination: pivot columns with their diagonal values, in
/// retirement order. Values are positive and, taken in sorted order, form a
/// divisibility chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnfOutcome {
    /// `(original column id, diagonal value)` per pivot.
    pub pivots: Vec<(usize, i64)>,
    pub ncols: usize,
}

impl SnfOutcome {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Diagonal values sorted ascending; torsion is the subset above 1.
    pub fn diagonal(&self) -> Vec<i64> {
        let mut d: Vec<i64> = self.pivots.iter().map(|&(_, v)| v).collect();
        d.sort_unstable();
        d
    }

    pub fn torsion(&self) -> Vec<i64> {
        self.diagonal().into_iter().filter(|&d| d > 1).collect()
    }

    /// Tests whether a carried (already column-transformed) vector lies in
    /// the rowspace, and returns its residue coordinates: entries reduced
    /// mod the pivot diagonal on pivot columns, raw elsewhere. The vector is
    /// a member iff the residue is identically zero.
    pub fn residue(&self, carried: &[i64]) -> Vec<i64> {
        let mut out = carried.to_vec();
        for &(col, d) in &self.pivots {
            out[col] = out[col].rem_euclid(d);
        }
        out
    }
}

struct Workspace {
    rows: Vec<HashMap<usize, i64>>,
    cols: Vec<HashSet<usize>>,
    live_row: Vec<bool>,
    carried: Vec<Vec<i64>>,
}

impl Workspace {
    fn row_nnz(&self, r: usize) -> usize {
        self.rows[r].len()
    }

    /// rows[dst] -= m * rows[src]
    fn row_axpy(&mut self, dst: usize, src: usize, m: i64) -> Result<(), SnfError> {
        if m == 0 {
            return Ok(());
        }
        let src_entries: Vec<(usize, i64)> = self.rows[src].iter().map(|(&c, &v)| (c, v)).collect();
        for (c, v) in src_entries {
            let delta = cmul(m, v)?;
            let cur = self.rows[dst].get(&c).copied().unwrap_or(0);
            let new = cadd(cur, -delta)?;
            if new == 0 {
                self.rows[dst].remove(&c);
                self.cols[c].remove(&dst);
            } else {
                if cur == 0 {
                    self.cols[c].insert(dst);
                }
                self.rows[dst].insert(c, new);
            }
        }
        Ok(())
    }

    /// col[dst] -= m * col[src], applied to the matrix and carried vectors.
    fn col_axpy(&mut self, dst: usize, src: usize, m: i64) -> Result<(), SnfError> {
        if m == 0 {
            return Ok(());
        }
        let touching: Vec<usize> = self.cols[src].iter().copied().collect();
        for r in touching {
            let v = self.rows[r][&src];
            let delta = cmul(m, v)?;
            let cur = self.rows[r].get(&dst).copied().unwrap_or(0);
            let new = cadd(cur, -delta)?;
            if new == 0 {
                self.rows[r].remove(&dst);
                self.cols[dst].remove(&r);
            } else {
                if cur == 0 {
                    self.cols[dst].insert(r);
                }
                self.rows[r].insert(dst, new);
            }
        }
        for w in &mut self.carried {
            let delta = cmul(m, w[src])?;
            w[dst] = cadd(w[dst], -delta)?;
        }
        Ok(())
    }

    fn negate_row(&mut self, r: usize) {
        for v in self.rows[r].values_mut() {
            *v = -*v;
        }
    }

    fn retire_row(&mut self, r: usize) {
        self.live_row[r] = false;
        let entries: Vec<usize> = self.rows[r].keys().copied().collect();
        for c in entries {
            self.cols[c].remove(&r);
        }
        self.rows[r].clear();
    }
}

/// Runs the elimination. `rows` are sparse `(column, value)` lists; zero
/// values are tolerated and ignored. `carried` vectors are transformed by
/// every column operation, so that rowspace membership of the originals can
/// be read off the outcome via [`SnfOutcome::residue`].
pub fn smith_normal_form(
    rows: &[Vec<(usize, i64)>],
    ncols: usize,
    carried: Vec<Vec<i64>>,
) -> Result<(SnfOutcome, Vec<Vec<i64>>), SnfError> {
    for w in &carried {
        assert_eq!(w.len(), ncols, "carried vector length must match column count");
    }
    let nrows = rows.len();
    let mut ws = Workspace {
        rows: vec![HashMap::new(); nrows],
        cols: vec![HashSet::new(); ncols],
        live_row: vec![true; nrows],
        carried,
    };
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            if v != 0 {
                let cur = ws.rows[r].get(&c).copied().unwrap_or(0);
                let new = cadd(cur, v)?;
                if new == 0 {
                    ws.rows[r].remove(&c);
                    ws.cols[c].remove(&r);
                } else {
                    ws.rows[r].insert(c, new);
                    ws.cols[c].insert(r);
                }
            }
        }
    }

    let mut pivots: Vec<(usize, i64)> = Vec::new();
    let mut col_live = vec![true; ncols];

    // Phase one: unit pivots, smallest rows first (lazy heap).
    let mut heap: BinaryHeap<std::cmp::Reverse<(usize, usize)>> = BinaryHeap::new();
    for r in 0..nrows {
        if !ws.rows[r].is_empty() {
            heap.push(std::cmp::Reverse((ws.row_nnz(r), r)));
        }
    }
    while let Some(std::cmp::Reverse((nnz, r))) = heap.pop() {
        if !ws.live_row[r] || ws.rows[r].is_empty() {
            continue;
        }
        if ws.row_nnz(r) != nnz {
            heap.push(std::cmp::Reverse((ws.row_nnz(r), r)));
            continue;
        }
        // Unit entry with the emptiest column.
        let pick = ws.rows[r]
            .iter()
            .filter(|&(_, &v)| v == 1 || v == -1)
            .min_by_key(|&(&c, _)| (ws.cols[c].len(), c))
            .map(|(&c, &v)| (c, v));
        let Some((c, v)) = pick else {
            // No unit entry; leave for phase two. Touched rows re-enter the
            // heap below, so nothing is lost.
            continue;
        };
        if v == -1 {
            ws.negate_row(r);
        }
        // Clear the pivot column.
        let others: Vec<usize> = ws.cols[c].iter().copied().filter(|&x| x != r).collect();
        for other in others {
            let m = ws.rows[other][&c];
            ws.row_axpy(other, r, m)?;
            if ws.live_row[other] && !ws.rows[other].is_empty() {
                heap.push(std::cmp::Reverse((ws.row_nnz(other), other)));
            }
        }
        // Clear the pivot row; the column now touches only row r, so each
        // column op costs one matrix update plus carried updates.
        let row_entries: Vec<(usize, i64)> = ws.rows[r].iter().map(|(&j, &v)| (j, v)).filter(|&(j, _)| j != c).collect();
        for (j, v) in row_entries {
            ws.col_axpy(j, c, v)?;
        }
        debug_assert_eq!(ws.rows[r].len(), 1);
        pivots.push((c, 1));
        col_live[c] = false;
        ws.retire_row(r);
    }

    // Phase two: dense SNF on the residual.
    let residual_rows: Vec<usize> = (0..nrows).filter(|&r| ws.live_row[r] && !ws.rows[r].is_empty()).collect();
    if !residual_rows.is_empty() {
        let live_cols: Vec<usize> = (0..ncols).filter(|&c| col_live[c] && !ws.cols[c].is_empty()).collect();
        let col_pos: HashMap<usize, usize> = live_cols.iter().enumerate().map(|(p, &c)| (c, p)).collect();
        let m = residual_rows.len();
        let n = live_cols.len();
        let mut a = vec![vec![0i64; n]; m];
        for (ri, &r) in residual_rows.iter().enumerate() {
            for (&c, &v) in &ws.rows[r] {
                a[ri][col_pos[&c]] = v;
            }
        }
        let mut col_ids = live_cols.clone();
        dense_snf(&mut a, &mut col_ids, &mut ws.carried, &mut pivots)?;
    }

    Ok((SnfOutcome { pivots, ncols }, ws.carried))
}

/// Textbook SNF on a small dense residual. Column arithmetic is mirrored
/// onto the carried vectors through original column ids; swaps only
/// relabel positions and need no mirror.
fn dense_snf(
    a: &mut Vec<Vec<i64>>,
    col_ids: &mut Vec<usize>,
    carried: &mut [Vec<i64>],
    pivots: &mut Vec<(usize, i64)>,
) -> Result<(), SnfError> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut k = 0usize;
    while k < m && k < n {
        // Smallest nonzero entry in the k.. block.
        let mut best: Option<(usize, usize)> = None;
        for i in k..m {
            for j in k..n {
                if a[i][j] != 0 && best.map_or(true, |(bi, bj)| a[i][j].unsigned_abs() < a[bi][bj].unsigned_abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        col_ids.swap(k, pj);
        if a[k][k] < 0 {
            for row in a.iter_mut() {
                row[k] = -row[k];
            }
            for w in carried.iter_mut() {
                w[col_ids[k]] = -w[col_ids[k]];
            }
        }
        let p = a[k][k];
        let mut clean = true;
        for i in (k + 1)..m {
            if a[i][k] % p != 0 {
                clean = false;
            }
            let q = a[i][k] / p;
            if q != 0 {
                for j in k..n {
                    a[i][j] = cadd(a[i][j], -cmul(q, a[k][j])?)?;
                }
            }
        }
        for j in (k + 1)..n {
            if a[k][j] % p != 0 {
                clean = false;
            }
            let q = a[k][j] / p;
            if q != 0 {
                for i in k..m {
                    a[i][j] = cadd(a[i][j], -cmul(q, a[i][k])?)?;
                }
                let (src, dst) = (col_ids[k], col_ids[j]);
                for w in carried.iter_mut() {
                    let delta = cmul(q, w[src])?;
                    w[dst] = cadd(w[dst], -delta)?;
                }
            }
        }
        if !clean {
            continue;
        }
        let col_zero = ((k + 1)..m).all(|i| a[i][k] == 0);
        let row_zero = ((k + 1)..n).all(|j| a[k][j] == 0);
        if !(col_zero && row_zero) {
            continue;
        }
        // Pull in any entry the pivot does not divide, then redo.
        let mut offender = None;
        'outer: for i in (k + 1)..m {
            for j in (k + 1)..n {
                if a[i][j] % p != 0 {
                    offender = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = offender {
            for j in k..n {
                a[k][j] = cadd(a[k][j], a[i][j])?;
            }
            continue;
        }
        pivots.push((col_ids[k], p));
        k += 1;
    }
    Ok(())
}

/// First homology data of a presented group's abelianization: the cokernel
/// of the relator matrix on generator coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homology1 {
    pub betti: usize,
    pub torsion: Vec<i64>,
}

/// Betti number and torsion from sparse abelianized relator rows.
pub fn homology_from_relators(
    relator_rows: &[Vec<(usize, i64)>],
    ngens: usize,
) -> Result<Homology1, SnfError> {
    let (outcome, _) = smith_normal_form(relator_rows, ngens, Vec::new())?;
    Ok(Homology1 { betti: ngens - outcome.rank(), torsion: outcome.torsion() })
}

/// Rowspace membership oracle reusable across many queries: carries the
/// identity through the elimination so later vectors can be transformed on
/// demand.
#[derive(Debug, Clone)]
pub struct RowspaceTester {
    outcome: SnfOutcome,
    // Row i is the image of basis vector e_i under the column transform.
    transform: Vec<Vec<i64>>,
    ncols: usize,
}

impl RowspaceTester {
    pub fn new(rows: &[Vec<(usize, i64)>], ncols: usize) -> Result<Self, SnfError> {
        let identity: Vec<Vec<i64>> = (0..ncols)
            .map(|i| {
                let mut e = vec![0i64; ncols];
                e[i] = 1;
                e
            })
            .collect();
        let (outcome, transform) = smith_normal_form(rows, ncols, identity)?;
        Ok(RowspaceTester { outcome, transform, ncols })
    }

    pub fn outcome(&self) -> &SnfOutcome {
        &self.outcome
    }

    /// Residue of `w` against the rowspace; zero iff `w` is a member.
    pub fn residue(&self, w: &[i64]) -> Result<Vec<i64>, SnfError> {
        assert_eq!(w.len(), self.ncols);
        let mut transformed = vec![0i64; self.ncols];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0 {
                continue;
            }
            for (j, &t) in self.transform[i].iter().enumerate() {
                if t != 0 {
                    transformed[j] = cadd(transformed[j], cmul(wi, t)?)?;
                }
            }
        }
        Ok(self.outcome.residue(&transformed))
    }

    pub fn contains(&self, w: &[i64]) -> Result<bool, SnfError> {
        Ok(self.residue(w)?.iter().all(|&x| x == 0))
    }
}
