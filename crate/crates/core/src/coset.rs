//! Coset enumeration of the trivial subgroup in a finite presentation.
//!
//! Scan-and-fill strategy with lazy coincidence handling: table entries may
//! reference merged cosets and are canonicalized through a union-find on
//! every read. Enumeration closes exactly when the presented group is
//! finite and the budget suffices; the budget is measured in defined
//! cosets.

use crate::presentation::Word;
use std::collections::VecDeque;

/// A closed table: row per group element, column per signed generator.
#[derive(Debug, Clone)]
pub struct CosetTable {
    ngens: usize,
    rows: Vec<Vec<usize>>,
}

impl CosetTable {
    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    fn col(letter: i32) -> usize {
        let g = (letter.unsigned_abs() as usize) - 1;
        if letter > 0 {
            2 * g
        } else {
            2 * g + 1
        }
    }

    pub fn step(&self, coset: usize, letter: i32) -> usize {
        self.rows[coset][Self::col(letter)]
    }

    pub fn trace(&self, from: usize, word: &Word) -> usize {
        word.letters().iter().fold(from, |c, &l| self.step(c, l))
    }

    /// Representative words, one per coset, via breadth-first search from
    /// the identity in ascending letter order.
    pub fn representatives(&self) -> Vec<Word> {
        let mut reps: Vec<Option<Word>> = vec![None; self.rows.len()];
        reps[0] = Some(Word::empty());
        let mut queue = VecDeque::from([0usize]);
        let letters: Vec<i32> = (1..=self.ngens as i32).flat_map(|g| [g, -g]).collect();
        while let Some(c) = queue.pop_front() {
            let base = reps[c].clone().unwrap();
            for &l in &letters {
                let d = self.step(c, l);
                if reps[d].is_none() {
                    reps[d] = Some(base.concat(&Word::from_letters([l])));
                    queue.push_back(d);
                }
            }
        }
        reps.into_iter().map(|r| r.expect("table is connected")).collect()
    }
}

#[derive(Debug, Clone)]
pub enum Enumeration {
    Complete(CosetTable),
    OutOfBudget { defined: usize },
}

struct Enumerator {
    ncols: usize,
    table: Vec<Vec<Option<usize>>>,
    rep: Vec<usize>,
    live: Vec<bool>,
    defined: usize,
    pending: VecDeque<(usize, usize)>,
}

impl Enumerator {
    fn find(&mut self, mut c: usize) -> usize {
        let mut root = c;
        while self.rep[root] != root {
            root = self.rep[root];
        }
        while self.rep[c] != root {
            let next = self.rep[c];
            self.rep[c] = root;
            c = next;
        }
        root
    }

    fn lookup(&mut self, c: usize, x: usize) -> Option<usize> {
        let c = self.find(c);
        match self.table[c][x] {
            Some(d) => {
                let d = self.find(d);
                self.table[c][x] = Some(d);
                Some(d)
            }
            None => None,
        }
    }

    fn inv(x: usize) -> usize {
        x ^ 1
    }

    fn define(&mut self, c: usize, x: usize) -> usize {
        let c = self.find(c);
        let n = self.table.len();
        self.table.push(vec![None; self.ncols]);
        self.rep.push(n);
        self.live.push(true);
        self.defined += 1;
        self.table[c][x] = Some(n);
        self.table[n][Self::inv(x)] = Some(c);
        n
    }

    /// Records `c · x = d`, queueing a coincidence on conflict.
    fn deduce(&mut self, c: usize, x: usize, d: usize) {
        let c = self.find(c);
        let d = self.find(d);
        match self.lookup(c, x) {
            None => {
                self.table[c][x] = Some(d);
                match self.lookup(d, Self::inv(x)) {
                    None => self.table[d][Self::inv(x)] = Some(c),
                    Some(e) if e == c => {}
                    Some(e) => self.pending.push_back((e, c)),
                }
            }
            Some(e) if e == d => {}
            Some(e) => self.pending.push_back((e, d)),
        }
        self.process_coincidences();
    }

    fn process_coincidences(&mut self) {
        while let Some((a, b)) = self.pending.pop_front() {
            let a = self.find(a);
            let b = self.find(b);
            if a == b {
                continue;
            }
            let (keep, lose) = (a.min(b), a.max(b));
            self.rep[lose] = keep;
            self.live[lose] = false;
            for x in 0..self.ncols {
                if let Some(t) = self.table[lose][x] {
                    self.table[lose][x] = None;
                    let t = self.find(t);
                    match self.lookup(keep, x) {
                        None => {
                            self.table[keep][x] = Some(t);
                            match self.lookup(t, Self::inv(x)) {
                                None => self.table[t][Self::inv(x)] = Some(keep),
                                Some(e) if e == keep => {}
                                Some(e) => self.pending.push_back((e, keep)),
                            }
                        }
                        Some(u) if u == t => {}
                        Some(u) => self.pending.push_back((u, t)),
                    }
                }
            }
        }
    }

    /// Scans a relator at a coset, filling the gap with fresh cosets.
    fn scan_and_fill(&mut self, c: usize, cols: &[usize]) {
        let c = self.find(c);
        if cols.is_empty() {
            return;
        }
        loop {
            let c = self.find(c);
            let mut f = c;
            let mut i = 0;
            while i < cols.len() {
                match self.lookup(f, cols[i]) {
                    Some(n) => {
                        f = n;
                        i += 1;
                    }
                    None => break,
                }
            }
            if i == cols.len() {
                if f != c {
                    self.pending.push_back((f, c));
                    self.process_coincidences();
                }
                return;
            }
            let mut b = c;
            let mut j = cols.len();
            while j > i + 1 {
                match self.lookup(b, Self::inv(cols[j - 1])) {
                    Some(n) => {
                        b = n;
                        j -= 1;
                    }
                    None => break,
                }
            }
            if j == i + 1 {
                // One gap: a deduction closes the scan.
                self.deduce(f, cols[i], b);
                return;
            }
            // Fill the first gap and rescan.
            self.define(f, cols[i]);
        }
    }
}

/// Enumerates cosets of the trivial subgroup. `max_cosets` bounds the
/// number of definitions, dead or alive.
pub fn enumerate_trivial(ngens: usize, relators: &[Word], max_cosets: usize) -> Enumeration {
    if ngens == 0 {
        return Enumeration::Complete(CosetTable { ngens, rows: vec![Vec::new()] });
    }
    // A free presentation on at least one generator never closes.
    if relators.iter().all(|r| r.is_empty()) {
        return Enumeration::OutOfBudget { defined: 1 };
    }
    let ncols = 2 * ngens;
    let mut e = Enumerator {
        ncols,
        table: vec![vec![None; ncols]],
        rep: vec![0],
        live: vec![true],
        defined: 1,
        pending: VecDeque::new(),
    };
    let relator_cols: Vec<Vec<usize>> = relators
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| r.letters().iter().map(|&l| CosetTable::col(l)).collect())
        .collect();

    let mut cursor = 0;
    while cursor < e.table.len() {
        if e.defined > max_cosets {
            return Enumeration::OutOfBudget { defined: e.defined };
        }
        if !e.live[cursor] {
            cursor += 1;
            continue;
        }
        for r in &relator_cols {
            e.scan_and_fill(cursor, r);
            if !e.live[cursor] {
                break;
            }
        }
        if e.live[cursor] {
            for x in 0..ncols {
                if e.lookup(cursor, x).is_none() {
                    e.define(cursor, x);
                }
            }
        }
        cursor += 1;
    }

    // Compact live cosets in discovery order.
    let mut remap: Vec<Option<usize>> = vec![None; e.table.len()];
    let mut order = Vec::new();
    for c in 0..e.table.len() {
        if e.live[c] {
            remap[c] = Some(order.len());
            order.push(c);
        }
    }
    let mut rows = Vec::with_capacity(order.len());
    for &c in &order {
        let row: Vec<usize> = (0..ncols)
            .map(|x| {
                let d = e.lookup(c, x).expect("closed table has no gaps");
                remap[d].expect("canonical cosets are live")
            })
            .collect();
        rows.push(row);
    }
    Enumeration::Complete(CosetTable { ngens, rows })
}
