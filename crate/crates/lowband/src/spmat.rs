//! Sparsity patterns, sparsity classes and degeneracy.
//!
//! A [`Pattern`] is the set of positions of an `n x n` matrix that are
//! allowed to be nonzero. The classes, each with parameter `d`:
//!
//! * `US(d)`: at most `d` nonzeros in every row and every column;
//! * `RS(d)`: at most `d` per row;
//! * `CS(d)`: at most `d` per column;
//! * `BD(d)`: `d`-degenerate, i.e. the matrix empties by repeatedly deleting
//!   a row or column that currently has at most `d` nonzeros;
//! * `AS(d)`: at most `d * n` nonzeros in total (equality allowed);
//! * `GM`: unrestricted.
//!
//! `US(d)` implies `RS(d)` and `CS(d)`, each of which implies `BD(d)`, and
//! `AS(d)` implies `GM`. A `BD(d)` pattern can hold up to `2dn` nonzeros
//! (`dn` deleted as rows plus `dn` as columns), so it is contained in
//! `AS(2d)` but not necessarily in `AS(d)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::algebra::{Element, Semiring};

/// Sorted, duplicate-free set of admissible nonzero positions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pattern {
    n: usize,
    nz: Vec<(u32, u32)>,
}

#[derive(Debug, PartialEq, Eq)]
pub enum PatternError {
    IndexOutOfRange { pos: (u32, u32), n: usize },
    Duplicate { pos: (u32, u32) },
    NotDegenerate { d: usize, stuck_at: usize },
    ValueOutsidePattern { pos: (u32, u32) },
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::IndexOutOfRange { pos, n } => {
                write!(f, "position ({}, {}) out of range for n = {n}", pos.0, pos.1)
            }
            PatternError::Duplicate { pos } => {
                write!(f, "duplicate position ({}, {})", pos.0, pos.1)
            }
            PatternError::NotDegenerate { d, stuck_at } => write!(
                f,
                "pattern is not {d}-degenerate: elimination stuck with {stuck_at} nonzeros left"
            ),
            PatternError::ValueOutsidePattern { pos } => {
                write!(f, "value at ({}, {}) lies outside the pattern", pos.0, pos.1)
            }
        }
    }
}

impl std::error::Error for PatternError {}

impl Pattern {
    /// Builds a pattern from arbitrary-order positions; rejects duplicates
    /// and out-of-range indices.
    pub fn new(n: usize, positions: impl IntoIterator<Item = (u32, u32)>) -> Result<Pattern, PatternError> {
        let mut nz: Vec<(u32, u32)> = positions.into_iter().collect();
        nz.sort_unstable();
        for w in nz.windows(2) {
            if w[0] == w[1] {
                return Err(PatternError::Duplicate { pos: w[0] });
            }
        }
        for &(i, j) in &nz {
            if i as usize >= n || j as usize >= n {
                return Err(PatternError::IndexOutOfRange { pos: (i, j), n });
            }
        }
        Ok(Pattern { n, nz })
    }

    pub fn empty(n: usize) -> Pattern {
        Pattern { n, nz: Vec::new() }
    }

    pub fn full(n: usize) -> Pattern {
        let mut nz = Vec::with_capacity(n * n);
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                nz.push((i, j));
            }
        }
        Pattern { n, nz }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nz.is_empty()
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.nz.binary_search(&(i, j)).is_ok()
    }

    /// Positions in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.nz.iter().copied()
    }

    pub fn row_counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.n];
        for &(i, _) in &self.nz {
            c[i as usize] += 1;
        }
        c
    }

    pub fn col_counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.n];
        for &(_, j) in &self.nz {
            c[j as usize] += 1;
        }
        c
    }

    /// Column indices of row `i`, ascending.
    pub fn row(&self, i: u32) -> Vec<u32> {
        let start = self.nz.partition_point(|&p| p < (i, 0));
        self.nz[start..]
            .iter()
            .take_while(|&&(r, _)| r == i)
            .map(|&(_, j)| j)
            .collect()
    }

    /// Row indices of column `j`, ascending. Linear scan; fine at this scale.
    pub fn col(&self, j: u32) -> Vec<u32> {
        self.nz
            .iter()
            .filter(|&&(_, c)| c == j)
            .map(|&(i, _)| i)
            .collect()
    }
}

/// The sparsity classes; the parameter `d` is supplied at classification time.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum SparsityClass {
    Us,
    Rs,
    Cs,
    Bd,
    As,
    Gm,
}

impl SparsityClass {
    pub fn token(&self) -> &'static str {
        match self {
            SparsityClass::Us => "US",
            SparsityClass::Rs => "RS",
            SparsityClass::Cs => "CS",
            SparsityClass::Bd => "BD",
            SparsityClass::As => "AS",
            SparsityClass::Gm => "GM",
        }
    }

    pub fn from_token(tok: &str) -> Option<SparsityClass> {
        match tok.to_ascii_uppercase().as_str() {
            "US" => Some(SparsityClass::Us),
            "RS" => Some(SparsityClass::Rs),
            "CS" => Some(SparsityClass::Cs),
            "BD" => Some(SparsityClass::Bd),
            "AS" => Some(SparsityClass::As),
            "GM" => Some(SparsityClass::Gm),
            _ => None,
        }
    }
}

impl fmt::Display for SparsityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Tests membership of `p` in one class at parameter `d`.
pub fn is_member(p: &Pattern, class: SparsityClass, d: usize) -> bool {
    match class {
        SparsityClass::Us => {
            p.row_counts().iter().all(|&c| c <= d) && p.col_counts().iter().all(|&c| c <= d)
        }
        SparsityClass::Rs => p.row_counts().iter().all(|&c| c <= d),
        SparsityClass::Cs => p.col_counts().iter().all(|&c| c <= d),
        SparsityClass::Bd => degeneracy(p).degeneracy <= d,
        SparsityClass::As => p.len() <= d * p.n(),
        SparsityClass::Gm => true,
    }
}

/// All classes `p` belongs to at parameter `d`, by the definitions above.
pub fn classify(p: &Pattern, d: usize) -> BTreeSet<SparsityClass> {
    let mut out = BTreeSet::new();
    for class in [
        SparsityClass::Us,
        SparsityClass::Rs,
        SparsityClass::Cs,
        SparsityClass::Bd,
        SparsityClass::As,
        SparsityClass::Gm,
    ] {
        if is_member(p, class, d) {
            out.insert(class);
        }
    }
    out
}

/// One eliminated line: a row or a column.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Line {
    Row(u32),
    Col(u32),
}

/// Result of greedy elimination: the degeneracy and a witnessing order.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub degeneracy: usize,
    pub order: Vec<Line>,
}

/// Computes the degeneracy by minimum-degree peeling of the bipartite
/// row/column graph. Peeling is exact for degeneracy; ties prefer rows over
/// columns and then the lowest index, so the order is deterministic.
pub fn degeneracy(p: &Pattern) -> Elimination {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = p.n();
    // Line ids: rows are 0..n, columns are n..2n. Ordering by id realizes
    // the tie-break (rows first, then lowest index).
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); 2 * n];
    for (i, j) in p.iter() {
        adj[i as usize].push(n as u32 + j);
        adj[n + j as usize].push(i);
    }
    let mut deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; 2 * n];
    let mut heap: BinaryHeap<Reverse<(usize, u32)>> = (0..2 * n)
        .map(|line| Reverse((deg[line], line as u32)))
        .collect();
    let mut order = Vec::with_capacity(2 * n);
    let mut degen = 0usize;
    for _ in 0..2 * n {
        let line = loop {
            let Reverse((dg, cand)) = heap.pop().expect("a live line remains");
            // Entries go stale when degrees drop; skip them.
            if alive[cand as usize] && deg[cand as usize] == dg {
                break cand;
            }
        };
        alive[line as usize] = false;
        degen = degen.max(deg[line as usize]);
        order.push(if (line as usize) < n {
            Line::Row(line)
        } else {
            Line::Col(line - n as u32)
        });
        for &other in &adj[line as usize] {
            let o = other as usize;
            if alive[o] {
                deg[o] -= 1;
                heap.push(Reverse((deg[o], other)));
            }
        }
    }
    Elimination { degeneracy: degen, order }
}

/// Splits a pattern into a row-sparse and a column-sparse part by threshold
/// elimination in alternating phases: delete every row with at most `d`
/// current nonzeros, then every such column, and repeat. Nonzeros deleted
/// with a row go to the RS part, with a column to the CS part.
pub fn bd_split_pattern(p: &Pattern, d: usize) -> Result<(Pattern, Pattern), PatternError> {
    let n = p.n();
    let mut row_nz: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    let mut col_nz: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for (i, j) in p.iter() {
        row_nz[i as usize].insert(j);
        col_nz[j as usize].insert(i);
    }
    let mut rs = Vec::new();
    let mut cs = Vec::new();
    let mut remaining = p.len();
    // Alternate whole phases: every currently sparse row, then every
    // currently sparse column. Deleting rows only lowers column degrees and
    // vice versa, so a phase never feeds itself, and a d-degenerate pattern
    // always offers a sparse line to one side or the other.
    while remaining > 0 {
        let mut progress = false;
        let rows: Vec<usize> =
            (0..n).filter(|&i| !row_nz[i].is_empty() && row_nz[i].len() <= d).collect();
        for i in rows {
            progress = true;
            for j in std::mem::take(&mut row_nz[i]) {
                rs.push((i as u32, j));
                col_nz[j as usize].remove(&(i as u32));
                remaining -= 1;
            }
        }
        let cols: Vec<usize> =
            (0..n).filter(|&j| !col_nz[j].is_empty() && col_nz[j].len() <= d).collect();
        for j in cols {
            progress = true;
            for i in std::mem::take(&mut col_nz[j]) {
                cs.push((i, j as u32));
                row_nz[i as usize].remove(&(j as u32));
                remaining -= 1;
            }
        }
        if !progress {
            return Err(PatternError::NotDegenerate { d, stuck_at: remaining });
        }
    }
    Ok((Pattern::new(n, rs)?, Pattern::new(n, cs)?))
}

/// A pattern with values attached to a subset of its positions; absent
/// positions are semiring zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pattern: Pattern,
    values: HashMap<(u32, u32), Element>,
}

impl SparseMatrix {
    pub fn new(
        pattern: Pattern,
        values: impl IntoIterator<Item = ((u32, u32), Element)>,
    ) -> Result<SparseMatrix, PatternError> {
        let values: HashMap<(u32, u32), Element> = values.into_iter().collect();
        for &(i, j) in values.keys() {
            if !pattern.contains(i, j) {
                return Err(PatternError::ValueOutsidePattern { pos: (i, j) });
            }
        }
        Ok(SparseMatrix { pattern, values })
    }

    pub fn zero(n: usize) -> SparseMatrix {
        SparseMatrix { pattern: Pattern::empty(n), values: HashMap::new() }
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }

    /// Value at a position, or `zero` if absent.
    pub fn get(&self, sr: &Semiring, i: u32, j: u32) -> Element {
        self.values.get(&(i, j)).copied().unwrap_or_else(|| sr.zero())
    }

    pub fn get_raw(&self, i: u32, j: u32) -> Option<Element> {
        self.values.get(&(i, j)).copied()
    }

    /// Entries in pattern order; positions without a stored value are skipped.
    pub fn entries(&self) -> impl Iterator<Item = ((u32, u32), Element)> + '_ {
        self.pattern
            .iter()
            .filter_map(move |pos| self.values.get(&pos).map(|&v| (pos, v)))
    }

    /// Restricts the matrix to the positions of `sub` (which must be a subset
    /// of the pattern), carrying values along.
    pub fn restrict(&self, sub: Pattern) -> Result<SparseMatrix, PatternError> {
        let mut values = HashMap::new();
        for pos in sub.iter() {
            if !self.pattern.contains(pos.0, pos.1) {
                return Err(PatternError::ValueOutsidePattern { pos });
            }
            if let Some(&v) = self.values.get(&pos) {
                values.insert(pos, v);
            }
        }
        Ok(SparseMatrix { pattern: sub, values })
    }
}

/// Splits a matrix along [`bd_split_pattern`], carrying values with their
/// positions. Every nonzero lands in exactly one part.
pub fn bd_split(m: &SparseMatrix, d: usize) -> Result<(SparseMatrix, SparseMatrix), PatternError> {
    let (rs, cs) = bd_split_pattern(m.pattern(), d)?;
    Ok((m.restrict(rs)?, m.restrict(cs)?))
}
