//! Support instances and triangle structure.
//!
//! A support instance fixes the admissible nonzero positions of `A`, `B` and
//! the output `X`, the runtime values for `A` and `B`, and a placement that
//! says which computer initially holds each input entry and which computer
//! must end up with each output entry.
//!
//! A *triangle* is a triple `{i, j, k}` with `(i, j)` in the support of `A`,
//! `(j, k)` in the support of `B` and `(i, k)` in the support of `X`;
//! processing it means adding `A[i,j] * B[j,k]` into `X[i,k]`. Triangles are
//! the unit of work everywhere downstream, and the counting bounds on them
//! drive the round budgets.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::spmat::{is_member, Pattern, SparseMatrix, SparsityClass};

/// Which of the three matrices an entry belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    A,
    B,
    X,
}

impl Role {
    pub fn token(&self) -> &'static str {
        match self {
            Role::A => "A",
            Role::B => "B",
            Role::X => "X",
        }
    }
}

/// An ordered class triple: the classes claimed for `A`, `B` and `X`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Combo {
    pub a: SparsityClass,
    pub b: SparsityClass,
    pub x: SparsityClass,
}

impl Combo {
    pub fn new(a: SparsityClass, b: SparsityClass, x: SparsityClass) -> Combo {
        Combo { a, b, x }
    }

    /// Parses `US:US:AS` (commas also accepted).
    pub fn from_token(tok: &str) -> Option<Combo> {
        let parts: Vec<&str> = tok.split([':', ',']).collect();
        if parts.len() != 3 {
            return None;
        }
        Some(Combo {
            a: SparsityClass::from_token(parts[0])?,
            b: SparsityClass::from_token(parts[1])?,
            x: SparsityClass::from_token(parts[2])?,
        })
    }

    pub fn classes(&self) -> [SparsityClass; 3] {
        [self.a, self.b, self.x]
    }

    pub fn count(&self, class: SparsityClass) -> usize {
        self.classes().iter().filter(|&&c| c == class).count()
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.a, self.b, self.x)
    }
}

/// Maps every admissible entry of each matrix to the computer that holds it
/// (for `A` and `B`) or must report it (for `X`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    a: HashMap<(u32, u32), u32>,
    b: HashMap<(u32, u32), u32>,
    x: HashMap<(u32, u32), u32>,
}

impl Placement {
    pub fn from_maps(
        a: HashMap<(u32, u32), u32>,
        b: HashMap<(u32, u32), u32>,
        x: HashMap<(u32, u32), u32>,
    ) -> Placement {
        Placement { a, b, x }
    }

    /// Row placement: computer `i` holds row `i`.
    pub fn rows_for(pattern: &Pattern) -> HashMap<(u32, u32), u32> {
        pattern.iter().map(|pos| (pos, pos.0)).collect()
    }

    /// Balanced placement: nonzeros in lexicographic order, chunked evenly
    /// over the `n` computers.
    pub fn balanced_for(pattern: &Pattern) -> HashMap<(u32, u32), u32> {
        let n = pattern.n();
        let chunk = pattern.len().div_ceil(n).max(1);
        pattern
            .iter()
            .enumerate()
            .map(|(idx, pos)| (pos, (idx / chunk) as u32))
            .collect()
    }

    /// Default placement rule. Row placement is the convention whenever a row
    /// fits a computer's budget (`d` in sparse mode, one row's worth in dense
    /// mode); otherwise entries are spread in balanced chunks.
    pub fn auto_for(pattern: &Pattern, d: usize) -> HashMap<(u32, u32), u32> {
        let n = pattern.n();
        let cap = d.max(pattern.len().div_ceil(n).max(1));
        let max_row = pattern.row_counts().into_iter().max().unwrap_or(0);
        if max_row <= cap {
            Self::rows_for(pattern)
        } else {
            Self::balanced_for(pattern)
        }
    }

    pub fn auto(a_hat: &Pattern, b_hat: &Pattern, x_hat: &Pattern, d: usize) -> Placement {
        Placement {
            a: Self::auto_for(a_hat, d),
            b: Self::auto_for(b_hat, d),
            x: Self::auto_for(x_hat, d),
        }
    }

    pub fn owner(&self, role: Role, pos: (u32, u32)) -> Option<u32> {
        match role {
            Role::A => self.a.get(&pos).copied(),
            Role::B => self.b.get(&pos).copied(),
            Role::X => self.x.get(&pos).copied(),
        }
    }

    pub fn map(&self, role: Role) -> &HashMap<(u32, u32), u32> {
        match role {
            Role::A => &self.a,
            Role::B => &self.b,
            Role::X => &self.x,
        }
    }

    pub fn map_mut(&mut self, role: Role) -> &mut HashMap<(u32, u32), u32> {
        match role {
            Role::A => &mut self.a,
            Role::B => &mut self.b,
            Role::X => &mut self.x,
        }
    }

    /// Largest number of entries of any one role on any one computer.
    pub fn max_load(&self, n: usize) -> usize {
        let mut worst = 0;
        for m in [&self.a, &self.b, &self.x] {
            let mut c = vec![0usize; n];
            for &owner in m.values() {
                c[owner as usize] += 1;
            }
            worst = worst.max(c.iter().copied().max().unwrap_or(0));
        }
        worst
    }
}

#[derive(Debug)]
pub enum SupportError {
    SizeMismatch,
    PlacementIncomplete { role: Role, pos: (u32, u32) },
    PlacementForeign { role: Role, pos: (u32, u32) },
    PlacementOutOfRange { role: Role, pos: (u32, u32), owner: u32 },
    ClassMismatch { role: Role, class: SparsityClass, d: usize },
}

impl fmt::Display for SupportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportError::SizeMismatch => write!(f, "patterns disagree on n"),
            SupportError::PlacementIncomplete { role, pos } => {
                write!(f, "no owner for {} entry ({}, {})", role.token(), pos.0, pos.1)
            }
            SupportError::PlacementForeign { role, pos } => write!(
                f,
                "placement names {} entry ({}, {}) outside the support",
                role.token(),
                pos.0,
                pos.1
            ),
            SupportError::PlacementOutOfRange { role, pos, owner } => write!(
                f,
                "{} entry ({}, {}) assigned to nonexistent computer {}",
                role.token(),
                pos.0,
                pos.1,
                owner
            ),
            SupportError::ClassMismatch { role, class, d } => write!(
                f,
                "pattern of {} is not {}({})",
                role.token(),
                class.token(),
                d
            ),
        }
    }
}

impl std::error::Error for SupportError {}

/// A full problem instance: supports, input values and placement.
#[derive(Clone, Debug)]
pub struct SupportInstance {
    pub d: usize,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub x_hat: Pattern,
    pub placement: Placement,
}

/// The value-free view of an instance. Communication schedules are built
/// from a `Shape` alone, which keeps them oblivious to runtime values by
/// construction.
#[derive(Clone, Copy)]
pub struct Shape<'a> {
    pub n: usize,
    pub d: usize,
    pub a_hat: &'a Pattern,
    pub b_hat: &'a Pattern,
    pub x_hat: &'a Pattern,
    pub placement: &'a Placement,
}

impl SupportInstance {
    pub fn new(
        d: usize,
        a: SparseMatrix,
        b: SparseMatrix,
        x_hat: Pattern,
        placement: Placement,
    ) -> Result<SupportInstance, SupportError> {
        let inst = SupportInstance { d, a, b, x_hat, placement };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn a_hat(&self) -> &Pattern {
        self.a.pattern()
    }

    pub fn b_hat(&self) -> &Pattern {
        self.b.pattern()
    }

    pub fn shape(&self) -> Shape<'_> {
        Shape {
            n: self.n(),
            d: self.d,
            a_hat: self.a_hat(),
            b_hat: self.b_hat(),
            x_hat: &self.x_hat,
            placement: &self.placement,
        }
    }

    fn validate(&self) -> Result<(), SupportError> {
        let n = self.n();
        if self.b.n() != n || self.x_hat.n() != n {
            return Err(SupportError::SizeMismatch);
        }
        for (role, pattern) in [
            (Role::A, self.a_hat()),
            (Role::B, self.b_hat()),
            (Role::X, &self.x_hat),
        ] {
            let map = self.placement.map(role);
            for pos in pattern.iter() {
                match map.get(&pos) {
                    None => return Err(SupportError::PlacementIncomplete { role, pos }),
                    Some(&owner) if owner as usize >= n => {
                        return Err(SupportError::PlacementOutOfRange { role, pos, owner })
                    }
                    _ => {}
                }
            }
            if map.len() != pattern.len() {
                let foreign = map
                    .keys()
                    .find(|pos| !pattern.contains(pos.0, pos.1))
                    .copied()
                    .unwrap_or((0, 0));
                return Err(SupportError::PlacementForeign { role, pos: foreign });
            }
        }
        Ok(())
    }

    /// Checks the patterns against an ordered class claim.
    pub fn check_combo(&self, combo: Combo) -> Result<(), SupportError> {
        for (role, pattern, class) in [
            (Role::A, self.a_hat(), combo.a),
            (Role::B, self.b_hat(), combo.b),
            (Role::X, &self.x_hat, combo.x),
        ] {
            if !is_member(pattern, class, self.d) {
                return Err(SupportError::ClassMismatch { role, class, d: self.d });
            }
        }
        Ok(())
    }
}

/// Node id spaces for the tripartite triangle graph: row indices `i` map to
/// `[0, n)`, middle indices `j` to `[n, 2n)`, column indices `k` to `[2n, 3n)`.
pub fn i_node(_n: usize, i: u32) -> u32 {
    i
}

pub fn j_node(n: usize, j: u32) -> u32 {
    n as u32 + j
}

pub fn k_node(n: usize, k: u32) -> u32 {
    2 * n as u32 + k
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Triangle {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl Triangle {
    pub fn nodes(&self, n: usize) -> [u32; 3] {
        [i_node(n, self.i), j_node(n, self.j), k_node(n, self.k)]
    }

    /// The three node pairs of the triangle, each normalized low-high.
    pub fn pairs(&self, n: usize) -> [(u32, u32); 3] {
        let [a, b, c] = self.nodes(n);
        [(a, b), (b, c), (a, c)]
    }
}

/// A set of triangles with per-node and per-pair incidence counts.
#[derive(Clone, Debug)]
pub struct TriangleSet {
    n: usize,
    triangles: Vec<Triangle>,
    per_node: Vec<u32>,
    per_pair: HashMap<(u32, u32), u32>,
}

impl TriangleSet {
    pub fn from_triangles(n: usize, mut triangles: Vec<Triangle>) -> TriangleSet {
        triangles.sort_unstable();
        triangles.dedup();
        let mut per_node = vec![0u32; 3 * n];
        let mut per_pair = HashMap::new();
        for t in &triangles {
            for v in t.nodes(n) {
                per_node[v as usize] += 1;
            }
            for p in t.pairs(n) {
                *per_pair.entry(p).or_insert(0) += 1;
            }
        }
        TriangleSet { n, triangles, per_node, per_pair }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Number of triangles touching a node (in the `[0, 3n)` id space).
    pub fn node_count(&self, v: u32) -> u32 {
        self.per_node[v as usize]
    }

    pub fn max_node_count(&self) -> u32 {
        self.per_node.iter().copied().max().unwrap_or(0)
    }

    pub fn pair_count(&self, p: (u32, u32)) -> u32 {
        self.per_pair.get(&p).copied().unwrap_or(0)
    }

    pub fn max_pair_count(&self) -> u32 {
        self.per_pair.values().copied().max().unwrap_or(0)
    }

    pub fn per_node_total(&self) -> u64 {
        self.per_node.iter().map(|&c| c as u64).sum()
    }

    pub fn per_pair_total(&self) -> u64 {
        self.per_pair.values().map(|&c| c as u64).sum()
    }
}

/// Enumerates all triangles of the instance by joining over the shared middle
/// index `j`: for every `j`, pair the rows `i` with `(i, j)` in the support
/// of `A` against the columns `k` with `(j, k)` in the support of `B`, and
/// keep the pairs admitted by the support of `X`.
pub fn enumerate_triangles(shape: Shape<'_>) -> TriangleSet {
    let n = shape.n;
    let mut a_cols: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, j) in shape.a_hat.iter() {
        a_cols[j as usize].push(i);
    }
    let mut b_rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (j, k) in shape.b_hat.iter() {
        b_rows[j as usize].push(k);
    }
    let x_set: HashSet<(u32, u32)> = shape.x_hat.iter().collect();
    let mut triangles = Vec::new();
    for j in 0..n {
        for &i in &a_cols[j] {
            for &k in &b_rows[j] {
                if x_set.contains(&(i, k)) {
                    triangles.push(Triangle { i, j: j as u32, k });
                }
            }
        }
    }
    TriangleSet::from_triangles(n, triangles)
}

/// One verified counting bound.
#[derive(Clone, Debug)]
pub struct BoundRow {
    pub lemma: &'static str,
    pub bound: u64,
    pub observed: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct BoundsReport {
    pub rows: Vec<BoundRow>,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("lemma,bound,observed,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.lemma,
                r.bound,
                r.observed,
                if r.pass { "pass" } else { "fail" }
            ));
        }
        out
    }
}

/// Checks every counting bound applicable to the claimed combo against the
/// actual triangle set. The claim itself is verified first.
pub fn check_count_bounds(
    inst: &SupportInstance,
    ts: &TriangleSet,
    combo: Combo,
) -> Result<BoundsReport, SupportError> {
    inst.check_combo(combo)?;
    let d = inst.d as u64;
    let n = inst.n() as u64;
    let total = ts.len() as u64;
    let mut report = BoundsReport::default();

    if combo.count(SparsityClass::Us) >= 2 {
        // Two uniformly sparse matrices alone cap all incidences; the third
        // pattern may be anything.
        let mut row = |lemma, bound, observed| {
            report.rows.push(BoundRow { lemma, bound, observed, pass: observed <= bound });
        };
        row("per-node", d * d, ts.max_node_count() as u64);
        row("per-pair", d * d, ts.max_pair_count() as u64);
        row("total-us-us", d * d * n, total);
    }
    report.rows.extend(extra_total_rows(combo, d, n, total));
    Ok(report)
}

fn extra_total_rows(combo: Combo, d: u64, n: u64, total: u64) -> Vec<BoundRow> {
    let classes = combo.classes();
    let leq = |c: SparsityClass, t: SparsityClass| {
        let rank = |c: SparsityClass| match c {
            SparsityClass::Us => 0,
            SparsityClass::Rs | SparsityClass::Cs => 1,
            SparsityClass::Bd => 2,
            SparsityClass::As => 3,
            SparsityClass::Gm => 4,
        };
        rank(c) <= rank(t)
    };
    let mut rows = Vec::new();
    let us_positions: Vec<usize> = (0..3).filter(|&p| classes[p] == SparsityClass::Us).collect();
    // US with an AS partner elsewhere: at most d^2 n triangles.
    if us_positions.iter().any(|&p| {
        (0..3).any(|q| q != p && leq(classes[q], SparsityClass::As))
    }) && combo.count(SparsityClass::Us) < 2
    {
        rows.push(BoundRow {
            lemma: "total-us-as",
            bound: d * d * n,
            observed: total,
            pass: total <= d * d * n,
        });
    }
    // RS or CS with both partners AS: at most d^2 n.
    for (class, lemma) in [(SparsityClass::Rs, "total-rs-as"), (SparsityClass::Cs, "total-cs-as")] {
        if let Some(p) = (0..3).find(|&p| classes[p] == class) {
            if (0..3).all(|q| q == p || leq(classes[q], SparsityClass::As)) {
                rows.push(BoundRow {
                    lemma,
                    bound: d * d * n,
                    observed: total,
                    pass: total <= d * d * n,
                });
            }
        }
    }
    // BD with both partners AS: at most 2 d^2 n (the RS + CS halves each
    // contribute d^2 n).
    if let Some(p) = (0..3).find(|&p| classes[p] == SparsityClass::Bd) {
        if (0..3).all(|q| q == p || leq(classes[q], SparsityClass::As)) {
            rows.push(BoundRow {
                lemma: "total-bd-as",
                bound: 2 * d * d * n,
                observed: total,
                pass: total <= 2 * d * d * n,
            });
        }
    }
    rows
}

/// One cluster: `d` nodes per side. Triangles fully inside the cluster can be
/// solved densely on a small group of computers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub i_side: Vec<u32>,
    pub j_side: Vec<u32>,
    pub k_side: Vec<u32>,
}

impl Cluster {
    pub fn new(mut i_side: Vec<u32>, mut j_side: Vec<u32>, mut k_side: Vec<u32>) -> Cluster {
        i_side.sort_unstable();
        j_side.sort_unstable();
        k_side.sort_unstable();
        Cluster { i_side, j_side, k_side }
    }

    pub fn side_size_ok(&self, d: usize) -> bool {
        self.i_side.len() == d && self.j_side.len() == d && self.k_side.len() == d
    }

    pub fn contains(&self, t: &Triangle) -> bool {
        self.i_side.binary_search(&t.i).is_ok()
            && self.j_side.binary_search(&t.j).is_ok()
            && self.k_side.binary_search(&t.k).is_ok()
    }

    pub fn touches(&self, t: &Triangle) -> bool {
        self.i_side.binary_search(&t.i).is_ok()
            || self.j_side.binary_search(&t.j).is_ok()
            || self.k_side.binary_search(&t.k).is_ok()
    }
}
