//! Communication building blocks shared by the multiplication schedules.
//!
//! Three primitives cover almost all traffic:
//!
//! * **Anchor arrays** lay a sorted list of demand triples out over
//!   consecutive computer slots, so that all demands for the same key form a
//!   contiguous group of computers.
//! * **Edge coloring** turns an arbitrary batch of point-to-point messages
//!   into rounds: messages of one color share no endpoint, so a color is one
//!   legal round. Greedy first-fit needs at most `deg_out + deg_in - 1`
//!   colors.
//! * **Cast trees** broadcast a value over a computer interval, or gather a
//!   sum back, in logarithmically many rounds via recursive doubling.

use std::fmt;

use crate::netsim::{Key, RoundStep, Send};

#[derive(Debug, PartialEq, Eq)]
pub enum RoutingError {
    /// More demand triples than the array has slots.
    CapacityExceeded { demand: usize, slots: usize },
    /// A message whose source equals its destination; the caller should have
    /// turned it into a local operation.
    SelfEdge { at: u32 },
    /// A computer exceeds its declared send or receive multiplicity.
    DegreeExceeded { at: u32, have: usize, bound: usize, receiving: bool },
}

impl fmt::Display for RoutingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoutingError::CapacityExceeded { demand, slots } => {
                write!(f, "{} demands exceed {} anchor slots", demand, slots)
            }
            RoutingError::SelfEdge { at } => {
                write!(f, "message from computer {} to itself cannot be colored", at)
            }
            RoutingError::DegreeExceeded { at, have, bound, receiving } => write!(
                f,
                "computer {} {} {} messages, bound {}",
                at,
                if *receiving { "receives" } else { "sends" },
                have,
                bound
            ),
        }
    }
}

impl std::error::Error for RoutingError {}

/// Contiguous run of slots holding the same `(u, v)` key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupInfo {
    pub key: (u32, u32),
    pub first_slot: usize,
    pub last_slot: usize,
}

/// Demand triples `(u, v, target)` sorted lexicographically and packed
/// `kappa` per computer. Slot `s` lives on computer `s / kappa`; the sort
/// makes every key's group an interval of computers, so one value can serve
/// its whole group with a single broadcast.
#[derive(Clone, Debug)]
pub struct AnchorArray {
    kappa: usize,
    triples: Vec<(u32, u32, u32)>,
    groups: Vec<GroupInfo>,
}

pub fn build_anchor_array(
    mut demands: Vec<(u32, u32, u32)>,
    kappa: usize,
    n: usize,
) -> Result<AnchorArray, RoutingError> {
    assert!(kappa >= 1, "anchor array needs kappa >= 1");
    let slots = kappa * n;
    if demands.len() > slots {
        return Err(RoutingError::CapacityExceeded { demand: demands.len(), slots });
    }
    demands.sort_unstable();
    let mut groups: Vec<GroupInfo> = Vec::new();
    for (slot, &(u, v, _)) in demands.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if g.key == (u, v) => g.last_slot = slot,
            _ => groups.push(GroupInfo { key: (u, v), first_slot: slot, last_slot: slot }),
        }
    }
    Ok(AnchorArray { kappa, triples: demands, groups })
}

impl AnchorArray {
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[(u32, u32, u32)] {
        &self.triples
    }

    pub fn groups(&self) -> &[GroupInfo] {
        &self.groups
    }

    pub fn slot_computer(&self, slot: usize) -> u32 {
        (slot / self.kappa) as u32
    }

    /// First computer of group `g`.
    pub fn q(&self, g: usize) -> u32 {
        self.slot_computer(self.groups[g].first_slot)
    }

    /// Last computer of group `g`.
    pub fn r(&self, g: usize) -> u32 {
        self.slot_computer(self.groups[g].last_slot)
    }

    /// Whether group `g` extends past the computer it starts on.
    pub fn spans(&self, g: usize) -> bool {
        self.q(g) < self.r(g)
    }
}

fn first_free_color(a: &[u64], b: &[u64]) -> usize {
    let words = a.len().max(b.len());
    for w in 0..=words {
        let wa = a.get(w).copied().unwrap_or(0);
        let wb = b.get(w).copied().unwrap_or(0);
        let free = !(wa | wb);
        if free != 0 {
            return w * 64 + free.trailing_zeros() as usize;
        }
    }
    unreachable!("a fresh word always has free bits")
}

fn mark_color(mask: &mut Vec<u64>, color: usize) {
    let w = color / 64;
    if mask.len() <= w {
        mask.resize(w + 1, 0);
    }
    mask[w] |= 1u64 << (color % 64);
}

/// Greedy proper edge coloring of a message multigraph on `n` computers.
///
/// Returns one color per input message (parallel to `msgs`); messages of one
/// color form a legal round. Processing messages in sorted order keeps the
/// result deterministic. Fails on `src == dst`.
pub fn edge_color(msgs: &[(u32, u32)], n: usize) -> Result<Vec<usize>, RoutingError> {
    let mut order: Vec<usize> = (0..msgs.len()).collect();
    order.sort_unstable_by_key(|&idx| (msgs[idx], idx));
    let mut out_used: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut in_used: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut colors = vec![0usize; msgs.len()];
    for idx in order {
        let (src, dst) = msgs[idx];
        if src == dst {
            return Err(RoutingError::SelfEdge { at: src });
        }
        let c = first_free_color(&out_used[src as usize], &in_used[dst as usize]);
        mark_color(&mut out_used[src as usize], c);
        mark_color(&mut in_used[dst as usize], c);
        colors[idx] = c;
    }
    Ok(colors)
}

/// [`edge_color`] with the degree preconditions checked up front: no source
/// may exceed `d_out` messages, no destination `d_in`. The greedy palette
/// then stays below `d_out + d_in`.
pub fn edge_color_bounded(
    msgs: &[(u32, u32)],
    n: usize,
    d_out: usize,
    d_in: usize,
) -> Result<Vec<usize>, RoutingError> {
    let mut out_deg = vec![0usize; n];
    let mut in_deg = vec![0usize; n];
    for &(src, dst) in msgs {
        out_deg[src as usize] += 1;
        in_deg[dst as usize] += 1;
    }
    for (c, &have) in out_deg.iter().enumerate() {
        if have > d_out {
            return Err(RoutingError::DegreeExceeded {
                at: c as u32,
                have,
                bound: d_out,
                receiving: false,
            });
        }
    }
    for (c, &have) in in_deg.iter().enumerate() {
        if have > d_in {
            return Err(RoutingError::DegreeExceeded {
                at: c as u32,
                have,
                bound: d_in,
                receiving: true,
            });
        }
    }
    let colors = edge_color(msgs, n)?;
    debug_assert!(colors.iter().all(|&c| c < d_out + d_in));
    Ok(colors)
}

/// Expands colored messages into rounds: color `c` becomes round `c`.
pub fn colored_rounds(sends: Vec<Send>, colors: &[usize]) -> Vec<RoundStep> {
    debug_assert_eq!(sends.len(), colors.len());
    let palette = colors.iter().copied().max().map_or(0, |c| c + 1);
    let mut rounds = vec![RoundStep::default(); palette];
    for (send, &c) in sends.into_iter().zip(colors) {
        rounds[c].sends.push(send);
    }
    rounds
}

/// Recursive-doubling tree over the computer interval `[lo, hi]`.
///
/// Level `t` doubles the number of informed computers, so a broadcast (or the
/// reverse gather) takes exactly `ceil(log2 m)` rounds for `m` computers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CastTree {
    pub lo: u32,
    pub hi: u32,
}

impl CastTree {
    pub fn new(lo: u32, hi: u32) -> CastTree {
        assert!(lo <= hi, "empty cast range");
        CastTree { lo, hi }
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn depth(&self) -> usize {
        let m = self.size();
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }

    /// Parent->child edges grouped by level, root first.
    pub fn levels(&self) -> Vec<Vec<(u32, u32)>> {
        let m = self.size() as u32;
        let mut levels = Vec::new();
        let mut s = 1u32;
        while s < m {
            let mut level = Vec::new();
            for p in 0..s {
                if p + s < m {
                    level.push((self.lo + p, self.lo + p + s));
                }
            }
            levels.push(level);
            s *= 2;
        }
        levels
    }
}

/// Rounds that broadcast each tree's value (already present at `tree.lo`)
/// to the tree's whole interval. Trees run level-synchronized, so the
/// intervals must be pairwise disjoint.
pub fn broadcast_rounds(trees: &[(CastTree, Key)]) -> Vec<RoundStep> {
    let depth = trees.iter().map(|(t, _)| t.depth()).max().unwrap_or(0);
    let mut rounds = vec![RoundStep::default(); depth];
    for (tree, key) in trees {
        for (t, level) in tree.levels().into_iter().enumerate() {
            for (parent, child) in level {
                rounds[t].sends.push(Send::copy(parent, child, *key));
            }
        }
    }
    rounds
}

/// Rounds that gather a sum to each tree's root: the same edges as a
/// broadcast, traversed deepest level first with child values moved into the
/// parent's slot. Roots hold the totals afterwards; every other computer in
/// the interval has given its share up.
pub fn converge_rounds(trees: &[(CastTree, Key)]) -> Vec<RoundStep> {
    let depth = trees.iter().map(|(t, _)| t.depth()).max().unwrap_or(0);
    let mut rounds = vec![RoundStep::default(); depth];
    for (tree, key) in trees {
        let levels = tree.levels();
        // Deepest level goes first; shallow trees finish in the last rounds
        // so parallel roots all receive their final value together.
        let offset = depth - levels.len();
        for (t, level) in levels.into_iter().rev().enumerate() {
            for (parent, child) in level {
                rounds[offset + t].sends.push(Send::acc_move(child, parent, *key, *key));
            }
        }
    }
    rounds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Element, Semiring};
    use crate::netsim::{Network, Program};

    #[test]
    fn anchor_array_sorts_and_groups() {
        let demands = vec![(2, 1, 9), (0, 5, 3), (2, 1, 4), (0, 5, 7), (2, 1, 1), (3, 3, 0)];
        let arr = build_anchor_array(demands, 2, 4).unwrap();
        assert_eq!(
            arr.triples(),
            &[(0, 5, 3), (0, 5, 7), (2, 1, 1), (2, 1, 4), (2, 1, 9), (3, 3, 0)]
        );
        assert_eq!(arr.groups().len(), 3);
        let g = arr.groups()[1];
        assert_eq!(g.key, (2, 1));
        assert_eq!((g.first_slot, g.last_slot), (2, 4));
        assert_eq!((arr.q(1), arr.r(1)), (1, 2));
        assert!(arr.spans(1));
        assert!(!arr.spans(0));
    }

    #[test]
    fn anchor_array_respects_capacity() {
        let demands: Vec<_> = (0..9).map(|i| (i, i, i)).collect();
        let err = build_anchor_array(demands, 2, 4).unwrap_err();
        assert_eq!(err, RoutingError::CapacityExceeded { demand: 9, slots: 8 });
    }

    #[test]
    fn groups_partition_the_slots() {
        let demands: Vec<_> = (0..20u32).map(|i| (i % 5, i % 3, i)).collect();
        let arr = build_anchor_array(demands, 4, 8).unwrap();
        let mut covered = 0;
        for (g, info) in arr.groups().iter().enumerate() {
            assert_eq!(info.first_slot, covered);
            assert!(info.last_slot >= info.first_slot);
            for s in info.first_slot..=info.last_slot {
                assert_eq!((arr.triples()[s].0, arr.triples()[s].1), info.key);
            }
            assert!(arr.q(g) <= arr.r(g));
            covered = info.last_slot + 1;
        }
        assert_eq!(covered, arr.len());
    }

    #[test]
    fn edge_coloring_is_proper() {
        let mut msgs = Vec::new();
        for s in 0..6u32 {
            for t in 0..6u32 {
                if s != t && (s + 2 * t) % 3 != 0 {
                    msgs.push((s, t));
                }
            }
        }
        let colors = edge_color(&msgs, 6).unwrap();
        for i in 0..msgs.len() {
            for j in i + 1..msgs.len() {
                if colors[i] == colors[j] {
                    assert_ne!(msgs[i].0, msgs[j].0, "two sends from {}", msgs[i].0);
                    assert_ne!(msgs[i].1, msgs[j].1, "two receives at {}", msgs[i].1);
                }
            }
        }
        let mut out_deg = vec![0usize; 6];
        let mut in_deg = vec![0usize; 6];
        for &(s, t) in &msgs {
            out_deg[s as usize] += 1;
            in_deg[t as usize] += 1;
        }
        let bound = out_deg.iter().max().unwrap() + in_deg.iter().max().unwrap() - 1;
        assert!(colors.iter().max().unwrap() < &bound);
    }

    #[test]
    fn bounded_coloring_validates_degrees() {
        let star: Vec<_> = (1..=5u32).map(|d| (0, d)).collect();
        let colors = edge_color_bounded(&star, 6, 5, 1).unwrap();
        assert_eq!(colors.iter().max(), Some(&4));
        let err = edge_color_bounded(&star, 6, 4, 1).unwrap_err();
        assert_eq!(
            err,
            RoutingError::DegreeExceeded { at: 0, have: 5, bound: 4, receiving: false }
        );
    }

    #[test]
    fn perfect_matching_uses_one_color() {
        let matching: Vec<_> = (0..8u32).map(|i| (i, i + 8)).collect();
        let colors = edge_color_bounded(&matching, 16, 1, 1).unwrap();
        assert!(colors.iter().all(|&c| c == 0));
    }

    #[test]
    fn edge_coloring_rejects_loops() {
        assert_eq!(edge_color(&[(3, 3)], 4), Err(RoutingError::SelfEdge { at: 3 }));
    }

    #[test]
    fn coloring_handles_many_colors() {
        // Star into one destination: 200 parallel edges force 200 colors,
        // which must spill across bitmask words.
        let msgs: Vec<_> = (1..=200u32).map(|s| (s, 0)).collect();
        let colors = edge_color(&msgs, 201).unwrap();
        let mut seen = colors.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 200);
        assert_eq!(*colors.iter().max().unwrap(), 199);
    }

    #[test]
    fn cast_tree_depth_is_logarithmic() {
        assert_eq!(CastTree::new(0, 0).depth(), 0);
        assert_eq!(CastTree::new(0, 1).depth(), 1);
        assert_eq!(CastTree::new(0, 15).depth(), 4);
        assert_eq!(CastTree::new(5, 21).depth(), 5);
    }

    #[test]
    fn broadcast_reaches_sixteen_computers_in_four_rounds() {
        let sr = Semiring::from_token("int").unwrap();
        let mut net = Network::new(16, sr);
        let key = Key::A(0, 0);
        let seed = Program {
            init: vec![crate::netsim::LocalOp::InitZero { at: 0, key }],
            ..Default::default()
        };
        net.execute(&seed).unwrap();
        let tree = CastTree::new(0, 15);
        let prog = Program {
            rounds: broadcast_rounds(&[(tree, key)]),
            ..Default::default()
        };
        let stats = net.execute(&prog).unwrap();
        assert!(stats.rounds <= 5);
        assert_eq!(stats.rounds, 4);
    }

    #[test]
    fn converge_structure_mirrors_broadcast() {
        let tree = CastTree::new(2, 6);
        let rounds = converge_rounds(&[(tree, Key::Q(3, 4))]);
        // 5 computers -> depth 3, child-to-parent, deepest level first.
        assert_eq!(rounds.len(), 3);
        let all: Vec<_> = rounds.iter().flat_map(|r| &r.sends).collect();
        assert_eq!(all.len(), 4);
        for s in &all {
            assert!(s.accumulate && s.take);
            assert!(s.src > s.dst);
        }
        assert_eq!(rounds.last().unwrap().sends.len(), 1);
        assert_eq!(rounds.last().unwrap().sends[0].dst, 2);
    }

    #[test]
    fn broadcast_then_converge_round_trips_values() {
        let sr = Semiring::from_token("int").unwrap();
        let mut net = Network::new(8, sr);
        let p = Key::P(1, 2);
        let seed = Program {
            init: vec![crate::netsim::LocalOp::InitZero { at: 0, key: p }],
            ..Default::default()
        };
        net.execute(&seed).unwrap();
        let tree = CastTree::new(0, 7);
        let out = Program { rounds: broadcast_rounds(&[(tree, p)]), ..Default::default() };
        net.execute(&out).unwrap();
        let back = Program { rounds: converge_rounds(&[(tree, p)]), ..Default::default() };
        let stats = net.execute(&back).unwrap();
        assert_eq!(stats.rounds, 3);
        assert_eq!(stats.messages, 7);
    }

    #[test]
    fn parallel_trees_share_rounds() {
        let a = CastTree::new(0, 3);
        let b = CastTree::new(4, 11);
        let rounds = broadcast_rounds(&[(a, Key::A(0, 0)), (b, Key::B(1, 1))]);
        assert_eq!(rounds.len(), 3);
        // No computer appears twice in any round.
        for round in &rounds {
            let mut srcs: Vec<u32> = round.sends.iter().map(|s| s.src).collect();
            let mut dsts: Vec<u32> = round.sends.iter().map(|s| s.dst).collect();
            srcs.sort_unstable();
            dsts.sort_unstable();
            let before = (srcs.len(), dsts.len());
            srcs.dedup();
            dsts.dedup();
            assert_eq!(before, (srcs.len(), dsts.len()));
        }
    }

    #[test]
    fn converge_accumulates_real_values() {
        use std::collections::HashMap;
        use crate::spmat::Pattern;
        use crate::support::{Placement, Role};
        // Build a tiny instance by hand: the five computers 0..5 each hold an
        // A value which a convergecast folds into computer 0's slot.
        let sr = Semiring::from_token("int").unwrap();
        let mut net = Network::new(5, sr);
        let a_hat = Pattern::new(5, (0..5u32).map(|i| (i, 0))).unwrap();
        let a = crate::spmat::SparseMatrix::new(
            a_hat.clone(),
            (0..5u32).map(|i| ((i, 0), Element(10 + i as u64))),
        )
        .unwrap();
        let b_hat = Pattern::new(5, [(0u32, 0u32)]).unwrap();
        let b = crate::spmat::SparseMatrix::new(b_hat.clone(), [((0, 0), Element(1))]).unwrap();
        let x_hat = Pattern::new(5, [(0u32, 0u32)]).unwrap();
        let placement = Placement::from_maps(
            a_hat.iter().map(|pos| (pos, pos.0)).collect(),
            HashMap::from([((0, 0), 0)]),
            HashMap::from([((0, 0), 0)]),
        );
        let inst = crate::support::SupportInstance::new(1, a, b, x_hat.clone(), placement.clone())
            .unwrap();
        net.seed_instance(&inst);
        // Move each A value into a Q slot locally, then gather.
        let mut pre = Vec::new();
        for i in 0..5u32 {
            pre.push(crate::netsim::LocalOp::MoveAcc {
                at: i,
                from: Key::A(i, 0),
                into: Key::Q(0, 0),
            });
        }
        let tree = CastTree::new(0, 4);
        let mut rounds = converge_rounds(&[(tree, Key::Q(0, 0))]);
        rounds.insert(0, RoundStep { pre, sends: vec![] });
        let prog = Program {
            rounds,
            finish: vec![crate::netsim::LocalOp::MoveAcc {
                at: 0,
                from: Key::Q(0, 0),
                into: Key::X(0, 0),
            }],
            ..Default::default()
        };
        net.execute(&prog).unwrap();
        let out = net.collect_output(&x_hat, &placement).unwrap();
        assert_eq!(out.get_raw(0, 0), Some(Element(10 + 11 + 12 + 13 + 14)));
        assert_eq!(net.violations().len(), 0);
    }
}
