//! Virtual instances: splitting overloaded nodes into copies so that no
//! computational entity touches more than `kappa` triangles.
//!
//! A node `v` incident to `t(v)` triangles becomes `ceil(t(v)/kappa)`
//! virtual nodes; the triangles incident to `v`, in order, go `kappa` per
//! copy. Virtual nodes are then dealt round-robin to the real computers, a
//! constant number per computer, so simulating them costs only constant
//! overhead per round.

use std::collections::HashMap;

use crate::support::TriangleSet;

/// A triangle's copy indices, one per corner, parallel to the source
/// triangle list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VirtualTriangle {
    pub xi: u32,
    pub xj: u32,
    pub xk: u32,
}

#[derive(Clone, Debug)]
pub struct VirtualInstance {
    kappa: usize,
    /// `ell[v]` = number of copies of node `v` (0 for untouched nodes).
    ell: Vec<u32>,
    /// Copy assignment per triangle, parallel to the triangle list.
    copies: Vec<VirtualTriangle>,
    /// Real computer hosting each virtual node `(v, x)`.
    hosts: HashMap<(u32, u32), u32>,
    host_count: usize,
}

/// Chunks each node's triangle list into copies of `kappa`.
///
/// Triangle lists are consumed in lexicographic triangle order, which for
/// every corner means its incident triangles sorted by the two remaining
/// coordinates; ranks within that order determine the copy.
pub fn build_virtual_instance(ts: &TriangleSet, kappa: usize) -> VirtualInstance {
    assert!(kappa >= 1, "kappa must be positive");
    let n = ts.n();
    let node_space = 3 * n;
    let mut seen = vec![0u32; node_space];
    let mut copies = Vec::with_capacity(ts.len());
    for t in ts.triangles() {
        let [vi, vj, vk] = t.nodes(n);
        let mut copy_of = |v: u32| {
            let c = seen[v as usize] / kappa as u32;
            seen[v as usize] += 1;
            c
        };
        copies.push(VirtualTriangle { xi: copy_of(vi), xj: copy_of(vj), xk: copy_of(vk) });
    }
    let ell: Vec<u32> = seen.iter().map(|&t| t.div_ceil(kappa as u32)).collect();
    let mut hosts = HashMap::new();
    let mut idx = 0u32;
    for (v, &l) in ell.iter().enumerate() {
        for x in 0..l {
            hosts.insert((v as u32, x), idx % n as u32);
            idx += 1;
        }
    }
    VirtualInstance { kappa, ell, copies, hosts, host_count: n }
}

impl VirtualInstance {
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Number of copies of node `v`.
    pub fn copies_of(&self, v: u32) -> u32 {
        self.ell[v as usize]
    }

    pub fn virtual_count(&self) -> usize {
        self.hosts.len()
    }

    /// Copy indices of each triangle, parallel to the source list.
    pub fn triangle_copies(&self) -> &[VirtualTriangle] {
        &self.copies
    }

    /// Real computer hosting virtual node `(v, x)`.
    pub fn host(&self, v: u32, x: u32) -> u32 {
        self.hosts[&(v, x)]
    }

    /// Largest number of virtual nodes on one real computer.
    pub fn max_host_load(&self) -> usize {
        let mut loads = vec![0usize; self.host_count];
        for &h in self.hosts.values() {
            loads[h as usize] += 1;
        }
        loads.into_iter().max().unwrap_or(0)
    }

    /// Largest number of triangles any one virtual node touches. Bounded by
    /// `kappa` by construction.
    pub fn max_virtual_load(&self, ts: &TriangleSet) -> usize {
        let n = ts.n();
        let mut loads: HashMap<(u32, u32), usize> = HashMap::new();
        for (t, c) in ts.triangles().iter().zip(&self.copies) {
            let [vi, vj, vk] = t.nodes(n);
            for (v, x) in [(vi, c.xi), (vj, c.xj), (vk, c.xk)] {
                *loads.entry((v, x)).or_insert(0) += 1;
            }
        }
        loads.into_values().max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::{j_node, k_node, Triangle, TriangleSet};

    fn ts(n: usize, tris: &[(u32, u32, u32)]) -> TriangleSet {
        TriangleSet::from_triangles(
            n,
            tris.iter().map(|&(i, j, k)| Triangle { i, j, k }).collect(),
        )
    }

    #[test]
    fn chunking_rounds_up() {
        // One I-node in 5 triangles, kappa 2: copies 0,0,1,1,2.
        let t = ts(8, &[(0, 0, 0), (0, 1, 1), (0, 2, 2), (0, 3, 3), (0, 4, 4)]);
        let vi = build_virtual_instance(&t, 2);
        assert_eq!(vi.copies_of(0), 3);
        let xs: Vec<u32> = vi.triangle_copies().iter().map(|c| c.xi).collect();
        assert_eq!(xs, vec![0, 0, 1, 1, 2]);
        // The J- and K-side nodes each touch one triangle.
        assert_eq!(vi.copies_of(j_node(8, 0)), 1);
        assert_eq!(vi.copies_of(k_node(8, 4)), 1);
    }

    #[test]
    fn small_loads_collapse_to_one_copy() {
        let t = ts(4, &[(0, 1, 2), (1, 2, 3), (2, 3, 0)]);
        let vi = build_virtual_instance(&t, 4);
        for v in 0..12u32 {
            assert!(vi.copies_of(v) <= 1);
        }
        assert_eq!(vi.virtual_count(), 9);
    }

    #[test]
    fn virtual_load_never_exceeds_kappa() {
        let t = ts(
            6,
            &[
                (0, 0, 0),
                (0, 0, 1),
                (0, 0, 2),
                (0, 1, 0),
                (0, 1, 1),
                (1, 0, 0),
                (1, 2, 3),
                (2, 2, 2),
            ],
        );
        for kappa in 1..=4 {
            let vi = build_virtual_instance(&t, kappa);
            assert!(vi.max_virtual_load(&t) <= kappa, "kappa {}", kappa);
        }
    }

    #[test]
    fn hosts_are_balanced() {
        let tris: Vec<(u32, u32, u32)> =
            (0..16u32).map(|r| (r % 4, (r / 4) % 4, (r * 3) % 4)).collect();
        let t = ts(4, &tris);
        let vi = build_virtual_instance(&t, 2);
        let per_host = vi.virtual_count().div_ceil(4);
        assert!(vi.max_host_load() <= per_host);
    }
}
