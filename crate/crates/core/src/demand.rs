//! Subtree demand `d(u) = targets(T_u) - pebbles(T_u)` and the per-node
//! child lists partitioned by demand sign.

use crate::instance::Instance;
use crate::tree::{NodeId, RootedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Negative = 0,
    Zero = 1,
    Positive = 2,
}

impl Sign {
    pub fn of(d: i64) -> Sign {
        match d {
            d if d < 0 => Sign::Negative,
            0 => Sign::Zero,
            _ => Sign::Positive,
        }
    }
}

/// Three intrusive doubly-linked lists per node holding its children,
/// bucketed by the sign of each child's demand.
///
/// Relocation appends to the tail of the destination list, so each list
/// keeps rooting-traversal order as long as children only ever move
/// towards zero.
#[derive(Clone, Debug, Default)]
struct SignPartition {
    head: Vec<[u32; 3]>,
    tail: Vec<[u32; 3]>,
    prev: Vec<u32>,
    next: Vec<u32>,
    bucket: Vec<u8>,
}

/// Links are stored as `u32` to halve the footprint of the hottest arrays.
const NIL: u32 = u32::MAX;

fn link(v: NodeId) -> u32 {
    v as u32
}

fn unlinked(x: u32) -> Option<NodeId> {
    (x != NIL).then_some(x as NodeId)
}

impl SignPartition {
    fn clear(&mut self, n: usize) {
        assert!(n < NIL as usize, "tree too large for 32-bit links");
        self.head.clear();
        self.head.resize(n, [NIL; 3]);
        self.tail.clear();
        self.tail.resize(n, [NIL; 3]);
        self.prev.clear();
        self.prev.resize(n, NIL);
        self.next.clear();
        self.next.resize(n, NIL);
        self.bucket.clear();
        self.bucket.resize(n, Sign::Zero as u8);
    }

    fn push_back(&mut self, parent: NodeId, v: NodeId, sign: Sign) {
        let b = sign as usize;
        let t = self.tail[parent][b];
        self.prev[v] = t;
        self.next[v] = NIL;
        if t == NIL {
            self.head[parent][b] = link(v);
        } else {
            self.next[t as usize] = link(v);
        }
        self.tail[parent][b] = link(v);
        self.bucket[v] = b as u8;
    }

    fn unlink(&mut self, parent: NodeId, v: NodeId) {
        let b = self.bucket[v] as usize;
        let (p, nx) = (self.prev[v], self.next[v]);
        if p == NIL {
            self.head[parent][b] = nx;
        } else {
            self.next[p as usize] = nx;
        }
        if nx == NIL {
            self.tail[parent][b] = p;
        } else {
            self.prev[nx as usize] = p;
        }
    }

    fn first(&self, u: NodeId, sign: Sign) -> Option<NodeId> {
        unlinked(self.head[u][sign as usize])
    }

    fn iter(&self, u: NodeId, sign: Sign) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.first(u, sign), move |&v| unlinked(self.next[v]))
    }
}

/// Demand, occupancy and target bits for every node, plus the sign partition.
///
/// The table is tied to the [`RootedTree`] it was computed on; every
/// mutating method takes that tree so parents can be looked up.
#[derive(Clone, Debug, Default)]
pub struct DemandTable {
    demand: Vec<i64>,
    occupied: Vec<bool>,
    target: Vec<bool>,
    partition: SignPartition,
}

impl DemandTable {
    /// Fills the table for a fresh configuration, reusing allocations.
    ///
    /// One pass over the nodes with children before parents applies
    /// `d(u) = b(u) - p(u) + sum of d(child)`.
    pub fn reset(&mut self, rooted: &RootedTree, pebbles: &[NodeId], targets: &[NodeId]) {
        let n = rooted.node_count();
        self.occupied.clear();
        self.occupied.resize(n, false);
        self.target.clear();
        self.target.resize(n, false);
        for &u in pebbles {
            self.occupied[u] = true;
        }
        for &u in targets {
            self.target[u] = true;
        }
        self.demand.clear();
        self.demand.resize(n, 0);
        for &u in rooted.order().iter().rev() {
            self.demand[u] += i64::from(self.target[u]) - i64::from(self.occupied[u]);
            if let Some(p) = rooted.parent(u) {
                self.demand[p] += self.demand[u];
            }
        }
        self.partition.clear(n);
        for u in 0..n {
            for &v in rooted.children(u) {
                self.partition.push_back(u, v, Sign::of(self.demand[v]));
            }
        }
    }

    pub fn demand(&self, u: NodeId) -> i64 {
        self.demand[u]
    }

    pub fn demands(&self) -> &[i64] {
        &self.demand
    }

    pub fn is_occupied(&self, u: NodeId) -> bool {
        self.occupied[u]
    }

    pub fn is_target(&self, u: NodeId) -> bool {
        self.target[u]
    }

    pub(crate) fn set_occupied(&mut self, u: NodeId, value: bool) {
        self.occupied[u] = value;
    }

    /// Sets `d(v)` and moves `v` to the matching list under its parent.
    pub fn set_demand(&mut self, rooted: &RootedTree, v: NodeId, value: i64) {
        let old = Sign::of(self.demand[v]);
        self.demand[v] = value;
        let new = Sign::of(value);
        if old != new {
            if let Some(p) = rooted.parent(v) {
                self.partition.unlink(p, v);
                self.partition.push_back(p, v, new);
            }
        }
    }

    pub fn add_demand(&mut self, rooted: &RootedTree, v: NodeId, delta: i64) {
        self.set_demand(rooted, v, self.demand[v] + delta);
    }

    /// First child of `u` whose demand has the given sign.
    pub fn first_child(&self, u: NodeId, sign: Sign) -> Option<NodeId> {
        self.partition.first(u, sign)
    }

    /// Children of `u` with the given demand sign, in list order.
    pub fn children_with_sign(&self, u: NodeId, sign: Sign) -> impl Iterator<Item = NodeId> + '_ {
        self.partition.iter(u, sign)
    }

    /// `sum |d(u)|`, the optimal plan length for the current configuration.
    pub fn lower_bound(&self) -> u64 {
        self.demand.iter().map(|d| d.unsigned_abs()).sum()
    }
}

/// Computes the demand table of `inst` on `rooted`.
pub fn compute_demands(rooted: &RootedTree, inst: &Instance) -> DemandTable {
    let mut table = DemandTable::default();
    table.reset(rooted, inst.pebbles(), inst.targets());
    table
}

/// `sum |d(u)|` over a demand table.
pub fn lower_bound(table: &DemandTable) -> u64 {
    table.lower_bound()
}

/// Optimal UPMT plan length of `inst`, computed from demands alone.
pub fn optimal_length(inst: &Instance, root: NodeId) -> Result<u64, crate::error::TreeError> {
    let rooted = RootedTree::new(inst.tree(), root)?;
    Ok(compute_demands(&rooted, inst).lower_bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_instance, Instance};
    use crate::tree::{root_tree, Tree};
    use proptest::prelude::*;

    fn seven_node() -> Instance {
        let t = Tree::new(7, vec![(0, 1), (1, 3), (2, 3), (3, 5), (4, 5), (5, 6)]).unwrap();
        Instance::new(t, vec![0, 2, 4], vec![3, 5, 6]).unwrap()
    }

    /// Direct subtree sums: walk every pebble and target up to the root.
    fn demands_by_subtree_sums(rooted: &RootedTree, inst: &Instance) -> Vec<i64> {
        let mut d = vec![0i64; rooted.node_count()];
        let ancestors = |u: NodeId| std::iter::successors(Some(u), |&x| rooted.parent(x));
        for &b in inst.targets() {
            for a in ancestors(b) {
                d[a] += 1;
            }
        }
        for &p in inst.pebbles() {
            for a in ancestors(p) {
                d[a] -= 1;
            }
        }
        d
    }

    fn assert_partition_consistent(rooted: &RootedTree, table: &DemandTable) {
        for u in 0..rooted.node_count() {
            let mut seen: Vec<NodeId> = Vec::new();
            for sign in [Sign::Negative, Sign::Zero, Sign::Positive] {
                for v in table.children_with_sign(u, sign) {
                    assert_eq!(Sign::of(table.demand(v)), sign, "child {v} of {u}");
                    seen.push(v);
                }
            }
            seen.sort();
            let mut kids = rooted.children(u).to_vec();
            kids.sort();
            assert_eq!(seen, kids);
        }
    }

    #[test]
    fn seven_node_demands() {
        let inst = seven_node();
        let rooted = root_tree(inst.tree(), 3).unwrap();
        let table = compute_demands(&rooted, &inst);
        // A B C D E F G
        assert_eq!(table.demands(), &[-1, -1, -1, 0, -1, 1, 1]);
        assert_eq!(lower_bound(&table), 6);
        assert_eq!(table.first_child(3, Sign::Negative), Some(1));
        assert_eq!(table.first_child(3, Sign::Positive), Some(5));
        assert_partition_consistent(&rooted, &table);
    }

    #[test]
    fn matching_sets_give_zero_demand() {
        let t = Tree::new(5, vec![(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let inst = Instance::new(t, vec![4, 0], vec![0, 4]).unwrap();
        let rooted = root_tree(inst.tree(), 2).unwrap();
        let table = compute_demands(&rooted, &inst);
        assert!(table.demands().iter().all(|&d| d == 0));
        assert_eq!(table.lower_bound(), 0);
    }

    #[test]
    fn recursive_and_direct_demands_agree_at_scale() {
        for (i, &(n, k)) in [(10_000, 3_000), (10_000, 10), (2_000, 2_000), (777, 1)].iter().enumerate() {
            let inst = random_instance(n, k, 100 + i as u64).unwrap();
            let rooted = root_tree(inst.tree(), (i * 37) % n).unwrap();
            let table = compute_demands(&rooted, &inst);
            assert_eq!(table.demands(), demands_by_subtree_sums(&rooted, &inst).as_slice());
            assert_eq!(table.demand(rooted.root()), 0);
        }
    }

    proptest! {
        #[test]
        fn root_demand_is_zero_for_every_root(n in 1usize..60, kf in 0.0f64..=1.0, seed: u64, r in 0usize..60) {
            let k = ((n as f64) * kf) as usize;
            let inst = random_instance(n, k, seed).unwrap();
            let rooted = root_tree(inst.tree(), r % n).unwrap();
            let table = compute_demands(&rooted, &inst);
            prop_assert_eq!(table.demand(r % n), 0);
            prop_assert!(table.demands().iter().all(|d| d.unsigned_abs() as usize <= k));
            let direct = demands_by_subtree_sums(&rooted, &inst);
            prop_assert_eq!(table.demands(), direct.as_slice());
        }

        #[test]
        fn partition_tracks_arbitrary_updates(
            seed: u64,
            updates in proptest::collection::vec((0usize..40, -3i64..=3), 0..200),
        ) {
            let inst = random_instance(40, 12, seed).unwrap();
            let rooted = root_tree(inst.tree(), 0).unwrap();
            let mut table = compute_demands(&rooted, &inst);
            for (v, delta) in updates {
                table.add_demand(&rooted, v, delta);
            }
            assert_partition_consistent(&rooted, &table);
        }

        #[test]
        fn move_and_move_back_restores_table(seed: u64, pick in 0usize..1000) {
            let inst = random_instance(30, 10, seed).unwrap();
            let rooted = root_tree(inst.tree(), 0).unwrap();
            let before = compute_demands(&rooted, &inst);
            // slide one pebble to a free neighbour and back, recomputing each time
            let occ = inst.occupancy();
            let moves: Vec<(NodeId, NodeId)> = inst.pebbles().iter()
                .flat_map(|&u| inst.tree().neighbors(u).iter().map(move |&v| (u, v)))
                .filter(|&(_, v)| !occ[v])
                .collect();
            prop_assume!(!moves.is_empty());
            let (u, v) = moves[pick % moves.len()];
            let mut peb = inst.pebbles().to_vec();
            let slot = peb.iter().position(|&x| x == u).unwrap();
            peb[slot] = v;
            let mut table = before.clone();
            table.reset(&rooted, &peb, inst.targets());
            prop_assert_eq!(table.lower_bound().abs_diff(before.lower_bound()), 1);
            peb[slot] = u;
            table.reset(&rooted, &peb, inst.targets());
            prop_assert_eq!(table.demands(), before.demands());
        }
    }
}
