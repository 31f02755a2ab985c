//! Brute-force ground truth for small instances.
//!
//! Configurations are bitsets over the nodes, so every search here is
//! limited to 64 nodes. Budgets are checked up front against the size of
//! the state space, never against wall time.
//!
//! The MAPF cost model charges an agent one unit per timestep until its
//! final arrival, whatever it does in between. Searching for the sum of
//! costs therefore tracks which agents have already settled for good:
//! settling is free, and each timestep costs the number of agents still
//! unsettled.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use pathfinding::prelude::{kuhn_munkres_min, Matrix};

use crate::demand::compute_demands;
use crate::error::OracleError;
use crate::instance::Instance;
use crate::tree::{NodeId, RootedTree, Tree};

/// Largest node count the bitset searches accept.
pub const MAX_ORACLE_NODES: usize = 64;
/// Default cap on the number of configurations a search may face.
pub const DEFAULT_BUDGET: u128 = 1_000_000;

pub fn distances_from(tree: &Tree, source: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; tree.node_count()];
    let mut queue = VecDeque::from([source]);
    dist[source] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in tree.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn tree_distance(tree: &Tree, u: NodeId, v: NodeId) -> usize {
    distances_from(tree, u)[v]
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

fn mask_of(nodes: &[NodeId]) -> u64 {
    nodes.iter().fold(0, |m, &u| m | 1 << u)
}

fn check_size(n: usize, states: u128, budget: u128) -> Result<(), OracleError> {
    if n > MAX_ORACLE_NODES {
        return Err(OracleError::TooLarge {
            n,
            max: MAX_ORACLE_NODES,
        });
    }
    if states > budget {
        return Err(OracleError::BudgetExceeded { states, budget });
    }
    Ok(())
}

fn bits(mut mask: u64) -> impl Iterator<Item = NodeId> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let u = mask.trailing_zeros() as NodeId;
            mask &= mask - 1;
            u
        })
    })
}

enum Store {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

/// Single-slide distance from every reachable `k`-configuration to one
/// fixed configuration.
pub struct ConfigDistances {
    store: Store,
}

const UNSEEN: u32 = u32::MAX;

impl ConfigDistances {
    /// Breadth-first search outward from `goal`. Slides are reversible, so
    /// the distance to `goal` equals the distance from it.
    pub fn build(tree: &Tree, goal: &[NodeId], budget: u128) -> Result<Self, OracleError> {
        let n = tree.node_count();
        check_size(n, binomial(n, goal.len()), budget)?;
        let mut store = if n <= 20 {
            Store::Dense(vec![UNSEEN; 1 << n])
        } else {
            Store::Sparse(HashMap::new())
        };
        let start = mask_of(goal);
        let mut queue = VecDeque::from([start]);
        set(&mut store, start, 0);
        while let Some(cur) = queue.pop_front() {
            let d = lookup(&store, cur);
            for u in bits(cur) {
                for &v in tree.neighbors(u) {
                    if cur >> v & 1 == 0 {
                        let next = cur ^ (1 << u) ^ (1 << v);
                        if lookup(&store, next) == UNSEEN {
                            set(&mut store, next, d + 1);
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
        Ok(ConfigDistances { store })
    }

    pub fn get(&self, config: &[NodeId]) -> Option<u64> {
        let d = lookup(&self.store, mask_of(config));
        (d != UNSEEN).then_some(d as u64)
    }
}

fn lookup(store: &Store, mask: u64) -> u32 {
    match store {
        Store::Dense(v) => v[mask as usize],
        Store::Sparse(m) => m.get(&mask).copied().unwrap_or(UNSEEN),
    }
}

fn set(store: &mut Store, mask: u64, d: u32) {
    match store {
        Store::Dense(v) => v[mask as usize] = d,
        Store::Sparse(m) => {
            m.insert(mask, d);
        }
    }
}

/// Minimum number of single slides taking the pebbles onto the targets.
pub fn oracle_opt_bfs(inst: &Instance, budget: u128) -> Result<u64, OracleError> {
    let table = ConfigDistances::build(inst.tree(), inst.targets(), budget)?;
    Ok(table.get(inst.pebbles()).expect("trees are connected"))
}

/// Cost of a minimum-weight perfect matching of pebbles to targets under
/// tree distance.
pub fn oracle_opt_matching(inst: &Instance) -> u64 {
    if inst.k() == 0 {
        return 0;
    }
    let rows: Vec<Vec<i64>> = inst
        .pebbles()
        .iter()
        .map(|&p| {
            let dist = distances_from(inst.tree(), p);
            inst.targets().iter().map(|&b| dist[b] as i64).collect()
        })
        .collect();
    let weights = Matrix::from_rows(rows).expect("square cost matrix");
    let (cost, _) = kuhn_munkres_min(&weights);
    cost as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Makespan,
    SumOfCosts,
}

#[derive(Clone, Copy, Debug)]
pub struct MapfOracleOptions {
    /// Restrict each edge to the direction of net flow across it.
    pub unidirectional: bool,
    pub budget: u128,
}

impl Default for MapfOracleOptions {
    fn default() -> Self {
        MapfOracleOptions {
            unidirectional: false,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Directed arcs an agent may take: `arcs[u]` lists the allowed `v`.
fn allowed_arcs(inst: &Instance, unidirectional: bool) -> Vec<Vec<NodeId>> {
    let tree = inst.tree();
    if !unidirectional {
        return (0..tree.node_count()).map(|u| tree.neighbors(u).to_vec()).collect();
    }
    let rooted = RootedTree::new(tree, 0).expect("node 0 exists");
    let table = compute_demands(&rooted, inst);
    let mut arcs = vec![Vec::new(); tree.node_count()];
    for &c in rooted.order() {
        let Some(p) = rooted.parent(c) else { continue };
        match table.demand(c) {
            d if d > 0 => arcs[p].push(c),
            d if d < 0 => arcs[c].push(p),
            _ => {}
        }
    }
    arcs
}

/// Enumerates every conflict-free joint step from `occupied`, with agents
/// in `frozen` held in place.
struct Stepper<'a> {
    arcs: &'a [Vec<NodeId>],
    agents: Vec<NodeId>,
    /// Destination chosen for the agent at each node, `usize::MAX` if none yet.
    dest: Vec<NodeId>,
    occupied: u64,
    frozen: u64,
}

impl<'a> Stepper<'a> {
    fn new(arcs: &'a [Vec<NodeId>]) -> Self {
        Stepper {
            arcs,
            agents: Vec::new(),
            dest: vec![usize::MAX; arcs.len()],
            occupied: 0,
            frozen: 0,
        }
    }

    fn for_each_step(&mut self, occupied: u64, frozen: u64, out: &mut impl FnMut(u64)) {
        self.agents.clear();
        self.agents.extend(bits(occupied));
        self.occupied = occupied;
        self.frozen = frozen;
        self.assign(0, 0, out);
    }

    fn assign(&mut self, i: usize, claimed: u64, out: &mut impl FnMut(u64)) {
        if i == self.agents.len() {
            if claimed != self.occupied {
                out(claimed);
            }
            return;
        }
        let u = self.agents[i];
        let stay = 1u64 << u;
        if claimed & stay == 0 {
            self.dest[u] = u;
            self.assign(i + 1, claimed | stay, out);
        }
        if self.frozen & stay != 0 {
            self.dest[u] = usize::MAX;
            return;
        }
        for j in 0..self.arcs[u].len() {
            let v = self.arcs[u][j];
            let bit = 1u64 << v;
            if claimed & bit != 0 || self.frozen & bit != 0 {
                continue;
            }
            if self.occupied & bit != 0 && self.dest[v] == u {
                continue;
            }
            self.dest[u] = v;
            self.assign(i + 1, claimed | bit, out);
        }
        self.dest[u] = usize::MAX;
    }
}

/// Optimal makespan or sum of costs over all conflict-free timed plans.
pub fn oracle_mapf_optimal(inst: &Instance, objective: Objective, opts: MapfOracleOptions) -> Result<u64, OracleError> {
    let n = inst.node_count();
    let k = inst.k();
    let states = match objective {
        Objective::Makespan => binomial(n, k),
        Objective::SumOfCosts => binomial(n, k) << k,
    };
    check_size(n, states, opts.budget)?;
    let arcs = allowed_arcs(inst, opts.unidirectional);
    let start = mask_of(inst.pebbles());
    let goal = mask_of(inst.targets());
    let mut stepper = Stepper::new(&arcs);
    let found = match objective {
        Objective::Makespan => makespan_search(&mut stepper, start, goal),
        Objective::SumOfCosts => soc_search(&mut stepper, start, goal, k),
    };
    // a tree always admits a plan in both modes; `None` would mean a bug
    Ok(found.expect("goal configuration is reachable"))
}

fn makespan_search(stepper: &mut Stepper, start: u64, goal: u64) -> Option<u64> {
    let mut seen = HashMap::from([(start, 0u64)]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let d = seen[&cur];
        if cur == goal {
            return Some(d);
        }
        stepper.for_each_step(cur, 0, &mut |next| {
            seen.entry(next).or_insert_with(|| {
                queue.push_back(next);
                d + 1
            });
        });
    }
    None
}

fn soc_search(stepper: &mut Stepper, start: u64, goal: u64, k: usize) -> Option<u64> {
    let mut best: HashMap<(u64, u64), u64> = HashMap::from([((start, 0), 0)]);
    let mut heap = BinaryHeap::from([Reverse((0u64, start, 0u64))]);
    let mut next_states = Vec::new();
    while let Some(Reverse((cost, occ, frozen))) = heap.pop() {
        if best[&(occ, frozen)] < cost {
            continue;
        }
        if frozen == goal {
            return Some(cost);
        }
        let mut relax = |state: (u64, u64), c: u64, heap: &mut BinaryHeap<_>| {
            if best.get(&state).map_or(true, |&b| c < b) {
                best.insert(state, c);
                heap.push(Reverse((c, state.0, state.1)));
            }
        };
        for u in bits(occ & goal & !frozen) {
            relax((occ, frozen | 1 << u), cost, &mut heap);
        }
        let step_cost = (k - frozen.count_ones() as usize) as u64;
        next_states.clear();
        stepper.for_each_step(occ, frozen, &mut |next| next_states.push(next));
        for &next in &next_states {
            relax((next, frozen), cost + step_cost, &mut heap);
        }
    }
    None
}
