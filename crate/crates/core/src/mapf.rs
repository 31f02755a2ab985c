//! Collision-free unlabeled MAPF on trees.
//!
//! Agents follow the same demand-reducing edge moves as the pebble motion
//! solver, but moves are timed. Each node keeps `l(u)`, the sorted times at
//! which agents pass through it, and `s(u)`, the earliest time an agent may
//! leave it. Nodes are visited in-order: negative-demand children first
//! (their agents give way to everything already routed through `u`), then
//! `u` forwards every agent it sees, then the remaining children.
//!
//! All waiting happens before an agent's first move. The resulting plan has
//! makespan at most `n - k` and sum of costs at most `k(n - k)`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::demand::{DemandTable, Sign};
use crate::error::{ParseError, SolveError};
use crate::instance::Instance;
use crate::tree::{NodeId, RootedTree};
use crate::upmt::{check_declared, header_field, plan_syntax};

/// Agent leaves `from` at time `t` and reaches `to` at `t + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimedMove {
    pub from: NodeId,
    pub to: NodeId,
    pub t: usize,
}

/// A timed plan, kept sorted by departure time (ties in emission order).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimedPlan {
    moves: Vec<TimedMove>,
}

impl TimedPlan {
    /// Stable-sorts `moves` by departure time.
    pub fn new(mut moves: Vec<TimedMove>) -> Self {
        moves.sort_by_key(|m| m.t);
        TimedPlan { moves }
    }

    pub fn moves(&self) -> &[TimedMove] {
        &self.moves
    }

    pub fn move_count(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// `# moves=<L> makespan=<M> soc=<S>` then `u v t` lines.
    pub fn to_text(&self, inst: &Instance) -> String {
        let soc = sum_of_costs(self, inst).map_or_else(|_| "?".to_string(), |s| s.to_string());
        let mut out = String::with_capacity(20 * self.moves.len() + 48);
        writeln!(
            out,
            "# moves={} makespan={} soc={}",
            self.moves.len(),
            makespan(self),
            soc
        )
        .unwrap();
        for m in &self.moves {
            writeln!(out, "{} {} {}", inst.node_name(m.from), inst.node_name(m.to), m.t).unwrap();
        }
        out
    }
}

/// Latest arrival time over all moves, or 0 for the empty plan.
pub fn makespan(plan: &TimedPlan) -> usize {
    plan.moves.iter().map(|m| m.t + 1).max().unwrap_or(0)
}

/// Sum over agents of their final arrival time.
///
/// Trajectories are rebuilt by replay; fails if the plan does not replay
/// cleanly.
pub fn sum_of_costs(plan: &TimedPlan, inst: &Instance) -> Result<u64, String> {
    let report = crate::validate::validate_mapf(inst, plan);
    match report.failure {
        None => Ok(report.sum_of_costs),
        Some(f) => Err(f.to_string()),
    }
}

/// Scheduler state after a complete run, kept for inspection.
#[derive(Clone, Debug)]
pub struct MapfSchedule {
    pub plan: TimedPlan,
    /// Final `l(u)` per node.
    pub arrivals: Vec<Vec<usize>>,
    /// Final `s(u)` per node.
    pub release: Vec<usize>,
    /// Nodes in the order they were marked processed.
    pub processing_order: Vec<NodeId>,
}

impl MapfSchedule {
    pub fn makespan(&self) -> usize {
        makespan(&self.plan)
    }
}

enum Frame {
    Enter(NodeId),
    Negatives(NodeId),
    Remaining(NodeId, usize),
}

/// Mutable scheduler state over a borrowed rooted tree.
pub struct MapfSolver<'t> {
    rooted: &'t RootedTree,
    table: DemandTable,
    initial_demand: Vec<i64>,
    agent: Vec<bool>,
    arrivals: Vec<VecDeque<usize>>,
    release: Vec<usize>,
    processed: Vec<bool>,
    order: Vec<NodeId>,
    emitted: Vec<TimedMove>,
}

macro_rules! ensure {
    ($cond:expr, $op:expr, $node:expr) => {
        if !$cond {
            debug_assert!($cond, "{} precondition failed at node {}", $op, $node);
            return Err(SolveError::Precondition { op: $op, node: $node });
        }
    };
}

impl<'t> MapfSolver<'t> {
    pub fn new(rooted: &'t RootedTree) -> Self {
        MapfSolver {
            rooted,
            table: DemandTable::default(),
            initial_demand: Vec::new(),
            agent: Vec::new(),
            arrivals: Vec::new(),
            release: Vec::new(),
            processed: Vec::new(),
            order: Vec::new(),
            emitted: Vec::new(),
        }
    }

    pub fn load(&mut self, agents: &[NodeId], targets: &[NodeId]) -> Result<(), SolveError> {
        if agents.len() != targets.len() {
            return Err(SolveError::Infeasible {
                pebbles: agents.len(),
                targets: targets.len(),
            });
        }
        let n = self.rooted.node_count();
        self.table.reset(self.rooted, agents, targets);
        self.initial_demand = self.table.demands().to_vec();
        self.agent = (0..n).map(|u| self.table.is_occupied(u)).collect();
        self.arrivals = vec![VecDeque::new(); n];
        self.release = vec![0; n];
        self.processed = vec![false; n];
        self.order.clear();
        self.emitted.clear();
        Ok(())
    }

    /// Runs the in-order traversal from the root and returns the schedule.
    pub fn run(mut self) -> Result<MapfSchedule, SolveError> {
        self.direct_traffic(self.rooted.root())?;
        Ok(MapfSchedule {
            plan: TimedPlan::new(self.emitted),
            arrivals: self.arrivals.into_iter().map(Vec::from).collect(),
            release: self.release,
            processing_order: self.order,
        })
    }

    fn max_arrival(&self, u: NodeId) -> usize {
        self.arrivals[u].back().copied().unwrap_or(0)
    }

    /// Processes `T_u`: receive the node's own agent, pull agents up from
    /// negative-demand children, forward every agent passing `u`, then
    /// descend into the remaining children.
    fn direct_traffic(&mut self, start: NodeId) -> Result<(), SolveError> {
        let mut stack = vec![Frame::Enter(start)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Enter(u) => {
                    let d = self.table.demand(u);
                    ensure!(d <= 0, "direct_traffic", u);
                    ensure!(d == 0 || self.arrivals[u].is_empty(), "direct_traffic", u);
                    ensure!(d < 0 || self.release[u] == 0, "direct_traffic", u);
                    if self.agent[u] {
                        let s = self.release[u];
                        ensure!(self.arrivals[u].front().map_or(true, |&t| t > s), "direct_traffic", u);
                        self.arrivals[u].push_front(s);
                    }
                    stack.push(Frame::Negatives(u));
                }
                Frame::Negatives(u) => {
                    if let Some(v) = self.table.first_child(u, Sign::Negative) {
                        self.release[v] = self.release[u].saturating_sub(1).max(self.max_arrival(u));
                        stack.push(Frame::Negatives(u));
                        stack.push(Frame::Enter(v));
                        continue;
                    }
                    for i in 0..self.arrivals[u].len() {
                        let t = self.arrivals[u][i];
                        self.send_agent(u, t);
                    }
                    debug_assert!(self.arrivals[u].iter().zip(self.arrivals[u].iter().skip(1)).all(|(a, b)| a < b));
                    debug_assert!(self.arrivals[u].front().map_or(true, |&t| self.release[u] <= t));
                    self.processed[u] = true;
                    self.order.push(u);
                    stack.push(Frame::Remaining(u, 0));
                }
                Frame::Remaining(u, from) => {
                    let children = self.rooted.children(u);
                    if let Some(i) = (from..children.len()).find(|&i| !self.processed[children[i]]) {
                        stack.push(Frame::Remaining(u, i + 1));
                        stack.push(Frame::Enter(children[i]));
                    }
                }
            }
        }
        Ok(())
    }

    /// Forwards the agent passing `u` at time `t`: up while `u` has surplus,
    /// else down into the first child still short of agents, else it stays.
    pub fn send_agent(&mut self, u: NodeId, t: usize) -> Option<TimedMove> {
        let mv = if self.table.demand(u) < 0 {
            let p = self.rooted.parent(u).expect("negative demand at the root");
            self.arrivals[p].push_back(t + 1);
            self.table.add_demand(self.rooted, u, 1);
            TimedMove { from: u, to: p, t }
        } else if let Some(v) = self.table.first_child(u, Sign::Positive) {
            self.arrivals[v].push_back(t + 1);
            self.table.add_demand(self.rooted, v, -1);
            TimedMove { from: u, to: v, t }
        } else {
            return None;
        };
        self.emitted.push(mv);
        Some(mv)
    }

    pub fn initial_demand(&self, u: NodeId) -> i64 {
        self.initial_demand[u]
    }
}

/// Solves unlabeled MAPF on `inst` with the tree rooted at `root`.
pub fn solve_mapf(inst: &Instance, root: NodeId) -> Result<TimedPlan, SolveError> {
    Ok(schedule_mapf(inst, root)?.plan)
}

/// Like [`solve_mapf`] but returns the full scheduler state.
pub fn schedule_mapf(inst: &Instance, root: NodeId) -> Result<MapfSchedule, SolveError> {
    let rooted = RootedTree::new(inst.tree(), root)?;
    let mut solver = MapfSolver::new(&rooted);
    solver.load(inst.pebbles(), inst.targets())?;
    solver.run()
}

/// Parses a timed plan; lines may come in any order.
pub fn parse_timed_plan(text: &str, inst: &Instance) -> Result<TimedPlan, ParseError> {
    let mut moves = Vec::new();
    let mut declared = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = header_field(rest, "moves") {
                declared = Some((i + 1, v));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [a, b, t] = toks[..] else {
            return Err(plan_syntax(i + 1, "timed move line must be `u v t`"));
        };
        let node = |s: &str| inst.resolve_node(s).ok_or_else(|| plan_syntax(i + 1, &format!("unknown node `{s}`")));
        let t = t
            .parse()
            .map_err(|_| plan_syntax(i + 1, "time must be a non-negative integer"))?;
        moves.push(TimedMove {
            from: node(a)?,
            to: node(b)?,
            t,
        });
    }
    check_declared(declared, moves.len())?;
    Ok(TimedPlan::new(moves))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::random_instance;
    use crate::tree::{path_tree, root_tree, Tree};

    fn seven_node() -> Instance {
        let t = Tree::new(7, vec![(0, 1), (1, 3), (2, 3), (3, 5), (4, 5), (5, 6)]).unwrap();
        Instance::new(t, vec![0, 2, 4], vec![3, 5, 6]).unwrap()
    }

    fn tm(from: NodeId, to: NodeId, t: usize) -> TimedMove {
        TimedMove { from, to, t }
    }

    #[test]
    fn seven_node_schedule() {
        let s = schedule_mapf(&seven_node(), 3).unwrap();
        let l: Vec<Vec<usize>> = s.arrivals.clone();
        assert_eq!(l, vec![vec![0], vec![1], vec![2], vec![2, 3], vec![3], vec![3, 4], vec![4]]);
        assert_eq!(s.release, vec![0, 0, 2, 0, 3, 0, 0]);
        assert_eq!(s.makespan(), 4);
        assert_eq!(s.processing_order, vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(
            s.plan.moves(),
            &[tm(0, 1, 0), tm(1, 3, 1), tm(2, 3, 2), tm(3, 5, 2), tm(4, 5, 3), tm(5, 6, 3)]
        );
    }

    #[test]
    fn identical_sets_give_empty_plan() {
        let inst = Instance::new(path_tree(4).unwrap(), vec![0, 2], vec![2, 0]).unwrap();
        let plan = solve_mapf(&inst, 0).unwrap();
        assert!(plan.is_empty());
        assert_eq!(makespan(&plan), 0);
        assert_eq!(sum_of_costs(&plan, &inst), Ok(0));
    }

    #[test]
    fn detour_is_suboptimal() {
        // A=0 B=1 C=2 D=3 E=4 F=5
        let t = Tree::new(6, vec![(0, 3), (0, 1), (0, 2), (1, 4), (3, 5)]).unwrap();
        let inst = Instance::new(t, vec![2, 4], vec![3, 5]).unwrap();
        let plan = solve_mapf(&inst, 0).unwrap();
        assert_eq!(makespan(&plan), 4);
        assert_eq!(sum_of_costs(&plan, &inst), Ok(8));
    }

    #[test]
    fn leaf_with_surplus_sends_up() {
        let rooted = root_tree(&path_tree(2).unwrap(), 0).unwrap();
        let mut solver = MapfSolver::new(&rooted);
        solver.load(&[1], &[0]).unwrap();
        let s = solver.run().unwrap();
        assert_eq!(s.arrivals[1], vec![0]);
        assert_eq!(s.plan.moves(), &[tm(1, 0, 0)]);
    }

    #[test]
    fn send_agent_branches() {
        // path 0-1-2-3 rooted at 0; agents on 2 and 3, targets 0 and 1
        let rooted = root_tree(&path_tree(4).unwrap(), 0).unwrap();
        let mut solver = MapfSolver::new(&rooted);
        solver.load(&[2, 3], &[0, 1]).unwrap();
        assert_eq!(solver.table.demand(2), -2);
        assert_eq!(solver.send_agent(2, 5), Some(tm(2, 1, 5)));
        assert_eq!(solver.arrivals[1].back(), Some(&6));
        assert_eq!(solver.table.demand(2), -1);

        // 0-1-2 rooted at 0, agent on 0, target on 1: downward branch
        let rooted = root_tree(&path_tree(3).unwrap(), 0).unwrap();
        let mut solver = MapfSolver::new(&rooted);
        solver.load(&[0], &[1]).unwrap();
        assert_eq!(solver.send_agent(0, 2), Some(tm(0, 1, 2)));
        assert_eq!(solver.table.demand(1), 0);

        // nothing left to do: the agent stays
        assert_eq!(solver.send_agent(0, 3), None);
    }

    #[test]
    fn target_keeps_last_arrival() {
        let s = schedule_mapf(&seven_node(), 3).unwrap();
        // F (5) sees agents at 3 and 4; the one at 4 stays
        assert!(!s.plan.moves().iter().any(|m| m.from == 5 && m.t == 4));
    }

    #[test]
    fn tight_path_family() {
        for (n, k) in [(7, 3), (8, 3), (20, 5)] {
            let inst = Instance::new(path_tree(n).unwrap(), (0..k).collect(), (n - k..n).collect()).unwrap();
            let plan = solve_mapf(&inst, 0).unwrap();
            assert_eq!(makespan(&plan), n - k);
            assert_eq!(sum_of_costs(&plan, &inst), Ok((k * (n - k)) as u64));
        }
    }

    #[test]
    fn processing_order_prefix_bound() {
        for seed in 0..200 {
            let n = 2 + (seed as usize * 7) % 80;
            let inst = random_instance(n, (seed as usize * 13) % (n + 1), seed).unwrap();
            let s = schedule_mapf(&inst, 0).unwrap();
            let target = inst.target_mask();
            let mut targets_before = 0;
            for (p, &u) in s.processing_order.iter().enumerate() {
                let max_l = s.arrivals[u].last().copied().unwrap_or(0);
                assert!(max_l + targets_before <= p, "seed {seed} node {u}");
                targets_before += usize::from(target[u]);
            }
            assert_eq!(s.processing_order.len(), n);
        }
    }

    #[test]
    fn release_zero_unless_initially_negative() {
        for seed in 0..100 {
            let inst = random_instance(60, 20, seed).unwrap();
            let rooted = root_tree(inst.tree(), 0).unwrap();
            let mut solver = MapfSolver::new(&rooted);
            solver.load(inst.pebbles(), inst.targets()).unwrap();
            let initial: Vec<i64> = (0..60).map(|u| solver.initial_demand(u)).collect();
            let s = solver.run().unwrap();
            for u in 0..60 {
                if initial[u] >= 0 {
                    assert_eq!(s.release[u], 0);
                }
                let l = &s.arrivals[u];
                assert!(l.windows(2).all(|w| w[0] < w[1]));
                if let Some(&first) = l.first() {
                    assert!(s.release[u] <= first);
                }
            }
        }
    }

    #[test]
    fn timed_plan_text_round_trip() {
        let inst = seven_node();
        let plan = solve_mapf(&inst, 3).unwrap();
        let text = plan.to_text(&inst);
        assert!(text.starts_with("# moves=6 makespan=4 soc=11\n"));
        assert_eq!(parse_timed_plan(&text, &inst).unwrap(), plan);
        assert!(parse_timed_plan("0 1\n", &inst).is_err());
        assert!(parse_timed_plan("0 1 x\n", &inst).is_err());
    }
}
