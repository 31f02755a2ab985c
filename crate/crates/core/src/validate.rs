//! Replay validators for sequential and timed plans.
//!
//! Validators never look at solver state; occupancy is rebuilt from the
//! instance and the plan alone.

use std::fmt;

use crate::demand::compute_demands;
use crate::instance::Instance;
use crate::mapf::TimedPlan;
use crate::tree::{NodeId, RootedTree, NO_NODE};
use crate::upmt::Plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    NodeOutOfRange,
    NotAdjacent,
    EmptySource,
    OccupiedDestination,
    VertexConflict,
    EdgeSwap,
    TargetsNotReached,
}

impl Violation {
    pub fn as_str(self) -> &'static str {
        match self {
            Violation::NodeOutOfRange => "node out of range",
            Violation::NotAdjacent => "non-adjacent move",
            Violation::EmptySource => "empty source",
            Violation::OccupiedDestination => "occupied destination",
            Violation::VertexConflict => "vertex conflict",
            Violation::EdgeSwap => "edge swap",
            Violation::TargetsNotReached => "final configuration differs from targets",
        }
    }
}

/// First rule a plan breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub violation: Violation,
    /// Index of the offending move in the (time-sorted) plan, if any.
    pub index: Option<usize>,
    pub timestep: Option<usize>,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.violation.as_str())?;
        if let Some(i) = self.index {
            write!(f, " at move {i}")?;
        }
        if let Some(t) = self.timestep {
            write!(f, " (t={t})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub feasible: bool,
    pub failure: Option<Failure>,
    /// Number of edge moves.
    pub length: usize,
    /// `sum |d(u)|` of the initial configuration.
    pub lower_bound: u64,
    pub meets_bound: bool,
    /// Timed plans only.
    pub timed: bool,
    pub makespan: usize,
    pub sum_of_costs: u64,
    pub agent_costs: Vec<u64>,
    pub wait_count: u64,
    /// Every agent waits only before its first move.
    pub waits_up_front: bool,
}

impl ValidationReport {
    fn fail(mut self, violation: Violation, index: Option<usize>, timestep: Option<usize>) -> Self {
        self.feasible = false;
        self.failure = Some(Failure {
            violation,
            index,
            timestep,
        });
        self
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = match &self.failure {
            None => "plan is feasible\n".to_string(),
            Some(f) => format!("plan is INFEASIBLE: {f}\n"),
        };
        s += &format!("moves: {} (lower bound {})\n", self.length, self.lower_bound);
        if self.timed {
            s += &format!(
                "makespan: {}\nsum of costs: {} ({} waits)\n",
                self.makespan, self.sum_of_costs, self.wait_count
            );
        }
        s
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut kv = vec![
            ("feasible".to_string(), self.feasible.to_string()),
            (
                "reason".to_string(),
                self.failure
                    .as_ref()
                    .map_or("none".to_string(), |f| f.violation.as_str().replace(' ', "_")),
            ),
            (
                "index".to_string(),
                self.failure
                    .as_ref()
                    .and_then(|f| f.index)
                    .map_or("none".to_string(), |i| i.to_string()),
            ),
            ("length".to_string(), self.length.to_string()),
            ("lower_bound".to_string(), self.lower_bound.to_string()),
            ("meets_bound".to_string(), self.meets_bound.to_string()),
        ];
        if self.timed {
            kv.push(("makespan".into(), self.makespan.to_string()));
            kv.push(("soc".into(), self.sum_of_costs.to_string()));
            kv.push(("waits".into(), self.wait_count.to_string()));
            kv.push(("waits_up_front".into(), self.waits_up_front.to_string()));
            let costs: Vec<String> = self.agent_costs.iter().map(|c| c.to_string()).collect();
            kv.push(("agent_costs".into(), costs.join(",")));
        }
        kv.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn base_report(inst: &Instance, length: usize) -> ValidationReport {
    let rooted = RootedTree::new(inst.tree(), 0).expect("node 0 exists");
    let lower_bound = compute_demands(&rooted, inst).lower_bound();
    ValidationReport {
        feasible: true,
        length,
        lower_bound,
        meets_bound: length as u64 == lower_bound,
        waits_up_front: true,
        ..Default::default()
    }
}

/// Replays a sequential plan one move at a time.
pub fn validate_upmt(inst: &Instance, plan: &Plan) -> ValidationReport {
    let report = base_report(inst, plan.len());
    let n = inst.node_count();
    let mut occ = inst.occupancy();
    for (i, m) in plan.moves.iter().enumerate() {
        if m.from >= n || m.to >= n {
            return report.fail(Violation::NodeOutOfRange, Some(i), None);
        }
        if !inst.tree().are_adjacent(m.from, m.to) {
            return report.fail(Violation::NotAdjacent, Some(i), None);
        }
        if !occ[m.from] {
            return report.fail(Violation::EmptySource, Some(i), None);
        }
        if occ[m.to] {
            return report.fail(Violation::OccupiedDestination, Some(i), None);
        }
        occ[m.from] = false;
        occ[m.to] = true;
    }
    if occ != inst.target_mask() {
        return report.fail(Violation::TargetsNotReached, None, None);
    }
    report
}

/// Per-agent list of `(node, arrival time)`, starting at `(start, 0)`.
pub type Trajectory = Vec<(NodeId, usize)>;

struct Replay {
    trajectories: Vec<Trajectory>,
    failure: Option<(Violation, Option<usize>, Option<usize>)>,
}

/// Simulates a timed plan step by step, attributing each move to the agent
/// occupying its source at departure.
fn replay_timed(inst: &Instance, plan: &TimedPlan) -> Replay {
    let n = inst.node_count();
    let mut occupant = vec![NO_NODE; n];
    let mut trajectories: Vec<Trajectory> = Vec::with_capacity(inst.k());
    for (a, &p) in inst.pebbles().iter().enumerate() {
        occupant[p] = a;
        trajectories.push(vec![(p, 0)]);
    }
    // departing[u] / arriving[u]: index of the move leaving / entering u this step
    let mut departing = vec![NO_NODE; n];
    let mut arriving = vec![NO_NODE; n];
    let moves = plan.moves();
    let fail = |trajectories, v, i: usize, t| Replay {
        trajectories,
        failure: Some((v, Some(i), Some(t))),
    };

    let mut start = 0;
    while start < moves.len() {
        let t = moves[start].t;
        let end = start + moves[start..].iter().take_while(|m| m.t == t).count();
        let step = &moves[start..end];

        for (j, m) in step.iter().enumerate() {
            let i = start + j;
            if m.from >= n || m.to >= n {
                return fail(trajectories, Violation::NodeOutOfRange, i, t);
            }
            if !inst.tree().are_adjacent(m.from, m.to) {
                return fail(trajectories, Violation::NotAdjacent, i, t);
            }
            if occupant[m.from] == NO_NODE || departing[m.from] != NO_NODE {
                return fail(trajectories, Violation::EmptySource, i, t);
            }
            departing[m.from] = i;
        }
        for (j, m) in step.iter().enumerate() {
            let i = start + j;
            if arriving[m.to] != NO_NODE {
                return fail(trajectories, Violation::VertexConflict, i, t);
            }
            let leaving = departing[m.to];
            if leaving != NO_NODE && moves[leaving].to == m.from {
                return fail(trajectories, Violation::EdgeSwap, i, t);
            }
            if occupant[m.to] != NO_NODE && leaving == NO_NODE {
                return fail(trajectories, Violation::OccupiedDestination, i, t);
            }
            arriving[m.to] = i;
        }

        let agents: Vec<usize> = step.iter().map(|m| occupant[m.from]).collect();
        for m in step {
            occupant[m.from] = NO_NODE;
            departing[m.from] = NO_NODE;
        }
        for (m, a) in step.iter().zip(agents) {
            occupant[m.to] = a;
            arriving[m.to] = NO_NODE;
            trajectories[a].push((m.to, t + 1));
        }
        start = end;
    }

    let failure = inst
        .targets()
        .iter()
        .any(|&b| occupant[b] == NO_NODE)
        .then_some((Violation::TargetsNotReached, None, None));
    Replay { trajectories, failure }
}

/// Replays a timed plan: vertex conflicts, edge swaps, adjacency and
/// occupancy are checked at every timestep, and per-agent costs are derived
/// from the reconstructed trajectories.
pub fn validate_mapf(inst: &Instance, plan: &TimedPlan) -> ValidationReport {
    let mut report = base_report(inst, plan.move_count());
    report.timed = true;
    let replay = replay_timed(inst, plan);
    if let Some((v, i, t)) = replay.failure {
        return report.fail(v, i, t);
    }
    for traj in &replay.trajectories {
        let cost = traj.last().map_or(0, |&(_, t)| t) as u64;
        let moves = (traj.len() - 1) as u64;
        report.agent_costs.push(cost);
        report.sum_of_costs += cost;
        report.wait_count += cost - moves;
        report.makespan = report.makespan.max(cost as usize);
        if !traj.windows(2).skip(1).all(|w| w[1].1 == w[0].1 + 1) {
            report.waits_up_front = false;
        }
    }
    report
}

/// Rebuilds one trajectory per agent, in the order of `inst.pebbles()`.
pub fn reconstruct_trajectories(inst: &Instance, plan: &TimedPlan) -> Result<Vec<Trajectory>, Failure> {
    let replay = replay_timed(inst, plan);
    match replay.failure {
        Some((violation, index, timestep)) if violation != Violation::TargetsNotReached => Err(Failure {
            violation,
            index,
            timestep,
        }),
        _ => Ok(replay.trajectories),
    }
}
