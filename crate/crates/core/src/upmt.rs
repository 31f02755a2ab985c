//! Optimal unlabeled pebble motion on trees.
//!
//! Every emitted move takes a pebble across an edge in the direction that
//! reduces the demand on that edge, so the plan length equals
//! `sum |d(u)|`, which is also a lower bound for any feasible plan.
//!
//! The recursive formulation (balance, inject, extract) is run with
//! explicit stacks; recursion depth would otherwise reach the tree height.

use std::fmt::Write as _;

use crate::demand::{DemandTable, Sign};
use crate::error::SolveError;
use crate::instance::Instance;
use crate::tree::{NodeId, Relabeling, RootedTree};

/// One pebble slide along an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub from: NodeId,
    pub to: NodeId,
}

/// Receives moves as they are generated.
pub trait MoveSink {
    fn push(&mut self, mv: Move);
}

impl MoveSink for Vec<Move> {
    fn push(&mut self, mv: Move) {
        Vec::push(self, mv);
    }
}

/// Discards moves, counting them.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSink {
    pub count: u64,
}

impl MoveSink for NullSink {
    fn push(&mut self, _mv: Move) {
        self.count += 1;
    }
}

/// A sequential plan.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub moves: Vec<Move>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// `# moves=<L>` header followed by one `u v` line per move.
    pub fn to_text(&self, inst: &Instance) -> String {
        let mut out = String::with_capacity(16 * self.moves.len() + 16);
        writeln!(out, "# moves={}", self.moves.len()).unwrap();
        for m in &self.moves {
            writeln!(out, "{} {}", inst.node_name(m.from), inst.node_name(m.to)).unwrap();
        }
        out
    }
}

macro_rules! ensure {
    ($cond:expr, $op:expr, $node:expr) => {
        if !$cond {
            debug_assert!($cond, "{} precondition failed at node {}", $op, $node);
            return Err(SolveError::Precondition { op: $op, node: $node });
        }
    };
}

/// Mutable solver state over a borrowed rooted tree.
///
/// One solver can be reloaded with many configurations on the same tree
/// without reallocating. Internally nodes are renamed to preorder positions
/// so that subtrees occupy contiguous index ranges; every public method
/// takes and returns the original node ids.
pub struct UpmtSolver {
    local: RootedTree,
    pos: Vec<NodeId>,
    name: Vec<NodeId>,
    table: DemandTable,
    pebbles: Vec<NodeId>,
    targets: Vec<NodeId>,
    stack: Vec<NodeId>,
    chain: Vec<NodeId>,
    emitted: u64,
}

impl UpmtSolver {
    pub fn new(rooted: &RootedTree) -> Self {
        let Relabeling { tree: local, pos, name } = rooted.relabel_preorder();
        UpmtSolver {
            local,
            pos,
            name,
            table: DemandTable::default(),
            pebbles: Vec::new(),
            targets: Vec::new(),
            stack: Vec::new(),
            chain: Vec::new(),
            emitted: 0,
        }
    }

    fn name(&self, i: NodeId) -> NodeId {
        self.name[i]
    }

    /// Loads a configuration; rejects `|P| != |B|`.
    pub fn load(&mut self, pebbles: &[NodeId], targets: &[NodeId]) -> Result<(), SolveError> {
        if pebbles.len() != targets.len() {
            return Err(SolveError::Infeasible {
                pebbles: pebbles.len(),
                targets: targets.len(),
            });
        }
        self.pebbles.clear();
        self.pebbles.extend(pebbles.iter().map(|&u| self.pos[u]));
        self.targets.clear();
        self.targets.extend(targets.iter().map(|&u| self.pos[u]));
        self.table.reset(&self.local, &self.pebbles, &self.targets);
        self.emitted = 0;
        Ok(())
    }

    /// Current `d(u)`.
    pub fn demand(&self, u: NodeId) -> i64 {
        self.table.demand(self.pos[u])
    }

    /// Current demands indexed by node.
    pub fn demands(&self) -> Vec<i64> {
        self.pos.iter().map(|&i| self.table.demand(i)).collect()
    }

    pub fn first_child(&self, u: NodeId, sign: Sign) -> Option<NodeId> {
        self.table.first_child(self.pos[u], sign).map(|i| self.name(i))
    }

    pub fn children_with_sign(&self, u: NodeId, sign: Sign) -> impl Iterator<Item = NodeId> + '_ {
        self.table.children_with_sign(self.pos[u], sign).map(|i| self.name(i))
    }

    /// `sum |d(u)|` of the current state.
    pub fn lower_bound(&self) -> u64 {
        self.table.lower_bound()
    }

    /// Moves emitted since the last `load`.
    pub fn moves_emitted(&self) -> u64 {
        self.emitted
    }

    /// Solves the loaded configuration, streaming moves into `sink`.
    pub fn run<S: MoveSink>(&mut self, sink: &mut S) -> Result<(), SolveError> {
        self.balance(self.local.root(), sink)
    }

    /// Zeroes every demand in `T_u`; requires `d(u) = 0`.
    pub fn balance_subtrees<S: MoveSink>(&mut self, u: NodeId, sink: &mut S) -> Result<(), SolveError> {
        self.balance(self.pos[u], sink)
    }

    /// Moves the pebble on `parent(v)` into `v`, first pushing any pebble on
    /// `v` further down along positive-demand children.
    pub fn inject_pebble<S: MoveSink>(&mut self, v: NodeId, sink: &mut S) -> Result<(), SolveError> {
        self.inject(self.pos[v], sink)
    }

    /// Moves a pebble from `v` up to `parent(v)`, first pulling one up into
    /// `v` along negative-demand children if `v` is empty.
    pub fn extract_pebble<S: MoveSink>(&mut self, v: NodeId, sink: &mut S) -> Result<(), SolveError> {
        self.extract(self.pos[v], sink)
    }

    /// Slides the pebble on `u` to the adjacent empty node `v` and updates demand.
    pub fn move_pebble<S: MoveSink>(&mut self, u: NodeId, v: NodeId, sink: &mut S) -> Result<(), SolveError> {
        self.slide(self.pos[u], self.pos[v], sink)
    }

    fn balance<S: MoveSink>(&mut self, u: NodeId, sink: &mut S) -> Result<(), SolveError> {
        ensure!(self.table.demand(u) == 0, "balance_subtrees", self.name(u));
        self.stack.clear();
        self.stack.push(u);
        while let Some(u) = self.stack.pop() {
            loop {
                let pick = if self.table.is_occupied(u) {
                    self.table.first_child(u, Sign::Positive).map(|v| (v, true))
                } else {
                    self.table.first_child(u, Sign::Negative).map(|v| (v, false))
                };
                match pick {
                    Some((v, true)) => self.inject(v, sink)?,
                    Some((v, false)) => self.extract(v, sink)?,
                    None => {
                        // with d(u) = 0 the only way to stall is all children balanced
                        let stuck = self.table.first_child(u, Sign::Positive).is_some()
                            || self.table.first_child(u, Sign::Negative).is_some();
                        ensure!(!stuck, "balance_subtrees", self.name(u));
                        break;
                    }
                }
            }
            self.stack.extend(self.local.children(u).iter().rev());
        }
        Ok(())
    }

    fn inject<S: MoveSink>(&mut self, v: NodeId, sink: &mut S) -> Result<(), SolveError> {
        let parent = self.local.parent(v);
        ensure!(parent.is_some(), "inject_pebble", self.name(v));
        let u = parent.unwrap();
        ensure!(self.table.is_occupied(u), "inject_pebble", self.name(v));
        ensure!(self.table.demand(v) > 0, "inject_pebble", self.name(v));
        self.chain.clear();
        self.chain.push(u);
        self.chain.push(v);
        let mut w = v;
        while self.table.is_occupied(w) {
            let next = self.table.first_child(w, Sign::Positive);
            ensure!(next.is_some(), "inject_pebble", self.name(w));
            w = next.unwrap();
            self.chain.push(w);
        }
        for i in (1..self.chain.len()).rev() {
            self.slide(self.chain[i - 1], self.chain[i], sink)?;
        }
        Ok(())
    }

    fn extract<S: MoveSink>(&mut self, v: NodeId, sink: &mut S) -> Result<(), SolveError> {
        let parent = self.local.parent(v);
        ensure!(parent.is_some(), "extract_pebble", self.name(v));
        let u = parent.unwrap();
        ensure!(!self.table.is_occupied(u), "extract_pebble", self.name(v));
        ensure!(self.table.demand(v) < 0, "extract_pebble", self.name(v));
        self.chain.clear();
        self.chain.push(u);
        self.chain.push(v);
        let mut w = v;
        while !self.table.is_occupied(w) {
            let next = self.table.first_child(w, Sign::Negative);
            ensure!(next.is_some(), "extract_pebble", self.name(w));
            w = next.unwrap();
            self.chain.push(w);
        }
        for i in (1..self.chain.len()).rev() {
            self.slide(self.chain[i], self.chain[i - 1], sink)?;
        }
        Ok(())
    }

    fn slide<S: MoveSink>(&mut self, u: NodeId, v: NodeId, sink: &mut S) -> Result<(), SolveError> {
        ensure!(self.table.is_occupied(u), "move_pebble", self.name(u));
        ensure!(!self.table.is_occupied(v), "move_pebble", self.name(v));
        if self.local.is_child_of(v, u) {
            ensure!(self.table.demand(v) > 0, "move_pebble", self.name(v));
            self.table.add_demand(&self.local, v, -1);
        } else {
            ensure!(self.local.is_child_of(u, v), "move_pebble", self.name(u));
            ensure!(self.table.demand(u) < 0, "move_pebble", self.name(u));
            self.table.add_demand(&self.local, u, 1);
        }
        self.table.set_occupied(u, false);
        self.table.set_occupied(v, true);
        self.emitted += 1;
        sink.push(Move {
            from: self.name(u),
            to: self.name(v),
        });
        Ok(())
    }
}

/// Solves `inst` optimally with the tree rooted at `root`.
pub fn solve_upmt(inst: &Instance, root: NodeId) -> Result<Plan, SolveError> {
    let rooted = RootedTree::new(inst.tree(), root)?;
    let mut solver = UpmtSolver::new(&rooted);
    solver.load(inst.pebbles(), inst.targets())?;
    let mut moves = Vec::with_capacity(solver.lower_bound() as usize);
    solver.run(&mut moves)?;
    Ok(Plan { moves })
}

/// Solves `inst` streaming moves into `sink`; returns the plan length.
pub fn solve_upmt_into<S: MoveSink>(inst: &Instance, root: NodeId, sink: &mut S) -> Result<u64, SolveError> {
    let rooted = RootedTree::new(inst.tree(), root)?;
    let mut solver = UpmtSolver::new(&rooted);
    solver.load(inst.pebbles(), inst.targets())?;
    solver.run(sink)?;
    Ok(solver.moves_emitted())
}

/// Parses a sequential plan; node tokens are resolved through `inst`.
pub fn parse_plan(text: &str, inst: &Instance) -> Result<Plan, crate::error::ParseError> {
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
        let [a, b] = toks[..] else {
            return Err(plan_syntax(i + 1, "move line must be `u v`"));
        };
        let node = |t: &str| inst.resolve_node(t).ok_or_else(|| plan_syntax(i + 1, &format!("unknown node `{t}`")));
        moves.push(Move {
            from: node(a)?,
            to: node(b)?,
        });
    }
    check_declared(declared, moves.len())?;
    Ok(Plan { moves })
}

pub(crate) fn header_field(header: &str, key: &str) -> Option<u64> {
    header
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.parse().ok())
}

pub(crate) fn check_declared(declared: Option<(usize, u64)>, found: usize) -> Result<(), crate::error::ParseError> {
    match declared {
        Some((line, d)) if d as usize != found => {
            Err(plan_syntax(line, &format!("header declares {d} moves, found {found}")))
        }
        _ => Ok(()),
    }
}

pub(crate) fn plan_syntax(line: usize, msg: &str) -> crate::error::ParseError {
    crate::error::ParseError::Syntax {
        line,
        msg: msg.to_string(),
    }
}
