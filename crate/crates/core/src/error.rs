use thiserror::Error;

use crate::tree::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("a tree needs at least one node")]
    Empty,
    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("self-loop at node {node}")]
    SelfLoop { node: NodeId },
    #[error("edge {a}-{b} closes a cycle")]
    Cycle { a: NodeId, b: NodeId },
    #[error("{edges} edges cannot connect {n} nodes (need exactly n-1)")]
    Disconnected { n: usize, edges: usize },
    #[error("root {root} out of range for n = {n}")]
    RootOutOfRange { root: NodeId, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("k = {k} exceeds n = {n}")]
    TooManyPebbles { k: usize, n: usize },
    #[error("{which} node {node} out of range")]
    NodeOutOfRange { which: &'static str, node: NodeId },
    #[error("duplicate {which} node {node}")]
    Duplicate { which: &'static str, node: NodeId },
    #[error("{pebbles} pebbles but {targets} targets")]
    CountMismatch { pebbles: usize, targets: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing header line `n k`")]
    MissingHeader,
    #[error("expected {expected} content lines after the header, found {found}")]
    LineCount { expected: usize, found: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("infeasible: {pebbles} pebbles but {targets} targets")]
    Infeasible { pebbles: usize, targets: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("internal precondition violated in {op} at node {node}")]
    Precondition { op: &'static str, node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state space of {states} configurations exceeds budget {budget}")]
    BudgetExceeded { states: u128, budget: u128 },
    #[error("oracle supports at most {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("check needs at least {min} samples per cell, got {got}")]
    InsufficientSamples { min: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
