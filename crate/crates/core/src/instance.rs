//! Problem instances and their line-oriented text format.
//!
//! ```text
//! # comment
//! n k
//! u v            (n - 1 edge lines)
//! p1 p2 ... pk   (pebble nodes)
//! b1 b2 ... bk   (target nodes)
//! ```
//!
//! Blank lines and `#` lines are skipped. With `k = 0` the pebble and target
//! lines are omitted. Node tokens are either all integers in `0..n`, or
//! arbitrary labels that get ids in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{InstanceError, ParseError};
use crate::tree::{random_labeled_tree_with, NodeId, Tree};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    tree: Tree,
    pebbles: Vec<NodeId>,
    targets: Vec<NodeId>,
    labels: Option<Vec<String>>,
}

impl Instance {
    /// Validates pebble and target sets against the tree.
    ///
    /// The two sets must each be duplicate-free; they may overlap. Equal
    /// sizes are required here because every solver assumes `|P| = |B|`.
    pub fn new(tree: Tree, pebbles: Vec<NodeId>, targets: Vec<NodeId>) -> Result<Self, InstanceError> {
        let n = tree.node_count();
        check_set(&pebbles, n, "pebble")?;
        check_set(&targets, n, "target")?;
        if pebbles.len() != targets.len() {
            return Err(InstanceError::CountMismatch {
                pebbles: pebbles.len(),
                targets: targets.len(),
            });
        }
        Ok(Instance {
            tree,
            pebbles,
            targets,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.tree.node_count());
        self.labels = Some(labels);
        self
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    /// Number of pebbles (equal to the number of targets).
    pub fn k(&self) -> usize {
        self.pebbles.len()
    }

    pub fn pebbles(&self) -> &[NodeId] {
        &self.pebbles
    }

    pub fn targets(&self) -> &[NodeId] {
        &self.targets
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of a node: its label if the instance was labeled.
    pub fn node_name(&self, u: NodeId) -> String {
        match &self.labels {
            Some(l) => l[u].clone(),
            None => u.to_string(),
        }
    }

    /// Resolves a node token (label or integer id) to an id.
    pub fn resolve_node(&self, token: &str) -> Option<NodeId> {
        match &self.labels {
            Some(l) => l.iter().position(|x| x == token),
            None => token.parse().ok().filter(|&u| u < self.node_count()),
        }
    }

    pub fn occupancy(&self) -> Vec<bool> {
        mask(self.node_count(), &self.pebbles)
    }

    pub fn target_mask(&self) -> Vec<bool> {
        mask(self.node_count(), &self.targets)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name = |u: NodeId| self.node_name(u);
        writeln!(out, "{} {}", self.node_count(), self.k()).unwrap();
        for &(a, b) in self.tree.edges() {
            writeln!(out, "{} {}", name(a), name(b)).unwrap();
        }
        if self.k() > 0 {
            for set in [&self.pebbles, &self.targets] {
                let line: Vec<String> = set.iter().map(|&u| name(u)).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        out
    }
}

fn mask(n: usize, nodes: &[NodeId]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &u in nodes {
        m[u] = true;
    }
    m
}

fn check_set(nodes: &[NodeId], n: usize, which: &'static str) -> Result<(), InstanceError> {
    if nodes.len() > n {
        return Err(InstanceError::TooManyPebbles { k: nodes.len(), n });
    }
    let mut seen = vec![false; n];
    for &u in nodes {
        if u >= n {
            return Err(InstanceError::NodeOutOfRange { which, node: u });
        }
        if std::mem::replace(&mut seen[u], true) {
            return Err(InstanceError::Duplicate { which, node: u });
        }
    }
    Ok(())
}

/// Parses the instance text format.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
        .collect();

    let (header_line, header) = lines.first().ok_or(ParseError::MissingHeader)?;
    if header.len() != 2 {
        return Err(syntax(*header_line, "header must be `n k`"));
    }
    let n: usize = header[0]
        .parse()
        .map_err(|_| syntax(*header_line, "n is not a non-negative integer"))?;
    let k: usize = header[1]
        .parse()
        .map_err(|_| syntax(*header_line, "k is not a non-negative integer"))?;
    if n == 0 {
        return Err(syntax(*header_line, "n must be positive"));
    }
    if k > n {
        return Err(InstanceError::TooManyPebbles { k, n }.into());
    }

    let body = &lines[1..];
    let trailer = if k > 0 { 2 } else { 0 };
    if body.len() < trailer {
        return Err(ParseError::LineCount {
            expected: n - 1 + trailer,
            found: body.len(),
        });
    }
    let (edge_lines, set_lines) = body.split_at(body.len() - trailer);
    for (line, toks) in edge_lines {
        if toks.len() != 2 {
            return Err(syntax(*line, "edge line must be `u v`"));
        }
    }
    for (line, toks) in set_lines {
        if toks.len() != k {
            return Err(syntax(*line, &format!("expected {k} nodes, found {}", toks.len())));
        }
    }

    let all_tokens = body.iter().flat_map(|(_, t)| t.iter().copied());
    let numeric = body
        .iter()
        .flat_map(|(_, t)| t.iter())
        .all(|t| t.parse::<usize>().map_or(false, |u| u < n));
    let mut names: HashMap<&str, NodeId> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    if !numeric {
        for tok in all_tokens {
            if !names.contains_key(tok) {
                if labels.len() == n {
                    let line = body.iter().find(|(_, t)| t.contains(&tok)).map_or(0, |(l, _)| *l);
                    return Err(syntax(line, &format!("more than {n} distinct node labels")));
                }
                names.insert(tok, labels.len());
                labels.push(tok.to_string());
            }
        }
        // isolated labels never appear in edges; pad so ids stay dense
        while labels.len() < n {
            labels.push(format!("#{}", labels.len()));
        }
    }
    let id = |tok: &str| -> NodeId {
        if numeric {
            tok.parse().unwrap()
        } else {
            names[tok]
        }
    };

    let edges: Vec<(NodeId, NodeId)> = edge_lines.iter().map(|(_, t)| (id(t[0]), id(t[1]))).collect();
    let tree = Tree::new(n, edges).map_err(InstanceError::from)?;
    let (pebbles, targets) = match set_lines {
        [(_, p), (_, b)] => (p.iter().map(|t| id(t)).collect(), b.iter().map(|t| id(t)).collect()),
        _ => (Vec::new(), Vec::new()),
    };
    let inst = Instance::new(tree, pebbles, targets)?;
    Ok(if numeric { inst } else { inst.with_labels(labels) })
}

fn syntax(line: usize, msg: &str) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.to_string(),
    }
}

/// Uniform labeled tree plus independent uniform `k`-subsets for pebbles and targets.
pub fn random_instance(n: usize, k: usize, seed: u64) -> Result<Instance, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_labeled_tree_with(n, &mut rng)?;
    random_placement(tree, k, &mut rng)
}

/// Path on `n` nodes with uniform random pebble and target subsets.
pub fn random_path_instance(n: usize, k: usize, seed: u64) -> Result<Instance, InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = crate::tree::path_tree(n)?;
    random_placement(tree, k, &mut rng)
}

fn random_placement(tree: Tree, k: usize, rng: &mut ChaCha8Rng) -> Result<Instance, InstanceError> {
    let n = tree.node_count();
    if k > n {
        return Err(InstanceError::TooManyPebbles { k, n });
    }
    let pebbles = sample(rng, n, k).into_vec();
    let targets = sample(rng, n, k).into_vec();
    Instance::new(tree, pebbles, targets)
}
