//! Tree topology: validated edge lists, rooting, and generators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::TreeError;

/// Dense node identifier in `0..n`.
pub type NodeId = usize;

/// Marker for "no node" in parent arrays.
pub const NO_NODE: NodeId = usize::MAX;

/// An undirected tree on nodes `0..n`.
///
/// Adjacency is stored in CSR form; each node's neighbours appear in the
/// order their edges were given. A parent array rooted at node 0 is kept
/// so adjacency tests are O(1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    edges: Vec<(NodeId, NodeId)>,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    parent0: Vec<NodeId>,
}

impl Tree {
    /// Builds a tree, rejecting anything that is not a spanning tree of `0..n`.
    pub fn new(n: usize, edges: Vec<(NodeId, NodeId)>) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::Empty);
        }
        let mut dsu = DisjointSets::new(n);
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(TreeError::NodeOutOfRange { node: a.max(b), n });
            }
            if a == b {
                return Err(TreeError::SelfLoop { node: a });
            }
            if !dsu.union(a, b) {
                return Err(TreeError::Cycle { a, b });
            }
        }
        if edges.len() != n - 1 {
            return Err(TreeError::Disconnected {
                n,
                edges: edges.len(),
            });
        }

        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0; 2 * edges.len()];
        for &(a, b) in &edges {
            neighbors[fill[a]] = b;
            fill[a] += 1;
            neighbors[fill[b]] = a;
            fill[b] += 1;
        }

        let mut tree = Tree {
            edges,
            offsets,
            neighbors,
            parent0: Vec::new(),
        };
        tree.parent0 = tree.parents_from(0);
        Ok(tree)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        u != v && (self.parent0[u] == v || self.parent0[v] == u)
    }

    /// Parent array of the tree rooted at `root`, by iterative traversal.
    fn parents_from(&self, root: NodeId) -> Vec<NodeId> {
        let n = self.node_count();
        let mut parent = vec![NO_NODE; n];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if v != parent[u] {
                    parent[v] = u;
                    stack.push(v);
                }
            }
        }
        parent
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// A tree with a distinguished root, parent pointers and ordered child lists.
///
/// Children of a node are listed in the order the rooting traversal met
/// them, which is the order of that node's edges in the input.
#[derive(Clone, Debug)]
pub struct RootedTree {
    root: NodeId,
    parent: Vec<NodeId>,
    /// `children[span[u].0..span[u].1]` are the children of `u`.
    span: Vec<(usize, usize)>,
    children: Vec<NodeId>,
    order: Vec<NodeId>,
}

impl RootedTree {
    /// Roots `tree` by breadth-first search, which keeps each node's
    /// children contiguous in the visiting order.
    pub fn new(tree: &Tree, root: NodeId) -> Result<Self, TreeError> {
        let n = tree.node_count();
        if root >= n {
            return Err(TreeError::RootOutOfRange { root, n });
        }
        let mut parent = vec![NO_NODE; n];
        let mut span = vec![(0, 0); n];
        let mut order = Vec::with_capacity(n);
        order.push(root);
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            let p = parent[u];
            let start = order.len();
            for &v in tree.neighbors(u) {
                if v != p {
                    parent[v] = u;
                    order.push(v);
                }
            }
            span[u] = (start, order.len());
            i += 1;
        }
        Ok(RootedTree {
            root,
            parent,
            span,
            children: order.clone(),
            order,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Parent of `u`, or `None` at the root.
    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        let p = self.parent[u];
        (p != NO_NODE).then_some(p)
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        let (a, b) = self.span[u];
        &self.children[a..b]
    }

    pub fn is_child_of(&self, v: NodeId, u: NodeId) -> bool {
        self.parent[v] == u
    }

    /// All nodes, each after its parent.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    /// The same rooted tree with every node renamed to its position in
    /// depth-first preorder (children visited in list order).
    ///
    /// Child order is kept, every subtree becomes a contiguous range, and
    /// the renamed tree's `order()` is the identity.
    pub fn relabel_preorder(&self) -> Relabeling {
        let n = self.node_count();
        let size = self.subtree_sizes();
        let mut pos = vec![0; n];
        let mut name = vec![0; n];
        let mut parent = vec![NO_NODE; n];
        let mut span = vec![(0, 0); n];
        let mut children = vec![0; self.children.len()];
        // child slots keep their places; only the names stored in them change
        for &u in &self.order {
            let i = pos[u];
            name[i] = u;
            let (a, b) = self.span[u];
            span[i] = (a, b);
            let mut next = i + 1;
            for slot in a..b {
                let c = self.children[slot];
                pos[c] = next;
                children[slot] = next;
                parent[next] = i;
                next += size[c];
            }
        }
        let tree = RootedTree {
            root: 0,
            parent,
            span,
            children,
            order: (0..n).collect(),
        };
        Relabeling { tree, pos, name }
    }

    /// `|T_u|` for every node.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1usize; self.node_count()];
        for &u in self.order.iter().rev() {
            if let Some(p) = self.parent(u) {
                size[p] += size[u];
            }
        }
        size
    }
}

/// A rooted tree renamed to preorder positions, with the renaming both ways.
#[derive(Clone, Debug)]
pub struct Relabeling {
    pub tree: RootedTree,
    /// `pos[u]` is the new name of original node `u`.
    pub pos: Vec<NodeId>,
    /// `name[i]` is the original node renamed to `i`.
    pub name: Vec<NodeId>,
}

/// Roots `tree` at `root`.
pub fn root_tree(tree: &Tree, root: NodeId) -> Result<RootedTree, TreeError> {
    RootedTree::new(tree, root)
}

/// The path `0 - 1 - ... - (n-1)`.
pub fn path_tree(n: usize) -> Result<Tree, TreeError> {
    Tree::new(n, (1..n).map(|i| (i - 1, i)).collect())
}

/// A uniformly random labeled tree on `n` nodes, deterministic in `seed`.
pub fn random_labeled_tree(n: usize, seed: u64) -> Result<Tree, TreeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_labeled_tree_with(n, &mut rng)
}

pub(crate) fn random_labeled_tree_with<R: Rng>(n: usize, rng: &mut R) -> Result<Tree, TreeError> {
    match n {
        0 => Err(TreeError::Empty),
        1 => Tree::new(1, Vec::new()),
        2 => Tree::new(2, vec![(0, 1)]),
        _ => {
            let seq: Vec<NodeId> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            Tree::new(n, prufer_decode(n, &seq))
        }
    }
}

/// Decodes a Prüfer sequence of length `n - 2` into the edges of its tree.
///
/// Linear time: a pointer walks the candidate leaves in increasing order and
/// a newly created leaf smaller than the pointer is consumed immediately.
pub fn prufer_decode(n: usize, seq: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    assert!(n >= 2 && seq.len() == n - 2, "Prüfer sequence must have length n - 2");
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &x in seq {
        edges.push((leaf, x));
        degree[x] -= 1;
        if degree[x] == 1 && x < ptr {
            leaf = x;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n - 1));
    edges
}

/// Every labeled tree on `n` nodes, one per Prüfer sequence (`n^(n-2)` trees).
pub fn all_labeled_trees(n: usize) -> impl Iterator<Item = Tree> {
    let len = n.saturating_sub(2);
    let total = if n >= 2 { n.pow(len as u32) } else { 1 };
    (0..total).map(move |mut code| {
        if n <= 2 {
            return if n == 1 {
                Tree::new(1, Vec::new()).unwrap()
            } else {
                Tree::new(2, vec![(0, 1)]).unwrap()
            };
        }
        let mut seq = vec![0; len];
        for slot in seq.iter_mut() {
            *slot = code % n;
            code /= n;
        }
        Tree::new(n, prufer_decode(n, &seq)).expect("Prüfer decoding yields a tree")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seven_node_tree() -> Tree {
        // A=0 .. G=6
        Tree::new(7, vec![(0, 1), (1, 3), (2, 3), (3, 5), (4, 5), (5, 6)]).unwrap()
    }

    #[test]
    fn rejects_bad_edge_sets() {
        assert!(matches!(
            Tree::new(3, vec![(0, 1), (1, 2), (0, 2)]),
            Err(TreeError::Cycle { .. })
        ));
        assert!(matches!(
            Tree::new(3, vec![(0, 1)]),
            Err(TreeError::Disconnected { .. })
        ));
        assert!(matches!(
            Tree::new(2, vec![(1, 1)]),
            Err(TreeError::SelfLoop { node: 1 })
        ));
        assert!(matches!(
            Tree::new(3, vec![(0, 1), (0, 1)]),
            Err(TreeError::Cycle { .. })
        ));
        assert!(matches!(
            Tree::new(2, vec![(0, 5)]),
            Err(TreeError::NodeOutOfRange { .. })
        ));
        assert!(matches!(Tree::new(0, vec![]), Err(TreeError::Empty)));
    }

    #[test]
    fn rooting_seven_node_at_d() {
        let rooted = root_tree(&seven_node_tree(), 3).unwrap();
        assert_eq!(rooted.parent(5), Some(3));
        assert_eq!(rooted.parent(6), Some(5));
        assert_eq!(rooted.parent(0), Some(1));
        assert_eq!(rooted.parent(3), None);
        assert_eq!(rooted.children(3), &[1, 2, 5]);
        assert_eq!(rooted.children(5), &[4, 6]);
    }

    #[test]
    fn rooting_small_paths() {
        let p = path_tree(3).unwrap();
        let mid = root_tree(&p, 1).unwrap();
        assert_eq!(mid.children(1), &[0, 2]);
        let end = root_tree(&p, 0).unwrap();
        assert_eq!(end.parent(2), Some(1));
        assert_eq!(end.parent(1), Some(0));
        assert_eq!(end.parent(0), None);
        assert!(matches!(root_tree(&p, 3), Err(TreeError::RootOutOfRange { .. })));
    }

    #[test]
    fn path_constructor() {
        assert_eq!(path_tree(3).unwrap().edges(), &[(0, 1), (1, 2)]);
        assert!(path_tree(1).unwrap().edges().is_empty());
        let p7 = path_tree(7).unwrap();
        assert_eq!(p7.edges().len(), 6);
        let rooted = root_tree(&p7, 0).unwrap();
        let depth_of_6 = std::iter::successors(Some(6), |&u| rooted.parent(u)).count() - 1;
        assert_eq!(depth_of_6, 6);
    }

    #[test]
    fn adjacency_is_symmetric_and_exact() {
        let t = seven_node_tree();
        for a in 0..7 {
            for b in 0..7 {
                let listed = t.neighbors(a).contains(&b);
                assert_eq!(t.are_adjacent(a, b), listed);
            }
        }
    }

    #[test]
    fn subtree_sizes_of_star() {
        let star = Tree::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let rooted = root_tree(&star, 0).unwrap();
        assert_eq!(rooted.subtree_sizes(), vec![4, 1, 1, 1]);
    }

    #[test]
    fn small_random_trees() {
        assert!(random_labeled_tree(1, 7).unwrap().edges().is_empty());
        assert_eq!(random_labeled_tree(2, 7).unwrap().edges(), &[(0, 1)]);
        assert_eq!(random_labeled_tree(50, 9), random_labeled_tree(50, 9));
    }

    #[test]
    fn prufer_decode_known_sequence() {
        // sequence (3, 3, 3, 4) on 6 nodes: leaves 0,1,2 hang off 3, then 3-4, 4-5
        let edges = prufer_decode(6, &[3, 3, 3, 4]);
        assert_eq!(edges, vec![(0, 3), (1, 3), (2, 3), (3, 4), (4, 5)]);
    }

    #[test]
    fn enumeration_counts_match_cayley() {
        for n in 1..=6usize {
            let expected = if n <= 2 { 1 } else { n.pow(n as u32 - 2) };
            let mut seen = std::collections::HashSet::new();
            for t in all_labeled_trees(n) {
                let mut e: Vec<_> = t.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
                e.sort();
                seen.insert(e);
            }
            assert_eq!(seen.len(), expected, "n = {n}");
        }
    }

    #[test]
    fn preorder_relabel_keeps_shape() {
        for seed in 0..20 {
            let t = random_labeled_tree(40, seed).unwrap();
            let rooted = RootedTree::new(&t, (seed % 40) as usize).unwrap();
            let Relabeling { tree: local, pos, name } = rooted.relabel_preorder();
            assert_eq!(local.order(), (0..40).collect::<Vec<_>>());
            for &u in rooted.order() {
                assert_eq!(local.parent(pos[u]), rooted.parent(u).map(|p| pos[p]));
                let mapped: Vec<_> = rooted.children(u).iter().map(|&c| pos[c]).collect();
                assert_eq!(local.children(pos[u]), mapped);
                assert_eq!(name[pos[u]], u);
            }
        }
    }
}
