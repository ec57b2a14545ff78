//! Underlying graphs: the half line, the full line, rooted trees and the
//! square lattice.
//!
//! Every topology fixes a canonical neighbor order, which the walk engine
//! uses for inverse-CDF sampling:
//!
//! * `LineN` / `LineZ`: left, right
//! * `Lattice2D`: left, up, right, down
//! * `Tree`: parent first, then children by index

use std::fmt;
use std::sync::Arc;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

/// A vertex of one of the supported topologies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, JsonSchema)]
pub enum Vertex {
    /// Integer vertex of `LineN` or `LineZ`.
    Int(i64),
    /// Index into a [`RootedTree`]; the root is `Node(0)`.
    Node(u32),
    /// Lattice site `(x, y)`.
    Site(i64, i64),
}

impl Vertex {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Vertex::Int(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_site(self) -> Option<(i64, i64)> {
        match self {
            Vertex::Site(x, y) => Some((x, y)),
            _ => None,
        }
    }

    pub fn as_node(self) -> Option<u32> {
        match self {
            Vertex::Node(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Int(x) => write!(f, "{x}"),
            Vertex::Node(i) => write!(f, "node {i}"),
            Vertex::Site(x, y) => write!(f, "({x},{y})"),
        }
    }
}

/// An undirected edge in canonical form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Edge {
    /// The line edge `(j, j+1)`.
    Line(i64),
    /// The tree edge between a child and its parent, identified by the child.
    /// The second field is the level of the edge (depth of the child minus one).
    Tree(u32, u32),
    /// The lattice edge `(x, y) -- (x+1, y)`.
    Horizontal(i64, i64),
    /// The lattice edge `(x, y) -- (x, y+1)`.
    Vertical(i64, i64),
}

impl Edge {
    /// Index used by closed-form conductance rules: `j` for a line edge, the
    /// level for a tree edge, the left endpoint's `x` for a lattice edge.
    pub fn level(self) -> i64 {
        match self {
            Edge::Line(j) => j,
            Edge::Tree(_, level) => i64::from(level),
            Edge::Horizontal(x, _) | Edge::Vertical(x, _) => x,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edge::Line(j) => write!(f, "({j},{})", j + 1),
            Edge::Tree(c, _) => write!(f, "(parent of {c},{c})"),
            Edge::Horizontal(x, y) => write!(f, "(({x},{y}),({},{y}))", x + 1),
            Edge::Vertical(x, y) => write!(f, "(({x},{y}),({x},{}))", y + 1),
        }
    }
}

/// A finite rooted tree stored in compressed child-list form.
///
/// Vertex 0 is the root. Every child has a larger index than its parent, so
/// iterating indices in reverse visits leaves before their ancestors.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedTree {
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    children: Vec<u32>,
    max_depth: u32,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum TreeError {
    #[error("tree must have at least one vertex")]
    Empty,
    #[error("vertex {0} is not reachable from the root")]
    Unreachable(usize),
    #[error("child index {child} out of range for {len} vertices")]
    OutOfRange { child: usize, len: usize },
    #[error("vertex {0} has more than one parent or is the root listed as a child")]
    MultipleParents(usize),
    #[error("tree too large: {0} vertices")]
    TooLarge(usize),
}

impl RootedTree {
    /// Builds a tree from per-vertex child lists. Vertices are relabelled in
    /// breadth-first order with children kept in their listed order.
    pub fn from_children(lists: &[Vec<usize>]) -> Result<Self, TreeError> {
        let n = lists.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if n > u32::MAX as usize {
            return Err(TreeError::TooLarge(n));
        }
        let mut seen = vec![false; n];
        seen[0] = true;
        for list in lists {
            for &c in list {
                if c >= n {
                    return Err(TreeError::OutOfRange { child: c, len: n });
                }
                if seen[c] {
                    return Err(TreeError::MultipleParents(c));
                }
                seen[c] = true;
            }
        }
        // breadth-first relabelling
        let mut order = Vec::with_capacity(n);
        let mut new_id = vec![u32::MAX; n];
        order.push(0usize);
        new_id[0] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &c in &lists[v] {
                new_id[c] = order.len() as u32;
                order.push(c);
            }
        }
        if order.len() != n {
            let missing = new_id.iter().position(|&id| id == u32::MAX).unwrap_or(0);
            return Err(TreeError::Unreachable(missing));
        }
        let mut parent = vec![0u32; n];
        let mut depth = vec![0u32; n];
        let mut child_start = Vec::with_capacity(n + 1);
        let mut children = Vec::with_capacity(n.saturating_sub(1));
        for (new, &old) in order.iter().enumerate() {
            child_start.push(children.len() as u32);
            for &c in &lists[old] {
                let cid = new_id[c];
                parent[cid as usize] = new as u32;
                depth[cid as usize] = depth[new] + 1;
                children.push(cid);
            }
        }
        child_start.push(children.len() as u32);
        let max_depth = depth.iter().copied().max().unwrap_or(0);
        Ok(Self {
            parent,
            depth,
            child_start,
            children,
            max_depth,
        })
    }

    /// The complete `branching`-ary tree truncated at `depth`.
    pub fn regular(branching: u32, depth: u32) -> Result<Self, TreeError> {
        let b = branching as usize;
        let mut total: usize = 1;
        let mut level: usize = 1;
        for _ in 0..depth {
            level = level.checked_mul(b).ok_or(TreeError::TooLarge(usize::MAX))?;
            total = total.checked_add(level).ok_or(TreeError::TooLarge(usize::MAX))?;
        }
        if total > (1 << 28) {
            return Err(TreeError::TooLarge(total));
        }
        let mut parent = Vec::with_capacity(total);
        let mut dep = Vec::with_capacity(total);
        let mut child_start = Vec::with_capacity(total + 1);
        let mut children = Vec::with_capacity(total - 1);
        parent.push(0);
        dep.push(0);
        let mut next = 1u32;
        for v in 0..total {
            child_start.push(children.len() as u32);
            if dep[v] < depth {
                for _ in 0..b {
                    children.push(next);
                    parent.push(v as u32);
                    dep.push(dep[v] + 1);
                    next += 1;
                }
            }
        }
        child_start.push(children.len() as u32);
        Ok(Self {
            parent,
            depth: dep,
            child_start,
            children,
            max_depth: if b == 0 { 0 } else { depth },
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        (v != 0).then(|| self.parent[v as usize])
    }

    pub fn depth(&self, v: u32) -> u32 {
        self.depth[v as usize]
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn children(&self, v: u32) -> &[u32] {
        let lo = self.child_start[v as usize] as usize;
        let hi = self.child_start[v as usize + 1] as usize;
        &self.children[lo..hi]
    }

    /// The edge joining `child` to its parent.
    pub fn edge_to_parent(&self, child: u32) -> Edge {
        debug_assert!(child != 0);
        Edge::Tree(child, self.depth(child) - 1)
    }

    /// Tree distance between two vertices.
    pub fn distance(&self, mut a: u32, mut b: u32) -> u64 {
        let mut d = 0u64;
        while self.depth(a) > self.depth(b) {
            a = self.parent[a as usize];
            d += 1;
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent[b as usize];
            d += 1;
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
            d += 2;
        }
        d
    }

    /// Vertices at exactly `depth`.
    pub fn level_vertices(&self, depth: u32) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(move |&v| self.depth(v) == depth)
    }
}

/// JSON description of a topology: `{"kind": ..., <parameters>}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    LineN,
    LineZ,
    Lattice2d,
    /// Complete `branching`-ary tree truncated at `depth`.
    RegularTree { branching: u32, depth: u32 },
    /// Explicit child lists, root at index 0.
    Tree { children: Vec<Vec<usize>> },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology, TreeError> {
        Ok(match self {
            TopologySpec::LineN => Topology::LineN,
            TopologySpec::LineZ => Topology::LineZ,
            TopologySpec::Lattice2d => Topology::Lattice2D,
            TopologySpec::RegularTree { branching, depth } => Topology::tree(RootedTree::regular(*branching, *depth)?),
            TopologySpec::Tree { children } => Topology::tree(RootedTree::from_children(children)?),
        })
    }
}

/// The graph a walk lives on.
#[derive(Clone, Debug, PartialEq)]
pub enum Topology {
    /// Non-negative integers with nearest-neighbor edges.
    LineN,
    /// All integers with nearest-neighbor edges.
    LineZ,
    /// A finite rooted tree; the truncation depth is the tree's maximum depth.
    Tree(Arc<RootedTree>),
    /// The square lattice `Z^2`.
    Lattice2D,
}

impl Topology {
    pub fn tree(tree: RootedTree) -> Self {
        Topology::Tree(Arc::new(tree))
    }

    pub fn as_tree(&self) -> Option<&RootedTree> {
        match self {
            Topology::Tree(t) => Some(t),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::LineN => "line_n",
            Topology::LineZ => "line_z",
            Topology::Tree(_) => "tree",
            Topology::Lattice2D => "lattice2d",
        }
    }

    /// The conventional starting vertex.
    pub fn origin(&self) -> Vertex {
        match self {
            Topology::LineN | Topology::LineZ => Vertex::Int(0),
            Topology::Tree(_) => Vertex::Node(0),
            Topology::Lattice2D => Vertex::Site(0, 0),
        }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        match (self, v) {
            (Topology::LineN, Vertex::Int(x)) => x >= 0,
            (Topology::LineZ, Vertex::Int(_)) => true,
            (Topology::Tree(t), Vertex::Node(i)) => (i as usize) < t.len(),
            (Topology::Lattice2D, Vertex::Site(..)) => true,
            _ => false,
        }
    }

    /// Writes the neighbors of `v` with their connecting edges into `out`,
    /// in canonical order. `out` is cleared first.
    pub fn neighbors_into(&self, v: Vertex, out: &mut Vec<(Vertex, Edge)>) {
        out.clear();
        match (self, v) {
            (Topology::LineN, Vertex::Int(x)) => {
                if x > 0 {
                    out.push((Vertex::Int(x - 1), Edge::Line(x - 1)));
                }
                out.push((Vertex::Int(x + 1), Edge::Line(x)));
            }
            (Topology::LineZ, Vertex::Int(x)) => {
                out.push((Vertex::Int(x - 1), Edge::Line(x - 1)));
                out.push((Vertex::Int(x + 1), Edge::Line(x)));
            }
            (Topology::Tree(t), Vertex::Node(i)) => {
                if let Some(p) = t.parent(i) {
                    out.push((Vertex::Node(p), t.edge_to_parent(i)));
                }
                for &c in t.children(i) {
                    out.push((Vertex::Node(c), t.edge_to_parent(c)));
                }
            }
            (Topology::Lattice2D, Vertex::Site(x, y)) => {
                out.push((Vertex::Site(x - 1, y), Edge::Horizontal(x - 1, y)));
                out.push((Vertex::Site(x, y + 1), Edge::Vertical(x, y)));
                out.push((Vertex::Site(x + 1, y), Edge::Horizontal(x, y)));
                out.push((Vertex::Site(x, y - 1), Edge::Vertical(x, y - 1)));
            }
            _ => {}
        }
    }

    pub fn neighbors(&self, v: Vertex) -> Vec<(Vertex, Edge)> {
        let mut out = Vec::new();
        self.neighbors_into(v, &mut out);
        out
    }

    pub fn degree(&self, v: Vertex) -> usize {
        match (self, v) {
            (Topology::LineN, Vertex::Int(x)) => {
                if x > 0 {
                    2
                } else {
                    1
                }
            }
            (Topology::LineZ, Vertex::Int(_)) => 2,
            (Topology::Tree(t), Vertex::Node(i)) => {
                t.children(i).len() + usize::from(i != 0)
            }
            (Topology::Lattice2D, Vertex::Site(..)) => 4,
            _ => 0,
        }
    }

    /// The edge joining `a` and `b`, if they are adjacent.
    pub fn edge_between(&self, a: Vertex, b: Vertex) -> Option<Edge> {
        match (self, a, b) {
            (Topology::LineN | Topology::LineZ, Vertex::Int(x), Vertex::Int(y)) => {
                if !self.contains(a) || !self.contains(b) {
                    return None;
                }
                match y - x {
                    1 => Some(Edge::Line(x)),
                    -1 => Some(Edge::Line(y)),
                    _ => None,
                }
            }
            (Topology::Tree(t), Vertex::Node(i), Vertex::Node(j)) => {
                if (i as usize) >= t.len() || (j as usize) >= t.len() {
                    return None;
                }
                if t.parent(j) == Some(i) {
                    Some(t.edge_to_parent(j))
                } else if t.parent(i) == Some(j) {
                    Some(t.edge_to_parent(i))
                } else {
                    None
                }
            }
            (Topology::Lattice2D, Vertex::Site(x1, y1), Vertex::Site(x2, y2)) => {
                match (x2 - x1, y2 - y1) {
                    (1, 0) => Some(Edge::Horizontal(x1, y1)),
                    (-1, 0) => Some(Edge::Horizontal(x2, y2)),
                    (0, 1) => Some(Edge::Vertical(x1, y1)),
                    (0, -1) => Some(Edge::Vertical(x2, y2)),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Graph distance between two vertices of this topology.
    pub fn distance(&self, a: Vertex, b: Vertex) -> u64 {
        match (self, a, b) {
            (Topology::Tree(t), Vertex::Node(i), Vertex::Node(j)) => t.distance(i, j),
            (_, Vertex::Int(x), Vertex::Int(y)) => x.abs_diff(y),
            (_, Vertex::Site(x1, y1), Vertex::Site(x2, y2)) => x1.abs_diff(x2) + y1.abs_diff(y2),
            _ => u64::MAX,
        }
    }
}
