//! Weighted directed graphs with validated edge lists.
//!
//! Nodes are numbered `1..=N`. An edge `(tail, head, weight)` is directed
//! from `tail` to `head` and carries a strictly positive weight, read as the
//! gain the head node applies to its relative measurement along that edge.
//! Self loops and duplicate `(tail, head)` pairs are rejected.
//!
//! The structural property required by every downstream computation is
//! quasi-strong connectivity: some node (a root) must reach every other
//! node along directed edges, which is equivalent to the existence of a
//! directed spanning tree. [`Digraph::spanning_tree_root`] finds the
//! smallest such root and [`Digraph::bfs_spanning_tree`] extracts a
//! deterministic spanning tree from it: breadth-first order, ties broken by
//! edge list order.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

/// A directed weighted edge with 1-based endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Source node, `1..=N`.
    pub tail: usize,
    /// Destination node, `1..=N`; the node that measures along this edge.
    pub head: usize,
    /// Measurement gain, finite and strictly positive.
    pub weight: f64,
}

impl Edge {
    /// Convenience constructor; validation happens in [`Digraph::new`].
    pub fn new(tail: usize, head: usize, weight: f64) -> Self {
        Self { tail, head, weight }
    }
}

/// Validation and analysis errors for digraphs and their edge lists.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    /// An edge-list line could not be parsed.
    #[error("line {line}: {message}")]
    Parse {
        /// 1-based line number in the source text.
        line: usize,
        /// What went wrong on that line.
        message: String,
    },
    /// Fewer than two nodes.
    #[error("graph must have at least 2 nodes, got {num_nodes}")]
    TooFewNodes {
        /// Declared node count.
        num_nodes: usize,
    },
    /// An edge endpoint lies outside `1..=N`.
    #[error("edge {edge}: node index {index} outside 1..={num_nodes}")]
    NodeIndexOutOfRange {
        /// 1-based edge position.
        edge: usize,
        /// Offending node index.
        index: usize,
        /// Declared node count.
        num_nodes: usize,
    },
    /// An edge with equal endpoints.
    #[error("edge {edge}: self loop at node {node}")]
    SelfLoop {
        /// 1-based edge position.
        edge: usize,
        /// The repeated endpoint.
        node: usize,
    },
    /// An edge weight that is not finite and strictly positive.
    #[error("edge {edge}: weight must be finite and > 0, got {weight}")]
    NonPositiveWeight {
        /// 1-based edge position.
        edge: usize,
        /// Offending weight.
        weight: f64,
    },
    /// A repeated `(tail, head)` pair.
    #[error("edge {edge}: duplicate directed edge ({tail}, {head})")]
    DuplicateEdge {
        /// 1-based position of the second occurrence.
        edge: usize,
        /// Repeated tail.
        tail: usize,
        /// Repeated head.
        head: usize,
    },
    /// No node reaches every other node.
    #[error("graph is not quasi-strongly connected: no directed spanning tree exists")]
    NotQuasiStronglyConnected,
    /// A dense factorization failed during decomposition.
    #[error("singular transform while decomposing: {context}")]
    SingularTransform {
        /// Which computation failed.
        context: &'static str,
    },
    /// An iterative eigensolver failed to converge.
    #[error("eigenvalue computation failed to converge for {context}")]
    EigenFailure {
        /// Which matrix was being factored.
        context: &'static str,
    },
    /// The flow-space basis has unexpected dimension.
    #[error("flow basis rank mismatch: expected {expected} null directions, found {found}")]
    FlowBasisRank {
        /// Theoretical null-space dimension `L - N + 1`.
        expected: usize,
        /// Directions found numerically.
        found: usize,
    },
}

/// A validated weighted digraph on nodes `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    num_nodes: usize,
    edges: Vec<Edge>,
}

impl Digraph {
    /// Builds a digraph, checking every edge invariant.
    ///
    /// # Errors
    ///
    /// Rejects node counts below 2, endpoints outside `1..=num_nodes`,
    /// self loops, non-positive or non-finite weights, and duplicate
    /// `(tail, head)` pairs. Error positions are 1-based edge indices.
    pub fn new(num_nodes: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if num_nodes < 2 {
            return Err(GraphError::TooFewNodes { num_nodes });
        }
        for (idx, e) in edges.iter().enumerate() {
            let edge = idx + 1;
            for index in [e.tail, e.head] {
                if index < 1 || index > num_nodes {
                    return Err(GraphError::NodeIndexOutOfRange { edge, index, num_nodes });
                }
            }
            if e.tail == e.head {
                return Err(GraphError::SelfLoop { edge, node: e.tail });
            }
            if !e.weight.is_finite() || e.weight <= 0.0 {
                return Err(GraphError::NonPositiveWeight { edge, weight: e.weight });
            }
            if edges[..idx].iter().any(|p| p.tail == e.tail && p.head == e.head) {
                return Err(GraphError::DuplicateEdge { edge, tail: e.tail, head: e.head });
            }
        }
        Ok(Self { num_nodes, edges })
    }

    /// Number of nodes `N`.
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of edges `L`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// The validated edge list, in input order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Adjacency as `(edge index, head)` lists per tail, in edge order.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = alloc::vec![Vec::new(); self.num_nodes + 1];
        for (k, e) in self.edges.iter().enumerate() {
            adj[e.tail].push((k, e.head));
        }
        adj
    }

    /// Count of nodes reachable from `start` (including itself) along
    /// directed edges.
    fn reachable_count(&self, start: usize, adj: &[Vec<(usize, usize)>]) -> usize {
        let mut seen = alloc::vec![false; self.num_nodes + 1];
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(_, head) in &adj[u] {
                if !seen[head] {
                    seen[head] = true;
                    count += 1;
                    queue.push_back(head);
                }
            }
        }
        count
    }

    /// All roots: nodes that reach every node, ascending.
    pub fn roots(&self) -> Vec<usize> {
        let adj = self.adjacency();
        (1..=self.num_nodes)
            .filter(|&s| self.reachable_count(s, &adj) == self.num_nodes)
            .collect()
    }

    /// Whether a directed spanning tree exists.
    pub fn is_quasi_strongly_connected(&self) -> bool {
        self.spanning_tree_root().is_some()
    }

    /// The smallest root, if any.
    pub fn spanning_tree_root(&self) -> Option<usize> {
        let adj = self.adjacency();
        (1..=self.num_nodes).find(|&s| self.reachable_count(s, &adj) == self.num_nodes)
    }

    /// Edge indices (0-based, ascending) of the breadth-first spanning tree
    /// rooted at `root`, ties broken by edge list order.
    ///
    /// Returns fewer than `N - 1` edges when `root` does not reach every
    /// node; callers that need a full tree must check the length.
    pub fn bfs_spanning_tree(&self, root: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut seen = alloc::vec![false; self.num_nodes + 1];
        let mut queue = VecDeque::new();
        let mut tree = Vec::with_capacity(self.num_nodes.saturating_sub(1));
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &(k, head) in &adj[u] {
                if !seen[head] {
                    seen[head] = true;
                    tree.push(k);
                    queue.push_back(head);
                }
            }
        }
        tree.sort_unstable();
        tree
    }
}

/// Parses a whitespace-separated edge list.
///
/// Each data line is `tail head weight` with 1-based node indices. Blank
/// lines and lines whose first non-whitespace character is `#` are skipped.
/// The node count is the largest index mentioned.
///
/// # Errors
///
/// Token and validation failures are reported with the 1-based line number
/// of the offending data line.
pub fn parse_edge_list(text: &str) -> Result<Digraph, GraphError> {
    let mut edges = Vec::new();
    let mut edge_lines = Vec::new();
    let mut max_node = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(GraphError::Parse {
                line,
                message: format!("expected `tail head weight`, found {} tokens", tokens.len()),
            });
        }
        let tail: usize = tokens[0].parse().map_err(|_| GraphError::Parse {
            line,
            message: format!("invalid tail node index `{}`", tokens[0]),
        })?;
        let head: usize = tokens[1].parse().map_err(|_| GraphError::Parse {
            line,
            message: format!("invalid head node index `{}`", tokens[1]),
        })?;
        let weight: f64 = tokens[2].parse().map_err(|_| GraphError::Parse {
            line,
            message: format!("invalid weight `{}`", tokens[2]),
        })?;
        if tail == 0 || head == 0 {
            return Err(GraphError::Parse {
                line,
                message: String::from("node indices are 1-based; 0 is not a node"),
            });
        }
        max_node = max_node.max(tail).max(head);
        edges.push(Edge::new(tail, head, weight));
        edge_lines.push(line);
    }
    if edges.is_empty() {
        return Err(GraphError::Parse {
            line: text.lines().count().max(1),
            message: String::from("no edges found"),
        });
    }
    Digraph::new(max_node, edges).map_err(|e| match e {
        GraphError::NodeIndexOutOfRange { edge, .. }
        | GraphError::SelfLoop { edge, .. }
        | GraphError::NonPositiveWeight { edge, .. }
        | GraphError::DuplicateEdge { edge, .. } => GraphError::Parse {
            line: edge_lines[edge - 1],
            message: format!("{e}"),
        },
        other => other,
    })
}
