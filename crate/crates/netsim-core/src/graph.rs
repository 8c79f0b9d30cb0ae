//! Immutable undirected graphs and the topologies used by the experiments.
//!
//! Nodes are dense ids `0..n`. Edges are stored once as `(u, v)` with
//! `u < v`, sorted lexicographically; the position of an edge in that list is
//! its edge id, which the coupled engines use to key per-edge random streams.
//! Adjacency is kept in compressed rows so every neighbor entry also carries
//! the id of the edge it came from.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rng;

/// Restart budget for the randomized small-world construction.
pub const SMALL_WORLD_ATTEMPTS: u32 = 100;
/// Largest tree `make_tree` is willing to build.
pub const TREE_NODE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("torus dimensions must both be at least 3 (got {width}x{height}); smaller wraps create parallel edges")]
    TorusTooSmall { width: usize, height: usize },
    #[error("target degree {target} must be at least 4 and at most n-1 = {max}")]
    BadTargetDegree { target: usize, max: usize },
    #[error("n*(target_degree-4) = {product} must be even to add whole edges")]
    OddEdgeDeficit { product: usize },
    #[error("small-world construction stalled in all {attempts} attempts")]
    Stalled { attempts: u32 },
    #[error("tree parameters need m >= 1, k >= 3, depth >= 1 (got m={m}, k={k}, depth={depth})")]
    BadTreeParams { m: usize, k: usize, depth: usize },
    #[error("graph would have more than {cap} nodes")]
    TooLarge { cap: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("edge {u}-{v} references a node outside 0..{n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("graph must have at least one node")]
    Empty,
    #[error("inconsistent adjacency: {0}")]
    Inconsistent(&'static str),
}

/// One adjacency entry: the neighbor and the id of the connecting edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: u32,
    pub edge: u32,
}

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    adjacency: Vec<Neighbor>,
    max_degree: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges.len())
            .field("max_degree", &self.max_degree)
            .finish()
    }
}

impl Graph {
    /// Builds a graph from an arbitrary edge list. Endpoint order is
    /// irrelevant; self-loops and repeated edges are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut list: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::NodeOutOfRange { u: a, v: b, n });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            list.push((u as u32, v as u32));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0 as usize, w[0].1 as usize));
        }

        let mut degree = vec![0usize; n];
        for &(u, v) in &list {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![Neighbor { node: 0, edge: 0 }; 2 * list.len()];
        for (id, &(u, v)) in list.iter().enumerate() {
            let id = id as u32;
            adjacency[fill[u as usize]] = Neighbor { node: v, edge: id };
            fill[u as usize] += 1;
            adjacency[fill[v as usize]] = Neighbor { node: u, edge: id };
            fill[v as usize] += 1;
        }
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        Ok(Self {
            n,
            edges: list,
            offsets,
            adjacency,
            max_degree,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// The largest degree, `k`.
    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[Neighbor] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edges as `(u, v)` with `u < v`, in edge-id order.
    #[inline]
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, id: usize) -> (usize, usize) {
        let (u, v) = self.edges[id];
        (u as usize, v as usize)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).iter().any(|nb| nb.node as usize == b)
    }

    /// Re-checks every structural invariant from scratch.
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n == 0 {
            return Err(GraphError::Empty);
        }
        if self.offsets.len() != self.n + 1 || self.adjacency.len() != 2 * self.edges.len() {
            return Err(GraphError::Inconsistent("row table size"));
        }
        for w in self.edges.windows(2) {
            if w[0] >= w[1] {
                return Err(GraphError::Inconsistent("edge list not strictly sorted"));
            }
        }
        let mut max = 0;
        let mut degree_sum = 0;
        for v in 0..self.n {
            let nbs = self.neighbors(v);
            max = max.max(nbs.len());
            degree_sum += nbs.len();
            for (i, nb) in nbs.iter().enumerate() {
                let u = nb.node as usize;
                if u == v {
                    return Err(GraphError::SelfLoop(v));
                }
                if nbs[..i].iter().any(|o| o.node == nb.node) {
                    return Err(GraphError::DuplicateEdge(v.min(u), v.max(u)));
                }
                let (a, b) = self.edge(nb.edge as usize);
                if (a, b) != (v.min(u), v.max(u)) {
                    return Err(GraphError::Inconsistent("edge id does not match endpoints"));
                }
                if !self.neighbors(u).iter().any(|o| o.node as usize == v) {
                    return Err(GraphError::Inconsistent("adjacency not symmetric"));
                }
            }
        }
        if max != self.max_degree {
            return Err(GraphError::Inconsistent("max degree"));
        }
        if degree_sum != 2 * self.edges.len() {
            return Err(GraphError::Inconsistent("degree sum"));
        }
        Ok(())
    }
}

fn torus_edges(width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * width * height);
    for r in 0..height {
        for c in 0..width {
            let v = r * width + c;
            edges.push((v, r * width + (c + 1) % width));
            edges.push((v, ((r + 1) % height) * width + c));
        }
    }
    edges
}

/// Toroidal `width x height` lattice, row-major node ids, every degree 4.
pub fn make_torus(width: usize, height: usize) -> Result<Graph, GraphError> {
    if width < 3 || height < 3 {
        return Err(GraphError::TorusTooSmall { width, height });
    }
    Graph::from_edges(width * height, torus_edges(width, height))
}

/// A torus with extra random edges until every node has `target_degree`.
///
/// Edges are added one at a time between a uniformly chosen pair of nodes
/// that are both still below the target degree and not yet adjacent. When no
/// such pair remains before the target is reached the attempt is discarded
/// and construction restarts from the plain torus on a fresh substream of
/// `seed`, up to [`SMALL_WORLD_ATTEMPTS`] times.
pub fn make_small_world(width: usize, height: usize, target_degree: usize, seed: u64) -> Result<Graph, GraphError> {
    if width < 3 || height < 3 {
        return Err(GraphError::TorusTooSmall { width, height });
    }
    let n = width * height;
    if target_degree < 4 || target_degree > n - 1 {
        return Err(GraphError::BadTargetDegree {
            target: target_degree,
            max: n - 1,
        });
    }
    let product = n * (target_degree - 4);
    if !product.is_multiple_of(2) {
        return Err(GraphError::OddEdgeDeficit { product });
    }
    let base = torus_edges(width, height);
    for attempt in 0..SMALL_WORLD_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(rng::derive(&[rng::tag::GRAPH, seed, attempt as u64]));
        if let Some(extra) = fill_to_degree(n, &base, target_degree, &mut rng) {
            let mut edges = base.clone();
            edges.extend(extra);
            return Graph::from_edges(n, edges);
        }
    }
    Err(GraphError::Stalled {
        attempts: SMALL_WORLD_ATTEMPTS,
    })
}

fn fill_to_degree<R: Rng>(
    n: usize,
    base: &[(usize, usize)],
    target: usize,
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let mut present: BTreeSet<(usize, usize)> = base.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut degree = vec![0usize; n];
    for &(a, b) in base {
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut open: Vec<usize> = (0..n).filter(|&v| degree[v] < target).collect();
    let mut added = Vec::new();
    const REJECTION_TRIES: usize = 256;

    while !open.is_empty() {
        let mut pick = None;
        if open.len() >= 2 {
            for _ in 0..REJECTION_TRIES {
                let a = rng.random_range(0..open.len());
                let b = rng.random_range(0..open.len());
                let (u, v) = (open[a], open[b]);
                if u != v && !present.contains(&(u.min(v), u.max(v))) {
                    pick = Some((u, v));
                    break;
                }
            }
        }
        if pick.is_none() {
            // Rejection keeps missing: fall back to enumerating what is left.
            let mut candidates = Vec::new();
            for (i, &u) in open.iter().enumerate() {
                for &v in &open[i + 1..] {
                    if !present.contains(&(u.min(v), u.max(v))) {
                        candidates.push((u, v));
                    }
                }
            }
            if candidates.is_empty() {
                return None;
            }
            pick = Some(candidates[rng.random_range(0..candidates.len())]);
        }
        let (u, v) = pick.unwrap();
        present.insert((u.min(v), u.max(v)));
        added.push((u, v));
        degree[u] += 1;
        degree[v] += 1;
        open.retain(|&w| degree[w] < target);
    }
    Some(added)
}

/// Number of nodes in the truncated tree built by [`make_tree`], if it fits
/// under `cap`.
pub fn tree_size(m: usize, k: usize, depth: usize, cap: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut level: usize = m;
    for _ in 0..depth {
        total = total.checked_add(level)?;
        if total > cap {
            return None;
        }
        level = level.checked_mul(k - 1)?;
    }
    Some(total)
}

/// Truncated tree: the root (node 0) has `m` children, every other internal
/// node has `k - 1` children, and all leaves sit at distance `depth`.
/// Ids are assigned breadth-first.
pub fn make_tree(m: usize, k: usize, depth: usize) -> Result<Graph, GraphError> {
    if m < 1 || k < 3 || depth < 1 {
        return Err(GraphError::BadTreeParams { m, k, depth });
    }
    let n = tree_size(m, k, depth, TREE_NODE_CAP).ok_or(GraphError::TooLarge { cap: TREE_NODE_CAP })?;
    let mut edges = Vec::with_capacity(n - 1);
    let mut next = 1usize;
    let mut frontier = vec![0usize];
    for level in 0..depth {
        let fanout = if level == 0 { m } else { k - 1 };
        let mut children = Vec::with_capacity(frontier.len() * fanout);
        for &parent in &frontier {
            for _ in 0..fanout {
                edges.push((parent, next));
                children.push(next);
                next += 1;
            }
        }
        frontier = children;
    }
    debug_assert_eq!(next, n);
    Graph::from_edges(n, edges)
}

/// Topology families the experiments know how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Torus,
    SmallWorld,
    Tree,
}

impl core::str::FromStr for GraphKind {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "torus" => Ok(Self::Torus),
            "small-world" => Ok(Self::SmallWorld),
            "tree" => Ok(Self::Tree),
            _ => Err("graph kind must be one of torus, small-world, tree"),
        }
    }
}

/// Full recipe for a graph, so experiments can rebuild it on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSpec {
    Torus {
        width: usize,
        height: usize,
    },
    SmallWorld {
        width: usize,
        height: usize,
        target_degree: usize,
        seed: u64,
    },
    Tree {
        root_children: usize,
        k: usize,
        depth: usize,
    },
}

impl GraphSpec {
    pub fn kind(&self) -> GraphKind {
        match self {
            Self::Torus { .. } => GraphKind::Torus,
            Self::SmallWorld { .. } => GraphKind::SmallWorld,
            Self::Tree { .. } => GraphKind::Tree,
        }
    }

    /// Extra edges a small world adds on top of its torus.
    pub fn extra_edges(&self) -> usize {
        match *self {
            Self::SmallWorld {
                width,
                height,
                target_degree,
                ..
            } => width * height * target_degree.saturating_sub(4) / 2,
            _ => 0,
        }
    }

    /// Same recipe with a different randomization seed (no-op for
    /// deterministic families).
    pub fn with_seed(self, new_seed: u64) -> Self {
        match self {
            Self::SmallWorld {
                width,
                height,
                target_degree,
                ..
            } => Self::SmallWorld {
                width,
                height,
                target_degree,
                seed: new_seed,
            },
            other => other,
        }
    }

    pub fn build(&self) -> Result<Graph, GraphError> {
        match *self {
            Self::Torus { width, height } => make_torus(width, height),
            Self::SmallWorld {
                width,
                height,
                target_degree,
                seed,
            } => make_small_world(width, height, target_degree, seed),
            Self::Tree {
                root_children,
                k,
                depth,
            } => make_tree(root_children, k, depth),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degree_histogram(g: &Graph) -> Vec<usize> {
        let mut h = vec![0; g.max_degree() + 1];
        for v in 0..g.node_count() {
            h[g.degree(v)] += 1;
        }
        h
    }

    #[test]
    fn torus_30_by_30() {
        let g = make_torus(30, 30).unwrap();
        assert_eq!((g.node_count(), g.edge_count(), g.max_degree()), (900, 1800, 4));
        assert!((0..900).all(|v| g.degree(v) == 4));
        g.validate().unwrap();
    }

    #[test]
    fn smallest_torus() {
        let g = make_torus(3, 3).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 18));
        assert!((0..9).all(|v| g.degree(v) == 4));
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2) && g.has_edge(0, 3) && g.has_edge(0, 6));
        g.validate().unwrap();
    }

    #[test]
    fn torus_rejects_thin_dimensions() {
        assert_eq!(
            make_torus(2, 5).unwrap_err(),
            GraphError::TorusTooSmall { width: 2, height: 5 }
        );
        assert!(make_torus(5, 1).is_err());
    }

    #[test]
    fn small_world_30_by_30() {
        let g = make_small_world(30, 30, 5, 11).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (900, 2250));
        assert!((0..900).all(|v| g.degree(v) == 5));
        g.validate().unwrap();
        // the torus is a subgraph
        let t = make_torus(30, 30).unwrap();
        assert!(t.edges().iter().all(|&(u, v)| g.has_edge(u as usize, v as usize)));
    }

    #[test]
    fn small_world_degree_four_is_torus() {
        let g = make_small_world(30, 30, 4, 3).unwrap();
        assert_eq!(g, make_torus(30, 30).unwrap());
    }

    #[test]
    fn dense_small_world_on_3x3() {
        let g = make_small_world(3, 3, 6, 5).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (9, 27));
        assert_eq!(degree_histogram(&g), [0, 0, 0, 0, 0, 0, 9]);
        g.validate().unwrap();
    }

    #[test]
    fn small_world_is_seed_reproducible() {
        let a = make_small_world(10, 10, 6, 99).unwrap();
        let b = make_small_world(10, 10, 6, 99).unwrap();
        let c = make_small_world(10, 10, 6, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn small_world_parameter_errors() {
        assert!(matches!(
            make_small_world(3, 3, 5, 0),
            Err(GraphError::OddEdgeDeficit { product: 9 })
        ));
        assert!(matches!(
            make_small_world(4, 4, 3, 0),
            Err(GraphError::BadTargetDegree { .. })
        ));
        assert!(matches!(
            make_small_world(3, 3, 9, 0),
            Err(GraphError::BadTargetDegree { .. })
        ));
    }

    #[test]
    fn complete_graph_from_3x3_torus() {
        // K9 needs every missing pair: only one completion exists.
        let g = make_small_world(3, 3, 8, 1).unwrap();
        assert_eq!(g.edge_count(), 36);
    }

    #[test]
    fn tree_level_counts() {
        let g = make_tree(2, 3, 1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(make_tree(3, 3, 2).unwrap().node_count(), 10);
        let g = make_tree(4, 4, 3).unwrap();
        let by_levels: usize = 1 + (1..=3).map(|d| 4 * 3usize.pow(d - 1)).sum::<usize>();
        assert_eq!(g.node_count(), by_levels);
        assert_eq!(g.node_count(), 53);
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.max_degree(), 4);
        g.validate().unwrap();
    }

    #[test]
    fn tree_errors() {
        assert!(matches!(make_tree(0, 3, 1), Err(GraphError::BadTreeParams { .. })));
        assert!(matches!(make_tree(2, 2, 1), Err(GraphError::BadTreeParams { .. })));
        assert!(matches!(make_tree(2, 4, 40), Err(GraphError::TooLarge { .. })));
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert_eq!(Graph::from_edges(3, [(1, 1)]).unwrap_err(), GraphError::SelfLoop(1));
        assert_eq!(
            Graph::from_edges(3, [(0, 1), (1, 0)]).unwrap_err(),
            GraphError::DuplicateEdge(0, 1)
        );
        assert!(matches!(
            Graph::from_edges(2, [(0, 2)]),
            Err(GraphError::NodeOutOfRange { .. })
        ));
        assert_eq!(Graph::from_edges(0, []).unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn spec_builds_and_reports_extra_edges() {
        let s = GraphSpec::SmallWorld {
            width: 30,
            height: 30,
            target_degree: 5,
            seed: 1,
        };
        assert_eq!(s.extra_edges(), 450);
        assert_eq!(s.kind(), GraphKind::SmallWorld);
        assert_eq!(s.build().unwrap().edge_count(), 1800 + 450);
        assert_eq!("small-world".parse::<GraphKind>(), Ok(GraphKind::SmallWorld));
    }
}
