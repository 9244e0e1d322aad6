//! Site graphs: the discretized environment robots walk on.
//!
//! Self-loops are implicit. They are never stored in the edge set; the
//! laziness of the walk lives entirely in [`crate::markov`].

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SiteId = usize;

/// Maximum number of Erdős–Rényi draws before giving up on connectivity.
pub const ER_RESAMPLE_CAP: usize = 10_000;

/// Undirected connected graph of sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteGraph {
    num_sites: usize,
    edges: Vec<(SiteId, SiteId)>,
    adjacency: Vec<Vec<SiteId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TopologyKind {
    Grid { rows: usize, cols: usize },
    Line { n: usize },
    BarabasiAlbert { n: usize, k: usize },
    ErdosRenyi { n: usize, p: f64 },
    Explicit { num_sites: usize, edges: Vec<(SiteId, SiteId)> },
}

impl TopologyKind {
    pub fn num_sites(&self) -> usize {
        match *self {
            TopologyKind::Grid { rows, cols } => rows * cols,
            TopologyKind::Line { n }
            | TopologyKind::BarabasiAlbert { n, .. }
            | TopologyKind::ErdosRenyi { n, .. } => n,
            TopologyKind::Explicit { num_sites, .. } => num_sites,
        }
    }

    /// True when construction consumes randomness.
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            TopologyKind::BarabasiAlbert { .. } | TopologyKind::ErdosRenyi { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::Grid { .. } => "grid",
            TopologyKind::Line { .. } => "line",
            TopologyKind::BarabasiAlbert { .. } => "barabasi_albert",
            TopologyKind::ErdosRenyi { .. } => "erdos_renyi",
            TopologyKind::Explicit { .. } => "explicit",
        }
    }
}

impl SiteGraph {
    /// Builds a graph from an edge list. Self-pairs are dropped, duplicate
    /// and reversed pairs are merged. Fails if an id is out of range or the
    /// result is disconnected.
    pub fn from_edges(num_sites: usize, edges: &[(SiteId, SiteId)]) -> Result<Self> {
        let graph = Self::from_edges_unchecked(num_sites, edges)?;
        let reached = graph.reachable_from(0);
        if reached != num_sites {
            return Err(Error::Disconnected { reached, num_sites });
        }
        Ok(graph)
    }

    fn from_edges_unchecked(num_sites: usize, edges: &[(SiteId, SiteId)]) -> Result<Self> {
        if num_sites == 0 {
            return Err(Error::InvalidTopology("graph needs at least one site".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= num_sites || b >= num_sites {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a}, {b}) references a site outside 0..{num_sites}"
                )));
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        let mut adjacency = vec![Vec::new(); num_sites];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(SiteGraph {
            num_sites,
            edges: set.into_iter().collect(),
            adjacency,
        })
    }

    /// Parses the edge-list text format: one `a b` pair per line, 0-indexed,
    /// `#` starts a comment. The site count is one more than the largest id.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_id = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(Error::InvalidTopology(format!(
                    "line {}: expected two site ids, got {:?}",
                    lineno + 1,
                    line
                )));
            }
            let mut ids = [0usize; 2];
            for (slot, tok) in ids.iter_mut().zip(&parts) {
                *slot = tok.parse().map_err(|_| {
                    Error::InvalidTopology(format!("line {}: bad site id {tok:?}", lineno + 1))
                })?;
            }
            max_id = Some(max_id.unwrap_or(0).max(ids[0]).max(ids[1]));
            edges.push((ids[0], ids[1]));
        }
        let num_sites = max_id
            .map(|m| m + 1)
            .ok_or_else(|| Error::InvalidTopology("edge list is empty".into()))?;
        Self::from_edges(num_sites, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} sites\n", self.num_sites);
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Non-self edges, each stored once as `(low, high)`.
    pub fn edges(&self) -> &[(SiteId, SiteId)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, site: SiteId) -> &[SiteId] {
        &self.adjacency[site]
    }

    /// Number of non-self neighbors.
    pub fn degree(&self, site: SiteId) -> usize {
        self.adjacency[site].len()
    }

    /// Same site or joined by an edge.
    pub fn is_adjacent_or_same(&self, a: SiteId, b: SiteId) -> bool {
        a == b || self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Hop distances from `from`; unreachable sites get `usize::MAX`.
    pub fn bfs_distances(&self, from: SiteId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_sites];
        let mut queue = VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn reachable_from(&self, from: SiteId) -> usize {
        self.bfs_distances(from)
            .iter()
            .filter(|&&d| d != usize::MAX)
            .count()
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from(0) == self.num_sites
    }

    /// Next hop from `from` on a shortest path to `to`, preferring the lowest
    /// site id among equally short options. Returns `from` when already there.
    pub fn next_hop_towards(&self, from: SiteId, to: SiteId) -> SiteId {
        if from == to {
            return from;
        }
        let dist = self.bfs_distances(to);
        self.adjacency[from]
            .iter()
            .copied()
            .find(|&v| dist[v] != usize::MAX && dist[v] + 1 == dist[from])
            .unwrap_or(from)
    }
}

/// Builds one of the supported topologies. Only the random kinds draw from
/// `rng`.
pub fn build_topology<R: Rng + ?Sized>(kind: &TopologyKind, rng: &mut R) -> Result<SiteGraph> {
    match *kind {
        TopologyKind::Grid { rows, cols } => grid(rows, cols),
        TopologyKind::Line { n } => line(n),
        TopologyKind::BarabasiAlbert { n, k } => barabasi_albert(n, k, rng),
        TopologyKind::ErdosRenyi { n, p } => erdos_renyi(n, p, rng),
        TopologyKind::Explicit {
            num_sites,
            ref edges,
        } => SiteGraph::from_edges(num_sites, edges),
    }
}

/// 4-connected `rows x cols` grid, site id `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Result<SiteGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidTopology(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                edges.push((id, id + 1));
            }
            if r + 1 < rows {
                edges.push((id, id + cols));
            }
        }
    }
    SiteGraph::from_edges(rows * cols, &edges)
}

pub fn line(n: usize) -> Result<SiteGraph> {
    if n == 0 {
        return Err(Error::InvalidTopology("line needs at least one site".into()));
    }
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    SiteGraph::from_edges(n, &edges)
}

/// The first `k` sites form a line; every later site attaches to
/// `min(k, existing)` distinct earlier sites chosen uniformly without
/// replacement.
pub fn barabasi_albert<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SiteGraph> {
    if n == 0 || k == 0 || k >= n {
        return Err(Error::InvalidTopology(format!(
            "barabasi_albert needs 1 <= k < n, got n={n}, k={k}"
        )));
    }
    let mut edges: Vec<_> = (1..k).map(|i| (i - 1, i)).collect();
    for new in k..n {
        let m = k.min(new);
        for old in index::sample(rng, new, m).into_iter() {
            edges.push((old, new));
        }
    }
    SiteGraph::from_edges(n, &edges)
}

/// Each pair `(a, b)` with `a < b` gets an edge with probability `p`, pairs
/// visited in lexicographic order. Disconnected draws are discarded and
/// redrawn from the same stream.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<SiteGraph> {
    if n == 0 || !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidTopology(format!(
            "erdos_renyi needs n >= 1 and 0 < p <= 1, got n={n}, p={p}"
        )));
    }
    for _ in 0..ER_RESAMPLE_CAP {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((a, b));
                }
            }
        }
        let graph = SiteGraph::from_edges_unchecked(n, &edges)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::ResampleBudgetExhausted {
        attempts: ER_RESAMPLE_CAP,
    })
}
