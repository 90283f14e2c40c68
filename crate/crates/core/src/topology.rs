//! Cluster layout of the storage system.
//!
//! Nodes are written `N(l, j)`: the `j`-th node of cluster `l`, both
//! 1-based. The flat index `u = (l - 1) n_I + j` is also 1-based.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` nodes spread uniformly over `clusters` clusters; data collectors
/// contact `k` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterTopology {
    n: usize,
    k: usize,
    clusters: usize,
}

impl ClusterTopology {
    pub fn new(n: usize, k: usize, clusters: usize) -> Result<ClusterTopology> {
        if clusters == 0 || n == 0 || !n.is_multiple_of(clusters) {
            return Err(Error::Parameter(format!(
                "{n} nodes cannot be spread uniformly over {clusters} clusters"
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::Parameter(format!("contact degree k={k} must satisfy 1 <= k < n={n}")));
        }
        Ok(ClusterTopology { n, k, clusters })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of clusters, `L`.
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    /// Nodes per cluster, `n_I`.
    pub fn cluster_size(&self) -> usize {
        self.n / self.clusters
    }

    /// `⌊k / n_I⌋`
    pub fn q(&self) -> usize {
        self.k / self.cluster_size()
    }

    /// `k mod n_I`
    pub fn r(&self) -> usize {
        self.k % self.cluster_size()
    }

    pub fn node(&self, l: usize, j: usize) -> Result<NodeId> {
        if !(1..=self.clusters).contains(&l) || !(1..=self.cluster_size()).contains(&j) {
            return Err(Error::Parameter(format!("node N({l},{j}) is outside the topology")));
        }
        Ok(NodeId { l, j })
    }

    /// `(l, j) ↦ (l - 1) n_I + j`
    pub fn flat(&self, node: NodeId) -> usize {
        (node.l - 1) * self.cluster_size() + node.j
    }

    /// Inverse of [`flat`](Self::flat).
    pub fn pair(&self, u: usize) -> Result<NodeId> {
        if !(1..=self.n).contains(&u) {
            return Err(Error::Parameter(format!("flat node index {u} outside 1..={}", self.n)));
        }
        let ni = self.cluster_size();
        Ok(NodeId { l: (u - 1) / ni + 1, j: (u - 1) % ni + 1 })
    }

    pub fn contains(&self, node: NodeId) -> bool {
        (1..=self.clusters).contains(&node.l) && (1..=self.cluster_size()).contains(&node.j)
    }

    /// All nodes in flat order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        let ni = self.cluster_size();
        (1..=self.clusters).flat_map(move |l| (1..=ni).map(move |j| NodeId { l, j }))
    }

    /// Per-cluster counts of `nodes`.
    pub fn contact_vector(&self, nodes: &[NodeId]) -> ContactVector {
        let mut counts = vec![0; self.clusters];
        for node in nodes {
            counts[node.l - 1] += 1;
        }
        ContactVector(counts)
    }

    /// Every contact vector of `k` nodes, in lexicographic order.
    pub fn contact_vectors(&self) -> Vec<ContactVector> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.clusters);
        compositions(self.k, self.clusters, self.cluster_size(), &mut current, &mut out);
        out
    }

    /// Greedy cluster fill: `⌊k/n_I⌋` full clusters, then the remainder.
    pub fn omega_star(&self) -> ContactVector {
        let ni = self.cluster_size();
        let q = self.q();
        let v = (0..self.clusters)
            .map(|i| match i.cmp(&q) {
                std::cmp::Ordering::Less => ni,
                std::cmp::Ordering::Equal => self.r(),
                std::cmp::Ordering::Greater => 0,
            })
            .collect();
        ContactVector(v)
    }

    /// The lowest-indexed nodes realizing `omega` in each cluster.
    pub fn nodes_for(&self, omega: &ContactVector) -> Vec<NodeId> {
        omega
            .0
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| (1..=w).map(move |j| NodeId { l: i + 1, j }))
            .collect()
    }
}

fn compositions(
    remaining: usize,
    parts: usize,
    cap: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<ContactVector>,
) {
    if parts == 0 {
        if remaining == 0 {
            out.push(ContactVector(current.clone()));
        }
        return;
    }
    // Later parts can absorb at most cap * (parts - 1).
    let lo = remaining.saturating_sub(cap * (parts - 1));
    for w in lo..=remaining.min(cap) {
        current.push(w);
        compositions(remaining - w, parts - 1, cap, current, out);
        current.pop();
    }
}

/// Storage node `N(l, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub l: usize,
    pub j: usize,
}

impl NodeId {
    pub fn new(l: usize, j: usize) -> NodeId {
        NodeId { l, j }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N({},{})", self.l, self.j)
    }
}

/// Parses the `l,j` form used on the command line.
impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<NodeId> {
        let (l, j) = s
            .trim()
            .split_once(',')
            .ok_or_else(|| Error::Parameter(format!("expected `l,j`, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parameter(format!("bad node index in `{s}`")))
        };
        Ok(NodeId { l: parse(l)?, j: parse(j)? })
    }
}

/// Parses a whitespace-separated list of `l,j` pairs.
pub fn parse_node_list(s: &str) -> Result<Vec<NodeId>> {
    s.split_whitespace().map(str::parse).collect()
}

/// Number of contacted nodes in each cluster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContactVector(pub Vec<usize>);

impl ContactVector {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `Σ_l C(ω_l, 2)`: pairs of contacted nodes sharing a cluster.
    pub fn same_cluster_pairs(&self) -> usize {
        self.0.iter().map(|&w| w * w.saturating_sub(1) / 2).sum()
    }

    /// `self ≻ other`: equal totals and dominating sorted partial sums.
    pub fn majorizes(&self, other: &ContactVector) -> bool {
        if self.total() != other.total() {
            return false;
        }
        let sorted = |v: &ContactVector| {
            let mut s = v.0.clone();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        let (a, b) = (sorted(self), sorted(other));
        let len = a.len().max(b.len());
        let (mut pa, mut pb) = (0, 0);
        (0..len).all(|i| {
            pa += a.get(i).copied().unwrap_or(0);
            pb += b.get(i).copied().unwrap_or(0);
            pa >= pb
        })
    }
}

impl fmt::Display for ContactVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Incidence matrix `V_t` of the complete graph on `t` vertices.
///
/// Edges are ordered lexicographically: (1,2), (1,3), …, (1,t), (2,3), …,
/// (t-1,t). Entry `(j, i)` is 1 iff vertex `j` is an endpoint of edge `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    t: usize,
    edges: Vec<(usize, usize)>,
}

impl IncidenceMatrix {
    pub fn new(t: usize) -> Result<IncidenceMatrix> {
        if t < 2 {
            return Err(Error::Parameter(format!("incidence matrix needs t >= 2, got {t}")));
        }
        let edges = (1..=t).flat_map(|a| (a + 1..=t).map(move |b| (a, b))).collect();
        Ok(IncidenceMatrix { t, edges })
    }

    pub fn vertices(&self) -> usize {
        self.t
    }

    /// `C(t, 2)`
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Endpoints of edge `i` (1-based).
    pub fn edge(&self, i: usize) -> (usize, usize) {
        self.edges[i - 1]
    }

    /// `V_t(j, i)` with 1-based indices.
    pub fn get(&self, j: usize, i: usize) -> u8 {
        let (a, b) = self.edges[i - 1];
        u8::from(a == j || b == j)
    }

    /// Edges incident to vertex `j`, ascending.
    pub fn edges_of(&self, j: usize) -> Vec<usize> {
        (1..=self.edges.len()).filter(|&i| self.get(j, i) == 1).collect()
    }

    /// The edge joining vertices `a` and `b`.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if a == b || a == 0 || b > self.t {
            return None;
        }
        // Edges before vertex a's block: Σ_{v<a} (t - v).
        let before: usize = (1..a).map(|v| self.t - v).sum();
        Some(before + (b - a))
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (1..=self.t).map(|j| (1..=self.edges.len()).map(|i| self.get(j, i)).collect()).collect()
    }
}

/// `C(n, 2)`
pub fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}
