//! Closeness centrality over the contraction graph.
//!
//! Distances follow dependency edges downstream, each edge weighted by the
//! difference of critical-path lengths of its endpoints. Reachable sets are built
//! in one backward sweep: a node's distance map is the minimum-merge of its
//! successors' maps shifted by the connecting edge weight. A Dijkstra-per-node
//! oracle computes the same table independently.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{ContractionGraph, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CentralityError {
    #[error("dependency graph contains a cycle")]
    CycleDetected,
}

/// Weighted DAG stripped down to what centrality needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagView {
    pub l: Vec<usize>,
    /// Distinct downstream neighbours per node.
    pub succ: Vec<Vec<NodeId>>,
}

impl DagView {
    pub fn from_graph(graph: &ContractionGraph) -> Self {
        Self {
            l: graph.nodes.iter().map(|n| n.l).collect(),
            succ: (0..graph.nodes.len()).map(|v| graph.successors(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    #[inline]
    fn weight(&self, u: NodeId, v: NodeId) -> u64 {
        self.l[u].abs_diff(self.l[v]) as u64
    }

    /// Same DAG with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[NodeId]) -> Self {
        let n = self.len();
        let mut l = vec![0; n];
        let mut succ = vec![Vec::new(); n];
        for v in 0..n {
            l[perm[v]] = self.l[v];
            let mut s: Vec<NodeId> = self.succ[v].iter().map(|&w| perm[w]).collect();
            s.sort_unstable();
            succ[perm[v]] = s;
        }
        Self { l, succ }
    }

    fn topological_order(&self) -> Result<Vec<NodeId>, CentralityError> {
        let n = self.len();
        let mut indeg = vec![0usize; n];
        for s in &self.succ {
            for &w in s {
                indeg[w] += 1;
            }
        }
        let mut stack: Vec<NodeId> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in self.succ[v].iter().rev() {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(CentralityError::CycleDetected)
        }
    }
}

/// Reachable set of one node with shortest downstream distances.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReachInfo {
    /// `(node, distance)` sorted by node id.
    pub rn: Vec<(NodeId, u64)>,
    pub dist: u64,
}

impl ReachInfo {
    fn from_sorted(rn: Vec<(NodeId, u64)>) -> Self {
        let dist = rn.iter().map(|&(_, d)| d).sum();
        Self { rn, dist }
    }

    pub fn size(&self) -> usize {
        self.rn.len()
    }

    pub fn get(&self, v: NodeId) -> Option<u64> {
        self.rn.binary_search_by_key(&v, |&(k, _)| k).ok().map(|i| self.rn[i].1)
    }
}

/// Nodes sharing a dimension with `v` whose critical-path length exceeds `l_v`.
pub fn downstream_neighbors(graph: &ContractionGraph, v: NodeId) -> Vec<NodeId> {
    let lv = graph.nodes[v].l;
    let mut out: Vec<NodeId> = graph
        .edges
        .values()
        .filter_map(|e| {
            if e.producer == v {
                Some(e.consumer)
            } else if e.consumer == v {
                Some(e.producer)
            } else {
                None
            }
        })
        .filter(|&w| graph.nodes[w].l > lv)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

pub fn compute_reach(graph: &ContractionGraph) -> Result<Vec<ReachInfo>, CentralityError> {
    compute_reach_view(&DagView::from_graph(graph))
}

/// Backward sweep with exact minimum-merge of successor distance maps.
pub fn compute_reach_view(dag: &DagView) -> Result<Vec<ReachInfo>, CentralityError> {
    let order = dag.topological_order()?;
    let n = dag.len();
    let mut reach: Vec<ReachInfo> = vec![ReachInfo::default(); n];
    let mut best = vec![u64::MAX; n];
    let mut touched: Vec<NodeId> = Vec::new();

    for &v in order.iter().rev() {
        for &j in &dag.succ[v] {
            let w = dag.weight(v, j);
            let mut relax = |x: NodeId, d: u64| {
                if best[x] == u64::MAX {
                    touched.push(x);
                }
                if d < best[x] {
                    best[x] = d;
                }
            };
            relax(j, w);
            for &(x, dx) in &reach[j].rn {
                relax(x, w + dx);
            }
        }
        touched.sort_unstable();
        let rn: Vec<(NodeId, u64)> = touched.iter().map(|&x| (x, best[x])).collect();
        for &x in &touched {
            best[x] = u64::MAX;
        }
        touched.clear();
        reach[v] = ReachInfo::from_sorted(rn);
    }
    Ok(reach)
}

pub fn compute_reach_bruteforce(graph: &ContractionGraph) -> Vec<ReachInfo> {
    compute_reach_bruteforce_view(&DagView::from_graph(graph))
}

/// Single-source Dijkstra from every node over downstream edges.
pub fn compute_reach_bruteforce_view(dag: &DagView) -> Vec<ReachInfo> {
    let n = dag.len();
    (0..n)
        .map(|s| {
            let mut dist: Vec<Option<u64>> = vec![None; n];
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0u64, s)));
            let mut settled = vec![false; n];
            while let Some(Reverse((d, u))) = heap.pop() {
                if settled[u] {
                    continue;
                }
                settled[u] = true;
                if u != s {
                    dist[u] = Some(d);
                }
                for &w in &dag.succ[u] {
                    if !settled[w] {
                        heap.push(Reverse((d + dag.weight(u, w), w)));
                    }
                }
            }
            ReachInfo::from_sorted(dist.iter().enumerate().filter_map(|(v, d)| d.map(|d| (v, d))).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityTable {
    pub n: usize,
    pub reach: Vec<ReachInfo>,
    pub cc: Vec<f64>,
}

/// `(|RN| / dist) · (|RN| / N)`, zero for nodes that reach nothing.
pub fn closeness_score(reach: &ReachInfo, n: usize) -> f64 {
    if reach.rn.is_empty() || reach.dist == 0 {
        return 0.0;
    }
    let size = reach.size() as f64;
    (size / reach.dist as f64) * (size / n as f64)
}

pub fn closeness(graph: &ContractionGraph) -> Result<CentralityTable, CentralityError> {
    closeness_view(&DagView::from_graph(graph))
}

pub fn closeness_view(dag: &DagView) -> Result<CentralityTable, CentralityError> {
    let reach = compute_reach_view(dag)?;
    let n = dag.len();
    let cc = reach.iter().map(|r| closeness_score(r, n)).collect();
    Ok(CentralityTable { n, reach, cc })
}

#[derive(Serialize)]
struct NodeEntry {
    cc: f64,
    rn_size: usize,
    dist: u64,
    rn: BTreeMap<NodeId, u64>,
}

impl CentralityTable {
    /// Nodes ordered by decreasing cc, ties to the smaller id.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = (0..self.n).collect();
        ids.sort_by(|&a, &b| self.cc[b].total_cmp(&self.cc[a]).then(a.cmp(&b)));
        ids
    }

    /// JSON object keyed by node id.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<NodeId, NodeEntry> = (0..self.n)
            .map(|v| {
                (
                    v,
                    NodeEntry {
                        cc: self.cc[v],
                        rn_size: self.reach[v].size(),
                        dist: self.reach[v].dist,
                        rn: self.reach[v].rn.iter().copied().collect(),
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&map).expect("table serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::qasm::parse_qasm;

    fn ghz3() -> ContractionGraph {
        build_graph(&parse_qasm("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];").unwrap()).unwrap()
    }

    fn chain() -> ContractionGraph {
        // ψ → H → out, unit weights
        build_graph(&parse_qasm("qreg q[1]; h q[0];").unwrap()).unwrap()
    }

    #[test]
    fn downstream_neighbours_of_ghz3() {
        let g = ghz3();
        assert_eq!(downstream_neighbors(&g, 0), vec![1, 2, 3]);
        assert_eq!(downstream_neighbors(&g, 1), vec![2]);
        assert_eq!(downstream_neighbors(&g, 3), vec![g.output()]);
        assert!(downstream_neighbors(&g, g.output()).is_empty());
    }

    #[test]
    fn chain_reach_and_score() {
        let g = chain();
        let r = compute_reach(&g).unwrap();
        assert_eq!(r[0].rn, vec![(1, 1), (2, 2)]);
        assert_eq!(r[0].dist, 3);
        assert!(r[2].rn.is_empty());
        assert_eq!(r[2].dist, 0);
        let t = closeness(&g).unwrap();
        assert!((t.cc[0] - 4.0 / 9.0).abs() < 1e-15);
        // strictly decreasing toward the sink
        assert!(t.cc[0] > t.cc[1] && t.cc[1] > t.cc[2]);
        assert_eq!(t.cc[2], 0.0);
    }

    #[test]
    fn ghz3_matches_oracle() {
        let g = ghz3();
        assert_eq!(compute_reach(&g).unwrap(), compute_reach_bruteforce(&g));
        let r = compute_reach(&g).unwrap();
        // ψ reaches CX(1,2) directly with weight 3, shorter than via H/CX(0,1)
        assert_eq!(r[0].get(3), Some(3));
        assert_eq!(r[0].get(2), Some(2));
    }

    #[test]
    fn empty_and_disconnected() {
        let empty = DagView {
            l: vec![],
            succ: vec![],
        };
        assert!(compute_reach_bruteforce_view(&empty).is_empty());
        assert!(compute_reach_view(&empty).unwrap().is_empty());
        // two components: 0→1, 2→3
        let dag = DagView {
            l: vec![0, 2, 0, 1],
            succ: vec![vec![1], vec![], vec![3], vec![]],
        };
        let r = compute_reach_view(&dag).unwrap();
        assert_eq!(r[0].rn, vec![(1, 2)]);
        assert_eq!(r, compute_reach_bruteforce_view(&dag));
        let t = closeness_view(&dag).unwrap();
        assert!((t.cc[0] - 0.5 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn isolated_node_scores_zero() {
        let dag = DagView {
            l: vec![0],
            succ: vec![vec![]],
        };
        assert_eq!(closeness_view(&dag).unwrap().cc, vec![0.0]);
    }

    #[test]
    fn cycle_is_detected() {
        let dag = DagView {
            l: vec![0, 1],
            succ: vec![vec![1], vec![0]],
        };
        assert_eq!(compute_reach_view(&dag), Err(CentralityError::CycleDetected));
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        let t = CentralityTable {
            n: 3,
            reach: vec![ReachInfo::default(); 3],
            cc: vec![0.5, 0.7, 0.5],
        };
        assert_eq!(t.ranking(), vec![1, 0, 2]);
    }

    #[test]
    fn json_is_keyed_by_id() {
        let t = closeness(&ghz3()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["0"]["rn_size"], 4);
    }
}
