//! Tensor-contraction graph of a circuit.
//!
//! Every tensor is a node: the input state vector, one node per gate, identity
//! barrier nodes inserted by the partitioner, and a synthetic output node that
//! owns the free dimensions. Every edge is a labelled dimension `i^step_qubit`
//! connecting the tensor that produces it to the tensor that contracts it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{gate_matrix, GateKind, GateTensor};
use crate::qasm::{validate, Circuit, Diagnostic, GateApp};
use crate::scalar::Scalar;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("circuit failed validation: {0:?}")]
    InvalidCircuit(Vec<Diagnostic>),
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("nodes {0} and {1} share no dimension")]
    NotAdjacent(NodeId, NodeId),
    #[error("no node with id {0}")]
    UnknownNode(NodeId),
}

/// Dimension label: qubit line plus the time step on that line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DimIndex {
    pub qubit: usize,
    pub step: usize,
}

impl DimIndex {
    pub fn new(qubit: usize, step: usize) -> Self {
        Self { qubit, step }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeRole {
    StateVector,
    Gate,
    Barrier,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorNode {
    pub id: NodeId,
    pub role: NodeRole,
    /// Gate applied by this node; barriers carry the identity.
    pub gate: Option<GateApp>,
    /// Position of the gate in the source circuit.
    pub op_index: Option<usize>,
    pub in_dims: Vec<DimIndex>,
    pub out_dims: Vec<DimIndex>,
    /// Critical-path length from the state vector.
    pub l: usize,
}

impl TensorNode {
    pub fn is_gate(&self) -> bool {
        self.role == NodeRole::Gate
    }

    /// Qubit lines this node acts on, in slot order.
    pub fn qubits(&self) -> Vec<usize> {
        match &self.gate {
            Some(g) => g.qubits.clone(),
            None => self
                .out_dims
                .iter()
                .chain(&self.in_dims)
                .map(|d| d.qubit)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }

    pub fn gate_tensor<T: Scalar>(&self) -> Option<GateTensor<T>> {
        self.gate
            .as_ref()
            .map(|g| gate_matrix(g.kind, &g.params).expect("graph gates are validated"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub producer: NodeId,
    pub consumer: NodeId,
}

/// Where to place barriers: at most one dimension per qubit line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cut {
    pub dims: Vec<DimIndex>,
}

impl Cut {
    /// Barrier on every line directly after the state vector.
    pub fn start(d: usize) -> Self {
        Self {
            dims: (0..d).map(|q| DimIndex::new(q, 0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionGraph {
    pub d: usize,
    pub nodes: Vec<TensorNode>,
    #[serde(with = "edge_list")]
    pub edges: BTreeMap<DimIndex, Edge>,
    /// Per qubit line, the chain of nodes that touch it (state vector first, output last).
    pub lines: Vec<Vec<NodeId>>,
}

mod edge_list {
    use super::{DimIndex, Edge};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        dim: DimIndex,
        producer: usize,
        consumer: usize,
    }

    pub fn serialize<S: Serializer>(edges: &BTreeMap<DimIndex, Edge>, s: S) -> Result<S::Ok, S::Error> {
        edges
            .iter()
            .map(|(dim, e)| Entry {
                dim: *dim,
                producer: e.producer,
                consumer: e.consumer,
            })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<DimIndex, Edge>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| {
                (
                    e.dim,
                    Edge {
                        producer: e.producer,
                        consumer: e.consumer,
                    },
                )
            })
            .collect())
    }
}

/// Build the contraction graph of a validated circuit.
pub fn build_graph(circuit: &Circuit) -> Result<ContractionGraph, GraphError> {
    let diags = validate(circuit);
    if !diags.is_empty() {
        return Err(GraphError::InvalidCircuit(diags));
    }
    Ok(ContractionGraph::from_ops(
        circuit.num_qubits,
        circuit.ops.iter().cloned().enumerate(),
    ))
}

impl ContractionGraph {
    /// Graph over `d` lines for a sequence of `(op_index, gate)` pairs.
    ///
    /// Gates must already be valid for `d` qubits.
    pub fn from_ops(d: usize, ops: impl IntoIterator<Item = (usize, GateApp)>) -> Self {
        let mut nodes = vec![TensorNode {
            id: 0,
            role: NodeRole::StateVector,
            gate: None,
            op_index: None,
            in_dims: Vec::new(),
            out_dims: Vec::new(),
            l: 0,
        }];
        let mut lines: Vec<Vec<NodeId>> = vec![vec![0]; d];
        for (op_index, gate) in ops {
            let id = nodes.len();
            for &q in &gate.qubits {
                lines[q].push(id);
            }
            nodes.push(TensorNode {
                id,
                role: NodeRole::Gate,
                gate: Some(gate),
                op_index: Some(op_index),
                in_dims: Vec::new(),
                out_dims: Vec::new(),
                l: 0,
            });
        }
        let out = nodes.len();
        nodes.push(TensorNode {
            id: out,
            role: NodeRole::Output,
            gate: None,
            op_index: None,
            in_dims: Vec::new(),
            out_dims: Vec::new(),
            l: 0,
        });
        for line in &mut lines {
            line.push(out);
        }
        let mut g = ContractionGraph {
            d,
            nodes,
            edges: BTreeMap::new(),
            lines,
        };
        g.rebuild();
        g
    }

    /// Recompute dimension labels, edges and critical-path lengths from `lines`.
    fn rebuild(&mut self) {
        for n in &mut self.nodes {
            n.in_dims.clear();
            n.out_dims.clear();
        }
        self.edges.clear();
        // slot-ordered dims for gate/barrier nodes
        let mut step_in: BTreeMap<(NodeId, usize), usize> = BTreeMap::new();
        for (q, line) in self.lines.iter().enumerate() {
            for (step, pair) in line.windows(2).enumerate() {
                let dim = DimIndex::new(q, step);
                self.edges.insert(
                    dim,
                    Edge {
                        producer: pair[0],
                        consumer: pair[1],
                    },
                );
                step_in.insert((pair[1], q), step);
            }
        }
        for n in &mut self.nodes {
            match n.role {
                NodeRole::StateVector => {
                    n.out_dims = (0..self.d).map(|q| DimIndex::new(q, 0)).collect();
                }
                NodeRole::Output => {
                    n.in_dims = (0..self.d).map(|q| DimIndex::new(q, self.lines[q].len() - 2)).collect();
                }
                NodeRole::Gate | NodeRole::Barrier => {
                    let qubits = n
                        .gate
                        .as_ref()
                        .expect("gate and barrier nodes carry a gate")
                        .qubits
                        .clone();
                    for q in qubits {
                        let s = step_in[&(n.id, q)];
                        n.in_dims.push(DimIndex::new(q, s));
                        n.out_dims.push(DimIndex::new(q, s + 1));
                    }
                }
            }
        }
        let order = self.topological_order();
        for &v in &order {
            let l = self.nodes[v]
                .in_dims
                .iter()
                .map(|dim| self.nodes[self.edges[dim].producer].l + 1)
                .max()
                .unwrap_or(0);
            self.nodes[v].l = l;
        }
    }

    /// Kahn order over producer→consumer edges; ties resolved by node id.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut succ: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for e in self.edges.values() {
            indeg[e.consumer] += 1;
            succ[e.producer].push(e.consumer);
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<NodeId>> =
            (0..n).filter(|&v| indeg[v] == 0).map(std::cmp::Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(v)) = ready.pop() {
            order.push(v);
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(std::cmp::Reverse(w));
                }
            }
        }
        debug_assert_eq!(order.len(), n, "contraction graph must be acyclic");
        order
    }

    pub fn node(&self, id: NodeId) -> Result<&TensorNode, GraphError> {
        self.nodes.get(id).ok_or(GraphError::UnknownNode(id))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes that are real tensors (everything except the synthetic output).
    pub fn num_tensors(&self) -> usize {
        self.nodes.iter().filter(|n| n.role != NodeRole::Output).count()
    }

    pub fn gate_nodes(&self) -> impl Iterator<Item = &TensorNode> {
        self.nodes.iter().filter(|n| n.is_gate())
    }

    pub fn output(&self) -> NodeId {
        self.nodes
            .iter()
            .find(|n| n.role == NodeRole::Output)
            .expect("every graph has an output node")
            .id
    }

    /// Distinct consumers of the dimensions `v` produces.
    pub fn successors(&self, v: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.nodes[v].out_dims.iter().map(|d| self.edges[d].consumer).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Distinct producers of the dimensions `v` contracts.
    pub fn predecessors(&self, v: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.nodes[v].in_dims.iter().map(|d| self.edges[d].producer).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Place one identity barrier on each dimension named by `cut`.
    ///
    /// Barriers get fresh ids after all existing nodes; downstream steps and
    /// critical-path lengths shift accordingly.
    pub fn insert_barriers(&self, cut: &Cut) -> Result<ContractionGraph, GraphError> {
        let mut seen = BTreeSet::new();
        for dim in &cut.dims {
            if dim.qubit >= self.d {
                return Err(GraphError::InvalidCut(format!("qubit {} out of range", dim.qubit)));
            }
            if !seen.insert(dim.qubit) {
                return Err(GraphError::InvalidCut(format!("line {} crossed twice", dim.qubit)));
            }
            if !self.edges.contains_key(dim) {
                return Err(GraphError::InvalidCut(format!(
                    "no dimension i^{}_{}",
                    dim.step, dim.qubit
                )));
            }
        }
        let mut g = self.clone();
        for dim in &cut.dims {
            let id = g.nodes.len();
            g.nodes.push(TensorNode {
                id,
                role: NodeRole::Barrier,
                gate: Some(GateApp::new(GateKind::Id, Vec::new(), vec![dim.qubit])),
                op_index: None,
                in_dims: Vec::new(),
                out_dims: Vec::new(),
                l: 0,
            });
            g.lines[dim.qubit].insert(dim.step + 1, id);
        }
        g.rebuild();
        Ok(g)
    }

    /// Remove every barrier node, compacting ids in their existing order.
    pub fn contract_barriers(&self) -> ContractionGraph {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for n in &self.nodes {
            if n.role != NodeRole::Barrier {
                remap[n.id] = nodes.len();
                let mut m = n.clone();
                m.id = nodes.len();
                nodes.push(m);
            }
        }
        let lines = self
            .lines
            .iter()
            .map(|line| {
                line.iter()
                    .filter(|&&v| remap[v] != usize::MAX)
                    .map(|&v| remap[v])
                    .collect()
            })
            .collect();
        let mut g = ContractionGraph {
            d: self.d,
            nodes,
            edges: BTreeMap::new(),
            lines,
        };
        g.rebuild();
        g
    }

    /// `|l_u − l_v|` for two nodes that share a dimension.
    pub fn edge_weight(&self, u: NodeId, v: NodeId) -> Result<usize, GraphError> {
        let (a, b) = (self.node(u)?, self.node(v)?);
        let adjacent = self
            .edges
            .values()
            .any(|e| (e.producer == u && e.consumer == v) || (e.producer == v && e.consumer == u));
        if !adjacent {
            return Err(GraphError::NotAdjacent(u, v));
        }
        Ok(a.l.abs_diff(b.l))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    /// Graphviz rendering; contraction edges solid, free output edges dashed.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph contraction {\n  rankdir=LR;\n");
        for n in &self.nodes {
            let (label, shape) = match n.role {
                NodeRole::StateVector => ("ψ".to_string(), "box"),
                NodeRole::Output => ("out".to_string(), "plaintext"),
                NodeRole::Barrier => ("I".to_string(), "circle"),
                NodeRole::Gate => {
                    let g = n.gate.as_ref().expect("gate node");
                    (
                        format!("{}{:?}", g.kind.qasm_name().to_uppercase(), g.qubits),
                        "ellipse",
                    )
                }
            };
            let fill = if n.role == NodeRole::Barrier {
                ", style=filled, fillcolor=gray"
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "  n{} [label=\"{} l={}\", shape={}{}];",
                n.id, label, n.l, shape, fill
            );
        }
        for (dim, e) in &self.edges {
            let style = if self.nodes[e.consumer].role == NodeRole::Output {
                ", style=dashed"
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "  n{} -> n{} [label=\"i{}_{}\"{}];",
                e.producer, e.consumer, dim.step, dim.qubit, style
            );
        }
        s.push_str("}\n");
        s
    }
}
