//! Centrality-guided partitioning of the contraction graph against a memory hierarchy.
//!
//! Each forward pass starts from a barrier frontier, picks which qubit lines are
//! local, and sweeps the frontier over every gate it can execute with that
//! choice. A gate that touches a non-local line may still be absorbed when it
//! is diagonal, or when every non-local line it touches is one of its controls.
//! When nothing more can be absorbed the partition is closed, barriers are
//! re-inserted at the new frontier and centrality is recomputed on what is left.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{closeness, CentralityError, CentralityTable};
use crate::gates::{gate_matrix, GateTensor};
use crate::graph::{ContractionGraph, Cut, GraphError, NodeRole};
use crate::qasm::{Circuit, GateApp};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("gate {op} needs {needed} local qubit(s) but level {level} only holds {budget}")]
    BudgetTooSmall {
        op: usize,
        needed: usize,
        level: usize,
        budget: usize,
    },
    #[error("invalid memory hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Centrality(#[from] CentralityError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryLevel {
    pub name: String,
    pub local_qubits: usize,
}

/// Memory levels from outermost (distributed) to innermost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryHierarchy {
    pub levels: Vec<MemoryLevel>,
}

impl MemoryHierarchy {
    /// Levels named distributed / shared / local / level-k, with the given budgets.
    pub fn from_budgets(budgets: &[usize]) -> Self {
        const NAMES: [&str; 3] = ["distributed", "shared", "local"];
        Self {
            levels: budgets
                .iter()
                .enumerate()
                .map(|(k, &l)| MemoryLevel {
                    name: NAMES.get(k).map_or_else(|| format!("level-{k}"), |s| s.to_string()),
                    local_qubits: l,
                })
                .collect(),
        }
    }

    pub fn budgets(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.local_qubits).collect()
    }

    pub fn validate(&self, d: usize) -> Result<(), PartitionError> {
        if self.levels.is_empty() {
            return Err(PartitionError::InvalidHierarchy("no levels".into()));
        }
        let mut prev = usize::MAX;
        for lvl in &self.levels {
            let l = lvl.local_qubits;
            if l == 0 || l > d.max(1) {
                return Err(PartitionError::InvalidHierarchy(format!(
                    "level `{}` holds {l} qubits; must be in 1..={}",
                    lvl.name,
                    d.max(1)
                )));
            }
            if l > prev {
                return Err(PartitionError::InvalidHierarchy(format!(
                    "level `{}` ({l}) is larger than the level above it ({prev})",
                    lvl.name
                )));
            }
            prev = l;
        }
        Ok(())
    }
}

/// Partitioning-relevant structure of one gate.
#[derive(Debug, Clone, PartialEq, Eq)]
struct GateShape {
    qubits: Vec<usize>,
    /// Lines that must be local for the gate to execute.
    required: Vec<usize>,
}

impl GateShape {
    fn of(gate: &GateApp) -> Self {
        let t: GateTensor<f64> = gate_matrix(gate.kind, &gate.params).expect("validated gate");
        let required = if t.is_diagonal {
            Vec::new()
        } else {
            gate.qubits
                .iter()
                .enumerate()
                .filter(|(slot, _)| !t.control_slots.contains(slot))
                .map(|(_, &q)| q)
                .collect()
        };
        Self {
            qubits: gate.qubits.clone(),
            required,
        }
    }

    fn absorbable(&self, local: &BTreeSet<usize>) -> bool {
        self.required.iter().all(|q| local.contains(q))
    }
}

/// True when `gate` can run although the slots in `nonlocal_slots` are not resident:
/// the gate is diagonal, or every such slot is a control.
pub fn can_pass_through<T: Scalar>(gate: &GateTensor<T>, nonlocal_slots: &[usize]) -> bool {
    gate.is_diagonal || nonlocal_slots.iter().all(|s| gate.control_slots.contains(s))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub level: usize,
    pub local_dims: Vec<usize>,
    pub global_dims: Vec<usize>,
    /// Source-circuit gate indices in execution order.
    pub gates: Vec<usize>,
    /// Parallel to `gates`: executed despite touching a non-local line.
    pub passthrough: Vec<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Partition>,
}

impl Partition {
    pub fn passthrough_ops(&self) -> impl Iterator<Item = usize> + '_ {
        self.gates
            .iter()
            .zip(&self.passthrough)
            .filter(|(_, &p)| p)
            .map(|(&g, _)| g)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// The slice of the contraction graph this partition executes.
    pub fn subgraph(&self, circuit: &Circuit) -> ContractionGraph {
        ContractionGraph::from_ops(
            circuit.num_qubits,
            self.gates.iter().map(|&i| (i, circuit.ops[i].clone())),
        )
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Partition>) {
        if self.children.is_empty() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTree {
    pub d: usize,
    pub hierarchy: MemoryHierarchy,
    /// All gates of the circuit, in source order.
    pub gates: Vec<usize>,
    /// Outermost-level partitions in execution order.
    pub children: Vec<Partition>,
}

impl PartitionTree {
    /// Leaves in pre-order, which is execution order.
    pub fn leaves(&self) -> Vec<&Partition> {
        let mut out = Vec::new();
        for c in &self.children {
            c.collect_leaves(&mut out);
        }
        out
    }

    /// Number of partition levels below the root.
    pub fn depth(&self) -> usize {
        fn walk(p: &Partition) -> usize {
            1 + p.children.iter().map(walk).max().unwrap_or(0)
        }
        self.children.iter().map(walk).max().unwrap_or(0)
    }

    /// Consecutive outermost partitions whose local sets differ.
    pub fn boundaries(&self) -> usize {
        self.children
            .windows(2)
            .filter(|w| w[0].local_dims != w[1].local_dims)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }
}

/// Smallest level budget that can hold every gate of `circuit`.
pub fn min_budget(circuit: &Circuit) -> usize {
    circuit
        .ops
        .iter()
        .map(|g| GateShape::of(g).required.len())
        .max()
        .unwrap_or(0)
}

fn budget_check(shapes: &[(usize, GateShape)], level: usize, budget: usize) -> Result<(), PartitionError> {
    match shapes.iter().find(|(_, s)| s.required.len() > budget) {
        Some((op, s)) => Err(PartitionError::BudgetTooSmall {
            op: *op,
            needed: s.required.len(),
            level,
            budget,
        }),
        None => Ok(()),
    }
}

struct PassInput<'a> {
    d: usize,
    level: usize,
    budget: usize,
    /// Lines that may be made local at this level.
    candidates: &'a [usize],
}

/// Pick the local lines for the next partition.
fn choose_local(
    graph: &ContractionGraph,
    table: &CentralityTable,
    shapes: &std::collections::BTreeMap<usize, GateShape>,
    input: &PassInput<'_>,
    prev_local: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    let target = input.budget.min(input.candidates.len());
    // pending gates per line in line order; cc by op
    let mut score: Vec<Option<f64>> = vec![None; input.d];
    let mut touch: Vec<Option<f64>> = vec![None; input.d];
    let mut seed: Option<(f64, usize, &GateShape)> = None;
    for q in input.candidates {
        let line = &graph.lines[*q];
        let mut first = true;
        for &v in line {
            let node = &graph.nodes[v];
            if node.role != NodeRole::Gate {
                continue;
            }
            let op = node.op_index.expect("gate node");
            let shape = &shapes[&op];
            let cc = table.cc[v];
            if shape.required.contains(q) {
                score[*q] = Some(score[*q].map_or(cc, |s: f64| s.max(cc)));
            }
            touch[*q] = Some(touch[*q].map_or(cc, |s: f64| s.max(cc)));
            if first {
                first = false;
                // ready: first pending gate on each of its lines
                let ready = shape
                    .qubits
                    .iter()
                    .all(|&l| graph.lines[l].iter().find(|&&u| graph.nodes[u].role == NodeRole::Gate) == Some(&v));
                let better = match seed {
                    None => true,
                    Some((best, id, _)) => cc > best || (cc == best && v < id),
                };
                if ready && !shape.required.is_empty() && better {
                    seed = Some((cc, v, shape));
                }
            }
        }
    }

    let mut local: BTreeSet<usize> = seed
        .map(|(_, _, s)| s.required.iter().copied().collect())
        .unwrap_or_default();
    let mut order: Vec<usize> = input.candidates.to_vec();
    // lines some gate needs, then lines only used as controls or phases,
    // then idle lines (keeping what is already resident)
    let rank = |s: Option<f64>, t: Option<f64>| {
        use std::cmp::Ordering::*;
        match (s, t) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Less,
            (None, Some(_)) => Greater,
            (None, None) => Equal,
        }
    };
    order.sort_by(|&a, &b| {
        rank(score[a], score[b])
            .then(rank(touch[a], touch[b]))
            .then(prev_local.contains(&b).cmp(&prev_local.contains(&a)))
            .then(a.cmp(&b))
    });
    for q in order {
        if local.len() >= target {
            break;
        }
        local.insert(q);
    }
    local
}

fn run_passes(
    ops: Vec<(usize, GateApp)>,
    input: PassInput<'_>,
    first: Option<(&ContractionGraph, &CentralityTable)>,
) -> Result<Vec<Partition>, PartitionError> {
    let shapes: std::collections::BTreeMap<usize, GateShape> =
        ops.iter().map(|(i, g)| (*i, GateShape::of(g))).collect();
    let as_vec: Vec<(usize, GateShape)> = shapes.iter().map(|(k, v)| (*k, v.clone())).collect();
    budget_check(&as_vec, input.level, input.budget)?;

    let mut pending = ops;
    let mut out = Vec::new();
    let mut prev_local = BTreeSet::new();
    let mut first = first;
    while !pending.is_empty() {
        let owned;
        let (graph, table) = match first.take() {
            Some(pair) => pair,
            None => {
                let g = ContractionGraph::from_ops(input.d, pending.iter().cloned())
                    .insert_barriers(&Cut::start(input.d))?;
                let t = closeness(&g)?;
                owned = (g, t);
                (&owned.0, &owned.1)
            }
        };
        let local = choose_local(graph, table, &shapes, &input, &prev_local);

        let mut blocked = vec![false; input.d];
        let mut taken = Vec::new();
        let mut passthrough = Vec::new();
        let mut rest = Vec::new();
        for (op, gate) in pending {
            let shape = &shapes[&op];
            if shape.qubits.iter().any(|&q| blocked[q]) || !shape.absorbable(&local) {
                for &q in &shape.qubits {
                    blocked[q] = true;
                }
                rest.push((op, gate));
            } else {
                passthrough.push(shape.qubits.iter().any(|q| !local.contains(q)));
                taken.push(op);
            }
        }
        debug_assert!(!taken.is_empty(), "every pass absorbs at least its seed gate");
        out.push(Partition {
            level: input.level,
            local_dims: local.iter().copied().collect(),
            global_dims: (0..input.d).filter(|q| !local.contains(q)).collect(),
            gates: taken,
            passthrough,
            children: Vec::new(),
        });
        pending = rest;
        prev_local = local;
    }
    Ok(out)
}

/// One level of partitioning over a barrier-fronted graph.
///
/// `centrality` must have been computed on `graph`; later partitions recompute
/// it on the remaining suffix.
pub fn forward_pass(
    graph: &ContractionGraph,
    centrality: &CentralityTable,
    budget: usize,
) -> Result<Vec<Partition>, PartitionError> {
    let ops = gate_ops(graph);
    let candidates: Vec<usize> = (0..graph.d).collect();
    run_passes(
        ops,
        PassInput {
            d: graph.d,
            level: 0,
            budget,
            candidates: &candidates,
        },
        Some((graph, centrality)),
    )
}

fn gate_ops(graph: &ContractionGraph) -> Vec<(usize, GateApp)> {
    let mut ops: Vec<(usize, GateApp)> = graph
        .gate_nodes()
        .map(|n| (n.op_index.expect("gate node"), n.gate.clone().expect("gate node")))
        .collect();
    ops.sort_by_key(|(i, _)| *i);
    ops
}

fn refine(
    parent: &mut Partition,
    by_op: &std::collections::BTreeMap<usize, GateApp>,
    d: usize,
    budgets: &[usize],
) -> Result<(), PartitionError> {
    let Some((&budget, deeper)) = budgets.split_first() else {
        return Ok(());
    };
    let ops: Vec<(usize, GateApp)> = parent.gates.iter().map(|&i| (i, by_op[&i].clone())).collect();
    let mut children = run_passes(
        ops,
        PassInput {
            d,
            level: parent.level + 1,
            budget,
            candidates: &parent.local_dims,
        },
        None,
    )?;
    for c in &mut children {
        refine(c, by_op, d, deeper)?;
    }
    parent.children = children;
    Ok(())
}

/// Partition the whole graph level by level; leaf pre-order is execution order.
pub fn partition(graph: &ContractionGraph, hierarchy: &MemoryHierarchy) -> Result<PartitionTree, PartitionError> {
    hierarchy.validate(graph.d)?;
    let budgets = hierarchy.budgets();
    let base = if graph.nodes.iter().any(|n| n.role == NodeRole::Barrier) {
        graph.clone()
    } else {
        graph.insert_barriers(&Cut::start(graph.d))?
    };
    let table = closeness(&base)?;
    let mut top = forward_pass(&base, &table, budgets[0])?;
    let by_op: std::collections::BTreeMap<usize, GateApp> = gate_ops(graph).into_iter().collect();
    for p in &mut top {
        refine(p, &by_op, graph.d, &budgets[1..])?;
    }
    Ok(PartitionTree {
        d: graph.d,
        hierarchy: hierarchy.clone(),
        gates: by_op.keys().copied().collect(),
        children: top,
    })
}

/// Check every structural invariant of `tree` against the circuit it came from.
pub fn verify_tree(tree: &PartitionTree, circuit: &Circuit) -> Result<(), String> {
    let budgets = tree.hierarchy.budgets();
    if !tree.children.is_empty() && tree.depth() != budgets.len() {
        return Err(format!("depth {} != {} levels", tree.depth(), budgets.len()));
    }
    fn walk(p: &Partition, parent_local: &[usize], budgets: &[usize], circuit: &Circuit) -> Result<(), String> {
        let budget = budgets[p.level];
        if p.local_dims.len() > budget {
            return Err(format!(
                "level {} partition holds {} > {budget} lines",
                p.level,
                p.local_dims.len()
            ));
        }
        if let Some(q) = p.local_dims.iter().find(|q| !parent_local.contains(q)) {
            return Err(format!("line {q} local at level {} but not above it", p.level));
        }
        if p.gates.len() != p.passthrough.len() {
            return Err("passthrough flags misaligned".into());
        }
        for (&op, &pass) in p.gates.iter().zip(&p.passthrough) {
            let g = &circuit.ops[op];
            let nonlocal: Vec<usize> = (0..g.qubits.len())
                .filter(|&s| !p.local_dims.contains(&g.qubits[s]))
                .collect();
            if !nonlocal.is_empty() {
                let t: GateTensor<f64> = gate_matrix(g.kind, &g.params).map_err(|e| e.to_string())?;
                if !pass || !can_pass_through(&t, &nonlocal) {
                    return Err(format!(
                        "gate {op} touches non-local slots {nonlocal:?} at level {}",
                        p.level
                    ));
                }
            } else if pass {
                return Err(format!("fully local gate {op} flagged as passthrough"));
            }
        }
        if !p.children.is_empty() {
            let mut child_gates: Vec<usize> = p.children.iter().flat_map(|c| c.gates.iter().copied()).collect();
            child_gates.sort_unstable();
            let mut mine = p.gates.clone();
            mine.sort_unstable();
            if child_gates != mine {
                return Err(format!(
                    "children of a level {} partition do not cover its gates",
                    p.level
                ));
            }
            for c in &p.children {
                walk(c, &p.local_dims, budgets, circuit)?;
            }
        }
        Ok(())
    }
    let all: Vec<usize> = (0..tree.d).collect();
    for p in &tree.children {
        walk(p, &all, &budgets, circuit)?;
    }
    let order: Vec<usize> = tree.leaves().iter().flat_map(|p| p.gates.iter().copied()).collect();
    check_topological(&order, circuit)
}

/// `order` holds every gate exactly once and keeps per-line source order.
pub fn check_topological(order: &[usize], circuit: &Circuit) -> Result<(), String> {
    let mut seen = vec![false; circuit.ops.len()];
    let mut last_on_line: Vec<Option<usize>> = vec![None; circuit.num_qubits];
    for &op in order {
        if op >= seen.len() || std::mem::replace(&mut seen[op], true) {
            return Err(format!("gate {op} missing from circuit or repeated"));
        }
        for &q in &circuit.ops[op].qubits {
            if let Some(prev) = last_on_line[q] {
                if prev > op {
                    return Err(format!("gate {op} runs after gate {prev} on line {q}"));
                }
            }
            last_on_line[q] = Some(op);
        }
    }
    if let Some(op) = seen.iter().position(|s| !s) {
        return Err(format!("gate {op} never executed"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateKind;
    use crate::graph::build_graph;
    use crate::qasm::parse_qasm;

    const GHZ3: &str = "qreg q[3]; creg c[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2]; measure q -> c;";

    fn tree_for(src: &str, budgets: &[usize]) -> (Circuit, PartitionTree) {
        let c = parse_qasm(src).unwrap();
        let g = build_graph(&c).unwrap();
        let t = partition(&g, &MemoryHierarchy::from_budgets(budgets)).unwrap();
        verify_tree(&t, &c).unwrap();
        (c, t)
    }

    #[test]
    fn pass_through_rules() {
        let p: GateTensor<f64> = gate_matrix(GateKind::P, &[0.4]).unwrap();
        assert!(can_pass_through(&p, &[0]));
        let cx: GateTensor<f64> = gate_matrix(GateKind::Cx, &[]).unwrap();
        assert!(can_pass_through(&cx, &[0]));
        assert!(!can_pass_through(&cx, &[1]));
        assert!(!can_pass_through(&cx, &[0, 1]));
        let ccx: GateTensor<f64> = gate_matrix(GateKind::Ccx, &[]).unwrap();
        assert!(can_pass_through(&ccx, &[0, 1]));
        let swap: GateTensor<f64> = gate_matrix(GateKind::Swap, &[]).unwrap();
        assert!(!can_pass_through(&swap, &[0]));
    }

    #[test]
    fn ghz3_two_partitions() {
        let c = parse_qasm(GHZ3).unwrap();
        let g = build_graph(&c).unwrap().insert_barriers(&Cut::start(3)).unwrap();
        let t = closeness(&g).unwrap();
        let parts = forward_pass(&g, &t, 2).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].gates, vec![0, 1]);
        assert_eq!(parts[0].local_dims, vec![0, 1]);
        assert_eq!(parts[0].global_dims, vec![2]);
        assert_eq!(parts[1].gates, vec![2]);
        assert_eq!(parts[1].local_dims, vec![1, 2]);
        assert_eq!(parts[1].global_dims, vec![0]);
        assert!(parts.iter().all(|p| p.passthrough.iter().all(|x| !x)));
    }

    #[test]
    fn ghz3_tree_shape() {
        let (_, t) = tree_for(GHZ3, &[2]);
        assert_eq!(t.children.len(), 2);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaves().len(), 2);
        assert_eq!(t.boundaries(), 1);
    }

    #[test]
    fn diagonal_only_is_one_partition() {
        let (_, t) = tree_for(
            "qreg q[3]; rz(0.3) q[0]; cp(0.2) q[0],q[2]; rz(1) q[1]; cp(0.7) q[2],q[1];",
            &[1],
        );
        assert_eq!(t.children.len(), 1);
        assert_eq!(t.children[0].local_dims, vec![0]);
        assert_eq!(t.children[0].passthrough, vec![false, true, true, true]);
    }

    #[test]
    fn all_local_is_one_partition() {
        let src = "qreg q[4]; h q[0]; cx q[0],q[3]; swap q[1],q[2]; ccx q[3],q[1],q[0];";
        let (_, t) = tree_for(src, &[4]);
        assert_eq!(t.children.len(), 1);
        assert_eq!(t.leaves().len(), 1);
    }

    #[test]
    fn global_control_passes_through() {
        // line 0 is never a target, so it can stay global throughout
        let src = "qreg q[3]; h q[1]; h q[2]; cx q[0],q[1]; cx q[0],q[2]; cx q[1],q[2];";
        let (_, t) = tree_for(src, &[2]);
        assert_eq!(t.children.len(), 1);
        assert_eq!(t.children[0].local_dims, vec![1, 2]);
        assert_eq!(t.children[0].passthrough, vec![false, false, true, true, false]);
    }

    #[test]
    fn budget_too_small() {
        let c = parse_qasm("qreg q[3]; swap q[0],q[1];").unwrap();
        let g = build_graph(&c).unwrap();
        let err = partition(&g, &MemoryHierarchy::from_budgets(&[1])).unwrap_err();
        assert!(matches!(
            err,
            PartitionError::BudgetTooSmall {
                op: 0,
                needed: 2,
                budget: 1,
                ..
            }
        ));
        let err = partition(&g, &MemoryHierarchy::from_budgets(&[3, 1])).unwrap_err();
        assert!(matches!(err, PartitionError::BudgetTooSmall { level: 1, .. }));
    }

    #[test]
    fn bad_hierarchies() {
        let g = build_graph(&parse_qasm(GHZ3).unwrap()).unwrap();
        for b in [&[][..], &[0][..], &[4][..], &[2, 3][..]] {
            assert!(matches!(
                partition(&g, &MemoryHierarchy::from_budgets(b)),
                Err(PartitionError::InvalidHierarchy(_))
            ));
        }
    }

    #[test]
    fn three_levels_nest() {
        let mut src = String::from("qreg q[6];");
        for i in 0..6 {
            src += &format!("h q[{i}];");
        }
        for i in 0..5 {
            src += &format!("cx q[{i}],q[{}]; rz(0.{i}) q[{}];", i + 1, i + 1);
        }
        src += "swap q[0],q[5]; cx q[5],q[2];";
        let (_, t) = tree_for(&src, &[4, 3, 2]);
        assert_eq!(t.depth(), 3);
        for leaf in t.leaves() {
            assert_eq!(leaf.level, 2);
            assert!(leaf.local_dims.len() <= 2);
        }
    }

    #[test]
    fn empty_circuit_has_no_partitions() {
        let (_, t) = tree_for("qreg q[2];", &[1]);
        assert!(t.children.is_empty());
        assert!(t.leaves().is_empty());
    }

    #[test]
    fn deterministic_json() {
        let (_, a) = tree_for(GHZ3, &[2]);
        let (_, b) = tree_for(GHZ3, &[2]);
        assert_eq!(a.to_json(), b.to_json());
        let back: PartitionTree = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn topological_checker() {
        let c = parse_qasm(GHZ3).unwrap();
        assert!(check_topological(&[0, 1, 2], &c).is_ok());
        assert!(check_topological(&[1, 0, 2], &c).is_err());
        assert!(check_topological(&[0, 1], &c).is_err());
        assert!(check_topological(&[0, 1, 1, 2], &c).is_err());
    }
}
