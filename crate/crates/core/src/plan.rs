//! Lowering of a partition tree into an explicit task list.
//!
//! The amplitude of basis state `b = q0 q1 … q(d-1)` (qubit 0 most significant)
//! lives at a physical index whose bit positions are assigned by a layout:
//! positions `0..g` are the rank id (most significant first), positions `g..d`
//! are the offset inside the rank's block. Changing which qubits are local is a
//! swap of position pairs, carried out as pack → block swap → unpack.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{gate_matrix, GateTensor};
use crate::partitioner::{Partition, PartitionTree};
use crate::qasm::{Circuit, GateApp};

pub const PLAN_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("plan version {0} is not supported")]
    Version(u32),
    #[error("malformed plan: {0}")]
    Malformed(String),
    #[error("plan json: {0}")]
    Json(String),
}

/// Qubit → physical bit position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layout(pub Vec<usize>);

impl Layout {
    pub fn identity(d: usize) -> Self {
        Layout((0..d).collect())
    }

    /// Globals (ascending) on the rank bits, locals (ascending) after them.
    pub fn for_local_set(d: usize, local: &[usize]) -> Self {
        let mut pos = vec![0; d];
        let globals = (0..d).filter(|q| !local.contains(q));
        for (p, q) in globals.chain(local.iter().copied()).enumerate() {
            pos[q] = p;
        }
        Layout(pos)
    }

    pub fn position(&self, qubit: usize) -> usize {
        self.0[qubit]
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        self.0
            .iter()
            .all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
    }

    /// Qubit stored at each position.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.0.len()];
        for (q, &p) in self.0.iter().enumerate() {
            inv[p] = q;
        }
        inv
    }

    /// Qubits on local positions.
    pub fn local_qubits(&self, g: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.0.len()).filter(|&q| self.0[q] >= g).collect();
        v.sort_unstable();
        v
    }
}

/// One block of one rank: the amplitudes whose swapped local bits equal `block`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockRef {
    pub rank: usize,
    pub block: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSwap {
    pub a: BlockRef,
    pub b: BlockRef,
}

/// Data movement that turns phase `from_phase` into phase `to_phase`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangePayload {
    pub from_phase: usize,
    pub to_phase: usize,
    /// `(leaving, entering)` qubit pairs.
    pub swapped_qubits: Vec<(usize, usize)>,
    /// `(rank bit, local bit)` pairs exchanged; block ids read these local bits MSB first.
    pub bit_pairs: Vec<(usize, usize)>,
    /// Amplitudes per block.
    pub block_len: usize,
    pub swaps: Vec<BlockSwap>,
}

impl ExchangePayload {
    /// Swapped pair count.
    pub fn m(&self) -> usize {
        self.bit_pairs.len()
    }

    /// Amplitudes each rank sends.
    pub fn amplitudes_sent_per_rank(&self) -> usize {
        ((1 << self.m()) - 1) * self.block_len
    }
}

/// Which bits feed a gate slot inside a fused kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotBinding {
    /// Bit `i` of the tile buffer (0 = most significant).
    Tile(usize),
    /// Local bit outside the tile: fixed per tile iteration.
    Outer(usize),
    /// Rank bit: fixed per rank.
    Rank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    /// Every slot is in the tile.
    Dense,
    /// Non-tile slots are controls; the reduced gate runs only where they are all 1.
    Controlled,
    /// Diagonal gate with pinned slots; pinned bits select a diagonal block or phase.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelOp {
    pub op: usize,
    pub gate: GateApp,
    pub slots: Vec<SlotBinding>,
    pub mode: KernelMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedKernel {
    pub leaf: usize,
    pub level: usize,
    /// Qubits resident in the tile.
    pub tile_qubits: Vec<usize>,
    /// Local bit positions forming the tile, ascending.
    pub tile: Vec<usize>,
    pub ops: Vec<KernelOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum TaskOp {
    Alloc {
        num_ranks: usize,
        block_len: usize,
        phase: usize,
    },
    Pack(ExchangePayload),
    Exchange(ExchangePayload),
    Unpack(ExchangePayload),
    ApplyFused(FusedKernel),
    Free,
}

impl TaskOp {
    pub fn name(&self) -> &'static str {
        match self {
            TaskOp::Alloc { .. } => "Alloc",
            TaskOp::Pack(_) => "Pack",
            TaskOp::Exchange(_) => "Exchange",
            TaskOp::Unpack(_) => "Unpack",
            TaskOp::ApplyFused(_) => "ApplyFused",
            TaskOp::Free => "Free",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub deps: Vec<usize>,
    #[serde(flatten)]
    pub op: TaskOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub version: u32,
    pub d: usize,
    pub g: usize,
    pub layout_phases: Vec<Layout>,
    pub tasks: Vec<Task>,
}

impl ExecutionPlan {
    pub fn num_ranks(&self) -> usize {
        1 << self.g
    }

    pub fn block_len(&self) -> usize {
        1 << (self.d - self.g)
    }

    pub fn count(&self, name: &str) -> usize {
        self.tasks.iter().filter(|t| t.op.name() == name).count()
    }

    pub fn exchange_count(&self) -> usize {
        self.count("Exchange")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PlanError> {
        let plan: ExecutionPlan = serde_json::from_str(s).map_err(|e| PlanError::Json(e.to_string()))?;
        if plan.version != PLAN_VERSION {
            return Err(PlanError::Version(plan.version));
        }
        plan.validate()?;
        Ok(plan)
    }

    /// Structural checks: ids, dependency order, layouts, exchange framing.
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Malformed(m));
        if self.g > self.d {
            return bad(format!("g = {} exceeds d = {}", self.g, self.d));
        }
        for (i, l) in self.layout_phases.iter().enumerate() {
            if l.0.len() != self.d || !l.is_bijection() {
                return bad(format!("layout phase {i} is not a bijection"));
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if t.id != i {
                return bad(format!("task at {i} has id {}", t.id));
            }
            if let Some(dep) = t.deps.iter().find(|&&dep| dep >= i) {
                return bad(format!("task {i} depends on later task {dep}"));
            }
            let kind = |j: usize| self.tasks.get(j).map(|t| t.op.name());
            match &t.op {
                TaskOp::Exchange(p) => {
                    if i == 0 || kind(i - 1) != Some("Pack") || kind(i + 1) != Some("Unpack") {
                        return bad(format!("exchange {i} is not framed by pack/unpack"));
                    }
                    if p.to_phase >= self.layout_phases.len() || p.from_phase >= self.layout_phases.len() {
                        return bad(format!("exchange {i} names a missing layout phase"));
                    }
                }
                TaskOp::Pack(_) if kind(i + 1) != Some("Exchange") => {
                    return bad(format!("pack {i} is not followed by an exchange"));
                }
                TaskOp::Unpack(_) if i == 0 || kind(i - 1) != Some("Exchange") => {
                    return bad(format!("unpack {i} does not follow an exchange"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Position permutation moving `next_local` onto local positions with the fewest swaps.
///
/// Returns the new layout and, when anything moves, the exchange payload
/// (phase indices are filled in by the caller).
pub fn infer_reshape(
    layout: &Layout,
    prev_local: &[usize],
    next_local: &[usize],
    g: usize,
) -> (Layout, Option<ExchangePayload>) {
    let prev: BTreeSet<usize> = prev_local.iter().copied().collect();
    let next: BTreeSet<usize> = next_local.iter().copied().collect();
    let leaving: Vec<usize> = prev.difference(&next).copied().collect();
    let entering: Vec<usize> = next.difference(&prev).copied().collect();
    debug_assert_eq!(leaving.len(), entering.len());
    if leaving.is_empty() {
        return (layout.clone(), None);
    }
    let d = layout.0.len();
    let local_bits = d - g;
    let mut pos = layout.0.clone();
    let mut bit_pairs = Vec::new();
    for (&out, &inn) in leaving.iter().zip(&entering) {
        let (lp, gp) = (pos[out], pos[inn]);
        debug_assert!(lp >= g && gp < g);
        bit_pairs.push((gp, lp - g));
        pos.swap(out, inn);
    }
    let m = bit_pairs.len();
    let rank_bit = |r: usize, b: usize| (r >> (g - 1 - b)) & 1;
    let rank_pattern = |r: usize| bit_pairs.iter().fold(0, |acc, &(rb, _)| (acc << 1) | rank_bit(r, rb));
    let with_pattern = |r: usize, s: usize| {
        bit_pairs.iter().enumerate().fold(r, |acc, (i, &(rb, _))| {
            let mask = 1 << (g - 1 - rb);
            if (s >> (m - 1 - i)) & 1 == 1 {
                acc | mask
            } else {
                acc & !mask
            }
        })
    };
    let mut swaps = Vec::new();
    for r in 0..(1usize << g) {
        for s in 0..(1usize << m) {
            let a = BlockRef { rank: r, block: s };
            let b = BlockRef {
                rank: with_pattern(r, s),
                block: rank_pattern(r),
            };
            if a < b {
                swaps.push(BlockSwap { a, b });
            }
        }
    }
    let payload = ExchangePayload {
        from_phase: 0,
        to_phase: 0,
        swapped_qubits: leaving.into_iter().zip(entering).collect(),
        bit_pairs,
        block_len: 1 << (local_bits - m),
        swaps,
    };
    (Layout(pos), Some(payload))
}

/// Bind a leaf's gates to tile, outer-local and rank bits under `layout`.
pub fn fuse(leaf: &Partition, leaf_index: usize, layout: &Layout, g: usize, circuit: &Circuit) -> FusedKernel {
    let mut tile: Vec<usize> = leaf.local_dims.iter().map(|&q| layout.position(q) - g).collect();
    tile.sort_unstable();
    let inv = layout.inverse();
    let tile_qubits = tile.iter().map(|&b| inv[b + g]).collect();
    let ops = leaf
        .gates
        .iter()
        .map(|&op| {
            let gate = circuit.ops[op].clone();
            let slots: Vec<SlotBinding> = gate
                .qubits
                .iter()
                .map(|&q| {
                    let p = layout.position(q);
                    if p < g {
                        SlotBinding::Rank(p)
                    } else {
                        match tile.iter().position(|&b| b == p - g) {
                            Some(i) => SlotBinding::Tile(i),
                            None => SlotBinding::Outer(p - g),
                        }
                    }
                })
                .collect();
            let mode = if slots.iter().all(|s| matches!(s, SlotBinding::Tile(_))) {
                KernelMode::Dense
            } else {
                let t: GateTensor<f64> = gate_matrix(gate.kind, &gate.params).expect("validated gate");
                if t.is_diagonal {
                    KernelMode::Diagonal
                } else {
                    KernelMode::Controlled
                }
            };
            KernelOp { op, gate, slots, mode }
        })
        .collect();
    FusedKernel {
        leaf: leaf_index,
        level: leaf.level,
        tile_qubits,
        tile,
        ops,
    }
}

/// Turn a partition tree into a task list (pre-order over the tree).
pub fn lower(tree: &PartitionTree, circuit: &Circuit) -> ExecutionPlan {
    let d = tree.d;
    let l0 = tree.hierarchy.budgets().first().copied().unwrap_or(d).min(d);
    let g = d - l0;
    let mut layout = match tree.children.first() {
        Some(p) => Layout::for_local_set(d, &p.local_dims),
        None => Layout::identity(d),
    };
    let mut phases = vec![layout.clone()];
    let mut tasks: Vec<Task> = Vec::new();
    let push = |tasks: &mut Vec<Task>, op: TaskOp| {
        let id = tasks.len();
        let deps = if id == 0 { Vec::new() } else { vec![id - 1] };
        tasks.push(Task { id, deps, op });
    };
    push(
        &mut tasks,
        TaskOp::Alloc {
            num_ranks: 1 << g,
            block_len: 1 << l0,
            phase: 0,
        },
    );
    let mut leaf_index = 0;
    let mut prev_local: Option<&[usize]> = None;
    for part in &tree.children {
        if let Some(prev) = prev_local {
            let (next_layout, payload) = infer_reshape(&layout, prev, &part.local_dims, g);
            if let Some(mut payload) = payload {
                payload.from_phase = phases.len() - 1;
                payload.to_phase = phases.len();
                phases.push(next_layout.clone());
                layout = next_layout;
                push(&mut tasks, TaskOp::Pack(payload.clone()));
                push(&mut tasks, TaskOp::Exchange(payload.clone()));
                push(&mut tasks, TaskOp::Unpack(payload));
            }
        }
        prev_local = Some(&part.local_dims);
        let mut leaves = Vec::new();
        collect(part, &mut leaves);
        for leaf in leaves {
            push(
                &mut tasks,
                TaskOp::ApplyFused(fuse(leaf, leaf_index, &layout, g, circuit)),
            );
            leaf_index += 1;
        }
    }
    push(&mut tasks, TaskOp::Free);
    ExecutionPlan {
        version: PLAN_VERSION,
        d,
        g,
        layout_phases: phases,
        tasks,
    }
}

fn collect<'a>(p: &'a Partition, out: &mut Vec<&'a Partition>) {
    if p.children.is_empty() {
        out.push(p);
    } else {
        for c in &p.children {
            collect(c, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::partitioner::{partition, MemoryHierarchy};
    use crate::qasm::parse_qasm;

    const GHZ3: &str = "qreg q[3]; creg c[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2]; measure q -> c;";

    fn plan_for(src: &str, budgets: &[usize]) -> ExecutionPlan {
        let c = parse_qasm(src).unwrap();
        let t = partition(&build_graph(&c).unwrap(), &MemoryHierarchy::from_budgets(budgets)).unwrap();
        lower(&t, &c)
    }

    #[test]
    fn ghz3_task_sequence() {
        let p = plan_for(GHZ3, &[2]);
        let kinds: Vec<_> = p.tasks.iter().map(|t| t.op.name()).collect();
        assert_eq!(
            kinds,
            vec![
                "Alloc",
                "ApplyFused",
                "Pack",
                "Exchange",
                "Unpack",
                "ApplyFused",
                "Free"
            ]
        );
        assert_eq!(p.exchange_count(), 1);
        assert_eq!(p.g, 1);
        // phase 0: qubit 2 global; phase 1: qubit 0 global
        assert_eq!(p.layout_phases[0], Layout(vec![1, 2, 0]));
        assert_eq!(p.layout_phases[1], Layout(vec![0, 2, 1]));
        let TaskOp::Exchange(x) = &p.tasks[3].op else { panic!() };
        assert_eq!(x.swapped_qubits, vec![(0, 2)]);
        assert_eq!(x.block_len, 2);
        assert_eq!(
            x.swaps,
            vec![BlockSwap {
                a: BlockRef { rank: 0, block: 1 },
                b: BlockRef { rank: 1, block: 0 }
            }]
        );
        p.validate().unwrap();
    }

    #[test]
    fn single_leaf_has_no_exchange() {
        let p = plan_for(GHZ3, &[3]);
        assert_eq!(p.exchange_count(), 0);
        assert_eq!(p.g, 0);
        assert_eq!(p.count("ApplyFused"), 1);
    }

    #[test]
    fn reshape_identity() {
        let l = Layout::for_local_set(3, &[0, 1]);
        let (same, payload) = infer_reshape(&l, &[0, 1], &[0, 1], 1);
        assert_eq!(same, l);
        assert!(payload.is_none());
    }

    #[test]
    fn reshape_two_global_pairs_is_all_to_all() {
        // d=4, g=2: qubits 0,1 global; swap both for qubits 2,3
        let l = Layout::for_local_set(4, &[2, 3]);
        let (next, p) = infer_reshape(&l, &[2, 3], &[0, 1], 2);
        let p = p.unwrap();
        assert_eq!(next.local_qubits(2), vec![0, 1]);
        assert_eq!(p.m(), 2);
        assert_eq!(p.block_len, 1);
        // every rank trades one block with each of the other three
        let mut partners = vec![BTreeSet::new(); 4];
        for s in &p.swaps {
            partners[s.a.rank].insert(s.b.rank);
            partners[s.b.rank].insert(s.a.rank);
        }
        for (r, ps) in partners.iter().enumerate() {
            assert_eq!(ps.len(), 3, "rank {r}");
        }
        assert_eq!(p.swaps.len(), 4 * 3 / 2);
    }

    #[test]
    fn fused_bindings_for_passthrough() {
        // line 0 stays global; cx with global control and p on a global line
        let src = "qreg q[3]; h q[1]; cx q[0],q[1]; p(0.3) q[0]; h q[2];";
        let p = plan_for(src, &[2]);
        assert_eq!(p.exchange_count(), 0);
        let TaskOp::ApplyFused(k) = &p.tasks[1].op else {
            panic!()
        };
        assert_eq!(k.ops[1].slots, vec![SlotBinding::Rank(0), SlotBinding::Tile(0)]);
        assert_eq!(k.ops[1].mode, KernelMode::Controlled);
        assert_eq!(k.ops[2].slots, vec![SlotBinding::Rank(0)]);
        assert_eq!(k.ops[2].mode, KernelMode::Diagonal);
    }

    #[test]
    fn nested_leaves_get_outer_bindings() {
        let src = "qreg q[4]; h q[0]; h q[1]; h q[2]; h q[3]; cx q[0],q[1]; cx q[2],q[3];";
        let p = plan_for(src, &[4, 2]);
        let kernels: Vec<&FusedKernel> = p
            .tasks
            .iter()
            .filter_map(|t| match &t.op {
                TaskOp::ApplyFused(k) => Some(k),
                _ => None,
            })
            .collect();
        assert!(kernels.len() >= 2);
        assert!(kernels.iter().all(|k| k.tile.len() == 2 && k.level == 1));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let p = plan_for(
            "qreg q[4]; h q[0]; rz(0.1234567890123) q[3]; cx q[0],q[3]; swap q[1],q[2]; cx q[2],q[0];",
            &[2, 2],
        );
        let s = p.to_json();
        let back = ExecutionPlan::from_json(&s).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json(), s);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["version", "d", "g", "layout_phases", "tasks"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["tasks"][0].get("payload").is_some());
    }

    #[test]
    fn malformed_plans_are_rejected() {
        let mut p = plan_for(GHZ3, &[2]);
        p.tasks.remove(2);
        for (i, t) in p.tasks.iter_mut().enumerate() {
            t.id = i;
        }
        assert!(matches!(p.validate(), Err(PlanError::Malformed(_))));
        let mut p = plan_for(GHZ3, &[2]);
        p.version = 9;
        assert!(matches!(
            ExecutionPlan::from_json(&p.to_json()),
            Err(PlanError::Version(9))
        ));
        let mut p = plan_for(GHZ3, &[2]);
        p.layout_phases[0] = Layout(vec![0, 0, 1]);
        assert!(p.validate().is_err());
    }
}
