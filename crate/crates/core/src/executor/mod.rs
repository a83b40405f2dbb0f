//! In-process execution of plans over simulated ranks, plus the dense oracle.

mod kernel;
pub mod oracle;
pub mod transport;

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex;
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gates::GateError;
use crate::plan::{ExchangePayload, ExecutionPlan, Layout, TaskOp};
use crate::scalar::Scalar;
use kernel::{deposit, CompiledKernel};
pub use oracle::{compare, oracle_simulate, oracle_simulate_from, OracleState};
pub use transport::{InProcess, Message, Transport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("{0} qubits exceeds the dense simulation limit")]
    TooLarge(usize),
    #[error("invalid plan: {0}")]
    PlanInvalid(String),
    #[error("norm drifted by {drift:e} after task {task}")]
    NonUnitaryDrift { task: usize, drift: f64 },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error(transparent)]
    Gate(#[from] GateError),
}

/// Amplitudes split into `2^g` equal rank blocks under a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DistState<T> {
    pub d: usize,
    pub g: usize,
    /// Index into the plan's layout phases.
    pub phase: usize,
    pub layout: Layout,
    pub blocks: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> DistState<T> {
    pub fn num_ranks(&self) -> usize {
        self.blocks.len()
    }

    pub fn norm_sqr(&self) -> T {
        self.blocks.iter().flat_map(|b| b.iter()).map(|a| a.norm_sqr()).sum()
    }

    fn local_bits(&self) -> usize {
        self.d - self.g
    }
}

/// Physical index of every logical basis index under `layout`.
fn physical_masks(layout: &Layout, d: usize) -> Vec<usize> {
    (0..d).map(|q| 1usize << (d - 1 - layout.position(q))).collect()
}

/// Distribute a dense state over ranks according to `layout`.
pub fn scatter<T: Scalar>(state: &OracleState<T>, layout: &Layout, g: usize, phase: usize) -> DistState<T> {
    let d = state.d;
    let local = d - g;
    let masks = physical_masks(layout, d);
    let mut blocks = vec![vec![Complex::new(T::zero(), T::zero()); 1 << local]; 1 << g];
    for (b, &a) in state.amps.iter().enumerate() {
        let p = deposit(b, &masks);
        blocks[p >> local][p & ((1 << local) - 1)] = a;
    }
    DistState {
        d,
        g,
        phase,
        layout: layout.clone(),
        blocks,
    }
}

/// Reassemble the dense qubit-0-most-significant vector.
pub fn gather<T: Scalar>(state: &DistState<T>) -> OracleState<T> {
    let d = state.d;
    let local = state.local_bits();
    let masks = physical_masks(&state.layout, d);
    let amps = (0..1usize << d)
        .map(|b| {
            let p = deposit(b, &masks);
            state.blocks[p >> local][p & ((1 << local) - 1)]
        })
        .collect();
    OracleState { d, amps }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TaskStat {
    pub id: usize,
    pub kind: &'static str,
    pub seconds: f64,
    pub amplitudes_moved: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExecReport {
    pub tasks: Vec<TaskStat>,
    pub compute_seconds: f64,
    pub exchange_seconds: f64,
    pub exchanges: usize,
    pub kernels: usize,
    pub amplitudes_moved: usize,
    pub bytes_moved: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub shots: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub state: DistState<T>,
    /// Bitstring (qubit 0 first) → count; only when shots were requested.
    pub histogram: Option<BTreeMap<String, u64>>,
    pub report: ExecReport,
}

pub fn run_plan<T: Scalar>(plan: &ExecutionPlan, opts: RunOptions) -> Result<RunOutput<T>, ExecError> {
    run_with(plan, None, opts, &mut InProcess::default())
}

/// Execute starting from an arbitrary dense state instead of `|0…0⟩`.
pub fn run_plan_from<T: Scalar>(
    plan: &ExecutionPlan,
    init: &OracleState<T>,
    opts: RunOptions,
) -> Result<RunOutput<T>, ExecError> {
    if init.d != plan.d {
        return Err(ExecError::DimensionMismatch {
            left: init.d,
            right: plan.d,
        });
    }
    run_with(plan, Some(init), opts, &mut InProcess::default())
}

pub fn run_with<T: Scalar, X: Transport<T>>(
    plan: &ExecutionPlan,
    init: Option<&OracleState<T>>,
    opts: RunOptions,
    transport: &mut X,
) -> Result<RunOutput<T>, ExecError> {
    plan.validate().map_err(|e| ExecError::PlanInvalid(e.to_string()))?;
    let (d, g) = (plan.d, plan.g);
    let local = d - g;
    let mut state: Option<DistState<T>> = None;
    let mut staged: Vec<Message<T>> = Vec::new();
    let mut report = ExecReport::default();
    let mut reference_norm = T::one();
    for task in &plan.tasks {
        let started = Instant::now();
        let mut moved = 0;
        match &task.op {
            TaskOp::Alloc {
                num_ranks,
                block_len,
                phase,
            } => {
                if *num_ranks != 1 << g || *block_len != 1 << local || *phase >= plan.layout_phases.len() {
                    return Err(ExecError::PlanInvalid(format!(
                        "alloc {} disagrees with d={d}, g={g}",
                        task.id
                    )));
                }
                let layout = &plan.layout_phases[*phase];
                let dense = init.cloned().unwrap_or_else(|| OracleState::zero(d));
                let s = scatter(&dense, layout, g, *phase);
                reference_norm = s.norm_sqr();
                state = Some(s);
            }
            TaskOp::ApplyFused(k) => {
                let s = state.as_mut().ok_or_else(|| not_allocated(task.id))?;
                let ck = CompiledKernel::<T>::new(k, g, local)?;
                s.blocks.par_iter_mut().enumerate().for_each(|(r, b)| ck.run(r, b));
                let drift = (s.norm_sqr() - reference_norm).abs();
                if drift.is_nan() || drift > T::drift_tolerance() {
                    return Err(ExecError::NonUnitaryDrift {
                        task: task.id,
                        drift: drift.to_f64_lossy(),
                    });
                }
                report.kernels += 1;
            }
            TaskOp::Pack(p) => {
                let s = state.as_ref().ok_or_else(|| not_allocated(task.id))?;
                check_payload(p, s, plan)?;
                staged = pack(p, s);
            }
            TaskOp::Exchange(p) => {
                let before = transport.amplitudes_sent();
                for msg in staged.drain(..) {
                    transport.send(msg);
                }
                moved = transport.amplitudes_sent() - before;
                report.exchanges += 1;
                debug_assert_eq!(moved, p.swaps.len() * 2 * p.block_len);
            }
            TaskOp::Unpack(p) => {
                let s = state.as_mut().ok_or_else(|| not_allocated(task.id))?;
                unpack(p, s, transport, &plan.layout_phases[p.to_phase])?;
                s.phase = p.to_phase;
            }
            TaskOp::Free => staged.clear(),
        }
        let seconds = started.elapsed().as_secs_f64();
        match task.op {
            TaskOp::ApplyFused(_) => report.compute_seconds += seconds,
            TaskOp::Pack(_) | TaskOp::Exchange(_) | TaskOp::Unpack(_) => report.exchange_seconds += seconds,
            _ => {}
        }
        report.amplitudes_moved += moved;
        report.tasks.push(TaskStat {
            id: task.id,
            kind: task.op.name(),
            seconds,
            amplitudes_moved: moved,
        });
    }
    report.bytes_moved = report.amplitudes_moved * std::mem::size_of::<Complex<T>>();
    let state = state.ok_or_else(|| ExecError::PlanInvalid("plan never allocates the state".into()))?;
    let histogram = opts
        .shots
        .map(|shots| sample(&gather(&state), shots, opts.seed.unwrap_or(0)));
    Ok(RunOutput {
        state,
        histogram,
        report,
    })
}

fn not_allocated(task: usize) -> ExecError {
    ExecError::PlanInvalid(format!("task {task} runs before Alloc"))
}

fn check_payload<T>(p: &ExchangePayload, s: &DistState<T>, plan: &ExecutionPlan) -> Result<(), ExecError> {
    let local = s.d - s.g;
    let ok = p.from_phase == s.phase
        && p.to_phase < plan.layout_phases.len()
        && p.bit_pairs.iter().all(|&(r, l)| r < s.g && l < local)
        && p.m() <= local
        && p.block_len << p.m() == 1 << local
        && p.swaps.iter().all(|w| {
            w.a.rank < s.blocks.len() && w.b.rank < s.blocks.len() && w.a.block >> p.m() == 0 && w.b.block >> p.m() == 0
        });
    if ok {
        Ok(())
    } else {
        Err(ExecError::PlanInvalid(format!(
            "exchange payload {}→{} does not fit the current state",
            p.from_phase, p.to_phase
        )))
    }
}

/// Local-offset masks for the swapped bits and for the bits that stay.
fn block_masks(p: &ExchangePayload, local: usize) -> (Vec<usize>, Vec<usize>) {
    let pair: Vec<usize> = p.bit_pairs.iter().map(|&(_, l)| 1usize << (local - 1 - l)).collect();
    let rest = (0..local)
        .map(|b| 1usize << (local - 1 - b))
        .filter(|m| !pair.contains(m))
        .collect();
    (pair, rest)
}

fn block_offsets<'a>(
    block: usize,
    pair: &[usize],
    rest: &'a [usize],
    block_len: usize,
) -> impl Iterator<Item = usize> + 'a {
    let base = deposit(block, pair);
    (0..block_len).map(move |i| base | deposit(i, rest))
}

fn pack<T: Scalar>(p: &ExchangePayload, s: &DistState<T>) -> Vec<Message<T>> {
    let (pair, rest) = block_masks(p, s.local_bits());
    let extract = |rank: usize, block: usize| -> Vec<Complex<T>> {
        block_offsets(block, &pair, &rest, p.block_len)
            .map(|o| s.blocks[rank][o])
            .collect()
    };
    let mut out = Vec::with_capacity(p.swaps.len() * 2);
    for (i, w) in p.swaps.iter().enumerate() {
        out.push(Message {
            from: w.a.rank,
            to: w.b.rank,
            tag: 2 * i,
            data: extract(w.a.rank, w.a.block),
        });
        out.push(Message {
            from: w.b.rank,
            to: w.a.rank,
            tag: 2 * i + 1,
            data: extract(w.b.rank, w.b.block),
        });
    }
    out
}

fn unpack<T: Scalar, X: Transport<T>>(
    p: &ExchangePayload,
    s: &mut DistState<T>,
    transport: &mut X,
    next: &Layout,
) -> Result<(), ExecError> {
    let (pair, rest) = block_masks(p, s.local_bits());
    for (i, w) in p.swaps.iter().enumerate() {
        for (dst, src, tag) in [(w.b, w.a, 2 * i), (w.a, w.b, 2 * i + 1)] {
            let data = transport
                .recv(dst.rank, src.rank, tag)
                .ok_or_else(|| ExecError::PlanInvalid(format!("missing message {tag} for rank {}", dst.rank)))?;
            let block = &mut s.blocks[dst.rank];
            for (o, a) in block_offsets(dst.block, &pair, &rest, p.block_len).zip(data) {
                block[o] = a;
            }
        }
    }
    s.layout = next.clone();
    Ok(())
}

/// Draw `shots` basis states from the state's probabilities.
pub fn sample<T: Scalar>(state: &OracleState<T>, shots: usize, seed: u64) -> BTreeMap<String, u64> {
    let mut hist = BTreeMap::new();
    if shots == 0 {
        return hist;
    }
    let probs = state.probabilities();
    let dist = WeightedIndex::new(&probs).expect("normalized state has positive weight");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = state.d;
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    for (i, &n) in counts.iter().enumerate().filter(|(_, &n)| n > 0) {
        hist.insert(format!("{i:0d$b}"), n);
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::partitioner::{partition, MemoryHierarchy};
    use crate::plan::lower;
    use crate::qasm::{parse_qasm, Circuit};
    use rand::Rng;

    fn plan_for(c: &Circuit, budgets: &[usize]) -> ExecutionPlan {
        let t = partition(&build_graph(c).unwrap(), &MemoryHierarchy::from_budgets(budgets)).unwrap();
        lower(&t, c)
    }

    fn random_state(d: usize, seed: u64) -> OracleState<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex<f64>> = (0..1 << d)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        OracleState::from_amplitudes(amps)
    }

    #[test]
    fn ghz3_on_two_ranks() {
        let c = parse_qasm("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];").unwrap();
        let plan = plan_for(&c, &[2]);
        let out = run_plan::<f64>(&plan, RunOptions::default()).unwrap();
        assert_eq!(out.state.num_ranks(), 2);
        let s = gather(&out.state);
        assert!(compare(&s, &oracle_simulate(&c).unwrap()).unwrap() < 1e-12);
        assert_eq!(out.report.exchanges, 1);
        // one swap pair, each side sends 2^{d-g-1} amplitudes
        assert_eq!(out.report.amplitudes_moved, 2 * 2);
    }

    #[test]
    fn scatter_gather_round_trip() {
        let s = random_state(5, 3);
        for (g, layout) in [
            (0, Layout::identity(5)),
            (2, Layout(vec![3, 0, 4, 1, 2])),
            (5, Layout(vec![4, 3, 2, 1, 0])),
        ] {
            let dist = scatter(&s, &layout, g, 0);
            assert_eq!(dist.num_ranks(), 1 << g);
            assert_eq!(gather(&dist), s);
        }
    }

    #[test]
    fn prepared_basis_state_on_two_ranks() {
        // |10⟩ with qubit 0 global: rank 1 holds the amplitude at offset 0
        let dist = DistState {
            d: 2,
            g: 1,
            phase: 0,
            layout: Layout::identity(2),
            blocks: vec![
                vec![Complex::new(0.0, 0.0); 2],
                vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            ],
        };
        assert_eq!(gather(&dist), OracleState::basis(2, 2));
    }

    #[test]
    fn random_initial_state_through_exchanges() {
        let c = parse_qasm(
            "qreg q[4]; h q[0]; cx q[0],q[3]; ry(0.4) q[2]; cx q[3],q[1]; swap q[0],q[2]; u(0.1,0.2,0.3) q[1];",
        )
        .unwrap();
        let init = random_state(4, 9);
        for budgets in [vec![4], vec![3], vec![2], vec![3, 2], vec![4, 2, 2]] {
            let plan = plan_for(&c, &budgets);
            let out = run_plan_from(&plan, &init, RunOptions::default()).unwrap();
            let want = oracle_simulate_from(&c, init.clone()).unwrap();
            assert!(compare(&gather(&out.state), &want).unwrap() < 1e-12, "{budgets:?}");
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let c = parse_qasm("qreg q[2]; h q[0]; cx q[0],q[1];").unwrap();
        let plan = plan_for(&c, &[1]);
        let opts = RunOptions {
            shots: Some(500),
            seed: Some(7),
        };
        let a = run_plan::<f64>(&plan, opts).unwrap().histogram.unwrap();
        let b = run_plan::<f64>(&plan, opts).unwrap().histogram.unwrap();
        assert_eq!(a, b);
        assert_eq!(a.keys().cloned().collect::<Vec<_>>(), vec!["00", "11"]);
        assert_eq!(a.values().sum::<u64>(), 500);
    }

    #[test]
    fn invalid_plan_rejected() {
        let c = parse_qasm("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];").unwrap();
        let mut plan = plan_for(&c, &[2]);
        plan.tasks[1].deps = vec![5];
        assert!(matches!(
            run_plan::<f64>(&plan, RunOptions::default()),
            Err(ExecError::PlanInvalid(_))
        ));
    }

    #[test]
    fn corrupted_kernel_is_caught_as_drift() {
        let c = parse_qasm("qreg q[2]; h q[0]; cx q[0],q[1];").unwrap();
        let mut plan = plan_for(&c, &[2]);
        let TaskOp::ApplyFused(k) = &mut plan.tasks[1].op else {
            panic!()
        };
        // a non-finite angle poisons the norm
        k.ops[0].gate.kind = crate::gates::GateKind::Rz;
        k.ops[0].gate.params = vec![f64::NAN];
        assert!(matches!(
            run_plan::<f64>(&plan, RunOptions::default()),
            Err(ExecError::NonUnitaryDrift { task: 1, .. })
        ));
    }

    #[test]
    fn single_precision_run() {
        let c = parse_qasm("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];").unwrap();
        let plan = plan_for(&c, &[2]);
        let out = run_plan::<f32>(&plan, RunOptions::default()).unwrap();
        let s = gather(&out.state);
        assert!((s.amps[7].re - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }
}
