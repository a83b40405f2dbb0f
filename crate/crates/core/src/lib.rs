//! Centrality-guided partitioning and distributed execution of quantum circuits.
//!
//! The pipeline is `parse_qasm` → `build_graph` → `partition` → `lower` →
//! `run_plan`, with `oracle_simulate` as the dense reference.

pub mod centrality;
pub mod circuits;
pub mod cli;
pub mod executor;
pub mod gates;
pub mod graph;
pub mod partitioner;
pub mod plan;
pub mod qasm;
pub mod scalar;

pub use centrality::{closeness, compute_reach, compute_reach_bruteforce, CentralityTable, DagView};
pub use executor::{compare, gather, oracle_simulate, run_plan, scatter, ExecError, RunOptions};
pub use gates::{gate_matrix, kron_embed, GateKind};
pub use graph::{build_graph, ContractionGraph};
pub use partitioner::{partition, MemoryHierarchy, PartitionTree};
pub use plan::{lower, ExecutionPlan};
pub use qasm::{parse_qasm, Circuit};
pub use scalar::Scalar;

/// Double-precision amplitude.
pub type Amplitude = num_complex::Complex<f64>;
pub type Gate = gates::GateTensor<f64>;
pub type Matrix = gates::DenseMatrix<f64>;
pub type State = executor::OracleState<f64>;
pub type Distributed = executor::DistState<f64>;
