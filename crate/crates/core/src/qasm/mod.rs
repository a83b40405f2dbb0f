//! OpenQASM 2.0 subset: parsing, validation and printing.
//!
//! Registers are flattened into one qubit index space in declaration order.
//! Gates are kept exactly as written; nothing is fused, dropped or reordered.

mod lexer;
mod parser;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::GateKind;

pub use parser::parse_qasm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QasmError {
    #[error("{line}:{col}: syntax error: {reason}")]
    Syntax { line: usize, col: usize, reason: String },
    #[error("{line}:{col}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: index {index} out of range for register `{register}`")]
    IndexOutOfRange {
        line: usize,
        col: usize,
        register: String,
        index: usize,
    },
    #[error("{line}:{col}: qubit {qubit} used more than once in one gate")]
    DuplicateQubit { line: usize, col: usize, qubit: usize },
}

impl QasmError {
    pub(crate) fn syntax(line: usize, col: usize, reason: impl Into<String>) -> Self {
        QasmError::Syntax {
            line,
            col,
            reason: reason.into(),
        }
    }

    pub fn line(&self) -> usize {
        match self {
            QasmError::Syntax { line, .. }
            | QasmError::UnsupportedGate { line, .. }
            | QasmError::IndexOutOfRange { line, .. }
            | QasmError::DuplicateQubit { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub size: usize,
}

/// One gate application. Qubits are listed controls first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateApp {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub source_line: usize,
}

impl GateApp {
    pub fn new(kind: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Self {
        Self {
            kind,
            params,
            qubits,
            source_line: 0,
        }
    }

    fn same_structure(&self, other: &GateApp) -> bool {
        self.kind == other.kind && self.params == other.params && self.qubits == other.qubits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measure {
    pub qubit: usize,
    pub clbit: usize,
    /// Number of gates that precede this measurement in source order.
    pub after_ops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_clbits: usize,
    pub qregs: Vec<Register>,
    pub cregs: Vec<Register>,
    pub ops: Vec<GateApp>,
    pub measures: Vec<Measure>,
}

impl Circuit {
    /// Circuit over a single `q` register (and a matching `c` register).
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            num_clbits: num_qubits,
            qregs: vec![Register {
                name: "q".into(),
                size: num_qubits,
            }],
            cregs: vec![Register {
                name: "c".into(),
                size: num_qubits,
            }],
            ops: Vec::new(),
            measures: Vec::new(),
        }
    }

    pub fn push(&mut self, kind: GateKind, params: &[f64], qubits: &[usize]) -> &mut Self {
        self.ops.push(GateApp::new(kind, params.to_vec(), qubits.to_vec()));
        self
    }

    pub fn measure_all(&mut self) -> &mut Self {
        let after_ops = self.ops.len();
        self.measures = (0..self.num_qubits.min(self.num_clbits))
            .map(|q| Measure {
                qubit: q,
                clbit: q,
                after_ops,
            })
            .collect();
        self
    }

    /// Equality ignoring source positions.
    pub fn same_structure(&self, other: &Circuit) -> bool {
        self.num_qubits == other.num_qubits
            && self.num_clbits == other.num_clbits
            && self.ops.len() == other.ops.len()
            && self.ops.iter().zip(&other.ops).all(|(a, b)| a.same_structure(b))
            && self.measures == other.measures
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnostic {
    IndexOutOfRange { op: usize, qubit: usize },
    ClbitOutOfRange { measure: usize, clbit: usize },
    DuplicateQubit { op: usize, qubit: usize },
    ArityMismatch { op: usize, kind: GateKind },
    ParamCountMismatch { op: usize, kind: GateKind },
    NonFiniteParam { op: usize },
    MeasureBeforeGate { measure: usize },
}

/// Check every structural invariant of `circuit`. Empty means valid.
pub fn validate(circuit: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (i, op) in circuit.ops.iter().enumerate() {
        if op.qubits.len() != op.kind.num_qubits() {
            out.push(Diagnostic::ArityMismatch { op: i, kind: op.kind });
        }
        if op.params.len() != op.kind.num_params() {
            out.push(Diagnostic::ParamCountMismatch { op: i, kind: op.kind });
        }
        if op.params.iter().any(|p| !p.is_finite()) {
            out.push(Diagnostic::NonFiniteParam { op: i });
        }
        for (j, &q) in op.qubits.iter().enumerate() {
            if q >= circuit.num_qubits {
                out.push(Diagnostic::IndexOutOfRange { op: i, qubit: q });
            }
            if op.qubits[..j].contains(&q) {
                out.push(Diagnostic::DuplicateQubit { op: i, qubit: q });
            }
        }
    }
    for (i, m) in circuit.measures.iter().enumerate() {
        if m.qubit >= circuit.num_qubits {
            out.push(Diagnostic::IndexOutOfRange { op: i, qubit: m.qubit });
        }
        if m.clbit >= circuit.num_clbits {
            out.push(Diagnostic::ClbitOutOfRange {
                measure: i,
                clbit: m.clbit,
            });
        }
        if m.after_ops < circuit.ops.len() {
            out.push(Diagnostic::MeasureBeforeGate { measure: i });
        }
    }
    out
}

fn locate(regs: &[Register], flat: usize) -> (String, usize) {
    let mut base = 0;
    for r in regs {
        if flat < base + r.size {
            return (r.name.clone(), flat - base);
        }
        base += r.size;
    }
    // out-of-range indices print against the last register
    regs.last()
        .map(|r| (r.name.clone(), flat - (base - r.size)))
        .unwrap_or_else(|| ("q".into(), flat))
}

/// Print `circuit` as OpenQASM 2.0 that [`parse_qasm`] reads back to the same structure.
pub fn unparse(circuit: &Circuit) -> String {
    let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let qregs = if circuit.qregs.is_empty() && circuit.num_qubits > 0 {
        vec![Register {
            name: "q".into(),
            size: circuit.num_qubits,
        }]
    } else {
        circuit.qregs.clone()
    };
    let cregs = if circuit.cregs.is_empty() && circuit.num_clbits > 0 {
        vec![Register {
            name: "c".into(),
            size: circuit.num_clbits,
        }]
    } else {
        circuit.cregs.clone()
    };
    for r in &qregs {
        let _ = writeln!(s, "qreg {}[{}];", r.name, r.size);
    }
    for r in &cregs {
        let _ = writeln!(s, "creg {}[{}];", r.name, r.size);
    }
    let write_measures = |s: &mut String, upto: usize| {
        for m in circuit.measures.iter().filter(|m| m.after_ops == upto) {
            let (qn, qi) = locate(&qregs, m.qubit);
            let (cn, ci) = locate(&cregs, m.clbit);
            let _ = writeln!(s, "measure {qn}[{qi}] -> {cn}[{ci}];");
        }
    };
    for (i, op) in circuit.ops.iter().enumerate() {
        write_measures(&mut s, i);
        s.push_str(op.kind.qasm_name());
        if !op.params.is_empty() {
            let ps: Vec<String> = op.params.iter().map(|p| format!("{p:?}")).collect();
            let _ = write!(s, "({})", ps.join(","));
        }
        let qs: Vec<String> = op
            .qubits
            .iter()
            .map(|&q| {
                let (n, i) = locate(&qregs, q);
                format!("{n}[{i}]")
            })
            .collect();
        let _ = writeln!(s, " {};", qs.join(","));
    }
    write_measures(&mut s, circuit.ops.len());
    s
}
