//! Benchmark circuit generators.
//!
//! Every family is emitted as OpenQASM text and parsed back, so the benchmarks
//! exercise the same front end as user input.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gates::GateKind;
use crate::qasm::{parse_qasm, Circuit};

pub const FAMILIES: [&str; 7] = ["ghz", "dj", "qft", "qpe", "ising", "su2random", "vqc"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("unknown circuit family `{0}` (expected one of {families})", families = FAMILIES.join(", "))]
    UnknownFamily(String),
    #[error("family `{family}` needs at least {min} qubits")]
    TooFewQubits { family: String, min: usize },
}

struct Qasm {
    text: String,
}

impl Qasm {
    fn new(d: usize) -> Self {
        let mut text = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        writeln!(text, "qreg q[{d}];\ncreg c[{d}];").unwrap();
        Qasm { text }
    }

    fn op(&mut self, name: &str, params: &[String], qubits: &[usize]) {
        self.text.push_str(name);
        if !params.is_empty() {
            write!(self.text, "({})", params.join(",")).unwrap();
        }
        let qs: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
        writeln!(self.text, " {};", qs.join(",")).unwrap();
    }

    fn g(&mut self, name: &str, qubits: &[usize]) {
        self.op(name, &[], qubits);
    }

    fn angle(&mut self, name: &str, theta: f64, qubits: &[usize]) {
        self.op(name, &[format!("{theta:?}")], qubits);
    }

    fn finish(mut self) -> String {
        self.text.push_str("measure q -> c;\n");
        self.text
    }
}

/// QASM source for `family` on `d` qubits; `seed` drives the random angles.
pub fn generate(family: &str, d: usize, seed: u64) -> Result<String, GenError> {
    let min = match family {
        "dj" | "qpe" => 2,
        "ghz" | "qft" | "ising" | "su2random" | "vqc" => 1,
        other => return Err(GenError::UnknownFamily(other.to_string())),
    };
    if d < min {
        return Err(GenError::TooFewQubits {
            family: family.to_string(),
            min,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Qasm::new(d);
    match family {
        "ghz" => {
            q.g("h", &[0]);
            for i in 0..d - 1 {
                q.g("cx", &[i, i + 1]);
            }
        }
        "dj" => {
            // balanced oracle f(x) = parity of x with a fixed bit mask flip
            let anc = d - 1;
            q.g("x", &[anc]);
            for i in 0..d {
                q.g("h", &[i]);
            }
            for i in (0..anc).step_by(2) {
                q.g("x", &[i]);
            }
            for i in 0..anc {
                q.g("cx", &[i, anc]);
            }
            for i in (0..anc).step_by(2) {
                q.g("x", &[i]);
            }
            for i in 0..anc {
                q.g("h", &[i]);
            }
        }
        "qft" => {
            for i in (1..d).step_by(2) {
                q.g("x", &[i]);
            }
            qft(&mut q, &(0..d).collect::<Vec<_>>(), false);
        }
        "qpe" => {
            // estimate the phase of P(2π/3) on the last qubit
            let n = d - 1;
            let target = n;
            q.g("x", &[target]);
            for i in 0..n {
                q.g("h", &[i]);
            }
            let phi = 1.0 / 3.0;
            for i in 0..n {
                let reps = 1u64 << (n - 1 - i).min(62);
                let theta = 2.0 * std::f64::consts::PI * phi * reps as f64;
                q.angle("cp", theta.rem_euclid(2.0 * std::f64::consts::PI), &[i, target]);
            }
            qft(&mut q, &(0..n).collect::<Vec<_>>(), true);
        }
        "ising" => {
            let (j, h, dt, steps) = (1.0, 0.7, 0.2, 3);
            for i in 0..d {
                q.g("h", &[i]);
            }
            for _ in 0..steps {
                for i in 0..d - 1 {
                    q.g("cx", &[i, i + 1]);
                    q.angle("rz", 2.0 * j * dt, &[i + 1]);
                    q.g("cx", &[i, i + 1]);
                }
                for i in 0..d {
                    q.angle("rx", 2.0 * h * dt, &[i]);
                }
            }
        }
        "su2random" => {
            let reps = 3;
            for r in 0..=reps {
                for i in 0..d {
                    q.angle("ry", rng.gen_range(-3.2..3.2), &[i]);
                    q.angle("rz", rng.gen_range(-3.2..3.2), &[i]);
                }
                if r < reps {
                    for i in 0..d - 1 {
                        q.g("cx", &[i, i + 1]);
                    }
                }
            }
        }
        "vqc" => {
            // feature map, then layered ansatz
            for i in 0..d {
                q.g("h", &[i]);
                q.angle("p", rng.gen_range(0.0..2.0), &[i]);
            }
            for i in 0..d - 1 {
                q.g("cx", &[i, i + 1]);
                q.angle("p", rng.gen_range(0.0..2.0), &[i + 1]);
                q.g("cx", &[i, i + 1]);
            }
            for _ in 0..4 {
                for i in 0..d {
                    q.angle("ry", rng.gen_range(-3.2..3.2), &[i]);
                    q.angle("rz", rng.gen_range(-3.2..3.2), &[i]);
                }
                for i in 0..d - 1 {
                    q.g("cx", &[i, i + 1]);
                }
                if d > 2 {
                    q.g("cx", &[d - 1, 0]);
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(q.finish())
}

fn qft(q: &mut Qasm, lines: &[usize], inverse: bool) {
    let n = lines.len();
    let mut ops: Vec<(&str, Vec<String>, Vec<usize>)> = Vec::new();
    for i in 0..n {
        ops.push(("h", vec![], vec![lines[i]]));
        for j in i + 1..n {
            ops.push(("cp", vec![format!("pi/2^{}", j - i)], vec![lines[j], lines[i]]));
        }
    }
    for i in 0..n / 2 {
        ops.push(("swap", vec![], vec![lines[i], lines[n - 1 - i]]));
    }
    if inverse {
        ops.reverse();
        for (name, params, _) in &mut ops {
            if *name == "cp" {
                params[0] = format!("-{}", params[0]);
            }
        }
    }
    for (name, params, qubits) in ops {
        q.op(name, &params, &qubits);
    }
}

/// Generate and parse.
pub fn build(family: &str, d: usize, seed: u64) -> Result<Circuit, GenError> {
    let text = generate(family, d, seed)?;
    Ok(parse_qasm(&text).expect("generated QASM parses"))
}

/// Uniformly random gates over every kind the parser accepts.
pub fn random_circuit(d: usize, gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds: Vec<GateKind> = GateKind::ALL
        .iter()
        .copied()
        .filter(|k| *k != GateKind::Id && k.num_qubits() <= d)
        .collect();
    let mut c = Circuit::new(d);
    for _ in 0..gates {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let qubits = distinct(&mut rng, d, kind.num_qubits());
        let params: Vec<f64> = (0..kind.num_params()).map(|_| rng.gen_range(-3.2..3.2)).collect();
        c.push(kind, &params, &qubits);
    }
    c
}

/// Diagonal gates anywhere plus controlled/single-qubit gates whose targets lie in `targets`.
pub fn passthrough_circuit(d: usize, targets: &[usize], gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(d);
    let angle = |rng: &mut ChaCha8Rng| rng.gen_range(-3.2..3.2);
    for _ in 0..gates {
        let t = targets[rng.gen_range(0..targets.len())];
        let others: Vec<usize> = (0..d).filter(|&q| q != t).collect();
        let pick = |rng: &mut ChaCha8Rng| others[rng.gen_range(0..others.len())];
        match rng.gen_range(0..7) {
            0 => {
                let q = rng.gen_range(0..d);
                let a = angle(&mut rng);
                c.push(GateKind::Rz, &[a], &[q])
            }
            1 => {
                let q = rng.gen_range(0..d);
                let a = angle(&mut rng);
                c.push(GateKind::P, &[a], &[q])
            }
            2 if d >= 2 => {
                let qs = distinct(&mut rng, d, 2);
                c.push(GateKind::Cz, &[], &qs)
            }
            3 if d >= 2 => {
                let qs = distinct(&mut rng, d, 2);
                let a = angle(&mut rng);
                c.push(GateKind::Cp, &[a], &qs)
            }
            4 if d >= 2 => {
                let ctl = pick(&mut rng);
                c.push(GateKind::Cx, &[], &[ctl, t])
            }
            5 if d >= 3 => {
                let ctl = distinct(&mut rng, others.len(), 2);
                c.push(GateKind::Ccx, &[], &[others[ctl[0]], others[ctl[1]], t])
            }
            _ => c.push(GateKind::H, &[], &[t]),
        };
    }
    c
}

fn distinct(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..d).collect();
    for i in 0..k {
        let j = rng.gen_range(i..d);
        v.swap(i, j);
    }
    v.truncate(k);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{compare, oracle_simulate, OracleState};
    use crate::qasm::{unparse, validate};
    use num_complex::Complex;

    #[test]
    fn all_families_parse() {
        for fam in FAMILIES {
            for d in [2, 3, 5, 8] {
                let c = build(fam, d, 1).unwrap();
                assert_eq!(c.num_qubits, d, "{fam}");
                assert!(validate(&c).is_empty(), "{fam}");
                assert_eq!(c.measures.len(), d);
                assert!(!c.ops.is_empty());
            }
        }
    }

    #[test]
    fn deterministic_by_seed() {
        assert_eq!(
            generate("su2random", 5, 3).unwrap(),
            generate("su2random", 5, 3).unwrap()
        );
        assert_ne!(
            generate("su2random", 5, 3).unwrap(),
            generate("su2random", 5, 4).unwrap()
        );
    }

    #[test]
    fn unknown_family_and_small_d() {
        assert!(matches!(generate("bogus", 4, 0), Err(GenError::UnknownFamily(_))));
        assert!(matches!(generate("dj", 1, 0), Err(GenError::TooFewQubits { .. })));
    }

    #[test]
    fn ghz_state() {
        let s = oracle_simulate::<f64>(&build("ghz", 4, 0).unwrap()).unwrap();
        let mut want = OracleState::<f64>::zero(4);
        want.amps[0] = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        want.amps[15] = want.amps[0];
        assert!(compare(&s, &want).unwrap() < 1e-12);
    }

    #[test]
    fn dj_balanced_never_reads_all_zero() {
        let s = oracle_simulate::<f64>(&build("dj", 5, 0).unwrap()).unwrap();
        // inputs are the first four qubits: probability of 0000 is zero for a balanced oracle
        let p0: f64 = (0..2).map(|anc| s.amps[anc].norm_sqr()).sum();
        assert!(p0 < 1e-12);
    }

    #[test]
    fn qft_then_inverse_is_identity() {
        let d = 4;
        let mut q = Qasm::new(d);
        q.g("x", &[1]);
        qft(&mut q, &[0, 1, 2, 3], false);
        qft(&mut q, &[0, 1, 2, 3], true);
        let c = parse_qasm(&q.finish()).unwrap();
        let s = oracle_simulate::<f64>(&c).unwrap();
        assert!(compare(&s, &OracleState::basis(d, 0b0100)).unwrap() < 1e-12);
    }

    #[test]
    fn qft_spreads_amplitude_evenly() {
        let s = oracle_simulate::<f64>(&build("qft", 5, 0).unwrap()).unwrap();
        for a in &s.amps {
            assert!((a.norm_sqr() - 1.0 / 32.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_circuits_round_trip_through_text() {
        for seed in 0..20 {
            let c = random_circuit(5, 30, seed);
            assert!(validate(&c).is_empty());
            let back = parse_qasm(&unparse(&c)).unwrap();
            assert!(back.same_structure(&c));
        }
    }

    #[test]
    fn passthrough_targets_respected() {
        let c = passthrough_circuit(6, &[2], 200, 5);
        for g in &c.ops {
            let t: crate::gates::GateTensor<f64> = crate::gates::gate_matrix(g.kind, &g.params).unwrap();
            if !t.is_diagonal {
                let targets: Vec<usize> = (0..g.qubits.len())
                    .filter(|s| !t.control_slots.contains(s))
                    .map(|s| g.qubits[s])
                    .collect();
                assert_eq!(targets, vec![2]);
            }
        }
    }
}
