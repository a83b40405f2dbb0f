//! Dense reference simulator.
//!
//! Each gate is applied out of place: every output amplitude is computed as a
//! row of the gate matrix against the amplitudes that differ from it only on
//! the gate's qubits. Deliberately shares no code with the rank kernels.

use num_complex::Complex;

use super::ExecError;
use crate::gates::{gate_matrix, MAX_DENSE_QUBITS};
use crate::qasm::{Circuit, GateApp};
use crate::scalar::Scalar;

/// Full `2^d` amplitude vector, qubit 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleState<T> {
    pub d: usize,
    pub amps: Vec<Complex<T>>,
}

impl<T: Scalar> OracleState<T> {
    pub fn zero(d: usize) -> Self {
        Self::basis(d, 0)
    }

    pub fn basis(d: usize, index: usize) -> Self {
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << d];
        amps[index] = Complex::new(T::one(), T::zero());
        OracleState { d, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Self {
        assert!(amps.len().is_power_of_two(), "amplitude count must be a power of two");
        OracleState {
            d: amps.len().trailing_zeros() as usize,
            amps,
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr().to_f64_lossy()).collect()
    }

    pub fn amplitude(&self, bits: &str) -> Complex<T> {
        self.amps[usize::from_str_radix(bits, 2).expect("binary string")]
    }
}

pub fn oracle_simulate<T: Scalar>(circuit: &Circuit) -> Result<OracleState<T>, ExecError> {
    if circuit.num_qubits > MAX_DENSE_QUBITS {
        return Err(ExecError::TooLarge(circuit.num_qubits));
    }
    oracle_simulate_from(circuit, OracleState::zero(circuit.num_qubits))
}

pub fn oracle_simulate_from<T: Scalar>(circuit: &Circuit, init: OracleState<T>) -> Result<OracleState<T>, ExecError> {
    let d = circuit.num_qubits;
    if d > MAX_DENSE_QUBITS {
        return Err(ExecError::TooLarge(d));
    }
    if init.d != d {
        return Err(ExecError::DimensionMismatch { left: init.d, right: d });
    }
    let mut state = init;
    for gate in &circuit.ops {
        state.amps = apply(&state.amps, d, gate)?;
    }
    Ok(state)
}

fn apply<T: Scalar>(amps: &[Complex<T>], d: usize, gate: &GateApp) -> Result<Vec<Complex<T>>, ExecError> {
    let m = gate_matrix::<T>(gate.kind, &gate.params)?.matrix;
    let k = gate.qubits.len();
    let masks: Vec<usize> = gate.qubits.iter().map(|&q| 1 << (d - 1 - q)).collect();
    let all = masks.iter().fold(0, |a, m| a | m);
    let sub_of = |i: usize| {
        masks
            .iter()
            .fold(0, |acc, &mask| (acc << 1) | usize::from(i & mask != 0))
    };
    let with_sub = |i: usize, s: usize| {
        masks.iter().enumerate().fold(
            i & !all,
            |acc, (j, &mask)| if (s >> (k - 1 - j)) & 1 == 1 { acc | mask } else { acc },
        )
    };
    Ok((0..amps.len())
        .map(|i| {
            let row = sub_of(i);
            (0..1 << k).fold(Complex::new(T::zero(), T::zero()), |acc, col| {
                acc + m.get(row, col) * amps[with_sub(i, col)]
            })
        })
        .collect())
}

/// Largest amplitude difference after aligning global phase on `a`'s largest entry.
pub fn compare<T: Scalar>(a: &OracleState<T>, b: &OracleState<T>) -> Result<f64, ExecError> {
    if a.d != b.d {
        return Err(ExecError::DimensionMismatch { left: a.d, right: b.d });
    }
    let to64 = |z: Complex<T>| Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy());
    let k = (0..a.amps.len())
        .max_by(|&i, &j| {
            a.amps[i]
                .norm_sqr()
                .partial_cmp(&a.amps[j].norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(j.cmp(&i))
        })
        .unwrap_or(0);
    let (ak, bk) = (to64(a.amps[k]), to64(b.amps[k]));
    let phase = if bk.norm() > 1e-300 && ak.norm() > 1e-300 {
        let r = ak / bk;
        r / r.norm()
    } else {
        Complex::new(1.0, 0.0)
    };
    Ok(a.amps
        .iter()
        .zip(&b.amps)
        .map(|(&x, &y)| (to64(x) - phase * to64(y)).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{kron_embed, GateKind};
    use crate::qasm::parse_qasm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn ghz3() {
        let c = parse_qasm("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];").unwrap();
        let s = oracle_simulate::<f64>(&c).unwrap();
        for (i, a) in s.amps.iter().enumerate() {
            let want = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((a - Complex::new(want, 0.0)).norm() < 1e-15, "{i}");
        }
    }

    #[test]
    fn empty_and_hh() {
        let s = oracle_simulate::<f64>(&Circuit::new(2)).unwrap();
        assert_eq!(s, OracleState::zero(2));
        let c = parse_qasm("qreg q[1]; h q[0]; h q[0];").unwrap();
        let s = oracle_simulate::<f64>(&c).unwrap();
        assert!(compare(&s, &OracleState::zero(1)).unwrap() < 1e-15);
    }

    #[test]
    fn too_large() {
        assert!(matches!(
            oracle_simulate::<f64>(&Circuit::new(15)),
            Err(ExecError::TooLarge(15))
        ));
    }

    #[test]
    fn matches_dense_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 5;
        for _ in 0..40 {
            let mut c = Circuit::new(d);
            let mut dense = OracleState::<f64>::zero(d).amps;
            for _ in 0..12 {
                let kind = GateKind::ALL[rng.gen_range(0..GateKind::ALL.len())];
                let mut qs: Vec<usize> = (0..d).collect();
                for i in 0..kind.num_qubits() {
                    let j = rng.gen_range(i..d);
                    qs.swap(i, j);
                }
                qs.truncate(kind.num_qubits());
                let params: Vec<f64> = (0..kind.num_params()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                c.push(kind, &params, &qs);
                let g = gate_matrix::<f64>(kind, &params).unwrap();
                dense = kron_embed(&g, &qs, d).unwrap().mul_vec(&dense);
            }
            let s = oracle_simulate::<f64>(&c).unwrap();
            let want = OracleState::from_amplitudes(dense);
            assert!(compare(&s, &want).unwrap() < 1e-12);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn compare_examples() {
        let a = OracleState::<f64>::basis(1, 0);
        assert_eq!(compare(&a, &a).unwrap(), 0.0);
        let b = OracleState::<f64>::basis(1, 1);
        assert!((compare(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let plus = OracleState::from_amplitudes(vec![Complex::new(FRAC_1_SQRT_2, 0.0); 2]);
        let ph = Complex::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let rotated = OracleState::from_amplitudes(plus.amps.iter().map(|a| a * ph).collect());
        assert!(compare(&plus, &rotated).unwrap() < 1e-15);
        assert!(matches!(
            compare(&a, &OracleState::zero(2)),
            Err(ExecError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn single_precision() {
        let c = parse_qasm("qreg q[2]; h q[0]; cx q[0],q[1];").unwrap();
        let s = oracle_simulate::<f32>(&c).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-6);
    }
}
