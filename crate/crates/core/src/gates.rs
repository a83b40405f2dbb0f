//! Gate unitaries, diagonality and control structure.
//!
//! Matrices are written in the computational basis with slot 0 as the most
//! significant bit of the row/column index. Slot order is (controls..., targets...),
//! which lines up with the Kronecker convention where qubit 0 is the leftmost factor.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{c, cis, Scalar};

/// Largest register the dense embedding will build.
pub const MAX_DENSE_QUBITS: usize = 14;

const DIAGONAL_EPS: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate {kind} expects {expected} parameter(s), got {got}")]
    BadArity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("dense embedding of {0} qubits exceeds the {MAX_DENSE_QUBITS}-qubit limit")]
    TooLarge(usize),
    #[error("invalid qubit slots {slots:?} for a {arity}-qubit gate on {d} qubits")]
    BadSlots { slots: Vec<usize>, arity: usize, d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// Identity; only used for barrier tensors.
    Id,
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    P,
    U,
    Cx,
    Cz,
    Cp,
    Swap,
    Ccx,
}

impl GateKind {
    pub const ALL: [GateKind; 19] = [
        GateKind::Id,
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::P,
        GateKind::U,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Cp,
        GateKind::Swap,
        GateKind::Ccx,
    ];

    /// Resolve a QASM gate name, including the usual qelib1 aliases.
    pub fn from_qasm_name(name: &str) -> Option<GateKind> {
        Some(match name {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "y" => GateKind::Y,
            "z" => GateKind::Z,
            "s" => GateKind::S,
            "sdg" => GateKind::Sdg,
            "t" => GateKind::T,
            "tdg" => GateKind::Tdg,
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "p" | "u1" => GateKind::P,
            "u" | "u3" | "U" => GateKind::U,
            "cx" | "CX" => GateKind::Cx,
            "cz" => GateKind::Cz,
            "cp" | "cu1" => GateKind::Cp,
            "swap" => GateKind::Swap,
            "ccx" => GateKind::Ccx,
            _ => return None,
        })
    }

    /// Canonical QASM spelling.
    pub fn qasm_name(self) -> &'static str {
        match self {
            GateKind::Id => "id",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::P => "p",
            GateKind::U => "u",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Cp => "cp",
            GateKind::Swap => "swap",
            GateKind::Ccx => "ccx",
        }
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Cp | GateKind::Swap => 2,
            GateKind::Ccx => 3,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::P | GateKind::Cp => 1,
            GateKind::U => 3,
            _ => 0,
        }
    }

    /// Slots that act purely as controls.
    ///
    /// CZ and CP are symmetric, so both of their slots qualify.
    pub fn control_slots(self) -> &'static [usize] {
        match self {
            GateKind::Cx => &[0],
            GateKind::Cz | GateKind::Cp | GateKind::Ccx => &[0, 1],
            _ => &[],
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.qasm_name())
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: Complex<T>) {
        self.data[row * self.dim + col] = v;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * n * m + j * m + l] = a * rhs.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), |m, x| if x.is_nan() || x > m { x } else { m })
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        let eps = T::of(DIAGONAL_EPS);
        (0..n).all(|i| (0..n).all(|j| i == j || self.data[i * n + j].norm() < eps))
    }
}

/// A gate instance with its matrix and the structural facts the partitioner needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTensor<T> {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub matrix: DenseMatrix<T>,
    pub control_slots: Vec<usize>,
    pub is_diagonal: bool,
}

impl<T: Scalar> GateTensor<T> {
    pub fn num_qubits(&self) -> usize {
        self.kind.num_qubits()
    }

    /// Sub-block of the matrix with some slots pinned to fixed bit values.
    ///
    /// The result acts on the remaining slots in their original relative order.
    /// Only meaningful when the matrix does not couple different values of the
    /// pinned slots, which holds for diagonal gates and for pinned control slots.
    pub fn reduced(&self, pinned: &[(usize, bool)]) -> DenseMatrix<T> {
        let p = self.num_qubits();
        let free: Vec<usize> = (0..p).filter(|s| !pinned.iter().any(|(q, _)| q == s)).collect();
        let base = pinned.iter().fold(
            0usize,
            |acc, &(slot, bit)| {
                if bit {
                    acc | (1 << (p - 1 - slot))
                } else {
                    acc
                }
            },
        );
        let expand = |sub: usize| {
            free.iter().enumerate().fold(base, |acc, (i, &slot)| {
                if sub >> (free.len() - 1 - i) & 1 == 1 {
                    acc | (1 << (p - 1 - slot))
                } else {
                    acc
                }
            })
        };
        let k = 1 << free.len();
        let mut out = DenseMatrix::zeros(k);
        for r in 0..k {
            for col in 0..k {
                out.set(r, col, self.matrix.get(expand(r), expand(col)));
            }
        }
        out
    }

    /// True when the matrix has no entries connecting rows and columns that
    /// differ on any of `slots`.
    pub fn is_block_diagonal_in(&self, slots: &[usize]) -> bool {
        let p = self.num_qubits();
        let mask = slots.iter().fold(0usize, |m, &s| m | (1 << (p - 1 - s)));
        let n = 1 << p;
        let eps = T::of(DIAGONAL_EPS);
        (0..n).all(|r| (0..n).all(|col| (r ^ col) & mask == 0 || self.matrix.get(r, col).norm() < eps))
    }
}

fn controlled<T: Scalar>(base: &DenseMatrix<T>, controls: usize) -> DenseMatrix<T> {
    let n = base.dim() << controls;
    let offset = n - base.dim();
    let mut m = DenseMatrix::identity(n);
    for r in 0..base.dim() {
        for col in 0..base.dim() {
            m.set(offset + r, offset + col, base.get(r, col));
        }
    }
    m
}

fn phase<T: Scalar>(alpha: f64) -> DenseMatrix<T> {
    // P(α) = diag(1, e^{-iα})
    DenseMatrix::diagonal(&[c(1.0, 0.0), cis(-alpha)])
}

/// Build the tensor for `kind` with the given angle parameters (radians).
pub fn gate_matrix<T: Scalar>(kind: GateKind, params: &[f64]) -> Result<GateTensor<T>, GateError> {
    if params.len() != kind.num_params() {
        return Err(GateError::BadArity {
            kind,
            expected: kind.num_params(),
            got: params.len(),
        });
    }
    let z = || c::<T>(0.0, 0.0);
    let one = || c::<T>(1.0, 0.0);
    let matrix = match kind {
        GateKind::Id => DenseMatrix::identity(2),
        GateKind::H => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            DenseMatrix::from_rows(vec![vec![h, h], vec![h, -h]])
        }
        GateKind::X => DenseMatrix::from_rows(vec![vec![z(), one()], vec![one(), z()]]),
        GateKind::Y => DenseMatrix::from_rows(vec![vec![z(), c(0.0, -1.0)], vec![c(0.0, 1.0), z()]]),
        GateKind::Z => DenseMatrix::diagonal(&[one(), c(-1.0, 0.0)]),
        GateKind::S => DenseMatrix::diagonal(&[one(), c(0.0, 1.0)]),
        GateKind::Sdg => DenseMatrix::diagonal(&[one(), c(0.0, -1.0)]),
        GateKind::T => DenseMatrix::diagonal(&[one(), cis(std::f64::consts::FRAC_PI_4)]),
        GateKind::Tdg => DenseMatrix::diagonal(&[one(), cis(-std::f64::consts::FRAC_PI_4)]),
        GateKind::Rx => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            DenseMatrix::from_rows(vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]])
        }
        GateKind::Ry => {
            let (s, co) = (params[0] / 2.0).sin_cos();
            DenseMatrix::from_rows(vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]])
        }
        GateKind::Rz => DenseMatrix::diagonal(&[cis(-params[0] / 2.0), cis(params[0] / 2.0)]),
        GateKind::P => phase(params[0]),
        GateKind::U => {
            let (theta, phi, lambda) = (params[0], params[1], params[2]);
            let (s, co) = (theta / 2.0).sin_cos();
            let scale = |z: Complex<T>, r: f64| z * T::of(r);
            DenseMatrix::from_rows(vec![
                vec![c(co, 0.0), -scale(cis(lambda), s)],
                vec![scale(cis(phi), s), scale(cis(phi + lambda), co)],
            ])
        }
        GateKind::Cx => controlled(&gate_matrix::<T>(GateKind::X, &[])?.matrix, 1),
        GateKind::Cz => DenseMatrix::diagonal(&[one(), one(), one(), c(-1.0, 0.0)]),
        GateKind::Cp => controlled(&phase(params[0]), 1),
        GateKind::Swap => {
            let mut m = DenseMatrix::zeros(4);
            m.set(0, 0, one());
            m.set(1, 2, one());
            m.set(2, 1, one());
            m.set(3, 3, one());
            m
        }
        GateKind::Ccx => controlled(&gate_matrix::<T>(GateKind::X, &[])?.matrix, 2),
    };
    let is_diagonal = matrix.is_diagonal();
    Ok(GateTensor {
        kind,
        params: params.to_vec(),
        matrix,
        control_slots: kind.control_slots().to_vec(),
        is_diagonal,
    })
}

/// Dense `2^d × 2^d` operator applying `gate` on `qubit_slots` (slot i acts on
/// qubit `qubit_slots[i]`), identity elsewhere. Qubit 0 is the most significant
/// bit of the basis index.
pub fn kron_embed<T: Scalar>(
    gate: &GateTensor<T>,
    qubit_slots: &[usize],
    d: usize,
) -> Result<DenseMatrix<T>, GateError> {
    if d > MAX_DENSE_QUBITS {
        return Err(GateError::TooLarge(d));
    }
    let p = gate.matrix.dim().trailing_zeros() as usize;
    let distinct = qubit_slots
        .iter()
        .enumerate()
        .all(|(i, q)| !qubit_slots[..i].contains(q));
    if qubit_slots.len() != p || !distinct || qubit_slots.iter().any(|&q| q >= d) {
        return Err(GateError::BadSlots {
            slots: qubit_slots.to_vec(),
            arity: p,
            d,
        });
    }
    let bit = |q: usize| 1usize << (d - 1 - q);
    let mask = qubit_slots.iter().fold(0, |m, &q| m | bit(q));
    let sub_index = |idx: usize| {
        qubit_slots
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | usize::from(idx & bit(q) != 0))
    };
    let n = 1usize << d;
    let mut out = DenseMatrix::zeros(n);
    for r in 0..n {
        let rs = sub_index(r);
        let rest = r & !mask;
        for cs in 0..(1usize << p) {
            let col =
                qubit_slots.iter().enumerate().fold(
                    rest,
                    |acc, (i, &q)| if cs >> (p - 1 - i) & 1 == 1 { acc | bit(q) } else { acc },
                );
            out.set(r, col, gate.matrix.get(rs, cs));
        }
    }
    Ok(out)
}
