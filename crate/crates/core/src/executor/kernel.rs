//! Per-rank evaluation of fused kernels.

use num_complex::Complex;

use super::ExecError;
use crate::gates::{gate_matrix, DenseMatrix};
use crate::plan::{FusedKernel, SlotBinding};
use crate::scalar::Scalar;

const IDENTITY_EPS: f64 = 1e-15;

/// Scatter the low bits of `value` onto `masks` (first mask receives the most significant bit).
pub(crate) fn deposit(value: usize, masks: &[usize]) -> usize {
    let n = masks.len();
    masks.iter().enumerate().fold(
        0,
        |acc, (i, &m)| if (value >> (n - 1 - i)) & 1 == 1 { acc | m } else { acc },
    )
}

enum Pin {
    Rank(usize),
    Outer(usize),
}

struct CompiledOp<T> {
    /// Tile-buffer masks of the free slots, in slot order.
    masks: Vec<usize>,
    pins: Vec<Pin>,
    /// One operator per pin pattern; `None` where it is the identity.
    variants: Vec<Option<(DenseMatrix<T>, bool)>>,
}

pub(crate) struct CompiledKernel<T> {
    g: usize,
    local_bits: usize,
    tile_offsets: Vec<usize>,
    outer_masks: Vec<usize>,
    ops: Vec<CompiledOp<T>>,
}

impl<T: Scalar> CompiledKernel<T> {
    pub(crate) fn new(k: &FusedKernel, g: usize, local_bits: usize) -> Result<Self, ExecError> {
        let tile_len = k.tile.len();
        let local_mask = |b: usize| 1usize << (local_bits - 1 - b);
        let tile_masks: Vec<usize> = k.tile.iter().map(|&b| local_mask(b)).collect();
        let outer_masks = (0..local_bits)
            .filter(|b| !k.tile.contains(b))
            .map(local_mask)
            .collect();
        let tile_offsets = (0..1usize << tile_len).map(|t| deposit(t, &tile_masks)).collect();
        let mut ops = Vec::with_capacity(k.ops.len());
        for op in &k.ops {
            let tensor = gate_matrix::<T>(op.gate.kind, &op.gate.params)?;
            let mut masks = Vec::new();
            let mut pinned_slots = Vec::new();
            let mut pins = Vec::new();
            for (slot, b) in op.slots.iter().enumerate() {
                match *b {
                    SlotBinding::Tile(i) if i < tile_len => masks.push(1usize << (tile_len - 1 - i)),
                    SlotBinding::Tile(i) => {
                        return Err(ExecError::PlanInvalid(format!(
                            "op {} binds tile bit {i} of {tile_len}",
                            op.op
                        )))
                    }
                    SlotBinding::Rank(r) if r < g => {
                        pinned_slots.push(slot);
                        pins.push(Pin::Rank(r));
                    }
                    SlotBinding::Outer(o) if o < local_bits && !k.tile.contains(&o) => {
                        pinned_slots.push(slot);
                        pins.push(Pin::Outer(o));
                    }
                    other => {
                        return Err(ExecError::PlanInvalid(format!(
                            "op {} has bad binding {other:?}",
                            op.op
                        )))
                    }
                }
            }
            let p = pins.len();
            let variants = (0..1usize << p)
                .map(|pattern| {
                    let pin_bits: Vec<(usize, bool)> = pinned_slots
                        .iter()
                        .enumerate()
                        .map(|(i, &s)| (s, (pattern >> (p - 1 - i)) & 1 == 1))
                        .collect();
                    let m = tensor.reduced(&pin_bits);
                    let id = DenseMatrix::identity(m.dim());
                    if m.max_abs_diff(&id).to_f64_lossy() < IDENTITY_EPS {
                        None
                    } else {
                        let diag = m.is_diagonal();
                        Some((m, diag))
                    }
                })
                .collect();
            ops.push(CompiledOp { masks, pins, variants });
        }
        Ok(CompiledKernel {
            g,
            local_bits,
            tile_offsets,
            outer_masks,
            ops,
        })
    }

    /// Apply every op of the kernel to one rank's block, tile by tile.
    pub(crate) fn run(&self, rank: usize, block: &mut [Complex<T>]) {
        let outer = self.outer_masks.len();
        if outer == 0 {
            for op in &self.ops {
                self.apply_op(op, rank, 0, block);
            }
            return;
        }
        let mut tile = vec![Complex::new(T::zero(), T::zero()); self.tile_offsets.len()];
        for o in 0..1usize << outer {
            let base = deposit(o, &self.outer_masks);
            for (t, &off) in tile.iter_mut().zip(&self.tile_offsets) {
                *t = block[base | off];
            }
            for op in &self.ops {
                self.apply_op(op, rank, base, &mut tile);
            }
            for (t, &off) in tile.iter().zip(&self.tile_offsets) {
                block[base | off] = *t;
            }
        }
    }

    fn apply_op(&self, op: &CompiledOp<T>, rank: usize, base: usize, buf: &mut [Complex<T>]) {
        let pattern = op.pins.iter().fold(0usize, |acc, pin| {
            let bit = match *pin {
                Pin::Rank(r) => (rank >> (self.g - 1 - r)) & 1,
                Pin::Outer(b) => (base >> (self.local_bits - 1 - b)) & 1,
            };
            (acc << 1) | bit
        });
        if let Some((m, diag)) = &op.variants[pattern] {
            apply_matrix(buf, &op.masks, m, *diag);
        }
    }
}

/// Multiply the sub-register selected by `masks` (first = most significant) by `m`.
pub(crate) fn apply_matrix<T: Scalar>(buf: &mut [Complex<T>], masks: &[usize], m: &DenseMatrix<T>, diagonal: bool) {
    let k = masks.len();
    if k == 0 {
        let s = m.get(0, 0);
        buf.iter_mut().for_each(|a| *a = *a * s);
        return;
    }
    if diagonal {
        let diag: Vec<Complex<T>> = (0..1 << k).map(|i| m.get(i, i)).collect();
        for (i, a) in buf.iter_mut().enumerate() {
            let sub = masks
                .iter()
                .fold(0usize, |acc, &mask| (acc << 1) | usize::from(i & mask != 0));
            *a = *a * diag[sub];
        }
        return;
    }
    let mut sorted = masks.to_vec();
    sorted.sort_unstable();
    let groups = buf.len() >> k;
    if k == 1 {
        let mask = masks[0];
        let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        for j in 0..groups {
            let i0 = insert_zeros(j, &sorted);
            let (a, b) = (buf[i0], buf[i0 | mask]);
            buf[i0] = m00 * a + m01 * b;
            buf[i0 | mask] = m10 * a + m11 * b;
        }
        return;
    }
    let offsets: Vec<usize> = (0..1usize << k).map(|s| deposit(s, masks)).collect();
    let mut v = vec![Complex::new(T::zero(), T::zero()); offsets.len()];
    for j in 0..groups {
        let i0 = insert_zeros(j, &sorted);
        for (x, &off) in v.iter_mut().zip(&offsets) {
            *x = buf[i0 | off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            buf[i0 | off] =
                (0..offsets.len()).fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + m.get(r, c) * v[c]);
        }
    }
}

/// Spread `j` over the index bits, leaving a zero at each (ascending) mask.
fn insert_zeros(mut j: usize, sorted_masks: &[usize]) -> usize {
    for &mask in sorted_masks {
        let low = j & (mask - 1);
        j = ((j & !(mask - 1)) << 1) | low;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{kron_embed, GateKind};

    #[test]
    fn deposit_and_insert() {
        assert_eq!(deposit(0b10, &[0b100, 0b001]), 0b100);
        assert_eq!(deposit(0b11, &[0b100, 0b001]), 0b101);
        assert_eq!(insert_zeros(0b11, &[0b010]), 0b101);
        assert_eq!(insert_zeros(0b1, &[0b001, 0b010]), 0b100);
    }

    #[test]
    fn apply_matches_embedding() {
        let d = 4;
        let init: Vec<Complex<f64>> = (0..16).map(|i| Complex::new(i as f64, -(i as f64) / 3.0)).collect();
        for (kind, qs) in [
            (GateKind::H, vec![2]),
            (GateKind::Cx, vec![3, 0]),
            (GateKind::Ccx, vec![1, 3, 2]),
            (GateKind::Cp, vec![0, 2]),
            (GateKind::U, vec![1]),
            (GateKind::Swap, vec![2, 0]),
        ] {
            let params = vec![0.7; kind.num_params()];
            let g = gate_matrix::<f64>(kind, &params).unwrap();
            let want = kron_embed(&g, &qs, d).unwrap().mul_vec(&init);
            let mut buf = init.clone();
            let masks: Vec<usize> = qs.iter().map(|&q| 1 << (d - 1 - q)).collect();
            apply_matrix(&mut buf, &masks, &g.matrix, g.is_diagonal);
            let err = buf.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{kind:?}");
        }
    }
}
