//! Dense helpers for local (single-spin) operations on 2^n matrices.

use ndarray::Array2;

use crate::{Matrix, C64};

pub(crate) type Op2 = [[C64; 2]; 2];

/// Bit selecting spin `k` of `n` in a basis index.
#[inline]
pub(crate) fn spin_bit(n: usize, k: usize) -> usize {
    1 << (n - 1 - k)
}

pub(crate) fn identity(dim: usize) -> Matrix {
    Array2::from_diag_elem(dim, C64::new(1.0, 0.0))
}

/// Row-major storage of `m`, relaid out first if needed.
fn row_major(m: &mut Matrix) -> &mut [C64] {
    if !m.is_standard_layout() {
        *m = m.as_standard_layout().into_owned();
    }
    m.as_slice_mut().expect("standard layout")
}

/// `m ← u_k · m` where `u_k` acts on spin `k` only.
pub(crate) fn apply_left(m: &mut Matrix, n: usize, k: usize, u: &Op2) {
    let bit = spin_bit(n, k);
    let cols = m.ncols();
    let data = row_major(m);
    for r0 in (0..data.len() / cols).filter(|r| r & bit == 0) {
        let (lo, hi) = data.split_at_mut((r0 | bit) * cols);
        let row0 = &mut lo[r0 * cols..(r0 + 1) * cols];
        let row1 = &mut hi[..cols];
        for (a, b) in row0.iter_mut().zip(row1.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = u[0][0] * x + u[0][1] * y;
            *b = u[1][0] * x + u[1][1] * y;
        }
    }
}

/// `m ← m · u_k†` where `u_k` acts on spin `k` only.
pub(crate) fn apply_right_dagger(m: &mut Matrix, n: usize, k: usize, u: &Op2) {
    let bit = spin_bit(n, k);
    let cols = m.ncols();
    let v = [
        [u[0][0].conj(), u[0][1].conj()],
        [u[1][0].conj(), u[1][1].conj()],
    ];
    let data = row_major(m);
    for row in data.chunks_exact_mut(cols) {
        for c0 in (0..cols).filter(|c| c & bit == 0) {
            let (x, y) = (row[c0], row[c0 | bit]);
            row[c0] = x * v[0][0] + y * v[0][1];
            row[c0 | bit] = x * v[1][0] + y * v[1][1];
        }
    }
}

pub(crate) fn dagger(m: &Matrix) -> Matrix {
    m.t().mapv(|z| z.conj())
}

/// Largest `|m_ij − conj(m_ji)|`.
pub(crate) fn hermiticity_deviation(m: &Matrix) -> f64 {
    let (rows, cols) = m.dim();
    let mut worst = 0.0_f64;
    for r in 0..rows {
        for c in r..cols {
            worst = worst.max((m[[r, c]] - m[[c, r]].conj()).norm());
        }
    }
    worst
}

pub(crate) fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn frobenius_norm(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `log2(dim)` when `dim` is a power of two.
pub(crate) fn spins_for_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}
