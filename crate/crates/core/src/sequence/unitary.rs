//! Compilation of gradient-free sequences to dense unitaries, canonical
//! reference gates, and equivalence tests between unitaries.

use std::fmt;

use ndarray::Array2;

use super::{PulseEvent, Sequence};
use crate::error::{Error, Result};
use crate::linalg::{apply_left, dagger, identity, max_abs, spin_bit};
use crate::spin::{hamiltonian_diagonal, SpinSystem};
use crate::{Matrix, C64};

/// Ordered product of event propagators, last event leftmost. A delay
/// contributes `e^{+iHt}`, matching the engine's `ρ → UρU†` convention.
pub fn compile_unitary(seq: &Sequence, sys: &SpinSystem) -> Result<Matrix> {
    seq.validate(sys)?;
    let n = sys.len();
    let mut u = identity(sys.dim());
    for ev in &seq.events {
        match ev {
            PulseEvent::Rotation(spec) => {
                let op = spec.spin_unitary();
                for k in spec.target_indices(sys)? {
                    apply_left(&mut u, n, k, &op);
                }
            }
            PulseEvent::Delay { duration, mask } => {
                let t = duration.evaluate(sys)?;
                let energies = hamiltonian_diagonal(sys, mask)?;
                for (mut row, e) in u.rows_mut().into_iter().zip(energies) {
                    let phase = C64::from_polar(1.0, e * t);
                    row.mapv_inplace(|z| z * phase);
                }
            }
            PulseEvent::Gradient => return Err(Error::GradientInUnitary),
        }
    }
    Ok(u)
}

/// `‖U†U − 1‖_max`.
pub fn unitarity_deviation(u: &Matrix) -> f64 {
    max_abs(&(dagger(u).dot(u) - identity(u.nrows())))
}

/// Permutation-plus-phase gate built from a per-basis-state map.
fn basis_map(n_spins: usize, f: impl Fn(usize) -> (usize, C64)) -> Matrix {
    let dim = 1 << n_spins;
    let mut m = Array2::zeros((dim, dim));
    for a in 0..dim {
        let (b, z) = f(a);
        m[[b, a]] = z;
    }
    m
}

/// CNOT on an `n_spins` register; a set bit (spin down) is logical 1.
pub fn cnot(n_spins: usize, control: usize, target: usize) -> Matrix {
    let (c, t) = (spin_bit(n_spins, control), spin_bit(n_spins, target));
    basis_map(n_spins, |a| {
        let b = if a & c != 0 { a ^ t } else { a };
        (b, C64::new(1.0, 0.0))
    })
}

/// CPHASE(φ): `e^{iφ}` on states where both spins are logical 1.
pub fn cphase(n_spins: usize, a: usize, b: usize, phi: f64) -> Matrix {
    let mask = spin_bit(n_spins, a) | spin_bit(n_spins, b);
    basis_map(n_spins, |s| {
        let z = if s & mask == mask {
            C64::from_polar(1.0, phi)
        } else {
            C64::new(1.0, 0.0)
        };
        (s, z)
    })
}

pub fn swap(n_spins: usize, a: usize, b: usize) -> Matrix {
    let (ba, bb) = (spin_bit(n_spins, a), spin_bit(n_spins, b));
    basis_map(n_spins, |s| {
        let flip = ((s & ba != 0) != (s & bb != 0)) as usize * (ba | bb);
        (s ^ flip, C64::new(1.0, 0.0))
    })
}

/// Controlled `X^{k/n}`, with `X^{k/n} = ((1+w)·1 + (1−w)·X)/2`, `w = e^{iπk/n}`.
pub fn controlled_root_x(n_spins: usize, control: usize, target: usize, n: u32, k: u32) -> Matrix {
    let w = C64::from_polar(1.0, std::f64::consts::PI * k as f64 / n as f64);
    let one = C64::new(1.0, 0.0);
    let (diag, off) = ((one + w) / 2.0, (one - w) / 2.0);
    let (c, t) = (spin_bit(n_spins, control), spin_bit(n_spins, target));
    let mut m = identity(1 << n_spins);
    for a in (0..1usize << n_spins).filter(|a| a & c != 0) {
        m[[a, a]] = diag;
        m[[a ^ t, a]] = off;
    }
    m
}

fn same_shape(u: &Matrix, v: &Matrix) -> Result<()> {
    if u.dim() != v.dim() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: v.nrows(),
            found: u.nrows(),
        });
    }
    Ok(())
}

/// `max |e^{−iα}·V†U − 1|`, with `α` the phase of the largest element of `V†U`.
pub fn global_phase_deviation(u: &Matrix, v: &Matrix) -> Result<f64> {
    same_shape(u, v)?;
    let m = dagger(v).dot(u);
    let pivot = m
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    if pivot.norm() == 0.0 {
        return Ok(f64::INFINITY);
    }
    let phase = (pivot / pivot.norm()).conj();
    Ok(max_abs(&(m.mapv(|z| z * phase) - identity(u.nrows()))))
}

/// Distance from `D·U = V` for the best diagonal unitary `D`: `W = V·U†`
/// must be diagonal with unimodular entries.
pub fn diagonal_phase_deviation(u: &Matrix, v: &Matrix) -> Result<f64> {
    same_shape(u, v)?;
    let w = v.dot(&dagger(u));
    let mut worst = 0.0_f64;
    for ((a, b), z) in w.indexed_iter() {
        let d = if a == b {
            (z.norm() - 1.0).abs()
        } else {
            z.norm()
        };
        worst = worst.max(d);
    }
    Ok(worst)
}

pub fn equivalent_up_to_global_phase(u: &Matrix, v: &Matrix, tol: f64) -> Result<bool> {
    Ok(global_phase_deviation(u, v)? <= tol)
}

pub fn equivalent_up_to_diagonal_phases(u: &Matrix, v: &Matrix, tol: f64) -> Result<bool> {
    Ok(diagonal_phase_deviation(u, v)? <= tol)
}

/// Strongest equivalence that holds between two unitaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquivalenceLevel {
    GlobalPhase { deviation: f64 },
    DiagonalPhase { deviation: f64 },
    Inequivalent { global: f64, diagonal: f64 },
}

impl EquivalenceLevel {
    /// Tries global-phase equivalence first, then diagonal phases.
    pub fn classify(u: &Matrix, v: &Matrix, tol: f64) -> Result<Self> {
        let global = global_phase_deviation(u, v)?;
        if global <= tol {
            return Ok(EquivalenceLevel::GlobalPhase { deviation: global });
        }
        let diagonal = diagonal_phase_deviation(u, v)?;
        if diagonal <= tol {
            return Ok(EquivalenceLevel::DiagonalPhase {
                deviation: diagonal,
            });
        }
        Ok(EquivalenceLevel::Inequivalent { global, diagonal })
    }

    /// At least diagonal-phase equivalent.
    pub fn holds(&self) -> bool {
        !matches!(self, EquivalenceLevel::Inequivalent { .. })
    }
}

impl fmt::Display for EquivalenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivalenceLevel::GlobalPhase { deviation } => {
                write!(f, "global-phase-equivalent, deviation {deviation:.3e}")
            }
            EquivalenceLevel::DiagonalPhase { deviation } => {
                write!(f, "diagonal-phase-equivalent, deviation {deviation:.3e}")
            }
            EquivalenceLevel::Inequivalent { global, diagonal } => write!(
                f,
                "not equivalent (global {global:.3e}, diagonal {diagonal:.3e})"
            ),
        }
    }
}
