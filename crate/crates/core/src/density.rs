//! Dense deviation density-matrix engine.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, apply_left, apply_right_dagger, spins_for_dim, Op2};
use crate::prodop::{OperatorExpansion, ProductTerm};
use crate::spin::{hamiltonian_diagonal, thermal_state, CouplingMask, SpinSystem};
use crate::{Matrix, C64};

/// Rotation axis: a phase in the transverse plane, or z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    MinusX,
    MinusY,
    Z,
}

impl Axis {
    /// Unit vector `(nx, ny, nz)`.
    pub fn vector(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::MinusX => [-1.0, 0.0, 0.0],
            Axis::MinusY => [0.0, -1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }

    /// The opposite transverse phase. `Z` has no named opposite and maps to itself.
    pub fn reversed(self) -> Axis {
        match self {
            Axis::X => Axis::MinusX,
            Axis::MinusX => Axis::X,
            Axis::Y => Axis::MinusY,
            Axis::MinusY => Axis::Y,
            Axis::Z => Axis::Z,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::MinusX => "-x",
            Axis::MinusY => "-y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "+x" => Ok(Axis::X),
            "y" | "+y" => Ok(Axis::Y),
            "-x" => Ok(Axis::MinusX),
            "-y" => Ok(Axis::MinusY),
            "z" | "+z" => Ok(Axis::Z),
            other => Err(Error::InvalidRotation(format!("unknown axis `{other}`"))),
        }
    }
}

/// The same rotation applied to each target spin.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSpec {
    pub targets: Vec<String>,
    pub axis: Axis,
    pub angle_rad: f64,
}

impl RotationSpec {
    pub fn new<S: Into<String>>(
        targets: impl IntoIterator<Item = S>,
        axis: Axis,
        angle_rad: f64,
    ) -> Result<Self> {
        let targets: Vec<String> = targets.into_iter().map(Into::into).collect();
        if targets.is_empty() {
            return Err(Error::InvalidRotation(
                "a rotation needs at least one target".into(),
            ));
        }
        if !angle_rad.is_finite() {
            return Err(Error::InvalidRotation(format!(
                "angle {angle_rad} is not finite"
            )));
        }
        Ok(RotationSpec {
            targets,
            axis,
            angle_rad,
        })
    }

    /// Single-spin propagator `exp(+iθ·n·σ/2) = cos(θ/2) + i·sin(θ/2)·n·σ`.
    pub(crate) fn spin_unitary(&self) -> Op2 {
        let [nx, ny, nz] = self.axis.vector();
        let (s, c) = (self.angle_rad / 2.0).sin_cos();
        let i = C64::i();
        [
            [C64::new(c, 0.0) + i * s * nz, i * s * C64::new(nx, -ny)],
            [i * s * C64::new(nx, ny), C64::new(c, 0.0) - i * s * nz],
        ]
    }

    pub(crate) fn target_indices(&self, sys: &SpinSystem) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.targets.len());
        for label in &self.targets {
            let k = sys.index_of(label)?;
            if !idx.contains(&k) {
                idx.push(k);
            }
        }
        Ok(idx)
    }
}

/// Deviation density matrix over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    n_spins: usize,
    matrix: Matrix,
}

/// Hermiticity tolerance for states built from raw matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

impl DensityState {
    pub fn from_expansion(exp: &OperatorExpansion) -> Self {
        DensityState {
            n_spins: exp.n_spins(),
            matrix: exp.to_dense(),
        }
    }

    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: cols,
            });
        }
        let n_spins = spins_for_dim(rows).ok_or(Error::NotPowerOfTwo(rows))?;
        let dev = linalg::hermiticity_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(DensityState { n_spins, matrix })
    }

    /// Thermal equilibrium `Σ μ_s·Iz^s`.
    pub fn thermal(sys: &SpinSystem) -> Self {
        DensityState::from_expansion(&thermal_state(sys))
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius_norm(&self.matrix)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        linalg::hermiticity_deviation(&self.matrix)
    }

    pub fn to_expansion(&self, tol: f64) -> Result<OperatorExpansion> {
        OperatorExpansion::from_dense(&self.matrix, tol)
    }

    /// Product-operator coefficient of a single term.
    pub fn coefficient(&self, term: &ProductTerm) -> Result<f64> {
        OperatorExpansion::coefficient_in(&self.matrix, term)
    }

    fn check_system(&self, sys: &SpinSystem) -> Result<()> {
        if sys.len() != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                found: sys.len(),
            });
        }
        Ok(())
    }

    /// `ρ → UρU†` with `U = ⊗_targets exp(+iθ·I_axis)`.
    pub fn apply_rotation(&mut self, sys: &SpinSystem, spec: &RotationSpec) -> Result<()> {
        self.check_system(sys)?;
        let u = spec.spin_unitary();
        for k in spec.target_indices(sys)? {
            apply_left(&mut self.matrix, self.n_spins, k, &u);
            apply_right_dagger(&mut self.matrix, self.n_spins, k, &u);
        }
        Ok(())
    }

    /// Free precession `ρ → e^{+iHt} ρ e^{−iHt}` under the masked Hamiltonian.
    pub fn evolve_free(
        &mut self,
        sys: &SpinSystem,
        mask: &CouplingMask,
        duration_s: f64,
    ) -> Result<()> {
        self.check_system(sys)?;
        if duration_s.is_nan() || duration_s < 0.0 {
            return Err(Error::NegativeDuration(duration_s));
        }
        let phases: Vec<C64> = hamiltonian_diagonal(sys, mask)?
            .into_iter()
            .map(|e| C64::from_polar(1.0, e * duration_s))
            .collect();
        for (mut row, pa) in self.matrix.rows_mut().into_iter().zip(&phases) {
            for (z, pb) in row.iter_mut().zip(&phases) {
                *z *= pa * pb.conj();
            }
        }
        Ok(())
    }

    /// Crusher gradient: keeps only coherence-order-zero elements, i.e. those
    /// connecting basis states of equal total magnetisation.
    pub fn apply_gradient(&mut self) {
        for ((a, b), z) in self.matrix.indexed_iter_mut() {
            if DensityState::coherence_order(a, b) != 0 {
                *z = C64::new(0.0, 0.0);
            }
        }
    }

    /// `Tr(ρ·O)`.
    pub fn expectation(&self, obs: &OperatorExpansion) -> Result<f64> {
        if obs.n_spins() != self.n_spins {
            return Err(Error::DimensionMismatch {
                expected: self.n_spins,
                found: obs.n_spins(),
            });
        }
        Ok(obs
            .iter()
            .map(|(t, c)| c * t.trace_with(&self.matrix).re)
            .sum())
    }

    /// Coherence order of matrix element `(a, b)`: the number of spins flipped
    /// down in `b` minus those in `a`.
    pub fn coherence_order(a: usize, b: usize) -> i32 {
        b.count_ones() as i32 - a.count_ones() as i32
    }
}
