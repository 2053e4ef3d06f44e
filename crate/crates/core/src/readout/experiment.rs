//! The two-readout phase experiment and its gate-error model.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use super::estimate::{estimate_phase, PhaseEstimate};
use crate::density::{Axis, DensityState, RotationSpec};
use crate::error::{Error, Result};
use crate::prodop::{Letter, ProductTerm};
use crate::sequence::{Expr, PulseEvent, Sequence};
use crate::spin::{CouplingMask, SpinSystem};

/// Systematic pulse errors: an additive error on the composite z angle and a
/// multiplicative error on every rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateErrorModel {
    pub z_offset_rad: f64,
    pub flip_scale: f64,
}

impl Default for GateErrorModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl GateErrorModel {
    pub const fn ideal() -> Self {
        GateErrorModel {
            z_offset_rad: 0.0,
            flip_scale: 1.0,
        }
    }

    pub fn new(z_offset_rad: f64, flip_scale: f64) -> Result<Self> {
        let m = GateErrorModel {
            z_offset_rad,
            flip_scale,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.flip_scale.is_finite() && self.flip_scale > 0.0) {
            return Err(Error::InvalidErrorModel(format!(
                "flip scale {} must be positive",
                self.flip_scale
            )));
        }
        if !self.z_offset_rad.is_finite() {
            return Err(Error::InvalidErrorModel(format!(
                "z offset {} is not finite",
                self.z_offset_rad
            )));
        }
        Ok(())
    }
}

/// Read-pulse axis: `X` yields the `sin Φ` signal, `Y` the `cos Φ` signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadAxis {
    X,
    Y,
}

impl ReadAxis {
    /// Antiphase term `2I_a^{target} Iz^{control}` left by this read pulse.
    pub fn observed_term(self, n_spins: usize, control: usize, target: usize) -> ProductTerm {
        let letter = match self {
            ReadAxis::X => Letter::X,
            ReadAxis::Y => Letter::Y,
        };
        ProductTerm::from_factors(n_spins, &[(target, letter), (control, Letter::Z)])
    }
}

impl fmt::Display for ReadAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReadAxis::X => "x",
            ReadAxis::Y => "y",
        })
    }
}

impl FromStr for ReadAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(ReadAxis::X),
            "y" | "Y" => Ok(ReadAxis::Y),
            _ => Err(Error::InvalidRotation(format!(
                "read axis must be x or y, got `{s}`"
            ))),
        }
    }
}

fn check_pair(sys: &SpinSystem, control: &str, target: &str, n: u32) -> Result<()> {
    if control == target {
        return Err(Error::InvalidGate(format!(
            "control and target are both {control}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidGate("root index n must be at least 1".into()));
    }
    if sys.coupling(control, target)? == 0.0 {
        return Err(Error::ZeroCoupling(control.into(), target.into()));
    }
    Ok(())
}

/// Pulse program of the phase measurement on `target`:
///
/// ```text
/// (π/2)−y · τ = 1/(2nJ) · (π/2)x · grad · (π/2)x · z(Φ) · read
/// ```
///
/// `z(Φ)` is realised as `90x · Φ_y · 90−x`, which is exactly `exp(+iΦ·Iz)`.
/// The error model adds `z_offset` to `Φ` and scales every angle.
pub fn phase_experiment_sequence(
    sys: &SpinSystem,
    control: &str,
    target: &str,
    n: u32,
    phi_setting_rad: f64,
    err: GateErrorModel,
    read_axis: ReadAxis,
) -> Result<Sequence> {
    check_pair(sys, control, target, n)?;
    err.validate()?;
    let s = err.flip_scale;
    let pulse = |axis, angle: f64| -> Result<PulseEvent> {
        Ok(PulseEvent::Rotation(RotationSpec::new(
            [target],
            axis,
            angle * s,
        )?))
    };
    let read = match read_axis {
        ReadAxis::X => Axis::X,
        ReadAxis::Y => Axis::Y,
    };
    let mut seq = Sequence::new(format!("phase {control}->{target} n={n} read={read_axis}"));
    seq.push(pulse(Axis::MinusY, FRAC_PI_2)?);
    seq.push(PulseEvent::delay(
        Expr::inverse_coupling(2.0 * n as f64, control, target),
        CouplingMask::pair(control, target),
    ));
    seq.push(pulse(Axis::X, FRAC_PI_2)?);
    seq.push(PulseEvent::Gradient);
    seq.push(pulse(Axis::X, FRAC_PI_2)?);
    seq.push(pulse(Axis::X, FRAC_PI_2)?);
    seq.push(pulse(Axis::Y, phi_setting_rad + err.z_offset_rad)?);
    seq.push(pulse(Axis::MinusX, FRAC_PI_2)?);
    seq.push(pulse(read, FRAC_PI_2)?);
    Ok(seq)
}

/// Runs the phase experiment from thermal equilibrium and returns the
/// antiphase coefficient selected by `read_axis`, in units of the target's
/// thermal polarisation. Ideally `sin(π/2n)·sin Φ` (x) or `sin(π/2n)·cos Φ` (y).
pub fn run_phase_experiment(
    sys: &SpinSystem,
    control: &str,
    target: &str,
    n: u32,
    phi_setting_rad: f64,
    err: GateErrorModel,
    read_axis: ReadAxis,
) -> Result<f64> {
    let seq = phase_experiment_sequence(sys, control, target, n, phi_setting_rad, err, read_axis)?;
    let mut rho = DensityState::thermal(sys);
    seq.execute(&mut rho, sys)?;
    let (c, t) = (sys.index_of(control)?, sys.index_of(target)?);
    let coefficient = rho.coefficient(&read_axis.observed_term(sys.len(), c, t))?;
    Ok(coefficient / sys.spin(t).moment)
}

/// Both readouts at one setting, combined into a phase estimate.
pub fn measure_phase(
    sys: &SpinSystem,
    control: &str,
    target: &str,
    n: u32,
    phi_setting_rad: f64,
    err: GateErrorModel,
) -> Result<PhaseEstimate> {
    let sin = run_phase_experiment(sys, control, target, n, phi_setting_rad, err, ReadAxis::X)?;
    let cos = run_phase_experiment(sys, control, target, n, phi_setting_rad, err, ReadAxis::Y)?;
    estimate_phase(sin, cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{Species, Spin};
    use std::f64::consts::PI;

    fn three_spins() -> SpinSystem {
        SpinSystem::with_couplings(
            vec![
                Spin::new("C1", Species::Carbon13, -3800.0),
                Spin::new("C2", Species::Carbon13, 2900.0),
                Spin::new("H1", Species::Proton, 700.0),
            ],
            [("C1", "C2", 41.0), ("C2", "H1", 150.0), ("C1", "H1", 5.0)],
        )
        .unwrap()
    }

    #[test]
    fn x_readout_at_quarter_turn() {
        let sys = three_spins();
        let a = run_phase_experiment(
            &sys,
            "C1",
            "C2",
            2,
            PI / 2.0,
            GateErrorModel::ideal(),
            ReadAxis::X,
        )
        .unwrap();
        assert!((a - (PI / 4.0).sin()).abs() < 1e-12);
        let zero = run_phase_experiment(
            &sys,
            "C1",
            "C2",
            2,
            0.0,
            GateErrorModel::ideal(),
            ReadAxis::X,
        )
        .unwrap();
        assert!(zero.abs() < 1e-12);
    }

    #[test]
    fn y_readout_follows_cosine() {
        let sys = three_spins();
        for n in 1..=3 {
            for deg in [0.0, 40.0, 135.0, 200.0, 300.0_f64] {
                let b = run_phase_experiment(
                    &sys,
                    "C1",
                    "C2",
                    n,
                    deg.to_radians(),
                    GateErrorModel::ideal(),
                    ReadAxis::Y,
                )
                .unwrap();
                let expect = (PI / (2.0 * n as f64)).sin() * deg.to_radians().cos();
                assert!((b - expect).abs() < 1e-12, "n = {n}, Φ = {deg}");
            }
        }
    }

    #[test]
    fn proton_target_is_normalised() {
        let sys = three_spins();
        let a = run_phase_experiment(
            &sys,
            "C2",
            "H1",
            1,
            PI / 3.0,
            GateErrorModel::ideal(),
            ReadAxis::X,
        )
        .unwrap();
        assert!((a - (PI / 3.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn z_offset_shifts_the_phase() {
        let sys = three_spins();
        let err = GateErrorModel::new(5f64.to_radians(), 1.0).unwrap();
        let est = measure_phase(&sys, "C1", "C2", 2, 90f64.to_radians(), err).unwrap();
        assert!((est.phi_deg - 95.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        let sys = three_spins();
        let ideal = GateErrorModel::ideal();
        assert!(run_phase_experiment(&sys, "C1", "C1", 1, 0.0, ideal, ReadAxis::X).is_err());
        assert!(run_phase_experiment(&sys, "C1", "C2", 0, 0.0, ideal, ReadAxis::X).is_err());
        assert!(GateErrorModel::new(0.0, 0.0).is_err());
        assert!(GateErrorModel::new(f64::NAN, 1.0).is_err());
        assert_eq!("y".parse::<ReadAxis>().unwrap(), ReadAxis::Y);
        assert!("z".parse::<ReadAxis>().is_err());
    }
}
