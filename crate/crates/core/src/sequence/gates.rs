//! Gate constructors: the echo-based composite z block and the controlled
//! n-th-root NOT built around it.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{Expr, PulseEvent, Sequence};
use crate::density::{Axis, RotationSpec};
use crate::error::{Error, Result};
use crate::spin::{CouplingMask, SpinSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub control: String,
    pub target: String,
    /// Root index: `n = 1` is CNOT, `n = 2` the controlled square-root NOT.
    pub n: u32,
    /// Angle of the composite z rotation; the middle pulse turns by `φ/2`.
    pub phi_rad: f64,
}

impl GateParams {
    /// Defaults `φ` to `π/n`, which makes the z block a pure CPHASE(π/n).
    pub fn new(control: impl Into<String>, target: impl Into<String>, n: u32) -> Self {
        GateParams {
            control: control.into(),
            target: target.into(),
            n,
            phi_rad: if n == 0 { 0.0 } else { PI / n as f64 },
        }
    }

    pub fn with_phi(mut self, phi_rad: f64) -> Self {
        self.phi_rad = phi_rad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.control == self.target {
            return Err(Error::InvalidGate(format!(
                "control and target are both {}",
                self.control
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidGate("root index n must be at least 1".into()));
        }
        if !self.phi_rad.is_finite() {
            return Err(Error::InvalidGate(format!(
                "phi {} is not finite",
                self.phi_rad
            )));
        }
        Ok(())
    }

    /// Validates against `sys`, including a nonzero coupling between the pair.
    fn check(&self, sys: &SpinSystem) -> Result<()> {
        self.validate()?;
        if sys.coupling(&self.control, &self.target)? == 0.0 {
            return Err(Error::ZeroCoupling(
                self.control.clone(),
                self.target.clone(),
            ));
        }
        Ok(())
    }

    fn pair(&self) -> [&str; 2] {
        [&self.control, &self.target]
    }
}

fn pulse(targets: &[&str], axis: Axis, angle_rad: f64) -> PulseEvent {
    PulseEvent::Rotation(
        RotationSpec::new(targets.iter().copied(), axis, angle_rad)
            .expect("nonempty targets, finite angle"),
    )
}

/// Two `1/(4nJ)` coupling periods around a 180°x on both spins, followed by
/// the 180°−x that undoes the refocusing pulse.
fn echo(p: &GateParams) -> Vec<PulseEvent> {
    let pair = p.pair();
    let tau = || {
        PulseEvent::delay(
            Expr::inverse_coupling(4.0 * p.n as f64, &p.control, &p.target),
            CouplingMask::pair(&p.control, &p.target),
        )
    };
    vec![
        tau(),
        pulse(&pair, Axis::X, PI),
        tau(),
        pulse(&pair, Axis::MinusX, PI),
    ]
}

/// `exp(−i(φ/2)(Iz^i + Iz^j)) · exp(+i(π/n)·Iz^i Iz^j)`: CPHASE(π/n) up to a
/// global phase when `φ = π/n`.
pub fn composite_z(params: &GateParams, sys: &SpinSystem) -> Result<Sequence> {
    params.check(sys)?;
    let pair = params.pair();
    let mut seq = Sequence::new(format!(
        "composite-z {}-{} n={}",
        params.control, params.target, params.n
    ));
    for ev in echo(params) {
        seq.push(ev);
    }
    seq.push(pulse(&pair, Axis::X, FRAC_PI_2));
    seq.push(pulse(&pair, Axis::MinusY, params.phi_rad / 2.0));
    seq.push(pulse(&pair, Axis::MinusX, FRAC_PI_2));
    Ok(seq)
}

/// Pseudo-Hadamard sandwich around [`composite_z`]: controlled `X^{1/n}` on
/// the target.
pub fn controlled_root_not(params: &GateParams, sys: &SpinSystem) -> Result<Sequence> {
    let z = composite_z(params, sys)?;
    let t = [params.target.as_str()];
    let mut seq = Sequence::new(format!(
        "controlled-root-not {}->{} n={}",
        params.control, params.target, params.n
    ));
    seq.push(pulse(&t, Axis::Y, FRAC_PI_2));
    seq.extend(z);
    seq.push(pulse(&t, Axis::MinusY, FRAC_PI_2));
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::unitary::{
        compile_unitary, cphase, global_phase_deviation, unitarity_deviation,
    };
    use crate::spin::{Species, Spin};

    fn pair_system(j: f64) -> SpinSystem {
        SpinSystem::with_couplings(
            vec![
                Spin::new("C1", Species::Carbon13, -3800.0),
                Spin::new("C2", Species::Carbon13, 2900.0),
            ],
            [("C1", "C2", j)],
        )
        .unwrap()
    }

    #[test]
    fn delays_for_n1() {
        let sys = pair_system(41.0);
        let seq = composite_z(&GateParams::new("C1", "C2", 1), &sys).unwrap();
        assert_eq!(seq.len(), 7);
        let d = seq.delays(&sys).unwrap();
        assert_eq!(d.len(), 2);
        for t in d {
            assert!((t - 1.0 / 164.0).abs() < 1e-15);
        }
    }

    #[test]
    fn total_coupling_time_n2() {
        let sys = pair_system(41.0);
        let seq = composite_z(&GateParams::new("C1", "C2", 2), &sys).unwrap();
        let total: f64 = seq.delays(&sys).unwrap().iter().sum();
        assert!((total - 1.0 / (4.0 * 41.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_phi_is_the_echo() {
        let sys = pair_system(41.0);
        let p = GateParams::new("C1", "C2", 3).with_phi(0.0);
        let full = compile_unitary(&composite_z(&p, &sys).unwrap(), &sys).unwrap();
        let mut echo_only = Sequence::new("echo");
        for ev in echo(&p) {
            echo_only.push(ev);
        }
        let e = compile_unitary(&echo_only, &sys).unwrap();
        assert!(crate::linalg::max_abs(&(&full - &e)) < 1e-12);
    }

    #[test]
    fn opposite_phis_compose_to_echo_squared() {
        let sys = pair_system(41.0);
        for phi in [0.3, 1.0, PI / 2.0, 2.5] {
            let p = GateParams::new("C1", "C2", 2).with_phi(phi);
            let a = compile_unitary(&composite_z(&p, &sys).unwrap(), &sys).unwrap();
            let b = compile_unitary(&composite_z(&p.clone().with_phi(-phi), &sys).unwrap(), &sys)
                .unwrap();
            let e = compile_unitary(&composite_z(&p.with_phi(0.0), &sys).unwrap(), &sys).unwrap();
            let diff = &a.dot(&b) - &e.dot(&e);
            assert!(crate::linalg::max_abs(&diff) < 1e-10, "phi = {phi}");
        }
    }

    #[test]
    fn composite_z_is_cphase() {
        let sys = pair_system(41.0);
        for n in 1..=4 {
            let u = compile_unitary(
                &composite_z(&GateParams::new("C1", "C2", n), &sys).unwrap(),
                &sys,
            )
            .unwrap();
            assert!(unitarity_deviation(&u) < 1e-12);
            let v = cphase(2, 0, 1, PI / n as f64);
            assert!(global_phase_deviation(&u, &v).unwrap() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn uncompensated_echo_block_is_not_diagonal() {
        // Without the closing 180°−x the block is a z rotation times a net
        // 180°x on both spins, which swaps |00⟩↔|11⟩ and |01⟩↔|10⟩.
        let sys = pair_system(41.0);
        let p = GateParams::new("C1", "C2", 2);
        let mut seq = composite_z(&p, &sys).unwrap();
        seq.events.remove(3);
        seq.spans.remove(3);
        let u = compile_unitary(&seq, &sys).unwrap();
        let off: f64 = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| u[[a, b]].norm())
            .fold(0.0, f64::max);
        assert!((off - 1.0).abs() < 1e-12);
    }

    #[test]
    fn precondition_errors() {
        let sys = pair_system(41.0);
        assert!(matches!(
            controlled_root_not(&GateParams::new("C1", "C1", 1), &sys),
            Err(Error::InvalidGate(_))
        ));
        assert!(matches!(
            composite_z(&GateParams::new("C1", "C2", 0), &sys),
            Err(Error::InvalidGate(_))
        ));
        assert!(matches!(
            composite_z(&GateParams::new("C1", "X9", 1), &sys),
            Err(Error::UnknownLabel(_))
        ));
        assert!(matches!(
            composite_z(&GateParams::new("C1", "C2", 1), &pair_system(0.0)),
            Err(Error::ZeroCoupling(..))
        ));
    }

    #[test]
    fn hadamard_sandwich_targets_only_the_target() {
        let sys = pair_system(41.0);
        let seq = controlled_root_not(&GateParams::new("C1", "C2", 1), &sys).unwrap();
        assert_eq!(seq.len(), 9);
        for ev in [&seq.events[0], &seq.events[8]] {
            match ev {
                PulseEvent::Rotation(r) => assert_eq!(r.targets, ["C2"]),
                other => panic!("{other:?}"),
            }
        }
    }
}
