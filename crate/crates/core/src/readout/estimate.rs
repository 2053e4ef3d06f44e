//! Phase estimation from the two readout signals, and the correction loop.

use std::io;
use std::path::Path;

use serde::Deserialize;

use super::experiment::{measure_phase, GateErrorModel};
use crate::error::{Error, Result};
use crate::spin::SpinSystem;

/// Signals below this magnitude (both at once) carry no phase.
pub const SIGNAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    /// In `[0, 360)`.
    pub phi_deg: f64,
    /// x-readout intensity, `∝ sin Φ`.
    pub sin_signal: f64,
    /// y-readout intensity, `∝ cos Φ`.
    pub cos_signal: f64,
}

/// Maps any angle into `[0, 360)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Signed difference folded into `(−180, 180]`.
pub fn wrap_deg(deg: f64) -> f64 {
    let r = normalize_deg(deg);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

fn check_signals(sin_signal: f64, cos_signal: f64) -> Result<()> {
    let finite = sin_signal.is_finite() && cos_signal.is_finite();
    if !finite || (sin_signal.abs() < SIGNAL_FLOOR && cos_signal.abs() < SIGNAL_FLOOR) {
        return Err(Error::IndeterminatePhase);
    }
    Ok(())
}

/// Quadrant-resolved phase from signed signals.
pub fn estimate_phase(sin_signal: f64, cos_signal: f64) -> Result<PhaseEstimate> {
    check_signals(sin_signal, cos_signal)?;
    Ok(PhaseEstimate {
        phi_deg: normalize_deg(sin_signal.atan2(cos_signal).to_degrees()),
        sin_signal,
        cos_signal,
    })
}

/// Phase from unsigned intensities: the reference angle `atan(|s|/|c|)` is
/// placed in whichever quadrant lies nearest `expected_deg`. Equidistant
/// candidates resolve to the one not beyond `expected_deg`.
pub fn estimate_phase_magnitude_only(
    sin_signal: f64,
    cos_signal: f64,
    expected_deg: f64,
) -> Result<PhaseEstimate> {
    check_signals(sin_signal, cos_signal)?;
    let alpha = sin_signal.abs().atan2(cos_signal.abs()).to_degrees();
    let expected = normalize_deg(expected_deg);
    let mut best: Option<(f64, f64)> = None;
    for cand in [alpha, 180.0 - alpha, 180.0 + alpha, 360.0 - alpha] {
        let dist = wrap_deg(cand - expected).abs();
        let better = match best {
            None => true,
            Some((_, d)) if (dist - d).abs() <= 1e-9 => wrap_deg(cand - expected) <= 0.0,
            Some((_, d)) => dist < d,
        };
        if better {
            best = Some((cand, dist));
        }
    }
    let (phi, _) = best.expect("four candidates");
    Ok(PhaseEstimate {
        phi_deg: normalize_deg(phi),
        sin_signal,
        cos_signal,
    })
}

/// `|Φ_exp − Φ_the| / Φ_the` in percent; the difference is taken on the
/// circle so 356° against 360° counts as 4°.
pub fn relative_error_percent(phi_exp_deg: f64, phi_the_deg: f64) -> f64 {
    wrap_deg(phi_exp_deg - phi_the_deg).abs() / phi_the_deg.abs() * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationStep {
    /// 0 for the baseline measurement.
    pub iteration: usize,
    pub phi_setting_deg: f64,
    pub estimate: PhaseEstimate,
    /// `wrap(Φ_exp − Φ_target)`.
    pub residual_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub corrected_phi_rad: f64,
    /// Corrections applied (each followed by a fresh measurement).
    pub iterations: usize,
    /// `|wrap(Φ_exp − Φ_target)|` after the last measurement.
    pub residual_deg: f64,
    /// Measurement before any correction, at setting = target.
    pub initial: CalibrationStep,
    /// One step per correction.
    pub history: Vec<CalibrationStep>,
}

impl CalibrationResult {
    /// Columns `iteration, phi_setting_deg, phi_exp_deg, residual_deg`, with
    /// the baseline as iteration 0.
    pub fn write_history_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "iteration",
            "phi_setting_deg",
            "phi_exp_deg",
            "residual_deg",
        ])?;
        for s in std::iter::once(&self.initial).chain(&self.history) {
            out.serialize((
                s.iteration,
                s.phi_setting_deg,
                s.estimate.phi_deg,
                s.residual_deg,
            ))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_history_csv(std::fs::File::create(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub tol_deg: f64,
    pub max_iter: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tol_deg: 0.1,
            max_iter: 3,
        }
    }
}

/// Measures at `Φ_target`, then repeatedly shifts the composite setting by
/// `wrap(Φ_target − Φ_exp)` and re-measures until the residual is within
/// `tol_deg`. Non-convergence is an error carrying the full history.
pub fn calibrate_phase(
    sys: &SpinSystem,
    control: &str,
    target: &str,
    n: u32,
    phi_target_deg: f64,
    err: GateErrorModel,
    opts: CalibrationOptions,
) -> Result<CalibrationResult> {
    if !(opts.tol_deg.is_finite() && opts.tol_deg > 0.0) {
        return Err(Error::InvalidCalibration(format!(
            "tolerance {} must be positive",
            opts.tol_deg
        )));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidCalibration(
            "max_iter must be at least 1".into(),
        ));
    }
    if !phi_target_deg.is_finite() {
        return Err(Error::InvalidCalibration(format!(
            "target {phi_target_deg} is not finite"
        )));
    }
    let step = |iteration, setting_deg: f64| -> Result<CalibrationStep> {
        let estimate = measure_phase(sys, control, target, n, setting_deg.to_radians(), err)?;
        Ok(CalibrationStep {
            iteration,
            phi_setting_deg: setting_deg,
            estimate,
            residual_deg: wrap_deg(estimate.phi_deg - phi_target_deg),
        })
    };

    let initial = step(0, phi_target_deg)?;
    let mut last = initial;
    let mut history = Vec::with_capacity(opts.max_iter);
    for i in 1..=opts.max_iter {
        let setting = last.phi_setting_deg - last.residual_deg;
        last = step(i, setting)?;
        history.push(last);
        if last.residual_deg.abs() <= opts.tol_deg {
            break;
        }
    }
    let result = CalibrationResult {
        corrected_phi_rad: last.phi_setting_deg.to_radians(),
        iterations: history.len(),
        residual_deg: last.residual_deg.abs(),
        initial,
        history,
    };
    if result.residual_deg <= opts.tol_deg {
        Ok(result)
    } else {
        Err(Error::NotConverged(Box::new(result)))
    }
}

/// A measured `(sin, cos)` signal pair at a nominal phase, optionally with a
/// previously reported estimate.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SignalRecord {
    pub phi_the_deg: f64,
    pub sin_signal: f64,
    pub cos_signal: f64,
    #[serde(default)]
    pub phi_exp_deg: Option<f64>,
    #[serde(default)]
    pub relative_error_pct: Option<f64>,
}

/// Reads records from CSV with a header naming the [`SignalRecord`] fields.
pub fn read_signal_records<R: io::Read>(r: R) -> Result<Vec<SignalRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    rdr.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn load_signal_records(path: impl AsRef<Path>) -> Result<Vec<SignalRecord>> {
    read_signal_records(std::fs::File::open(path)?)
}
