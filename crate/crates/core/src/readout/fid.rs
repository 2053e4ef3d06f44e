//! FID synthesis, Fourier transform and spectral integration.

use std::io;
use std::path::Path;

use rustfft::FftPlanner;

use crate::density::DensityState;
use crate::error::{Error, Result};
use crate::linalg::spin_bit;
use crate::spin::{hamiltonian_diagonal, CouplingMask, SpinSystem};
use crate::C64;

/// Sampled free induction decay.
#[derive(Debug, Clone, PartialEq)]
pub struct Fid {
    pub samples: Vec<C64>,
    pub dwell_s: f64,
    pub detected: Vec<String>,
}

/// Synthesises `points` samples of the detected signal while `state`
/// precesses under the full free Hamiltonian.
///
/// The detection operator is `Σ_d (Ix^d − i·Iy^d)`, which places a line at
/// offset `ν` at `+ν` under the engine's precession sense. `t2_s` applies a
/// single exponential decay.
pub fn acquire_fid(
    state: &DensityState,
    sys: &SpinSystem,
    detect: &[&str],
    points: usize,
    dwell_s: f64,
    t2_s: Option<f64>,
) -> Result<Fid> {
    if detect.is_empty() {
        return Err(Error::InvalidAcquisition("no detected spins".into()));
    }
    if points < 2 {
        return Err(Error::InvalidAcquisition(format!(
            "need at least 2 points, got {points}"
        )));
    }
    if !(dwell_s.is_finite() && dwell_s > 0.0) {
        return Err(Error::InvalidAcquisition(format!(
            "dwell {dwell_s} s must be positive"
        )));
    }
    if let Some(t2) = t2_s {
        if t2.is_nan() || t2 <= 0.0 {
            return Err(Error::InvalidAcquisition(format!(
                "T2 {t2} s must be positive"
            )));
        }
    }
    if state.n_spins() != sys.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.len(),
            found: state.n_spins(),
        });
    }
    let mut spins = Vec::new();
    for label in detect {
        let k = sys.index_of(label)?;
        if !spins.contains(&k) {
            spins.push(k);
        }
    }
    let energies = hamiltonian_diagonal(sys, &CouplingMask::Free)?;
    let rho = state.matrix();
    let n = sys.len();

    // (I−)_{a|bit, a} = 1, so each line is ρ_{a, a|bit} rotating at E_a − E_b.
    let mut lines: Vec<(C64, f64)> = Vec::new();
    for &k in &spins {
        let bit = spin_bit(n, k);
        for a in (0..sys.dim()).filter(|a| a & bit == 0) {
            let b = a | bit;
            let amp = rho[[a, b]];
            if amp.norm() > 1e-15 {
                lines.push((amp, energies[a] - energies[b]));
            }
        }
    }

    let samples = (0..points)
        .map(|i| {
            let t = i as f64 * dwell_s;
            let decay = t2_s.map_or(1.0, |t2| (-t / t2).exp());
            let s: C64 = lines
                .iter()
                .map(|&(amp, w)| amp * C64::from_polar(1.0, w * t))
                .sum();
            s * decay
        })
        .collect();
    Ok(Fid {
        samples,
        dwell_s,
        detected: detect.iter().map(|s| s.to_string()).collect(),
    })
}

impl Fid {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|i| i as f64 * self.dwell_s)
    }

    pub fn spectrum(&self, receiver_phase_rad: f64) -> Spectrum {
        spectrum(self, receiver_phase_rad)
    }

    /// Columns `time_s, real, imag`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        write_columns(w, "time_s", self.times().zip(self.samples.iter().copied()))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Complex spectrum on an ascending frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies_hz: Vec<f64>,
    pub values: Vec<C64>,
    pub receiver_phase_rad: f64,
}

/// Discrete Fourier transform of the FID, scaled by the dwell time, centred
/// on zero frequency and multiplied by `e^{−i·receiver_phase}`.
///
/// The first sample is halved (the usual trapezoid correction), so the
/// spectrum integrates to half the initial signal, like the continuous
/// transform of a one-sided decay.
pub fn spectrum(fid: &Fid, receiver_phase_rad: f64) -> Spectrum {
    let n = fid.samples.len();
    let mut buf = fid.samples.clone();
    if let Some(first) = buf.first_mut() {
        *first *= 0.5;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let rot = C64::from_polar(fid.dwell_s, -receiver_phase_rad);
    let half = n / 2;
    let df = 1.0 / (n as f64 * fid.dwell_s);
    let (frequencies_hz, values) = (0..n)
        .map(|j| {
            let m = j as isize - half as isize;
            let src = m.rem_euclid(n as isize) as usize;
            (m as f64 * df, buf[src] * rot)
        })
        .unzip();
    Spectrum {
        frequencies_hz,
        values,
        receiver_phase_rad,
    }
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn resolution_hz(&self) -> f64 {
        match self.frequencies_hz.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Sum of the real part over bins in `[f_lo, f_hi]`, times the bin width.
    pub fn integrate(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        integrate(self, f_lo, f_hi)
    }

    /// Columns `frequency_hz, real, imag`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        write_columns(
            w,
            "frequency_hz",
            self.frequencies_hz
                .iter()
                .copied()
                .zip(self.values.iter().copied()),
        )
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn integrate(spec: &Spectrum, f_lo: f64, f_hi: f64) -> Result<f64> {
    let (min, max) = match (spec.frequencies_hz.first(), spec.frequencies_hz.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    };
    if !(f_lo < f_hi && f_lo >= min && f_hi <= max) {
        return Err(Error::WindowOutsideAxis {
            lo: f_lo,
            hi: f_hi,
            min,
            max,
        });
    }
    let sum: f64 = spec
        .frequencies_hz
        .iter()
        .zip(&spec.values)
        .filter(|(f, _)| (f_lo..=f_hi).contains(*f))
        .map(|(_, z)| z.re)
        .sum();
    Ok(sum * spec.resolution_hz())
}

fn write_columns<W: io::Write>(
    w: W,
    axis: &str,
    rows: impl Iterator<Item = (f64, C64)>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([axis, "real", "imag"])?;
    for (x, z) in rows {
        out.serialize((x, z.re, z.im))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prodop::{Letter, OperatorExpansion, ProductTerm};
    use crate::spin::{Species, Spin};
    use std::f64::consts::FRAC_PI_2;

    const DWELL: f64 = 1e-4;
    const POINTS: usize = 8192;

    fn pair(j: f64) -> SpinSystem {
        SpinSystem::with_couplings(
            vec![
                Spin::new("C1", Species::Carbon13, -3800.0),
                Spin::new("C2", Species::Carbon13, 2900.0),
            ],
            [("C1", "C2", j)],
        )
        .unwrap()
    }

    fn state(terms: &[(&[(usize, Letter)], f64)]) -> DensityState {
        let mut e = OperatorExpansion::new(2);
        for (f, c) in terms {
            e.add(ProductTerm::from_factors(2, f), *c);
        }
        DensityState::from_expansion(&e)
    }

    fn peak(spec: &Spectrum) -> (f64, f64) {
        spec.frequencies_hz
            .iter()
            .zip(&spec.values)
            .map(|(&f, z)| (f, z.re))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
    }

    #[test]
    fn single_line_at_offset() {
        let sys = pair(0.0);
        let rho = state(&[(&[(1, Letter::X)], 1.0)]);
        let fid = acquire_fid(&rho, &sys, &["C2"], 64, DWELL, None).unwrap();
        for (t, s) in fid.times().zip(&fid.samples) {
            // Ix ⊗ 1: both states of the passive spin contribute ½.
            let expect = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 2900.0 * t);
            assert!((s - expect).norm() < 1e-12);
        }
        let spec = acquire_fid(&rho, &sys, &["C2"], POINTS, DWELL, Some(0.1))
            .unwrap()
            .spectrum(0.0);
        let (f, v) = peak(&spec);
        assert!((f - 2900.0).abs() <= spec.resolution_hz());
        assert!(v > 0.0);
    }

    #[test]
    fn longitudinal_state_is_silent() {
        let sys = pair(41.0);
        let rho = state(&[(&[(0, Letter::Z)], 1.0), (&[(1, Letter::Z)], 1.0)]);
        let fid = acquire_fid(&rho, &sys, &["C1", "C2"], 128, DWELL, None).unwrap();
        assert!(fid.samples.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn antiphase_fid_is_analytic() {
        let j = 41.0;
        let sys = pair(j);
        let rho = state(&[(&[(1, Letter::X), (0, Letter::Z)], 1.0)]);
        let fid = acquire_fid(&rho, &sys, &["C2"], 256, DWELL, None).unwrap();
        // 2IxIz → ½(e^{i2π(ν+J/2)t} − e^{i2π(ν−J/2)t}) = i·e^{i2πνt}·sin(πJt).
        for (t, s) in fid.times().zip(&fid.samples) {
            let w = 2.0 * std::f64::consts::PI * 2900.0 * t;
            let expect = C64::i() * C64::from_polar(1.0, w) * (std::f64::consts::PI * j * t).sin();
            assert!((s - expect).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn receiver_phase_swaps_parts() {
        let sys = pair(0.0);
        let rho = state(&[(&[(1, Letter::X)], 1.0)]);
        let fid = acquire_fid(&rho, &sys, &["C2"], 512, DWELL, Some(0.02)).unwrap();
        let a = fid.spectrum(0.0);
        let b = fid.spectrum(FRAC_PI_2);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.im - y.re).abs() < 1e-12 && (x.re + y.im).abs() < 1e-12);
        }
    }

    #[test]
    fn y_magnetisation_needs_quarter_turn() {
        let sys = pair(0.0);
        let rho = state(&[(&[(1, Letter::Y)], 1.0)]);
        let spec = acquire_fid(&rho, &sys, &["C2"], POINTS, DWELL, Some(0.1))
            .unwrap()
            .spectrum(-FRAC_PI_2);
        assert!(peak(&spec).1 > 0.0);
    }

    #[test]
    fn in_phase_area_matches_amplitude() {
        let sys = pair(0.0);
        for amp in [1.0, 2.5] {
            let rho = state(&[(&[(1, Letter::X)], amp)]);
            let spec = acquire_fid(&rho, &sys, &["C2"], POINTS, DWELL, Some(0.1))
                .unwrap()
                .spectrum(0.0);
            let area = spec.integrate(2800.0, 3000.0).unwrap();
            // Half of the initial signal `amp`, minus the Lorentzian tails.
            assert!((area - amp / 2.0).abs() < 0.01 * amp, "{area}");
            assert!(spec.integrate(-1000.0, 0.0).unwrap().abs() < 1e-3 * amp);
        }
    }

    #[test]
    fn antiphase_halves_cancel() {
        let j = 41.0;
        let sys = pair(j);
        let rho = state(&[(&[(1, Letter::X), (0, Letter::Z)], 1.0)]);
        let spec = acquire_fid(&rho, &sys, &["C2"], POINTS, DWELL, Some(0.1))
            .unwrap()
            .spectrum(0.0);
        let lo = spec.integrate(2900.0 - j, 2900.0).unwrap();
        let hi = spec.integrate(2900.0, 2900.0 + j).unwrap();
        assert!(lo < 0.0 && hi > 0.0);
        assert!(spec.integrate(2900.0 - j, 2900.0 + j).unwrap().abs() < 0.05 * hi);
    }

    #[test]
    fn argument_errors() {
        let sys = pair(41.0);
        let rho = DensityState::thermal(&sys);
        assert!(acquire_fid(&rho, &sys, &[], 16, DWELL, None).is_err());
        assert!(acquire_fid(&rho, &sys, &["C1"], 1, DWELL, None).is_err());
        assert!(acquire_fid(&rho, &sys, &["C1"], 16, 0.0, None).is_err());
        assert!(acquire_fid(&rho, &sys, &["Q"], 16, DWELL, None).is_err());
        let spec = acquire_fid(&rho, &sys, &["C1"], 16, DWELL, None)
            .unwrap()
            .spectrum(0.0);
        assert!(matches!(
            spec.integrate(-1e5, 0.0),
            Err(Error::WindowOutsideAxis { .. })
        ));
        assert!(spec.integrate(10.0, 10.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let sys = pair(0.0);
        let rho = state(&[(&[(1, Letter::X)], 1.0)]);
        let fid = acquire_fid(&rho, &sys, &["C2"], 4, DWELL, None).unwrap();
        let mut out = Vec::new();
        fid.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time_s,real,imag"));
        assert_eq!(lines.next(), Some("0.0,1.0,0.0"));
        assert_eq!(text.lines().count(), 5);
        let mut out = Vec::new();
        fid.spectrum(0.0).write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .starts_with("frequency_hz,real,imag\n"));
    }
}
