//! `nmrqc` command-line front end.
//!
//! Exit codes: 0 success, 1 a check did not hold (calibration did not
//! converge, gate not equivalent), 2 usage, input or runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nmrqc::prodop::DEFAULT_PRUNE_TOL;
use nmrqc::readout::{
    acquire_fid, calibrate_phase, estimate_phase, estimate_phase_magnitude_only,
    load_signal_records, measure_phase, relative_error_percent, CalibrationOptions,
    CalibrationResult, GateErrorModel, PhaseEstimate,
};
use nmrqc::sequence::unitary::{cnot, controlled_root_x, cphase, EquivalenceLevel};
use nmrqc::sequence::{
    compile_unitary, composite_z, controlled_root_not, parse_sequence_for, GateParams,
};
use nmrqc::{DensityState, Matrix, Sequence, SpinSystem};

#[derive(Parser)]
#[command(
    name = "nmrqc",
    version,
    about = "Liquid-state NMR gate and phase-calibration simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pulse sequence from thermal equilibrium and print the final state.
    Simulate(SimulateArgs),
    /// Compile the controlled n-th-root NOT and compare it with the ideal gate.
    VerifyGate(VerifyArgs),
    /// Run both phase readouts at one composite-z setting.
    Phase(PhaseArgs),
    /// Correct the composite-z setting towards target phases, or evaluate
    /// measured signal pairs offline.
    Calibrate(CalibrateArgs),
    /// Run a sequence, acquire an FID and write FID and spectrum CSVs.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct PairArgs {
    /// Control spin label.
    #[arg(long, default_value = "C1")]
    control: String,
    /// Target spin label.
    #[arg(long, default_value = "C2")]
    target: String,
    /// Root index (1 = CNOT, 2 = controlled square-root NOT).
    #[arg(short, long, default_value_t = 1)]
    n: u32,
}

#[derive(Args)]
struct ErrorArgs {
    /// Additive error on the composite z angle, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    z_offset_deg: f64,
    /// Multiplicative error on every rotation angle.
    #[arg(long, default_value_t = 1.0)]
    flip_scale: f64,
}

impl ErrorArgs {
    fn model(&self) -> Result<GateErrorModel> {
        Ok(GateErrorModel::new(
            self.z_offset_deg.to_radians(),
            self.flip_scale,
        )?)
    }
}

#[derive(Args)]
struct AcquisitionArgs {
    /// Detected spins, comma separated.
    #[arg(long, value_delimiter = ',')]
    detect: Vec<String>,
    #[arg(long, default_value_t = 8192)]
    points: usize,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 1e-4)]
    dwell: f64,
    /// Transverse decay constant in seconds; 0 disables decay.
    #[arg(long, default_value_t = 0.1)]
    t2: f64,
    /// Zero-order receiver phase, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    receiver_phase_deg: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Spin-system TOML file.
    system: PathBuf,
    /// Sequence file; omitted means an empty sequence.
    sequence: Option<PathBuf>,
    /// Coefficients below this are not printed.
    #[arg(long, default_value_t = DEFAULT_PRUNE_TOL)]
    prune: f64,
    #[command(flatten)]
    acq: AcquisitionArgs,
    /// Output directory for spectrum CSVs (written only with --detect).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    system: PathBuf,
    #[command(flatten)]
    pair: PairArgs,
    /// Composite z angle in degrees; defaults to 180/n.
    #[arg(long, allow_negative_numbers = true)]
    phi_deg: Option<f64>,
    /// Compare the k-th power of the gate with the ideal k-th power.
    #[arg(long, default_value_t = 1)]
    power: u32,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct PhaseArgs {
    system: PathBuf,
    #[command(flatten)]
    pair: PairArgs,
    /// Composite z setting, degrees.
    #[arg(long, allow_negative_numbers = true)]
    phi_deg: f64,
    #[command(flatten)]
    err: ErrorArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Spin-system TOML file (not needed with --offline).
    #[arg(required_unless_present = "offline")]
    system: Option<PathBuf>,
    /// CSV of measured signals (columns phi_the_deg, sin_signal, cos_signal).
    #[arg(long, conflicts_with = "system")]
    offline: Option<PathBuf>,
    /// Offline only: resolve quadrants from the nominal phase instead of signal signs.
    #[arg(long, requires = "offline")]
    magnitude_only: bool,
    #[command(flatten)]
    pair: PairArgs,
    /// Target phases, degrees.
    #[arg(long, value_delimiter = ',', default_value = "90,180,270,360")]
    targets: Vec<f64>,
    #[command(flatten)]
    err: ErrorArgs,
    #[arg(long, default_value_t = 0.1)]
    tol_deg: f64,
    #[arg(long, default_value_t = 3)]
    max_iter: usize,
    /// Directory for history CSVs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    system: PathBuf,
    sequence: Option<PathBuf>,
    #[command(flatten)]
    acq: AcquisitionArgs,
    /// Print the integral over LO:HI Hz; repeatable.
    #[arg(long = "integrate", value_parser = parse_window, allow_negative_numbers = true)]
    windows: Vec<(f64, f64)>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok((p(lo)?, p(hi)?))
}

/// A check ran but did not hold.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn load_system(path: &Path) -> Result<SpinSystem> {
    SpinSystem::load(path).with_context(|| format!("loading spin system {}", path.display()))
}

fn load_sequence(path: Option<&Path>, sys: &SpinSystem) -> Result<Sequence> {
    let Some(path) = path else {
        return Ok(Sequence::new("empty"));
    };
    let text =
        fs::read_to_string(path).with_context(|| format!("reading sequence {}", path.display()))?;
    let mut seq =
        parse_sequence_for(&text, sys).with_context(|| format!("in {}", path.display()))?;
    seq.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(seq)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run_sequence(sys: &SpinSystem, seq: &Sequence) -> Result<DensityState> {
    let mut rho = DensityState::thermal(sys);
    seq.execute(&mut rho, sys)?;
    Ok(rho)
}

fn write_spectrum(
    sys: &SpinSystem,
    rho: &DensityState,
    acq: &AcquisitionArgs,
    out: &Path,
) -> Result<nmrqc::readout::Spectrum> {
    let detect: Vec<&str> = acq.detect.iter().map(String::as_str).collect();
    let t2 = (acq.t2 > 0.0).then_some(acq.t2);
    let fid = acquire_fid(rho, sys, &detect, acq.points, acq.dwell, t2)?;
    let spec = fid.spectrum(acq.receiver_phase_deg.to_radians());
    create_dir(out)?;
    fid.save_csv(out.join("fid.csv"))?;
    spec.save_csv(out.join("spectrum.csv"))?;
    println!(
        "wrote {} and {} ({} points, {:.4} Hz resolution)",
        out.join("fid.csv").display(),
        out.join("spectrum.csv").display(),
        spec.len(),
        spec.resolution_hz()
    );
    Ok(spec)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let sys = load_system(&args.system)?;
    let seq = load_sequence(args.sequence.as_deref(), &sys)?;
    let rho = run_sequence(&sys, &seq)?;
    let expansion = rho.to_expansion(args.prune)?;
    println!(
        "sequence {} ({} events) on {} spins",
        seq.name,
        seq.len(),
        sys.len()
    );
    println!("rho = {}", expansion.format(&sys.labels()));
    if !args.acq.detect.is_empty() {
        write_spectrum(
            &sys,
            &rho,
            &args.acq,
            args.out.as_deref().unwrap_or(Path::new(".")),
        )?;
    }
    Ok(())
}

fn power(u: &Matrix, k: u32) -> Matrix {
    let mut acc = Matrix::eye(u.nrows());
    for _ in 0..k {
        acc = u.dot(&acc);
    }
    acc
}

fn describe(level: &EquivalenceLevel, reference: &str) -> String {
    match level {
        EquivalenceLevel::GlobalPhase { deviation } => {
            format!("global-phase-equivalent to {reference}, deviation {deviation:.1e}")
        }
        EquivalenceLevel::DiagonalPhase { deviation } => {
            format!("diagonal-phase-equivalent to {reference}, deviation {deviation:.1e}")
        }
        EquivalenceLevel::Inequivalent { global, diagonal } => format!(
            "not equivalent to {reference} (global-phase deviation {global:.1e}, diagonal-phase deviation {diagonal:.1e})"
        ),
    }
}

fn cmd_verify_gate(args: VerifyArgs) -> Result<()> {
    let full = load_system(&args.system)?;
    let PairArgs { control, target, n } = &args.pair;
    let mut params = GateParams::new(control.as_str(), target.as_str(), *n);
    if let Some(phi) = args.phi_deg {
        params = params.with_phi(phi.to_radians());
    }
    params.validate()?;
    if args.power == 0 {
        bail!("--power must be at least 1");
    }
    let sys = full.subsystem(&[control, target])?;
    let k = args.power;

    let z = compile_unitary(&composite_z(&params, &sys)?, &sys)?;
    let z_level = EquivalenceLevel::classify(
        &z,
        &cphase(2, 0, 1, std::f64::consts::PI / *n as f64),
        args.tol,
    )?;
    println!(
        "composite z {control},{target} n={n}: {}",
        describe(&z_level, &format!("CPHASE(pi/{n})"))
    );

    let gate = power(
        &compile_unitary(&controlled_root_not(&params, &sys)?, &sys)?,
        k,
    );
    let (reference, name) = if k.is_multiple_of(*n) {
        (
            power(&cnot(2, 0, 1), k / n),
            if k / n == 1 {
                "CNOT".to_string()
            } else {
                format!("CNOT^{}", k / n)
            },
        )
    } else {
        (
            controlled_root_x(2, 0, 1, *n, k),
            format!("controlled X^({k}/{n})"),
        )
    };
    let level = EquivalenceLevel::classify(&gate, &reference, args.tol)?;
    let label = if k == 1 {
        format!("n={n}")
    } else {
        format!("(n={n})^{k}")
    };
    println!(
        "controlled-root-not {control}->{target} {label}: {}",
        describe(&level, &name)
    );
    if !level.holds() {
        return Err(CheckFailed(format!("gate is not equivalent to {name}")).into());
    }
    Ok(())
}

fn cmd_phase(args: PhaseArgs) -> Result<()> {
    let sys = load_system(&args.system)?;
    let err = args.err.model()?;
    let PairArgs { control, target, n } = &args.pair;
    let est = measure_phase(&sys, control, target, *n, args.phi_deg.to_radians(), err)?;
    println!(
        "setting {:.3} deg, n={n}, {control}->{target}",
        args.phi_deg
    );
    println!("sin signal (x readout) {:.6}", est.sin_signal);
    println!("cos signal (y readout) {:.6}", est.cos_signal);
    println!("phi_exp {:.4} deg", est.phi_deg);
    Ok(())
}

const TABLE_HEADER: &str = "phi_the  sin_signal  cos_signal     tan_phi  phi_exp  rel_err_%";

fn table_row(phi_the: f64, est: &PhaseEstimate) -> String {
    let tan = est.sin_signal / est.cos_signal;
    format!(
        "{:>7.1}  {:>10.4}  {:>10.4}  {:>10.3}  {:>7.1}  {:>9.1}",
        phi_the,
        est.sin_signal,
        est.cos_signal,
        tan,
        est.phi_deg,
        relative_error_percent(est.phi_deg, phi_the)
    )
}

fn cmd_calibrate_offline(path: &Path, magnitude_only: bool) -> Result<()> {
    let rows = load_signal_records(path).with_context(|| format!("reading {}", path.display()))?;
    let mode = if magnitude_only {
        "magnitude-only quadrants"
    } else {
        "signed quadrants"
    };
    println!("offline estimates from {} ({mode})", path.display());
    println!("{TABLE_HEADER}  reported");
    for row in rows {
        let est = if magnitude_only {
            estimate_phase_magnitude_only(row.sin_signal, row.cos_signal, row.phi_the_deg)?
        } else {
            estimate_phase(row.sin_signal, row.cos_signal)?
        };
        let reported = match (row.phi_exp_deg, row.relative_error_pct) {
            (Some(p), Some(e)) => format!("  {p:.1} ({e:.1}%)"),
            (Some(p), None) => format!("  {p:.1}"),
            _ => String::new(),
        };
        println!("{}{reported}", table_row(row.phi_the_deg, &est));
    }
    Ok(())
}

fn print_history(res: &CalibrationResult) {
    for s in std::iter::once(&res.initial).chain(&res.history) {
        println!(
            "  iteration {}: setting {:.4} deg -> phi_exp {:.4} deg, residual {:+.2e} deg",
            s.iteration, s.phi_setting_deg, s.estimate.phi_deg, s.residual_deg
        );
    }
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    if let Some(path) = &args.offline {
        return cmd_calibrate_offline(path, args.magnitude_only);
    }
    let sys = load_system(args.system.as_deref().expect("clap requires system"))?;
    let err = args.err.model()?;
    let PairArgs { control, target, n } = &args.pair;
    let opts = CalibrationOptions {
        tol_deg: args.tol_deg,
        max_iter: args.max_iter,
    };
    create_dir(&args.out)?;
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut failed = Vec::new();
    for &phi in &args.targets {
        let (res, converged) = match calibrate_phase(&sys, control, target, *n, phi, err, opts) {
            Ok(res) => (res, true),
            Err(nmrqc::Error::NotConverged(res)) => (*res, false),
            Err(e) => return Err(e.into()),
        };
        let csv = args.out.join(format!("calibration_{phi}.csv"));
        res.save_history_csv(&csv)?;
        println!(
            "target {phi} deg: {} after {} iteration(s), residual {:.2e} deg, setting {:.4} deg ({})",
            if converged { "converged" } else { "NOT converged" },
            res.iterations,
            res.residual_deg,
            res.corrected_phi_rad.to_degrees(),
            csv.display()
        );
        print_history(&res);
        if !converged {
            failed.push(phi);
        }
        before.push((phi, res.initial.estimate));
        after.push((
            phi,
            res.history
                .last()
                .map_or(res.initial.estimate, |s| s.estimate),
        ));
    }
    for (title, rows) in [("before correction", &before), ("after correction", &after)] {
        println!("{title}:");
        println!("{TABLE_HEADER}");
        for (phi, est) in rows {
            println!("{}", table_row(*phi, est));
        }
    }
    if !failed.is_empty() {
        return Err(CheckFailed(format!(
            "calibration did not converge for targets {failed:?}"
        ))
        .into());
    }
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<()> {
    if args.acq.detect.is_empty() {
        bail!("--detect is required");
    }
    let sys = load_system(&args.system)?;
    let seq = load_sequence(args.sequence.as_deref(), &sys)?;
    let rho = run_sequence(&sys, &seq)?;
    let spec = write_spectrum(&sys, &rho, &args.acq, &args.out)?;
    for (lo, hi) in args.windows {
        println!("integral {lo}..{hi} Hz: {:.6}", spec.integrate(lo, hi)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::VerifyGate(a) => cmd_verify_gate(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Spectrum(a) => cmd_spectrum(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<CheckFailed>() => {
            eprintln!("check failed: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
