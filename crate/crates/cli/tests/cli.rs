use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn nmrqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmrqc"))
        .args(args)
        .output()
        .expect("run nmrqc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn system() -> String {
    data("crotonic.toml").display().to_string()
}

#[test]
fn simulate_prints_antiphase_term() {
    let o = nmrqc(&[
        "simulate",
        &system(),
        data("phase_n2_phi90.seq").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(
        stdout(&o).contains("0.707·2Ix^{C2}Iz^{C1}"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn simulate_without_sequence_is_thermal() {
    let o = nmrqc(&["simulate", &system()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.contains("1.000·Iz^{C1}") && out.contains("3.976·Iz^{H1}"),
        "{out}"
    );
    assert!(!out.contains("Ix"));
}

#[test]
fn verify_gate_reports_equivalence() {
    let o = nmrqc(&[
        "verify-gate",
        &system(),
        "--control",
        "C1",
        "--target",
        "C2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("global-phase-equivalent to CNOT"),
        "{}",
        stdout(&o)
    );

    let o = nmrqc(&["verify-gate", &system(), "-n", "2", "--power", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("global-phase-equivalent to CNOT"));

    let o = nmrqc(&["verify-gate", &system(), "-n", "2"]);
    assert!(stdout(&o).contains("global-phase-equivalent to controlled X^(1/2)"));
}

#[test]
fn verify_gate_off_default_phi_fails_check() {
    let o = nmrqc(&["verify-gate", &system(), "-n", "2", "--phi-deg", "60"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("diagonal-phase-equivalent to CPHASE"), "{out}");
    assert!(
        out.contains("not equivalent to controlled X^(1/2)"),
        "{out}"
    );
}

#[test]
fn usage_errors_exit_2() {
    let o = nmrqc(&[
        "verify-gate",
        &system(),
        "--control",
        "C1",
        "--target",
        "C1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("C1"));

    assert_eq!(
        nmrqc(&["simulate", "/nonexistent/system.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nmrqc(&["simulate", &system(), "/nonexistent.seq"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(nmrqc(&["bogus"]).status.code(), Some(2));
}

#[test]
fn phase_reports_both_readouts() {
    let o = nmrqc(&["phase", &system(), "-n", "2", "--phi-deg", "90"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("sin signal (x readout) 0.707107"), "{out}");
    assert!(out.contains("phi_exp 90.0000 deg"), "{out}");
}

#[test]
fn offline_table_reproduces_reported_estimates() {
    let csv = data("table1.csv");
    let o = nmrqc(&["calibrate", "--offline", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = |phi: &str| {
        out.lines()
            .find(|l| l.trim_start().starts_with(phi))
            .unwrap()
            .to_string()
    };
    assert!(row("90.0").contains("88.9") && row("90.0").contains("1.3"));
    assert!(row("180.0").contains("174.9") && row("180.0").contains("2.9"));

    let o = nmrqc(&[
        "calibrate",
        "--offline",
        csv.to_str().unwrap(),
        "--magnitude-only",
    ]);
    let out = stdout(&o);
    let row = out
        .lines()
        .find(|l| l.trim_start().starts_with("270.0"))
        .unwrap();
    assert!(row.split_whitespace().nth(4) == Some("267.1"), "{row}");
}

#[test]
fn calibrate_writes_histories() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrqc(&[
        "calibrate",
        &system(),
        "-n",
        "2",
        "--targets",
        "90,180",
        "--z-offset-deg",
        "5",
        "--flip-scale",
        "0.95",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    for phi in [90, 180] {
        let text =
            std::fs::read_to_string(dir.path().join(format!("calibration_{phi}.csv"))).unwrap();
        assert!(text.starts_with("iteration,phi_setting_deg,phi_exp_deg,residual_deg\n0,"));
        assert!(text.lines().count() >= 3);
    }
    assert!(stdout(&o).contains("after correction"));
}

#[test]
fn calibrate_non_convergence_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrqc(&[
        "calibrate",
        &system(),
        "-n",
        "2",
        "--targets",
        "90",
        "--z-offset-deg",
        "10",
        "--flip-scale",
        "0.9",
        "--max-iter",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("NOT converged"));
    assert!(dir.path().join("calibration_90.csv").exists());
}

#[test]
fn spectrum_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmrqc(&[
        "spectrum",
        &system(),
        data("phase_n2_phi90.seq").to_str().unwrap(),
        "--detect",
        "C2",
        "--points",
        "1024",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let fid = std::fs::read_to_string(dir.path().join("fid.csv")).unwrap();
    let spec = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(fid.starts_with("time_s,real,imag\n"));
    assert!(spec.starts_with("frequency_hz,real,imag\n"));
    assert_eq!(fid.lines().count(), 1025);
    assert_eq!(spec.lines().count(), 1025);

    assert_eq!(
        nmrqc(&["spectrum", &system(), "--out", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
