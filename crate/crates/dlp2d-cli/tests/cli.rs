//! End-to-end checks of the binary: file outputs, determinism, exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dlp2d"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("missing {name}"))
}

#[test]
fn solve_writes_report_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "solve",
            "--geometry",
            "moderate",
            "--n",
            "256",
            "--precond",
            "ulist",
            "--leaf",
            "8",
            "--out",
        ])
        .arg(dir.path())
        .arg("--dump-geometry")
        .status()
        .unwrap();
    assert!(status.success());
    let report = read(dir.path(), "report.csv");
    assert!(report.starts_with(
        "geometry,n,preconditioner,rhs,tol,iterations,converged,relres,scaled_matvecs\n"
    ));
    assert!(report.contains("moderate,256,ulist"));
    let residuals = read(dir.path(), "residuals.csv");
    assert!(residuals.starts_with("iter,relres\n"));
    let geometry = read(dir.path(), "geometry.csv");
    assert!(geometry.starts_with("j,theta,x,y,nx,ny,kappa,jac\n"));
    assert_eq!(geometry.lines().count(), 257);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let status = bin()
            .args([
                "solve",
                "--geometry",
                "flower",
                "--lobes",
                "4",
                "--n",
                "128",
                "--rhs",
                "random",
                "--seed",
                "11",
                "--precond",
                "two-grid-picard",
                "--nmin",
                "32",
                "--out",
            ])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
        (
            read(dir.path(), "report.csv"),
            read(dir.path(), "residuals.csv"),
        )
    };
    let a = run();
    let b = run();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

#[test]
fn config_errors_exit_with_2() {
    for args in [
        vec!["solve", "--geometry", "heptagon"],
        vec!["solve", "--n", "100"],
        vec!["solve", "--precond", "frobnicate"],
        vec!["solve", "--precond", "two-grid-picard", "--n", "64", "--nmin", "48"],
        vec!["table", "no-such-table"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(2),
            "args {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn non_convergence_exits_with_3() {
    // a tolerance no solver reaches in one allowed iteration
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "solve",
            "--geometry",
            "flower",
            "--lobes",
            "8",
            "--n",
            "512",
            "--tol",
            "1e-30",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_reproduces_harmonic_data() {
    let dir = tempfile::tempdir().unwrap();
    let targets = dir.path().join("targets.csv");
    std::fs::write(&targets, "x,y\n0.1,0.05\n-0.2,0.1\n").unwrap();
    let status = bin()
        .args(["eval", "--geometry", "simple", "--n", "128", "--targets"])
        .arg(&targets)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let eval = read(dir.path(), "eval.csv");
    let mut lines = eval.lines();
    assert_eq!(lines.next().unwrap(), "x,y,u");
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let want = 0.1f64 * 0.1 - 0.05 * 0.05 + 0.5 * 0.1;
    assert!((row[2] - want).abs() < 1e-5, "u = {}, want {want}", row[2]);
}

#[test]
fn smoother_spectrum_table_runs() {
    // the one table cheap enough for an integration test
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["table", "smoother-spectrum", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(dir.path(), "smoother-spectrum.csv");
    assert!(csv.starts_with("n,mode,picard,pd,p0,p1\n"));
    // 128 + 512 + 2048 mode rows
    assert_eq!(csv.lines().count(), 1 + 128 + 512 + 2048);
}
