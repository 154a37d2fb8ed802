use std::process::{Command, Output};

fn tfns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfns"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn weights_csv() {
    let o = tfns(&["weights", "--alpha", "0.5", "--count", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,w_k,partial_sum");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1], "0,1.0,1.0");
    let last: Vec<f64> = lines[3].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[2] - 3f64.sqrt()).abs() < 1e-14);
}

#[test]
fn run_writes_diagnostics_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = tfns(&[
        "run", "--alpha", "0.6", "--n", "2", "--nt", "3", "--format", "csv",
        "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("n,t_n,picard_iters,linear_residual,u_norm,div_norm\n"));
    assert_eq!(diag.lines().count(), 4);
    let fields = std::fs::read_to_string(out.join("fields_final.csv")).unwrap();
    assert_eq!(fields.lines().count(), 10);
    assert!(out.join("fields_initial.csv").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    std::fs::write(
        &cfg,
        format!("# study\nalpha = 0.4\nn = 2\nnt = 5\nformat = vtk\nout_dir = {}\n", out.display()),
    )
    .unwrap();
    let o = tfns(&["run", "--config", cfg.to_str().unwrap(), "--nt", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 3);
    assert!(out.join("fields_final.vtk").exists());
}

#[test]
fn space_study_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfns(&[
        "converge-space", "--levels", "2,4", "--tau-override", "0.5",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("report_space.csv")).unwrap();
    assert_eq!(report, stdout(&o));
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "level,h_or_tau,err_u1,err_u2,err_p,rate_u1,rate_u2,rate_p");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[2].split(',').count(), 8);
}

#[test]
fn time_study_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = tfns(&[
        "converge-time", "--steps", "2,4", "--n", "2", "--time-reference", "exact",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("report_time.csv").exists());
}

#[test]
fn invalid_input_exits_nonzero() {
    let o = tfns(&["run", "--alpha", "1.5", "--n", "2", "--nt", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(!tfns(&["converge-space", "--tau-override", "0.3"]).status.success());
    assert!(!tfns(&["run", "--config", "/nonexistent/file.cfg"]).status.success());
    assert!(!tfns(&["weights", "--alpha", "0.5", "--count", "0"]).status.success());
    assert!(!tfns(&["run", "--format", "png"]).status.success());
}
