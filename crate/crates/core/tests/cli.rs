use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], config: Option<(&Path, &str)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracwave"));
    cmd.args(args);
    if let Some((path, text)) = config {
        std::fs::write(path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_key_is_a_config_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    let out = run(
        &["dispersion", "--out", dir.path().to_str().unwrap()],
        Some((&cfg, "[medium]\nc = 1\nalpha0 = 0.01\nspeed = 2\ny = 1\n")),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
    assert!(stderr(&out).contains("speed"));
}

#[test]
fn missing_speed_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    let out = run(
        &["dispersion", "--out", dir.path().to_str().unwrap()],
        Some((&cfg, "[medium]\nalpha0 = 0.01\ny = 1\n")),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("medium.c"));
}

#[test]
fn missing_config_flag_and_bad_subcommand() {
    assert_eq!(run(&["dispersion"], None).status.code(), Some(2));
    assert_eq!(run(&["propagate"], None).status.code(), Some(2));
    assert_eq!(run(&["--help"], None).status.code(), Some(0));
}

#[test]
fn spatial_complex_on_dirichlet_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("d.ini");
    let out = run(
        &["simulate", "--out", dir.path().to_str().unwrap()],
        Some((
            &cfg,
            "[medium]\nc = 1\nalpha0 = 0.01\ny = 1\n[grid]\nboundary = dirichlet\nn = 400\n[model]\nname = spatial_complex\n",
        )),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn lossless_attenuation_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("l.ini");
    let out = run(
        &["attenuate", "--out", dir.path().to_str().unwrap()],
        Some((
            &cfg,
            "[medium]\nc = 1\nalpha0 = 0\ny = 1\n[model]\nname = lossless\n",
        )),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("nonpositive alpha"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn dispersion_csv_layout_and_fit_footer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.ini");
    let out = run(
        &["dispersion", "--out", dir.path().to_str().unwrap()],
        Some((&cfg, "[medium]\nc = 1\nalpha0 = 0.01\ny = 1\n")),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# fracwave dispersion"));
    assert!(text.contains("# medium.alpha0 = 0.01\n"));
    assert!(text.contains("\nomega,k_re,k_im,alpha,phase_speed\n"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 51);
    let y_hat: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# y_hat = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.98..=1.02).contains(&y_hat));
}

#[test]
fn lossless_dispersion_reports_zero_alpha_and_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("l.ini");
    let out = run(
        &["dispersion", "--out", dir.path().to_str().unwrap()],
        Some((
            &cfg,
            "[medium]\nc = 1\nalpha0 = 0\ny = 1\n[model]\nname = lossless\n",
        )),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
    assert!(text.contains("# fit_error = "));
    for row in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        assert_eq!(row.split(',').nth(3), Some("0.0000000000000000e0"));
    }
}

#[test]
fn tolerance_flag_sets_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.ini");
    let text = "[medium]\nc = 1\nalpha0 = 0.01\ny = 0.5\n[model]\nname = spatial_complex\n";
    let out_dir = dir.path().to_str().unwrap();
    let pass = run(&["attenuate", "--out", out_dir], Some((&cfg, text)));
    assert_eq!(pass.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&pass.stdout).contains("PASS"));
    let fail = run(
        &["attenuate", "--out", out_dir, "--tolerance", "1e-6"],
        Some((&cfg, text)),
    );
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL"));
}

#[test]
fn operators_on_three_point_dirichlet_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("o.ini");
    let out = run(
        &["operators", "--out", dir.path().to_str().unwrap()],
        Some((
            &cfg,
            "[medium]\nc = 1\nalpha0 = 0\ny = 1\n[grid]\nn = 3\nh = 1\nboundary = dirichlet\n[experiment]\noperator_r = 0\n",
        )),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let eig = std::fs::read_to_string(dir.path().join("operator_eigenvalues.csv")).unwrap();
    let values: Vec<f64> = eig
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let s2 = 2f64.sqrt();
    for (v, e) in values.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
        assert!((v - e).abs() < 1e-12);
    }
    let report = std::fs::read_to_string(dir.path().join("operator_report.csv")).unwrap();
    let identity: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("pow_minus_identity,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(identity < 1e-12);
}
