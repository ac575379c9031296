use std::path::Path;
use std::process::{Command, Output};

fn aavf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aavf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_run<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["--two-m", "16", "--t-end", "2", "--sample-every", "5", "--out", out];
    args.extend_from_slice(extra);
    args
}

#[test]
fn help_and_version_exit_zero() {
    let o = aavf(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("--quadrature"));
    assert_eq!(code(&aavf(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&aavf(&["--bogus"])), 1);
    assert_eq!(code(&aavf(&["--h", "abc"])), 1);
    assert_eq!(code(&aavf(&["--two-m", "127"])), 1);
    assert_eq!(code(&aavf(&["--quadrature", "simpson"])), 1);
    assert_eq!(code(&aavf(&["--t-end", "-1"])), 1);
}

#[test]
fn small_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let out_s = out.to_str().unwrap();
    let o = aavf(&small_run(out_s, &["--quadrature", "exact"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rows=9"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert_eq!(text.lines().next().unwrap(), "t,H,dH_rel,K,Khat,errK,errMK,errI,errMI");

    let again = dir.path().join("again.csv");
    let o = aavf(&small_run(again.to_str().unwrap(), &["--quadrature", "exact"]));
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("run.csv");
    std::fs::write(
        &cfg,
        format!(
            "two_m = 16\nt_end = 1\nh = 0.1\nsample_every = 1\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = aavf(&["--config", cfg.to_str().unwrap(), "--h", "0.25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // t_end = 1 at h = 0.25 gives 4 steps
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 6);

    std::fs::write(&cfg, "two_m = 15\n").unwrap();
    assert_eq!(code(&aavf(&["--config", cfg.to_str().unwrap()])), 1);
    assert_eq!(code(&aavf(&["--config", dir.path().join("none.cfg").to_str().unwrap()])), 3);
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("run.csv");
    assert_eq!(code(&aavf(&small_run(out.to_str().unwrap(), &[]))), 3);
}

#[test]
fn solver_failure_exits_two_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = aavf(&small_run(
        out.to_str().unwrap(),
        &["--g-poly", "-50", "--fp-max-iters", "2"],
    ));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("at step 1"));
}

#[test]
fn resonant_step_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let h = format!("{}", 2.0 * std::f64::consts::PI / 1.5f64.sqrt());
    let o = aavf(&[
        "--two-m", "8", "--h", &h, "--t-end", "20", "--sample-every", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with("NaN"));
}

#[test]
fn trend_on_existing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&aavf(&small_run(out_s, &[]))), 0);
    let o = aavf(&["--trend-csv", out_s, "--trend-split", "0.5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("errMI: early_max="));
    assert!(text.contains("median_errMK_le_errK: "));
    assert_eq!(code(&aavf(&["--trend-csv", out_s])), 1);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not,a,csv\n").unwrap();
    assert_eq!(code(&aavf(&["--trend-csv", bad.to_str().unwrap(), "--trend-split", "1"])), 1);
}

#[test]
fn run_with_trend_split_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = aavf(&small_run(out.to_str().unwrap(), &["--trend-split", "0.5"]));
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("modified_trend: "));
}

#[test]
fn semi_discrete_check_writes_second_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let o = aavf(&small_run(out.to_str().unwrap(), &["--semi-discrete-check"]));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("# semi-discrete proxy: h/16"));
    let fine = std::fs::read_to_string(dir.path().join("run_semi_discrete.csv")).unwrap();
    // same sampled times as the coarse run
    assert_eq!(fine.lines().count(), 10);
}

#[test]
fn resonance_report() {
    let o = aavf(&["--resonance-report", "--res-n", "1", "--res-m", "2", "--res-epsilon", "0.01"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("epsilon: 1e-2"));
    assert!(text.contains("numerical_nonres_0: pass"));
    assert!(text.contains("verdict: "));
    assert_eq!(text, stdout(&aavf(&["--resonance-report", "--res-n", "1", "--res-m", "2", "--res-epsilon", "0.01"])));
    let o = aavf(&["--resonance-report", "--res-n", "2", "--res-m", "12"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_runs_each_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let sweep = dir.path().join("sweep.txt");
    std::fs::write(
        &sweep,
        format!("out={} h=0.1\n# comment\nout={} h=0.05 quadrature=exact\n", a.display(), b.display()),
    )
    .unwrap();
    let o = aavf(&["--two-m", "16", "--t-end", "1", "--sample-every", "1", "--sweep", sweep.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 12);
    assert_eq!(std::fs::read_to_string(&b).unwrap().lines().count(), 22);
    assert!(Path::new(&b).exists());

    std::fs::write(&sweep, format!("out={0}\nout={0}\n", a.display())).unwrap();
    assert_eq!(code(&aavf(&["--sweep", sweep.to_str().unwrap()])), 1);
}
