//! Long run of the semi-discrete proxy (`h/16`, 3.2e6 steps) on the default
//! configuration; about a minute in release-level test builds.

use std::io::Write as _;

use aavf_core::harness::{semi_discrete_check, RunConfig};

#[test]
fn unmodified_drift_is_bounded_for_fine_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_path: dir.path().join("preset.csv"),
        ..Default::default()
    };
    let (summary, report) = semi_discrete_check(&cfg, 2500.0).unwrap();
    let _ = writeln!(std::io::stderr(), "{summary}\n{}", report.to_text());
    assert_eq!(summary.rows, cfg.expected_rows());
    assert!(report.unmodified_bounded());
}
