//! End-to-end checks of the command-line surface: schemas, exit codes,
//! metadata, and output formats.

use std::process::Command;

fn invmean(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_invmean"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn curve_csv_schema_and_metadata() {
    let out = invmean(&[
        "curve", "--model", "bernoulli:0.001", "--wmin", "0.02", "--wmax", "1.98", "--points",
        "99", "--seed", "7",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();

    // metadata header
    assert!(lines.next().unwrap().starts_with("# invmean "));
    assert!(text.contains("# generator=pcg64-xsl-rr-128-64/splitmix64-streams-v1"));
    assert!(text.contains("# seed=7"));
    assert!(text.contains("# command=curve"));
    assert!(text.contains("# model=bernoulli:0.001"));

    let header = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .expect("header row");
    assert_eq!(header, "w,p_w,expected_cost,variance,rel_variance,tvp_rel");

    let data_rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty() && *l != header)
        .collect();
    assert_eq!(data_rows.len(), 99);

    // 17-significant-digit rendering: re-formatting each parsed cell must
    // reproduce the emitted text exactly.
    for row in &data_rows {
        for cell in row.split(',') {
            let value: f64 = cell.parse().unwrap();
            assert_eq!(format!("{value:.16e}"), cell, "cell {cell}");
        }
    }
}

#[test]
fn json_document_round_trips() {
    let out = invmean(&[
        "curve", "--model", "uniform:2.0", "--wmin", "0.1", "--wmax", "1.2", "--points", "4",
        "--json",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["meta"]["command"], "curve");
    assert_eq!(doc["meta"]["params"]["model"], "uniform:2.0");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    assert!(doc["rows"][0]["p_w"].as_f64().unwrap() > 0.0);
}

#[test]
fn estimate_single_draw_leaves_variance_empty() {
    let out = invmean(&[
        "estimate", "--model", "bernoulli:0.5", "--w", "0.5", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let data = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    // columns: w,p_w,reps,mean,sample_variance,standard_error,...
    assert_eq!(data[2], "1");
    assert!(data[4].is_empty(), "sample_variance should be empty: {data:?}");
    assert!(data[5].is_empty(), "standard_error should be empty: {data:?}");
}

#[test]
fn usage_errors_exit_one() {
    let out = invmean(&["curve", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    let out = invmean(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));

    let out = invmean(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn malformed_model_specs_exit_one_with_position() {
    let out = invmean(&[
        "curve", "--model", "bernoulli:oops", "--wmin", "0.1", "--wmax", "0.9", "--points", "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("position 10"), "stderr: {err}");

    let out = invmean(&[
        "estimate", "--model", "gamma:1.0", "--w", "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn infeasible_weight_reports_the_interval() {
    let out = invmean(&[
        "estimate", "--model", "bernoulli:0.5", "--w", "2.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("feasibility interval"), "stderr: {err}");
}

#[test]
fn validate_suites_run_clean() {
    let out = invmean(&["validate", "--suite", "sandwich", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ok   - sandwich"));
    assert!(text.contains("0 failed"));

    let out = invmean(&["validate", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
}
