use std::fs;

use percolab::cli::{run, EXIT_CONFIG, EXIT_OK};

fn percolab(dir: &std::path::Path, args: &[&str]) -> i32 {
    let mut argv = vec!["percolab", "--out", dir.to_str().unwrap(), "--workers", "1"];
    argv.extend_from_slice(args);
    run(argv)
}

#[test]
fn an_table_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(percolab(dir.path(), &["an-table", "--nmax", "3", "--z", "0.5"]), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("an_table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,z,direct,closed,reflected"));
    assert_eq!(lines.count(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("an_table.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "an_table");
    assert_eq!(manifest["workers"], 1);
}

#[test]
fn tau_rows_carry_the_run_metadata() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(percolab(dir.path(), &["--seed", "9", "tau", "--n", "1,2", "--p", "0,1", "--trials", "200"]), EXIT_OK);
    let mut rdr = csv::Reader::from_path(dir.path().join("tau.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["quantity", "n", "p", "mean", "ci_low", "ci_high", "trials", "region", "seed"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(&r[8], "9");
        assert_eq!(&r[6], "200");
        assert_eq!(r[3].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap());
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "d = 4\nseed = 3\ntrials = 100\nn = [1]\np = [0.5]\n").unwrap();
    assert_eq!(percolab(dir.path(), &["--config", cfg.to_str().unwrap(), "--seed", "11", "tau"]), EXIT_OK);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("tau.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["d"], 4);
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["config"]["trials"], 100);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(percolab(dir.path(), &["--d", "2", "an-table"]), EXIT_CONFIG);
    assert_eq!(percolab(dir.path(), &["tau", "--p", "1.5"]), EXIT_CONFIG);
    assert_eq!(percolab(dir.path(), &["no-such-command"]), EXIT_CONFIG);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    assert_eq!(percolab(dir.path(), &["--config", bad.to_str().unwrap(), "an-table"]), EXIT_CONFIG);
    // The target lies outside the ball.
    assert_eq!(percolab(dir.path(), &["tau", "--n", "4", "--k", "2", "--trials", "10"]), EXIT_CONFIG);
    assert_eq!(run(["percolab", "--help"]), EXIT_OK);
}

#[test]
fn verify_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(percolab(dir.path(), &["verify", "--suite", "combinatorics"]), EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn pc_json_has_the_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(percolab(dir.path(), &["--d", "6", "pc", "--method", "alpha", "--tol", "0.02", "--trials", "3000"]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("pc.json")).unwrap()).unwrap();
    for key in ["d", "method", "interval", "probes", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let iv = v["interval"].as_array().unwrap();
    assert!(iv[1].as_f64().unwrap() - iv[0].as_f64().unwrap() <= 0.02 + 1e-12);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("pc.manifest.json")).unwrap()).unwrap();
    assert!(manifest["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn oracle_rejects_unknown_instances() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(percolab(dir.path(), &["oracle", "--instance", "nope"]), EXIT_CONFIG);
    assert_eq!(percolab(dir.path(), &["oracle", "--instance", "single-edge", "--p", "0.25"]), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(v[0]["events"][0]["probabilities"][0][1], 0.25);
}

#[test]
fn errors_map_to_documented_exit_codes() {
    use percolab::cli::{exit_code, EXIT_RESOURCE, EXIT_UNDECIDED};
    use percolab::error::Error;
    assert_eq!(exit_code(&Error::Config(String::new())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::Domain(String::new())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::Resource(String::new())), EXIT_RESOURCE);
    assert_eq!(exit_code(&Error::Io(String::new())), EXIT_RESOURCE);
    assert_eq!(exit_code(&Error::Undecided(String::new())), EXIT_UNDECIDED);
    assert_eq!((EXIT_RESOURCE, EXIT_UNDECIDED), (3, 4));
}
