use std::path::PathBuf;
use std::process::{Command, Output};

fn coordgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coordgame")).args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = coordgame(args);
    assert!(out.status.success(), "{:?} failed: {}", args, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn records(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {} in {:?}", name, header))
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn hitting_time_reruns_are_byte_identical() {
    let args = [
        "hitting-time", "--n", "5", "--adversary", "mi:balanced", "--k", "2", "--alpha", "0.3", "--beta", "2",
        "--seed", "11", "--replicas", "8",
    ];
    let first = stdout_of(&args);
    assert_eq!(first, stdout_of(&args));
    let (header, rows) = records(&first);
    for name in ["replica", "steps", "censored"] {
        column(&header, name);
    }
    assert_eq!(rows.len(), 8);
    let replica = column(&header, "replica");
    assert!(rows.iter().enumerate().all(|(i, r)| r[replica] == i.to_string()));

    let mut other = args.to_vec();
    other[12] = "12";
    assert_ne!(first, stdout_of(&other));
}

#[test]
fn simulate_is_reproducible_and_labels_agents_from_one() {
    let args = [
        "simulate", "--n", "4", "--adversary", "fi:0", "--alpha", "1/5", "--beta", "1", "--seed", "3", "--steps", "50",
    ];
    let out = stdout_of(&args);
    assert_eq!(out, stdout_of(&args));
    let (header, rows) = records(&out);
    assert_eq!(rows.len(), 51);
    let (updater, influence) = (column(&header, "updater"), column(&header, "influence"));
    for r in &rows[1..] {
        let u: usize = r[updater].parse().unwrap();
        assert!((1..=4).contains(&u));
        assert_eq!(r[influence], "{1}");
    }
}

#[test]
fn stationary_rows_carry_configuration() {
    let out = stdout_of(&[
        "stationary", "--n", "3", "--adversary", "fi:even", "--adversary", "ur", "--k", "1", "--alpha", "1/4,3/8",
        "--beta", "0,4",
    ]);
    let (header, rows) = records(&out);
    for name in ["graph", "beta", "alpha", "adversary", "k", "expected_fraction_y"] {
        column(&header, name);
    }
    assert_eq!(rows.len(), 8);
    let (beta, frac) = (column(&header, "beta"), column(&header, "expected_fraction_y"));
    for r in &rows {
        let f: f64 = r[frac].parse().unwrap();
        if r[beta] == "0.0" {
            assert!((f - 0.5).abs() < 1e-12);
        }
        assert!((0.0..=1.0).contains(&f));
    }
}

#[test]
fn exact_hitting_columns() {
    let out = stdout_of(&["exact-hitting", "--n", "4", "--adversary", "ur", "--k", "1,3", "--alpha", "0.2", "--beta", "2"]);
    let (header, rows) = records(&out);
    assert_eq!(rows.len(), 2);
    let t = column(&header, "hitting_time");
    for name in ["k", "alpha", "adversary"] {
        column(&header, name);
    }
    assert!(rows.iter().all(|r| r[t].parse::<f64>().unwrap() > 1.0));
}

#[test]
fn ss_set_json_flips_around_mobile_threshold() {
    let report = |alpha: &str| -> serde_json::Value {
        let out = stdout_of(&["ss-set", "--n", "6", "--adversary", "mi:balanced", "--k", "2", "--alpha", alpha]);
        serde_json::from_str(&out).unwrap()
    };
    let below = report("13/20");
    for key in ["classes", "gamma", "stable", "strict"] {
        assert!(below.get(key).is_some(), "missing {}", key);
    }
    assert_eq!(below["stable"], serde_json::json!(["yyyyyy"]));
    assert_eq!(below["strict"], true);
    let above = report("7/10");
    assert_eq!(above["stable"], serde_json::json!(["xxxxxx"]));
}

#[test]
fn fig2_fixed_rows_are_exact() {
    let out = stdout_of(&["fig2", "--n", "6"]);
    let (header, rows) = records(&out);
    let (k, ty, s) = (column(&header, "k"), column(&header, "type"), column(&header, "susceptibility"));
    assert_eq!(rows.len(), 3 * 5);
    for r in rows.iter().filter(|r| r[ty] == "FI") {
        let k: f64 = r[k].parse().unwrap();
        assert!((r[s].parse::<f64>().unwrap() - k / 6.0).abs() < 1e-12);
    }
}

#[test]
fn fig4_columns_and_order() {
    let out = stdout_of(&["fig4", "--n", "5", "--k", "1,2", "--alpha", "0.2,0.4"]);
    let (header, rows) = records(&out);
    for name in ["type", "k", "alpha", "hitting_time", "method"] {
        column(&header, name);
    }
    let ty = column(&header, "type");
    let types: Vec<&str> = rows.iter().map(|r| r[ty].as_str()).collect();
    assert_eq!(types, ["FI", "FI", "FI", "FI", "UR", "UR", "UR", "UR", "MI", "MI", "MI", "MI"]);
}

#[test]
fn config_file_with_flag_override() {
    let config = scratch("fig3.toml");
    let output = scratch("fig3.csv");
    std::fs::write(&config, "experiment = \"fig3\"\nalphas = [\"1/4\"]\nbetas = [0.0, 1.0, 2.0]\n").unwrap();
    let config = config.to_str().unwrap();
    let out = coordgame(&["run", "--config", config, "--beta", "3", "--output", output.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = records(&std::fs::read_to_string(&output).unwrap());
    let beta = column(&header, "beta");
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[beta] == "3.0"));
}

#[test]
fn verify_theorems_reports_json() {
    let out = stdout_of(&["verify-theorems", "--ns", "5", "--random-graphs", "2", "--seed", "4"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["failed"], 0);
    assert!(v["passed"].as_u64().unwrap() > 10);
}

#[test]
fn bad_input_exits_with_status_two() {
    let cases: [&[&str]; 4] = [
        &["ss-set", "--n", "4", "--adversary", "xx", "--k", "1", "--alpha", "1"],
        &["ss-set", "--n", "4", "--adversary", "ur", "--alpha", "1"],
        &["stationary", "--n", "4", "--adversary", "ur", "--k", "1", "--alpha", "-1", "--beta", "1"],
        &["hitting-time", "--n", "4", "--adversary", "ur", "--k", "1", "--alpha", "1", "--beta", "1"],
    ];
    for args in cases {
        let out = coordgame(args);
        assert_eq!(out.status.code(), Some(2), "{:?}", args);
    }
}
