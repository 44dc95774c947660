use std::process::{Command, Output};

fn foresight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foresight"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = foresight(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

const SMALL_BOUNDS: [&str; 14] = [
    "--n-steps",
    "40",
    "--a-over-h",
    "2,4",
    "--bins",
    "20",
    "--samples-per-bin",
    "20",
    "--lower-paths",
    "500",
    "--upper-paths",
    "50",
    "--sub-paths",
    "5",
];

#[test]
fn formulas_prints_named_values() {
    let text = stdout(&["formulas", "--a", "0.04", "--eta", "1", "--q", "-0.2"]);
    let get = |key: &str| -> f64 {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{key} = ")))
            .unwrap();
        line.split(" = ").nth(1).unwrap().parse().unwrap()
    };
    assert_eq!(get("a"), 0.04);
    assert!((get("nu") - (get("nu_a") + get("nu_alpha"))).abs() < 1e-12);
    assert!((get("k") - 1.358546123595993).abs() < 1e-12);
}

#[test]
fn qstar_solves_the_fixed_point() {
    let text = stdout(&["qstar", "--a", "0.04", "--eta", "1,10"]);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "eta,q_star,k_star");
    assert_eq!(lines[1], "1,-0.354921365977,1.426068512368");
    for row in &lines[1..] {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - (-v[1]).exp()).abs() < 1e-9);
    }
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        &["formulas", "--a", "-1"][..],
        &["bounds", "--a-over-h", "3-1"],
        &["qstar", "--eta", "x"],
        &["rules", "--series-rule", "3"],
    ] {
        assert_eq!(foresight(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# overrides\na = 0.04\neta = 10\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = stdout(&["formulas", "--config", p, "--q", "-0.2"]);
    assert!(from_file.contains("eta = 1.000000000000000e1"));
    let flag_wins = stdout(&["formulas", "--config", p, "--eta", "1", "--q", "-0.2"]);
    assert!(flag_wins.contains("eta = 1.000000000000000e0"));

    std::fs::write(&path, "bins = 10\n").unwrap();
    assert_eq!(
        foresight(&["formulas", "--config", p]).status.code(),
        Some(2)
    );
}

#[test]
fn bounds_output_ignores_thread_count() {
    let run = |threads: &str| {
        let mut args = vec!["bounds", "--seed", "5", "--threads", threads];
        args.extend(SMALL_BOUNDS);
        stdout(&args)
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    let lines = data_lines(&one);
    assert_eq!(lines[0], "a_over_h,lower,lower_se,upper,upper_se,gap_pct");
    assert_eq!(lines.len(), 3);
    assert!(one.contains("# seed = 5"));
    assert!(one.lines().any(|l| l.contains("basis points")));
}

#[test]
fn rules_writes_table_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("rules.csv");
    let series = dir.path().join("series.csv");
    let mut args = vec![
        "rules",
        "--paths",
        "500",
        "--series-rule",
        "1",
        "--out",
        table.to_str().unwrap(),
        "--series-out",
        series.to_str().unwrap(),
    ];
    args.extend(SMALL_BOUNDS);
    assert!(stdout(&args).is_empty());

    let table = std::fs::read_to_string(table).unwrap();
    assert_eq!(
        data_lines(&table)[0],
        "a_over_h,rule1,rule1_se,rule2,rule2_se"
    );
    let series = std::fs::read_to_string(series).unwrap();
    assert!(series.contains("# rule = 1"));
    let rows = data_lines(&series);
    assert_eq!(rows[0], "a_over_h,rule_value,lower_bound,upper_bound");
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[1] >= 1.0 && v[2] >= 1.0 && v[3] >= v[2] - 0.05);
    }
}

#[test]
fn dump_path_is_consistent() {
    let text = stdout(&[
        "dump-path",
        "--n-steps",
        "30",
        "--a-over-h",
        "4",
        "--path-id",
        "2",
    ]);
    let rows = data_lines(&text);
    assert_eq!(rows[0], "k,x,s,z,g");
    assert_eq!(rows.len(), 32);
    for row in &rows[1..] {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - v[1].exp()).abs() < 1e-9);
        assert!(v[3] >= v[2] - 1e-12);
        assert!((v[4] - v[3] / v[2]).abs() < 1e-9);
    }
}

#[test]
fn demo_reports_the_estimate() {
    let text = stdout(&["demo-prop0", "--n", "400", "--paths", "2000", "--seed", "9"]);
    let get = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    let target = (2.0 / std::f64::consts::PI).sqrt();
    assert!((get("mean") - target).abs() <= 4.0 * get("se"));
    assert_eq!(get("sup|H|"), 0.05);
}

#[test]
fn validate_passes() {
    let out = foresight(&["validate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}
