use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn wrr_nc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrr-nc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = wrr_nc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn curves_start_at_zero_and_keep_column_order() {
    let (header, rows) = table(&stdout(&["curves", "--samples", "11"]));
    assert_eq!(header, ["t", "wrr_linear", "wrr_stair", "iwrr", "wrr_m_best", "iwrr_m_best"]);
    assert_eq!(rows.len(), 11);
    assert!(rows[0].iter().all(|v| f(v) == 0.0));
}

#[test]
fn single_flow_curves_are_the_link() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    std::fs::write(
        &path,
        r#"{"server": {"rate_bits_per_s": 1000}, "foi": 1,
            "flows": [{"weight": 3, "l_min_bits": 10, "l_max_bits": 20,
                       "arrival": {"rate_bits_per_s": 100, "burst_bits": 20}}]}"#,
    )
    .unwrap();
    let text = stdout(&["curves", "--scenario", path.to_str().unwrap(), "--t-max", "1", "--samples", "5"]);
    let (_, rows) = table(&text);
    for row in rows {
        let t = f(&row[0]);
        for v in &row[1..] {
            assert!((f(v) - 1000.0 * t).abs() < 1e-6, "{row:?}");
        }
    }
}

#[test]
fn delay_sweep_matches_subset_bound_and_rejects_full_load() {
    let (header, rows) = table(&stdout(&["delay-sweep", "--from", "0.6", "--to", "0.6", "--steps", "1"]));
    let wrr_m = f(&rows[0][column(&header, "wrr_m")]);
    assert!((wrr_m - 0.0386415094).abs() < 1e-9);
    for name in ["wrr_linear", "wrr_stair", "iwrr"] {
        assert!(wrr_m <= f(&rows[0][column(&header, name)]));
    }
    assert!(!wrr_nc(&["delay-sweep", "--from", "0.5", "--to", "1", "--steps", "2"]).status.success());
}

#[test]
fn numbers_carry_enough_digits() {
    let (header, rows) = table(&stdout(&["delay-sweep", "--from", "0.6", "--to", "0.6", "--steps", "1"]));
    let v = &rows[0][column(&header, "wrr_m")];
    let digits = v.chars().filter(char::is_ascii_digit).collect::<String>();
    assert!(digits.trim_start_matches('0').len() >= 9, "{v}");
}

#[test]
fn burst_mix_with_low_bursts_halves_the_bound() {
    let (header, rows) = table(&stdout(&["burst-classes", "--mix", "7,1,1"]));
    assert_eq!(rows.len(), 1);
    assert!(f(&rows[0][column(&header, "wrr_m_over_best_sota")]) < 0.5);
}

#[test]
fn class_file_matches_built_in_config() {
    let built = stdout(&["burst-classes"]);
    let path = shipped("burst_classes.json");
    let loaded = stdout(&["burst-classes", "--scenario", path.to_str().unwrap()]);
    assert_eq!(built, loaded);
}

#[test]
fn psr_one_is_the_baseline() {
    let (header, rows) = table(&stdout(&["psr-sweep", "--psr", "1", "--psr", "2"]));
    assert_eq!(rows[0][column(&header, "psr")].parse::<f64>().unwrap(), 1.0);
    assert!(f(&rows[0][column(&header, "iwrr")]) < f(&rows[1][column(&header, "iwrr")]));
}

#[test]
fn flow_count_and_heuristic_table_validate_input() {
    assert!(!wrr_nc(&["flow-count", "--per-class", "0"]).status.success());
    assert!(!wrr_nc(&["heuristic-table", "--total", "12"]).status.success());
    let (header, rows) = table(&stdout(&["heuristic-table", "--total", "13"]));
    assert_eq!(header, ["total_flows", "heuristic", "iwrr", "subset_size", "wall_time_s"]);
    assert!(f(&rows[0][1]) < f(&rows[0][2]));
}

#[test]
fn exact_and_float_agree_and_conflict() {
    let exact = stdout(&["--exact", "flow-count", "--per-class", "2"]);
    let float = stdout(&["--float", "flow-count", "--per-class", "2"]);
    assert_eq!(exact, float);
    assert!(!wrr_nc(&["--exact", "--float", "curves"]).status.success());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let printed = stdout(&["psr-sweep", "--psr", "3"]);
    assert!(stdout(&["psr-sweep", "--psr", "3", "--out", path.to_str().unwrap()]).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
}

#[test]
fn simulate_holds_and_is_reproducible() {
    let a = stdout(&["simulate", "--seed", "7"]);
    let b = stdout(&["simulate", "--seed", "7"]);
    assert_eq!(a, b);
    let (header, rows) = table(&a);
    let status = column(&header, "status");
    assert!(rows.iter().any(|r| r[status] == "holds"));
    assert!(rows.iter().all(|r| r[status] == "holds" || r[status].starts_with("skipped")));
    let path = shipped("burst_classes.json");
    stdout(&["simulate", "--scheduler", "wrr", "--sizes", "max", "--scenario", path.to_str().unwrap()]);
}

#[test]
fn simulate_writes_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.tsv");
    stdout(&["simulate", "--sizes", "min", "--events", path.to_str().unwrap()]);
    let log = std::fs::read_to_string(&path).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("time\tkind\tflow\tsize\tqueues"));
    let first: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(first[..3], ["0", "arrive", "1"]);
}

#[test]
fn missing_scenario_file_is_an_error() {
    let out = wrr_nc(&["curves", "--scenario", "/nonexistent/s.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonexistent"));
}
