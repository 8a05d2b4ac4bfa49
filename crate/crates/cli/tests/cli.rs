use std::path::Path;
use std::process::{Command, Output};

fn noon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noon")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fine_scan_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fine.csv");
    let o = noon(&["scan", "--scheme", "3/1", "--mode", "fine", "-o", path(&file)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.contains("# engine = analytic") && text.contains("# delay_unit = phase_rad"));
    let o = noon(&["analyze", path(&file)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("dominant harmonic  4"), "{report}");
    assert!(report.contains("visibility         1.0000"), "{report}");
}

#[test]
fn coarse_and_fine_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let (coarse, fine) = (dir.path().join("c.csv"), dir.path().join("f.csv"));
    let o = noon(&["scan", "--scheme", "1/1", "--mode", "coarse", "--start=-0.9e-3", "--step", "5e-8", "--count", "36001", "-o", path(&coarse)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(noon(&["scan", "--scheme", "1/1", "--mode", "fine", "-o", path(&fine)]).status.success());
    let o = noon(&["analyze", path(&coarse), "--fine", path(&fine), "--json", "--compare-table1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["scheme"], "1/1");
    assert_eq!(v["stats"]["shape"], "symmetric");
    let t = v["stats"]["coherence_time"].as_f64().unwrap();
    assert!((t - 1.77e-12).abs() < 0.02e-12, "{t}");
    assert!(v["reference"]["coherence_length"].as_f64().unwrap() > 0.0);
    let o = noon(&["analyze", path(&coarse), "--fine", path(&fine), "--compare-table1"]);
    assert!(stdout(&o).contains("measured"));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scheme = \"2/2\"\nmode = \"fine\"\nmu = 0.01\neta = 0.5\ncount = 50\n").unwrap();
    let o = noon(&["scan", "--config", path(&cfg), "--engine", "gaussian", "--dc", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# scheme = \"2/2\"") && text.contains("# eta = 0.5") && text.contains("# dc = 0.0"), "{text}");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 51);
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "scheme = \"1/1\"\nmode = \"fine\"\neta = 1.5\n").unwrap();
    let o = noon(&["scan", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    std::fs::write(&cfg, "scheme = \"1/1\"\nbrightness = 3\n").unwrap();
    let o = noon(&["scan", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(noon(&["scan", "--mode", "fine"]).status.code(), Some(2));
    assert_eq!(noon(&["scan", "--scheme", "5/2"]).status.code(), Some(2));
    assert_eq!(noon(&["analyze", "/nonexistent/scan.csv"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let coarse = dir.path().join("c.csv");
    assert!(noon(&["scan", "--scheme", "1/1", "-o", path(&coarse)]).status.success());
    let o = noon(&["analyze", path(&coarse)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("insufficient sampling density"));
    let garbled = dir.path().join("g.csv");
    std::fs::write(&garbled, "# scheme = 1/1\n# delay_unit = path_m\ndelay,probability\n0.0,0.5\n1e-6,abc\n").unwrap();
    let o = noon(&["analyze", path(&garbled)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn sampled_counts_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("counts.csv"));
    let run = |p: &Path| noon(&["scan", "--scheme", "2/0", "--mode", "fine", "--sample", "--seed", "42", "-o", path(p)]);
    assert!(run(&a).status.success());
    assert!(run(&b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.contains("# seed = 42") && text.contains("delay,probability,counts"));
    let o = noon(&["scan", "--scheme", "2/0", "--mode", "fine", "--sample", "--counts-out", path(&c)]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&c).unwrap().lines().any(|l| l == "delay,counts"));
}

#[test]
fn oracle_engine_matches_analytic_file() {
    let a = noon(&["scan", "--scheme", "2/2", "--mode", "fine", "--count", "40"]);
    let o = noon(&["scan", "--scheme", "2/2", "--mode", "fine", "--count", "40", "--engine", "oracle"]);
    let rows = |o: &Output| -> Vec<f64> {
        stdout(o).lines().filter(|l| !l.starts_with('#') && !l.starts_with("delay")).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
    };
    let (ra, ro) = (rows(&a), rows(&o));
    assert_eq!(ra.len(), 40);
    assert!(ra.iter().zip(&ro).all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn forms_and_oracle_grid() {
    let o = noon(&["forms", "--schemes", "1/1"]);
    assert!(o.status.success() && stdout(&o).contains("1/1"));
    let o = noon(&["oracle-grid", "--schemes", "1/1,2/0", "--grid", "3x5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("scheme,indistinguishability,phase,probability"));
    assert_eq!(text.lines().count(), 1 + 2 * 15);
}

#[test]
fn crosscheck_subset_passes() {
    let o = noon(&["crosscheck", "--schemes", "1/1,2/2,6/0", "--grid", "3x5"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 6);
}
