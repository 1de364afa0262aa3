use std::path::Path;
use std::process::{Command, Output};

fn ddilab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddilab")).args(args).current_dir(cwd).env_remove("DDILAB_OUT").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PSTAR: &str = "a=3\nd_c=1\nd_b=1\nd=1\nd_g=1\nkappa0=2\ngamma=20\n";

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn steady_lists_three_states() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.cfg"), PSTAR).unwrap();
    let o = ddilab(&["steady", "--config", "p.cfg", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = parse_csv(&std::fs::read_to_string(dir.path().join("s/steady.csv")).unwrap());
    assert_eq!(header, ["kind", "u", "v", "w", "res_u", "res_v", "res_w"]);
    assert_eq!(rows.len(), 3);
    let minus = rows.iter().find(|r| r[0] == "minus").unwrap();
    let w: f64 = minus[3].parse().unwrap();
    assert!((w - (2.0 - 2f64.sqrt()) / 2.0).abs() < 1e-12);
}

#[test]
fn csv_values_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddilab(&["pattern", "--modes", "3", "--set", "pattern.n_grid=128", "--out", "p"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = parse_csv(&std::fs::read_to_string(dir.path().join("p/pattern.csv")).unwrap());
    assert_eq!(header, ["x", "W", "U", "V", "in_null_set"]);
    for row in rows {
        for field in &row[..4] {
            let v: f64 = field.parse().unwrap();
            assert_eq!(&format!("{v:.16e}"), field);
        }
    }
}

#[test]
fn pattern_report_meets_residual_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddilab(&["pattern", "--gamma", "20", "--modes", "2", "--out", "p"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("p/pattern.json")).unwrap()).unwrap();
    let residual = meta["residual"].as_f64().unwrap();
    let scale = meta["residual_scale"].as_f64().unwrap();
    assert!(residual <= 1e-6 * scale.max(1.0), "{residual} (scale {scale})");
}

#[test]
fn discontinuous_plan_mode() {
    let dir = tempfile::tempdir().unwrap();
    let e2 = 1.4 + 0.5 * 0.25f64.ln();
    std::fs::write(dir.path().join("plan.txt"), format!("# weak pattern\nouter {e2}\ninner 1.4\nouter {e2}\n")).unwrap();
    let o = ddilab(&["pattern", "--discontinuous", "plan.txt", "--out", "d"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("d/pattern.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",1")));
    std::fs::write(dir.path().join("bad.txt"), "outer 0.1\ninner 1.4\nouter 0.1\n").unwrap();
    let o = ddilab(&["pattern", "--discontinuous", "bad.txt", "--out", "bad"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("pattern:"), "{}", stderr(&o));
}

#[test]
fn ddi_without_positive_state_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddilab(&["ddi", "--set", "a=0.5", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("state not found"), "{}", stderr(&o));
    // Nothing half-written is left behind.
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dup.cfg"), format!("{PSTAR}a=4\n")).unwrap();
    let o = ddilab(&["steady", "--config", "dup.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lines 1 and 8"), "{}", stderr(&o));

    let o = ddilab(&["steady", "--set", "gamma=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"));

    let o = ddilab(&["steady", "--set", "sim.nope=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = ddilab(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(dir.path().join("missing.cfg"), "a=3\n").unwrap();
    let o = ddilab(&["steady", "--config", "missing.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d_c"));
}

#[test]
fn default_output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ddilab"))
        .arg("ddi")
        .current_dir(dir.path())
        .env("DDILAB_OUT", dir.path().join("root"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("root/ddi/ddi.json")).unwrap()).unwrap();
    assert_eq!(doc["ddi"], true);
    assert!((doc["det_a12"].as_f64().unwrap() + 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn simulate_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--set", "gamma=10", "--set", "sim.n_grid=64", "--set", "sim.dt=0.01", "--set", "sim.t_end=1",
        "--set", "sim.record_every=25", "--set", "sim.amplitude=1e-3", "--set", "sim.probe=3", "--out", "run",
    ];
    let o = ddilab(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let run = dir.path().join("run");
    for step in [0, 25, 50, 75, 100] {
        assert!(run.join(format!("snap_{step}.csv")).exists(), "snap_{step}");
    }
    let (header, rows) = parse_csv(&std::fs::read_to_string(run.join("diagnostics.csv")).unwrap());
    assert_eq!(header, ["t", "mass_u", "mass_v", "sup_w", "deviation"]);
    assert_eq!(rows.len(), 101);
    let meta = std::fs::read_to_string(run.join("metadata.txt")).unwrap();
    assert!(meta.contains("heat_constant=") && meta.contains("seed=0") && meta.contains("sim.scheme=imex2"));
}

#[test]
fn spectrum_constant_case() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddilab(
        &["spectrum", "--gamma", "10", "--modes", "0", "--set", "spectrum.n_min=3", "--set", "spectrum.n_max=4", "--set", "spectrum.intervals=1024", "--out", "sp"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("sp/spectrum.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("3,")).unwrap();
    let lambda: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((lambda - 0.11444847351836294).abs() < 1e-6, "{lambda}");
}

#[test]
fn sweep_builds_index_and_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let o = ddilab(&["sweep", "ddi", "--vary", "a=3,0.5", "--vary", "gamma=5,10", "--jobs", "2", "--out", "sw"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = parse_csv(&std::fs::read_to_string(dir.path().join("sw/index.csv")).unwrap());
    assert_eq!(header, ["run", "a", "gamma", "status", "message"]);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][..4], ["run_0000", "3", "5", "ok"]);
    assert_eq!(rows[2][3], "error");
    assert!(dir.path().join("sw/run_0001/ddi.json").exists());
    assert!(dir.path().join("sw/run_0003/config.txt").exists());
}
