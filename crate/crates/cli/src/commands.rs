//! One function per subcommand; each writes its artifacts into a directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ddilab_core::io::fmt_f64;
use ddilab_core::kinetics::{self, KineticState};
use ddilab_core::model::{self, StateKind};
use ddilab_core::pattern::{
    build_discontinuous_pattern, build_pattern, constant_pattern, verify_pattern, Orientation, Pattern, SegmentPlan,
};
use ddilab_core::pde::{self, Scheme, SimConfig, SimState, Trajectory};
use ddilab_core::spectral;
use ddilab_core::ModelParams;
use serde_json::json;

use crate::config::Config;
use crate::CliError;

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), body).map_err(|e| CliError::Io(format!("{}: {e}", dir.join(name).display())))
}

fn compute<E: std::fmt::Display>(module: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Compute { module, message: e.to_string() }
}

pub fn steady(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let p = &cfg.params;
    let mut rows = String::from("kind,u,v,w,res_u,res_v,res_w\n");
    for s in model::constant_states(p) {
        let r = model::reaction(p, s.u, s.v, s.w);
        let _ = writeln!(
            rows,
            "{},{},{},{},{},{},{}",
            s.kind.label(),
            fmt_f64(s.u),
            fmt_f64(s.v),
            fmt_f64(s.w),
            fmt_f64(r[0]),
            fmt_f64(r[1]),
            fmt_f64(r[2])
        );
    }
    write(dir, "steady.csv", &rows)
}

pub fn ddi(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let r = model::ddi_check(&cfg.params).map_err(compute("model_core"))?;
    let det12 = {
        let m = model::a12_matrix(&cfg.params).map_err(compute("model_core"))?;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    };
    let (l0, lneg) = model::a12_eigenvalues(&cfg.params).map_err(compute("model_core"))?;
    let doc = json!({
        "state": { "u": r.state.u, "v": r.state.v, "w": r.state.w },
        "jacobian": r.jacobian,
        "cond1": r.cond1,
        "cond2": r.cond2,
        "cond3": r.cond3,
        "cond4": r.cond4,
        "det_a12": det12,
        "lambda0": l0,
        "lambda_neg": lneg,
        "ddi": r.ddi,
        "assumption_met": r.assumption_met,
    });
    write(dir, "ddi.json", &(serde_json::to_string_pretty(&doc).expect("plain values") + "\n"))
}

pub fn kinetics(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let p = &cfg.params;
    let init = KineticState {
        t: 0.0,
        u: cfg.get("kinetics.u0", 1.0)?,
        v: cfg.get("kinetics.v0", 1.0)?,
        w: cfg.get("kinetics.w0", 1.0)?,
    };
    let t_end: f64 = cfg.get("kinetics.t_end", 50.0)?;
    let tol: f64 = cfg.get("kinetics.rel_tol", 1e-9)?;
    let traj = kinetics::integrate_kinetics(p, init, t_end, tol).map_err(compute("kinetics"))?;
    write(dir, "trajectory.csv", &kinetics::trajectory_csv(&traj, false))?;
    write(dir, "equilibria.csv", &kinetics::equilibria_csv(&kinetics::classify_equilibria(p)))?;
    let mut summary = String::new();
    let _ = writeln!(summary, "branch={}", kinetics::predict_branch(p, init.u).label());
    if init.u > 0.0 && init.v > 0.0 && init.w > 0.0 {
        let ratio = kinetics::asymptotic_ratio(p, init, t_end).map_err(compute("kinetics"))?;
        let _ = writeln!(summary, "ratio_estimate={}", fmt_f64(ratio.estimate));
        let _ = writeln!(summary, "ratio_tail={}", fmt_f64(ratio.tail_value));
        let _ = writeln!(summary, "ratio_converged={}", ratio.converged);
        let _ = writeln!(summary, "extinct={}", ratio.extinct);
        for c in &ratio.candidates {
            let _ = writeln!(summary, "candidate {}={} matches={}", c.label, fmt_f64(c.value), c.matches);
        }
    }
    let trap = kinetics::trapping_region_check(p, &traj);
    let _ = writeln!(summary, "trapping_holds={} hypotheses_met={}", trap.holds, trap.hypotheses_met);
    write(dir, "summary.txt", &summary)
}

fn orientation(cfg: &Config, key: &str) -> Result<Orientation, CliError> {
    match cfg.raw(key).unwrap_or("increasing") {
        "increasing" => Ok(Orientation::IncreasingFirst),
        "decreasing" => Ok(Orientation::DecreasingFirst),
        other => Err(CliError::Usage(format!("bad value `{other}` for `{key}` (increasing | decreasing)"))),
    }
}

/// Builds the requested pattern; `k = 0` is the constant minus state.
fn make_pattern(p: &ModelParams, k: usize, orient: Orientation, n_grid: usize) -> Result<Pattern, CliError> {
    if k == 0 {
        constant_pattern(p, StateKind::Minus, n_grid).map_err(compute("pattern"))
    } else {
        build_pattern(p, k, orient, n_grid).map_err(compute("pattern"))
    }
}

pub fn pattern(cfg: &Config, dir: &Path, plan: Option<&Path>) -> Result<(), CliError> {
    let p = &cfg.params;
    let n_grid: usize = cfg.get("pattern.n_grid", 1024)?;
    let pat = match plan {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let plan: SegmentPlan = text.parse().map_err(compute("pattern"))?;
            build_discontinuous_pattern(p, &plan, n_grid).map_err(compute("pattern"))?
        }
        None => make_pattern(p, cfg.get("pattern.modes", 1)?, orientation(cfg, "pattern.orientation")?, n_grid)?,
    };
    let report = verify_pattern(p, &pat);
    write(dir, "pattern.csv", &pat.to_csv())?;
    write(dir, "pattern.json", &(pat.metadata_json(&report) + "\n"))
}

pub fn spectrum(cfg: &Config, dir: &Path) -> Result<(), CliError> {
    let p = &cfg.params;
    let k: usize = cfg.get("spectrum.modes", 0)?;
    let n_grid: usize = cfg.get("spectrum.n_grid", 2048)?;
    let n_min: usize = cfg.get("spectrum.n_min", 1)?;
    let n_max: usize = cfg.get("spectrum.n_max", 12)?;
    let intervals: usize = cfg.get("spectrum.intervals", spectral::SL_INTERVALS)?;
    if n_min == 0 || n_min > n_max {
        return Err(CliError::Usage(format!("need 1 <= spectrum.n_min <= spectrum.n_max, got {n_min}..{n_max}")));
    }
    let pat = make_pattern(p, k, Orientation::IncreasingFirst, n_grid)?;
    let report =
        spectral::find_unstable_eigenvalues_with(p, &pat, n_min..=n_max, intervals).map_err(compute("spectral"))?;
    write(dir, "spectrum.csv", &report.to_csv())?;
    let mut notes = String::new();
    for e in &report.entries {
        if !e.note.is_empty() {
            let _ = writeln!(notes, "n={}: {}", e.n, e.note);
        }
    }
    for n in &report.notes {
        let _ = writeln!(notes, "{n}");
    }
    write(dir, "notes.txt", &notes)
}

fn initial_state(cfg: &Config, n: usize, seed: u64) -> Result<(SimState, SimState), CliError> {
    let p = &cfg.params;
    let init_kind = cfg.raw("sim.init").unwrap_or("minus");
    let base = match init_kind {
        "minus" => {
            let m = model::minus_state(p).map_err(compute("model_core"))?;
            SimState::constant(n, m.u, m.v, m.w)
        }
        "trivial" => SimState::constant(n, 0.0, 0.0, p.kappa0 / p.d_g),
        "random" => SimState::random_smooth(n, seed, (0.1, 3.0)),
        "pattern" => {
            let pat = make_pattern(p, cfg.get("sim.modes", 1)?, orientation(cfg, "pattern.orientation")?, 1024)?;
            SimState::from_pattern(&pat, p, n)
        }
        other => {
            return Err(CliError::Usage(format!("bad value `{other}` for `sim.init` (minus | trivial | random | pattern)")))
        }
    };
    let amp: f64 = cfg.get("sim.amplitude", 0.0)?;
    let probe: usize = cfg.get("sim.probe", 1)?;
    let mut init = base.clone();
    if amp != 0.0 {
        let h = 1.0 / (n - 1) as f64;
        let scales = [base.u.clone(), base.v.clone(), base.w.clone()].map(|f| f.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        for i in 0..n {
            let c = amp * (probe as f64 * std::f64::consts::PI * i as f64 * h).cos();
            init.u[i] = (init.u[i] + c * scales[0]).max(0.0);
            init.v[i] = (init.v[i] + c * scales[1]).max(0.0);
            init.w[i] = (init.w[i] + c * scales[2]).max(0.0);
        }
    }
    Ok((init, base))
}

pub fn simulate(cfg: &Config, dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let p = &cfg.params;
    let n_grid: usize = cfg.get("sim.n_grid", 512)?;
    if n_grid < 64 {
        return Err(CliError::Usage(format!("sim.n_grid = {n_grid} < 64")));
    }
    let seed = match seed {
        Some(s) => s,
        None => cfg.get("sim.seed", 0)?,
    };
    let (init, base) = initial_state(cfg, n_grid, seed)?;
    let dt: f64 = cfg.get("sim.dt", 0.0)?;
    let sim = SimConfig {
        n_grid,
        dt: if dt > 0.0 { dt } else { pde::default_dt(p, &init) },
        t_end: cfg.get("sim.t_end", 10.0)?,
        scheme: cfg.raw("sim.scheme").unwrap_or("imex2").parse::<Scheme>().map_err(|e| CliError::Usage(e.to_string()))?,
        record_every: cfg.get("sim.record_every", 100)?,
        seed,
    };
    sim.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let traj = pde::run(p, &init, &sim, Some(&base)).map_err(compute("pde_sim"))?;
    for (step, s) in &traj.snapshots {
        write(dir, &format!("snap_{step}.csv"), &Trajectory::snapshot_csv(s))?;
    }
    write(dir, "diagnostics.csv", &traj.diagnostics_csv())?;
    let mut meta = traj.metadata(p);
    let _ = writeln!(meta, "sim.init={}", cfg.raw("sim.init").unwrap_or("minus"));
    write(dir, "metadata.txt", &meta)
}

/// Index rows for a sweep: one per run, in grid order.
pub fn sweep_index(keys: &[String], runs: &[(Vec<String>, Result<(), CliError>)]) -> String {
    let mut header: Vec<&str> = vec!["run"];
    header.extend(keys.iter().map(String::as_str));
    header.extend(["status", "message"]);
    let mut out = header.join(",") + "\n";
    for (i, (vals, res)) in runs.iter().enumerate() {
        let (status, msg) = match res {
            Ok(()) => ("ok", String::new()),
            Err(e) => ("error", e.to_string().replace([',', '\n'], ";")),
        };
        let _ = writeln!(out, "run_{i:04},{},{status},{msg}", vals.join(","));
    }
    out
}
