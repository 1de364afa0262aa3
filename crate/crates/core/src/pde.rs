//! Method-of-lines solver for the full system on [0, 1] with Neumann conditions on w.
//!
//! u and v are node-wise ODEs; w carries diffusion (1/γ)w_xx, treated
//! implicitly. `Imex1` is forward Euler on the reactions plus backward Euler
//! on diffusion; `Imex2` is a Strang splitting with RK4 reaction half-steps
//! around a Crank–Nicolson diffusion step.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::io::fmt_f64;
use crate::model::{self, reaction};
use crate::numerics::tridiag::{solve, TridiagError};
use crate::pattern::Pattern;
use crate::spectral::{self, SpectralError};
use crate::ModelParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("tridiagonal solve failed: {0}")]
    Solver(#[from] TridiagError),
    #[error("blow-up: non-finite value at t = {t} (dt too large?)")]
    BlowUp { t: f64 },
    #[error("negative {component} = {value:e} at node {index}, t = {t} (dt too large?)")]
    Negative { t: f64, component: &'static str, index: usize, value: f64 },
    #[error("sup-norm of w = {sup_w} exceeds the global bound {bound} at t = {t}")]
    BoundViolated { t: f64, sup_w: f64, bound: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Imex1,
    Imex2,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Imex1 => "imex1",
            Scheme::Imex2 => "imex2",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = PdeError;
    fn from_str(s: &str) -> Result<Self, PdeError> {
        match s {
            "imex1" => Ok(Scheme::Imex1),
            "imex2" => Ok(Scheme::Imex2),
            _ => Err(PdeError::Config(format!("unknown scheme `{s}` (imex1 | imex2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_grid: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_grid: 512, dt: 0.0, t_end: 10.0, scheme: Scheme::Imex2, record_every: 100, seed: 0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), PdeError> {
        if self.n_grid < 64 {
            return Err(PdeError::Config(format!("n_grid = {} < 64", self.n_grid)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PdeError::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(PdeError::Config(format!("t_end = {} must be positive", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(PdeError::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_grid - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n_grid).map(|i| i as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl SimState {
    pub fn constant(n: usize, u: f64, v: f64, w: f64) -> Self {
        Self { t: 0.0, u: vec![u; n], v: vec![v; n], w: vec![w; n] }
    }

    /// Samples a pattern onto a uniform grid of `n` points.
    pub fn from_pattern(pat: &Pattern, p: &ModelParams, n: usize) -> Self {
        let h = 1.0 / (n - 1) as f64;
        let vw = p.vw_product();
        let ratio = (p.a - p.d_c) / p.d_c;
        let mut s = Self::constant(n, 0.0, 0.0, 0.0);
        for i in 0..n {
            let x = i as f64 * h;
            let w = pat.w_at(x);
            s.w[i] = w;
            if !pat.in_null_set(x) {
                s.v[i] = vw / w;
                s.u[i] = ratio * s.v[i];
            }
        }
        s
    }

    /// Smooth random positive fields: a constant plus three random cosine modes,
    /// each component drawn inside `range`.
    pub fn random_smooth(n: usize, seed: u64, range: (f64, f64)) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1.0 / (n - 1) as f64;
        let mut field = || {
            let mid = rng.gen_range(range.0..range.1);
            let room = (mid - range.0).min(range.1 - mid) / 3.0;
            let coef: Vec<(f64, f64)> = (1..=3).map(|k| (k as f64, rng.gen_range(-room..room))).collect();
            (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    mid + coef.iter().map(|(k, c)| c * (k * std::f64::consts::PI * x).cos()).sum::<f64>()
                })
                .collect::<Vec<f64>>()
        };
        let u = field();
        let v = field();
        let w = field();
        Self { t: 0.0, u, v, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Trapezoid integral over [0, 1] on a uniform grid.
pub fn trapezoid(f: &[f64]) -> f64 {
    let n = f.len();
    let h = 1.0 / (n - 1) as f64;
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}

fn sup(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest ∞-norm of the reaction Jacobian over the grid.
pub fn reaction_stiffness(p: &ModelParams, s: &SimState) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..s.len() {
        let (u, v, w) = (s.u[i], s.v[i], s.w[i]);
        let rows = match model::reaction_jacobian(p, u, v, w) {
            Ok(j) => j.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max),
            Err(_) => p.d_c.max(p.a) + p.d_b + p.d + p.d_g,
        };
        worst = worst.max(rows);
    }
    worst
}

/// Default dt: 0.25·min(1, 0.5/stiffness).
pub fn default_dt(p: &ModelParams, s: &SimState) -> f64 {
    let stiff = reaction_stiffness(p, s).max(1e-12);
    0.25 * (0.5 / stiff).min(1.0)
}

/// Source term hook for manufactured solutions: `(x, t) -> [s_u, s_v, s_w]`.
pub type Source<'a> = &'a dyn Fn(f64, f64) -> [f64; 3];

fn rhs(p: &ModelParams, src: Option<Source>, x: f64, t: f64, y: [f64; 3]) -> [f64; 3] {
    let u = y[0].max(0.0);
    let v = y[1].max(0.0);
    let mut f = reaction(p, u, v, y[2]);
    if let Some(src) = src {
        let s = src(x, t);
        for k in 0..3 {
            f[k] += s[k];
        }
    }
    f
}

fn rk4(p: &ModelParams, src: Option<Source>, x: f64, t: f64, y: [f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = rhs(p, src, x, t, y);
    let k2 = rhs(p, src, x, t + 0.5 * dt, add(y, k1, 0.5 * dt));
    let k3 = rhs(p, src, x, t + 0.5 * dt, add(y, k2, 0.5 * dt));
    let k4 = rhs(p, src, x, t + dt, add(y, k3, dt));
    [0, 1, 2].map(|k| y[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
}

/// h²·L w for the ghost-point Neumann Laplacian L; exactly zero on constant data.
fn laplacian_h2(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { w[1] } else { w[i - 1] };
            let right = if i == n - 1 { w[n - 2] } else { w[i + 1] };
            (left - w[i]) + (right - w[i])
        })
        .collect()
}

/// Solves (I − r·h²L) w_new = w in increment form, w_new = w + (I − r·h²L)⁻¹ r·h²L w,
/// so that spatially uniform data passes through bit-exactly.
fn implicit_diffusion(w: &[f64], r: f64) -> Result<Vec<f64>, TridiagError> {
    let n = w.len();
    let diag = vec![1.0 + 2.0 * r; n];
    let mut sub = vec![-r; n - 1];
    let mut sup = vec![-r; n - 1];
    sup[0] = -2.0 * r;
    sub[n - 2] = -2.0 * r;
    let rhs: Vec<f64> = laplacian_h2(w).iter().map(|l| r * l).collect();
    let delta = solve(&sub, &diag, &sup, &rhs)?;
    Ok(w.iter().zip(delta).map(|(a, d)| a + d).collect())
}

/// (I + r·h²L) w with the same Neumann closure.
fn explicit_diffusion(w: &[f64], r: f64) -> Vec<f64> {
    w.iter().zip(laplacian_h2(w)).map(|(a, l)| a + r * l).collect()
}

fn clip(s: &mut SimState) -> Result<(), PdeError> {
    for (name, f) in [("u", &mut s.u), ("v", &mut s.v), ("w", &mut s.w)] {
        for (i, x) in f.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(PdeError::BlowUp { t: s.t });
            }
            if *x < 0.0 {
                if *x < -1e-13 {
                    return Err(PdeError::Negative { t: s.t, component: name, index: i, value: *x });
                }
                *x = 0.0;
            }
        }
    }
    Ok(())
}

/// One time step.
pub fn step(p: &ModelParams, s: &SimState, cfg: &SimConfig) -> Result<SimState, PdeError> {
    step_with_source(p, s, cfg, None)
}

/// One time step with an optional additive source (manufactured solutions).
pub fn step_with_source(p: &ModelParams, s: &SimState, cfg: &SimConfig, src: Option<Source>) -> Result<SimState, PdeError> {
    let n = s.len();
    let h = 1.0 / (n - 1) as f64;
    let dt = cfg.dt;
    let r = dt / (p.gamma * h * h);
    let mut out = s.clone();
    match cfg.scheme {
        Scheme::Imex1 => {
            for i in 0..n {
                let f = rhs(p, src, i as f64 * h, s.t, [s.u[i], s.v[i], s.w[i]]);
                out.u[i] += dt * f[0];
                out.v[i] += dt * f[1];
                out.w[i] += dt * f[2];
            }
            out.w = implicit_diffusion(&out.w, r)?;
        }
        Scheme::Imex2 => {
            let half = 0.5 * dt;
            for i in 0..n {
                let y = rk4(p, src, i as f64 * h, s.t, [s.u[i], s.v[i], s.w[i]], half);
                (out.u[i], out.v[i], out.w[i]) = (y[0], y[1], y[2]);
            }
            out.w = implicit_diffusion(&explicit_diffusion(&out.w, 0.5 * r), 0.5 * r)?;
            for i in 0..n {
                let y = rk4(p, src, i as f64 * h, s.t + half, [out.u[i], out.v[i], out.w[i]], half);
                (out.u[i], out.v[i], out.w[i]) = (y[0], y[1], y[2]);
            }
        }
    }
    out.t = s.t + dt;
    clip(&mut out)?;
    Ok(out)
}

/// Discrete analog of the heat-kernel constant: max over t ≤ t_max of
/// √t·max_x B(x, y, t) for unit-mass impulses at the boundary and the centre.
/// The kernel is propagated by backward Euler for either scheme: Crank–Nicolson
/// barely damps the impulse's grid-scale modes, which would inflate C by two
/// orders of magnitude without reflecting any growth in the solution.
pub fn measure_heat_constant(gamma: f64, n: usize, dt: f64, t_max: f64) -> Result<f64, PdeError> {
    let h = 1.0 / (n - 1) as f64;
    let r = dt / (gamma * h * h);
    let mut worst: f64 = 0.0;
    for j in [0, (n - 1) / 2] {
        let mut b = vec![0.0; n];
        b[j] = if j == 0 { 2.0 / h } else { 1.0 / h };
        let mut t = 0.0;
        while t < t_max - 1e-12 {
            b = implicit_diffusion(&b, r)?;
            t += dt;
            worst = worst.max(t.sqrt() * sup(&b));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub sup_w: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<(usize, SimState)>,
    pub diagnostics: Vec<DiagRow>,
    pub heat_constant: f64,
    pub w_bound: f64,
    pub warnings: Vec<String>,
    pub config: SimConfig,
}

/// L² distance over all three fields, each scaled by the reference sup-norm.
pub fn deviation(s: &SimState, reference: &SimState) -> f64 {
    let mut total = 0.0;
    for (a, b) in [(&s.u, &reference.u), (&s.v, &reference.v), (&s.w, &reference.w)] {
        let scale = sup(b).max(1e-300);
        let sq: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| ((x - y) / scale).powi(2)).collect();
        total += trapezoid(&sq);
    }
    total.sqrt()
}

/// ‖w₀‖∞ + C·d·(2 + 1/d_g)(‖v₀‖₁ + ‖w₀‖₁ + κ₀/μ).
pub fn w_global_bound(p: &ModelParams, init: &SimState, c: f64) -> f64 {
    let mu = p.d_g.min(p.d_b);
    sup(&init.w) + c * p.d * (2.0 + 1.0 / p.d_g) * (trapezoid(&init.v) + trapezoid(&init.w) + p.kappa0 / mu)
}

fn diag_row(s: &SimState, reference: &SimState) -> DiagRow {
    DiagRow { t: s.t, mass_u: trapezoid(&s.u), mass_v: trapezoid(&s.v), sup_w: sup(&s.w), deviation: deviation(s, reference) }
}

/// Runs to `t_end`, recording a snapshot every `record_every` steps and a
/// diagnostics row every step. `reference` defaults to the initial state.
/// The effective dt (recorded in the trajectory config) divides t_end evenly.
pub fn run(p: &ModelParams, init: &SimState, cfg: &SimConfig, reference: Option<&SimState>) -> Result<Trajectory, PdeError> {
    cfg.validate()?;
    if init.len() != cfg.n_grid {
        return Err(PdeError::Config(format!("initial state has {} nodes, config expects {}", init.len(), cfg.n_grid)));
    }
    for f in [&init.u, &init.v, &init.w] {
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(PdeError::Config("initial data must be finite and nonnegative".into()));
        }
    }
    // Shrink dt slightly so that a whole number of steps lands on t_end.
    let steps = (cfg.t_end / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let cfg = &SimConfig { dt: cfg.t_end / steps as f64, ..*cfg };
    let mut warnings = Vec::new();
    let stiff = reaction_stiffness(p, init);
    if cfg.dt * stiff > 0.5 {
        warnings.push(format!("dt·max|df| = {:.3} exceeds 0.5 at t = 0", cfg.dt * stiff));
    }
    let heat_constant = measure_heat_constant(p.gamma, cfg.n_grid, cfg.dt, cfg.t_end.min(1.0))?;
    let w_bound = w_global_bound(p, init, heat_constant);
    let reference = reference.unwrap_or(init);
    let mut s = init.clone();
    s.t = 0.0;
    let mut snapshots = vec![(0, s.clone())];
    let mut diagnostics = vec![diag_row(&s, reference)];
    for k in 1..=steps {
        s = step(p, &s, cfg)?;
        let row = diag_row(&s, reference);
        if row.sup_w > w_bound {
            return Err(PdeError::BoundViolated { t: s.t, sup_w: row.sup_w, bound: w_bound });
        }
        diagnostics.push(row);
        if k % cfg.record_every == 0 || k == steps {
            snapshots.push((k, s.clone()));
        }
    }
    Ok(Trajectory { snapshots, diagnostics, heat_constant, w_bound, warnings, config: *cfg })
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        &self.snapshots.last().expect("at least the initial snapshot").1
    }

    pub fn snapshot_csv(s: &SimState) -> String {
        let n = s.len();
        let h = 1.0 / (n - 1) as f64;
        let mut out = String::from("x,u,v,w\n");
        for i in 0..n {
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(i as f64 * h), fmt_f64(s.u[i]), fmt_f64(s.v[i]), fmt_f64(s.w[i]));
        }
        out
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("t,mass_u,mass_v,sup_w,deviation\n");
        for r in &self.diagnostics {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.mass_u),
                fmt_f64(r.mass_v),
                fmt_f64(r.sup_w),
                fmt_f64(r.deviation)
            );
        }
        out
    }

    pub fn metadata(&self, p: &ModelParams) -> String {
        let c = &self.config;
        let mut out = p.to_kv_string();
        let _ = writeln!(out, "sim.n_grid={}", c.n_grid);
        let _ = writeln!(out, "sim.dt={}", fmt_f64(c.dt));
        let _ = writeln!(out, "sim.t_end={}", fmt_f64(c.t_end));
        let _ = writeln!(out, "sim.scheme={}", c.scheme.label());
        let _ = writeln!(out, "sim.record_every={}", c.record_every);
        let _ = writeln!(out, "seed={}", c.seed);
        let _ = writeln!(out, "heat_constant={}", fmt_f64(self.heat_constant));
        let _ = writeln!(out, "w_bound={}", fmt_f64(self.w_bound));
        for w in &self.warnings {
            let _ = writeln!(out, "warning={w}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub horizon_ok: bool,
    pub tail_u: f64,
    pub tail_v: f64,
    pub tail_w: f64,
    pub bound_u: f64,
    pub bound_v: f64,
    pub bound_w: f64,
    pub within: [bool; 3],
    pub note: String,
}

/// Tail maxima over the last 25% of the run against the κ₀-scaled limsup bounds, with 5% slack.
pub fn mass_diagnostics(p: &ModelParams, traj: &Trajectory) -> MassReport {
    let mu = p.d_g.min(p.d_b);
    let t_end = traj.diagnostics.last().map_or(0.0, |r| r.t);
    let horizon_ok = t_end >= 20.0 / mu;
    let cut = 0.75 * t_end;
    let tail = traj.diagnostics.iter().filter(|r| r.t >= cut);
    let (mut tu, mut tv, mut tw) = (0.0f64, 0.0f64, 0.0f64);
    for r in tail {
        tu = tu.max(r.mass_u);
        tv = tv.max(r.mass_v);
        tw = tw.max(r.sup_w);
    }
    let bound_u = (p.kappa0 / mu).min(p.a * p.kappa0 / (p.d_c * mu));
    let bound_v = p.kappa0 / mu;
    let c = traj.heat_constant * std::f64::consts::PI.sqrt();
    let bound_w = p.kappa0 * (c * p.d / (mu * p.d_g.sqrt()) + 1.0 / p.d_g);
    let slack = 1.05;
    let floor = 1e-10;
    let within = [tu <= bound_u * slack + floor, tv <= bound_v * slack + floor, tw <= bound_w * slack + floor];
    let note = if horizon_ok { String::new() } else { format!("insufficient horizon: t_end = {t_end} < 20/mu = {}", 20.0 / mu) };
    MassReport { horizon_ok, tail_u: tu, tail_v: tv, tail_w: tw, bound_u, bound_v, bound_w, within, note }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtinctionVerdict {
    Extinct,
    NotExtinct,
    HypothesisNotMet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionReport {
    /// (d_b+d)(d_c/a)²/(1+d_c/a)², the largest admissible M·K_w.
    pub threshold: f64,
    pub product: f64,
    pub smallness_ok: bool,
    pub caps_ok: bool,
    pub w_cap_ok: bool,
    pub max_uv_end: f64,
    /// u and v end both below or both above 1e-8.
    pub together: bool,
    pub verdict: ExtinctionVerdict,
    pub trajectory_extinct: bool,
}

/// Largest M·K_w allowed by the smallness condition, written as D·d_c²/(a+d_c)².
pub fn extinction_threshold(p: &ModelParams) -> f64 {
    p.dd() * p.d_c * p.d_c / ((p.a + p.d_c) * (p.a + p.d_c))
}

/// Checks the smallness hypotheses, simulates, and reports whether (u, v) → 0 uniformly.
pub fn extinction_check(p: &ModelParams, init: &SimState, k_w: f64, m: f64, cfg: &SimConfig) -> Result<ExtinctionReport, PdeError> {
    if p.a <= p.d_c {
        return Err(PdeError::Config("extinction check requires a > d_c".into()));
    }
    let threshold = extinction_threshold(p);
    let product = m * k_w;
    let smallness_ok = product <= threshold;
    let r = p.d_c / p.a;
    let caps_ok = init.u.iter().all(|&u| (0.0..=m).contains(&u)) && init.v.iter().all(|&v| v >= 0.0 && v < r * r * m);
    let traj = run(p, init, cfg, None)?;
    let w_cap_ok = traj.diagnostics.iter().all(|d| d.sup_w <= k_w);
    let end = traj.final_state();
    let max_u = sup(&end.u);
    let max_v = sup(&end.v);
    let max_uv_end = max_u.max(max_v);
    let together = (max_u < 1e-8) == (max_v < 1e-8);
    let trajectory_extinct = max_uv_end < 1e-8;
    let verdict = if !(smallness_ok && caps_ok && w_cap_ok) {
        ExtinctionVerdict::HypothesisNotMet
    } else if trajectory_extinct {
        ExtinctionVerdict::Extinct
    } else {
        ExtinctionVerdict::NotExtinct
    };
    Ok(ExtinctionReport { threshold, product, smallness_ok, caps_ok, w_cap_ok, max_uv_end, together, verdict, trajectory_extinct })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeMask {
    pub u: bool,
    pub v: bool,
    pub w: bool,
}

impl ProbeMask {
    pub const ALL: Self = Self { u: true, v: true, w: true };
    pub const W_ONLY: Self = Self { u: false, v: false, w: true };
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub n_probe: usize,
    /// Fitted exponential rate over the window, if the deviation grew through it.
    pub rate: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub predicted: Option<f64>,
    pub initial_deviation: f64,
    pub final_deviation: f64,
    pub note: String,
    pub trajectory: Trajectory,
}

/// Perturbs a pattern by `amplitude·cos(n_probe·πx)` (scaled by each field's
/// sup-norm, masked per component and off the null set on u, v) and fits the
/// growth rate of the deviation while it is between 3× and 100× `amplitude`.
pub fn instability_experiment(
    p: &ModelParams,
    pat: &Pattern,
    n_probe: usize,
    amplitude: f64,
    mask: ProbeMask,
    cfg: &SimConfig,
) -> Result<GrowthFit, PdeError> {
    if !(1e-6..=1e-3).contains(&amplitude) {
        return Err(PdeError::Config(format!("amplitude {amplitude} outside [1e-6, 1e-3]")));
    }
    if (pat.gamma - p.gamma).abs() > 1e-12 * p.gamma {
        return Err(PdeError::Config(format!("pattern gamma {} differs from model gamma {}", pat.gamma, p.gamma)));
    }
    let base = SimState::from_pattern(pat, p, cfg.n_grid);
    let mut init = base.clone();
    let h = cfg.h();
    let scales = [sup(&base.u), sup(&base.v), sup(&base.w)];
    for i in 0..cfg.n_grid {
        let x = i as f64 * h;
        let c = amplitude * (n_probe as f64 * std::f64::consts::PI * x).cos();
        let live = !pat.in_null_set(x);
        if mask.u && live {
            init.u[i] += c * scales[0];
        }
        if mask.v && live {
            init.v[i] += c * scales[1];
        }
        if mask.w {
            init.w[i] += c * scales[2];
        }
    }
    for f in [&mut init.u, &mut init.v, &mut init.w] {
        for x in f.iter_mut() {
            *x = x.max(0.0);
        }
    }
    let traj = run(p, &init, cfg, Some(&base))?;
    let lo = 3.0 * amplitude;
    let hi = 100.0 * amplitude;
    let pts: Vec<(f64, f64)> =
        traj.diagnostics.iter().filter(|r| r.deviation >= lo && r.deviation <= hi).map(|r| (r.t, r.deviation.ln())).collect();
    let reached = traj.diagnostics.iter().any(|r| r.deviation >= hi);
    let (rate, window, note) = if pts.len() >= 3 && reached {
        let nf = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        (Some(sxy / sxx), Some((pts[0].0, pts[pts.len() - 1].0)), String::new())
    } else {
        (None, None, format!("no growth: deviation never passed {hi:e} by t = {}", cfg.t_end))
    };
    let predicted = if n_probe == 0 {
        None
    } else if pat.is_constant() {
        spectral::constant_case_lambda(p, p.gamma, n_probe)?
    } else {
        spectral::find_unstable_eigenvalues(p, pat, n_probe..=n_probe)?.entries[0].lambda
    };
    let initial_deviation = traj.diagnostics[0].deviation;
    let final_deviation = traj.diagnostics.last().unwrap().deviation;
    Ok(GrowthFit { n_probe, rate, window, predicted, initial_deviation, final_deviation, note, trajectory: traj })
}
