//! Space-homogeneous kinetics: integration, the (u, X, Y) transform, equilibrium
//! classification and asymptotic ratio measurements.

use num_complex::Complex64;
use thiserror::Error;

use crate::io::csv_table;
use crate::model::{self, constant_states, reaction, theta, ModelParams, StateKind};
use crate::numerics::cubic::eigenvalues3;
use crate::numerics::ode::{self, Flow, OdeError, OdeOptions};

type Params = ModelParams<f64>;

/// Real-part band treated as marginal when classifying equilibria.
pub const MARGINAL_BAND: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("rel_tol {0} outside [1e-12, 1e-3]")]
    Tolerance(f64),
    #[error("initial state must be nonnegative and finite: ({u}, {v}, {w})")]
    BadInit { u: f64, v: f64, w: f64 },
    #[error("integration stalled (stiffness) at t = {t}")]
    Stiff { t: f64 },
    #[error("integrator failure: {0}")]
    Integrator(OdeError),
    #[error("component {component} reached {value} at t = {t}, beyond round-off")]
    NegativeDrift { t: f64, component: &'static str, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

impl From<OdeError> for KineticsError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::StepUnderflow { t, .. } | OdeError::TooManySteps { t, .. } => KineticsError::Stiff { t },
            other => KineticsError::Integrator(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticState {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedState {
    pub t: f64,
    pub u: f64,
    pub x: f64,
    pub y: f64,
}

fn check_tol(rel_tol: f64) -> Result<(), KineticsError> {
    if !(1e-12..=1e-3).contains(&rel_tol) {
        return Err(KineticsError::Tolerance(rel_tol));
    }
    Ok(())
}

fn clip(t: f64, names: [&'static str; 3], y: &mut [f64; 3], floor: f64) -> Result<(), KineticsError> {
    for (i, c) in y.iter_mut().enumerate() {
        if *c < 0.0 {
            if *c < -floor {
                return Err(KineticsError::NegativeDrift { t, component: names[i], value: *c });
            }
            *c = 0.0;
        }
    }
    Ok(())
}

/// Adaptive RK45 trajectory of the kinetic system, one sample per accepted step.
pub fn integrate_kinetics(
    p: &Params,
    init: KineticState,
    t_end: f64,
    rel_tol: f64,
) -> Result<Vec<KineticState>, KineticsError> {
    check_tol(rel_tol)?;
    let y0 = [init.u, init.v, init.w];
    if y0.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(KineticsError::BadInit { u: init.u, v: init.v, w: init.w });
    }
    let scale = y0.iter().fold(p.kappa0 / p.d_g, |m, c| m.max(*c)).max(1.0);
    let floor = 10.0 * rel_tol * scale;
    let opts = OdeOptions::new(rel_tol, rel_tol * 1e-9 * scale);
    let mut out = vec![init];
    let mut fail = None;
    let f = |_: f64, y: &[f64; 3]| reaction(p, y[0].max(0.0), y[1].max(0.0), y[2]);
    ode::integrate(f, init.t, y0, init.t + t_end, &[], &opts, |st| {
        let mut y = st.y1;
        if let Err(e) = clip(st.t1, ["u", "v", "w"], &mut y, floor) {
            fail = Some(e);
            return Flow::Stop;
        }
        out.push(KineticState { t: st.t1, u: y[0], v: y[1], w: y[2] });
        Flow::Continue
    })?;
    match fail {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// X = v/u, Y = u·w.
pub fn transform_xy(s: KineticState) -> Result<TransformedState, KineticsError> {
    if !(s.u > 0.0) {
        return Err(KineticsError::Domain(format!("transform needs u > 0, got {}", s.u)));
    }
    Ok(TransformedState { t: s.t, u: s.u, x: s.v / s.u, y: s.u * s.w })
}

pub fn transformed_rhs(p: &Params, u: f64, x: f64, y: f64) -> [f64; 3] {
    let g = p.a * x / (1.0 + x) - p.d_c;
    [
        g * u,
        -(p.dd() + p.a - p.d_c) * x + p.a * x / (1.0 + x) + y,
        g * y - p.d_g * y - u * u * y + p.d * x * u * u + p.kappa0 * u,
    ]
}

/// Jacobian of the (u, X, Y) system.
pub fn transformed_jacobian(p: &Params, u: f64, x: f64, y: f64) -> Mat3 {
    let q = 1.0 + x;
    let g = p.a * x / q - p.d_c;
    [
        [g, p.a * u / (q * q), 0.0],
        [0.0, -(p.dd() + p.a - p.d_c) + p.a / (q * q), 1.0],
        [-2.0 * u * y + 2.0 * p.d * x * u + p.kappa0, p.a * y / (q * q) + p.d * u * u, g - p.d_g - u * u],
    ]
}

type Mat3 = model::Mat3<f64>;

/// Trajectory of the transformed system.
pub fn integrate_transformed(
    p: &Params,
    init: TransformedState,
    t_end: f64,
    rel_tol: f64,
) -> Result<Vec<TransformedState>, KineticsError> {
    check_tol(rel_tol)?;
    let y0 = [init.u, init.x, init.y];
    if y0.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(KineticsError::BadInit { u: init.u, v: init.x, w: init.y });
    }
    let scale = y0.iter().fold(1.0f64, |m, c| m.max(*c));
    let floor = 10.0 * rel_tol * scale;
    let opts = OdeOptions::new(rel_tol, rel_tol * 1e-9 * scale);
    let mut out = vec![init];
    let mut fail = None;
    let f = |_: f64, y: &[f64; 3]| transformed_rhs(p, y[0].max(0.0), y[1].max(0.0), y[2].max(0.0));
    ode::integrate(f, init.t, y0, init.t + t_end, &[], &opts, |st| {
        let mut y = st.y1;
        if let Err(e) = clip(st.t1, ["u", "X", "Y"], &mut y, floor) {
            fail = Some(e);
            return Flow::Stop;
        }
        out.push(TransformedState { t: st.t1, u: y[0], x: y[1], y: y[2] });
        Flow::Continue
    })?;
    match fail {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        }
    }
}

pub fn verdict_of(eigs: &[Complex64; 3]) -> Verdict {
    if eigs.iter().any(|z| z.re > MARGINAL_BAND) {
        Verdict::Unstable
    } else if eigs.iter().all(|z| z.re < -MARGINAL_BAND) {
        Verdict::Stable
    } else {
        Verdict::Marginal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub name: &'static str,
    /// Coordinates in (u, X, Y).
    pub location: [f64; 3],
    pub jacobian: Mat3,
    pub eigenvalues: [Complex64; 3],
    pub verdict: Verdict,
}

fn report(p: &Params, name: &'static str, location: [f64; 3]) -> EquilibriumReport {
    let jacobian = transformed_jacobian(p, location[0], location[1], location[2]);
    let eigenvalues = eigenvalues3(&jacobian);
    EquilibriumReport { name, location, jacobian, eigenvalues, verdict: verdict_of(&eigenvalues) }
}

/// Equilibria of the (u, X, Y) system with their linear stability.
pub fn classify_equilibria(p: &Params) -> Vec<EquilibriumReport> {
    let mut out = vec![report(p, "origin", [0.0, 0.0, 0.0])];
    let dd = p.dd();
    if p.d_c > dd {
        out.push(report(p, "E1", [0.0, (p.d_c - dd) / (dd + p.a - p.d_c), 0.0]));
    }
    if p.a > p.d_c {
        let x = p.d_c / (p.a - p.d_c);
        for s in constant_states(p) {
            let name = match s.kind {
                StateKind::Minus => "minus",
                StateKind::Plus => "plus",
                StateKind::Double => "double",
                StateKind::Trivial => continue,
            };
            out.push(report(p, name, [s.u, x, p.k_const()]));
        }
    }
    out
}

/// Which appendix statement governs the long-time ratio v/u.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// a < d_c, d_c < d_b+d: ratio → 0.
    SubcriticalZero,
    /// a < d_c, d_c > d_b+d, a > d_c−(d_b+d): finite limit (two competing formulas).
    SubcriticalFinite,
    /// a < d_c, d_c > d_b+d, a ≤ d_c−(d_b+d): ratio → ∞.
    SubcriticalInfinite,
    /// a = d_c, a < d_b+d: ratio → 0.
    CriticalZero,
    /// a = d_c, a > d_b+d: ratio → (a−(d_b+d))/(d_b+d).
    CriticalFinite,
    /// a > d_c, κ₀² < Θ, d_c < d_b+d: ratio → 0.
    NoStateZero,
    /// a > d_c, κ₀² < Θ, d_c > d_b+d: ratio → (d_c−(d_b+d))/(d_b+d+a−d_c).
    NoStateFinite,
    /// a > d_c, κ₀² ≥ Θ, u(0) < ū₊: convergence to the trivial state.
    SmallDataExtinction,
    Unclassified,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::SubcriticalZero => "a<d_c; d_c<d_b+d; ratio->0",
            Branch::SubcriticalFinite => "a<d_c; d_c>d_b+d; a>d_c-(d_b+d); finite ratio",
            Branch::SubcriticalInfinite => "a<d_c; d_c>d_b+d; a<=d_c-(d_b+d); ratio->inf",
            Branch::CriticalZero => "a=d_c; a<d_b+d; ratio->0",
            Branch::CriticalFinite => "a=d_c; a>d_b+d; ratio->(a-(d_b+d))/(d_b+d)",
            Branch::NoStateZero => "a>d_c; kappa0^2<theta; d_c<d_b+d; ratio->0",
            Branch::NoStateFinite => "a>d_c; kappa0^2<theta; d_c>d_b+d; ratio->(d_c-(d_b+d))/(d_b+d+a-d_c)",
            Branch::SmallDataExtinction => "a>d_c; kappa0^2>=theta; u0<u_plus; extinction",
            Branch::Unclassified => "unclassified",
        }
    }
}

pub fn predict_branch(p: &Params, u0: f64) -> Branch {
    let dd = p.dd();
    if p.a < p.d_c {
        if p.d_c < dd {
            Branch::SubcriticalZero
        } else if p.d_c > dd {
            if p.a > p.d_c - dd {
                Branch::SubcriticalFinite
            } else {
                Branch::SubcriticalInfinite
            }
        } else {
            Branch::Unclassified
        }
    } else if p.a == p.d_c {
        if p.a < dd {
            Branch::CriticalZero
        } else if p.a > dd {
            Branch::CriticalFinite
        } else {
            Branch::Unclassified
        }
    } else {
        let th = theta(p).expect("a != d_c");
        if p.kappa0 * p.kappa0 < th {
            if p.d_c < dd {
                Branch::NoStateZero
            } else if p.d_c > dd {
                Branch::NoStateFinite
            } else {
                Branch::Unclassified
            }
        } else {
            let u_plus = constant_states(p)
                .into_iter()
                .filter(|s| s.kind != StateKind::Trivial)
                .map(|s| s.u)
                .fold(f64::INFINITY, f64::min);
            if u0 < u_plus {
                Branch::SmallDataExtinction
            } else {
                Branch::Unclassified
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub label: &'static str,
    pub value: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    /// Geometric mean of v/u over the final 20% of the horizon.
    pub estimate: f64,
    /// Same quantity over the preceding window [60%, 80%].
    pub previous_window: f64,
    /// v/u at the final time.
    pub tail_value: f64,
    /// Successive windows agree (Cauchy criterion).
    pub converged: bool,
    pub branch: Branch,
    /// Closed-form limits to compare against; matched within 1e-3 relative.
    pub candidates: Vec<Candidate>,
    pub extinct: bool,
    pub u_end: f64,
}

/// Relative window agreement for the ratio Cauchy test.
pub const RATIO_WINDOW_TOL: f64 = 1e-3;

fn log_mean(traj: &[TransformedState], t_lo: f64, t_hi: f64) -> f64 {
    let mut acc = 0.0;
    let mut span = 0.0;
    for pair in traj.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let lo = a.t.max(t_lo);
        let hi = b.t.min(t_hi);
        if hi <= lo {
            continue;
        }
        let la = a.x.max(f64::MIN_POSITIVE).ln();
        let lb = b.x.max(f64::MIN_POSITIVE).ln();
        let at = |t: f64| la + (lb - la) * (t - a.t) / (b.t - a.t);
        acc += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        span += hi - lo;
    }
    (acc / span).exp()
}

/// Integrates the transformed system and measures lim v/u.
pub fn asymptotic_ratio(p: &Params, init: KineticState, t_end: f64) -> Result<RatioReport, KineticsError> {
    if !(init.u > 0.0 && init.v > 0.0 && init.w > 0.0) {
        return Err(KineticsError::BadInit { u: init.u, v: init.v, w: init.w });
    }
    let z0 = transform_xy(init)?;
    let traj = integrate_transformed(p, z0, t_end, 1e-11)?;
    let t0 = init.t;
    let estimate = log_mean(&traj, t0 + 0.8 * t_end, t0 + t_end);
    let previous_window = log_mean(&traj, t0 + 0.6 * t_end, t0 + 0.8 * t_end);
    let last = *traj.last().expect("nonempty trajectory");
    let converged = (estimate - previous_window).abs() <= RATIO_WINDOW_TOL * estimate.abs() + 1e-9;
    let branch = predict_branch(p, init.u);
    let dd = p.dd();
    let mut candidates = Vec::new();
    let mut push = |label: &'static str, value: f64| {
        let matches = (estimate - value).abs() <= 1e-3 * value.abs().max(1e-3);
        candidates.push(Candidate { label, value, matches });
    };
    match branch {
        Branch::SubcriticalFinite => {
            push("d_c*(d_b+d)/(d_b+d+a-d_c)", p.d_c * dd / (dd + p.a - p.d_c));
            push("(d_c-(d_b+d))/(d_b+d+a-d_c)", (p.d_c - dd) / (dd + p.a - p.d_c));
        }
        Branch::CriticalFinite => push("(a-(d_b+d))/(d_b+d)", (p.a - dd) / dd),
        Branch::NoStateFinite => push("(d_c-(d_b+d))/(d_b+d+a-d_c)", (p.d_c - dd) / (dd + p.a - p.d_c)),
        Branch::SubcriticalZero | Branch::CriticalZero | Branch::NoStateZero => push("0", 0.0),
        _ => {}
    }
    let extinct = last.u <= 1e-6 * init.u;
    Ok(RatioReport { estimate, previous_window, tail_value: last.x, converged, branch, candidates, extinct, u_end: last.u })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrappingReport {
    pub holds: bool,
    pub hypotheses_met: bool,
    pub note: String,
}

/// Checks X < d_c/(a−d_c) and Y < d_c(d_b+d)/(a−d_c) along a trajectory when the
/// invariance hypotheses hold at its first sample.
pub fn trapping_region_check(p: &Params, traj: &[KineticState]) -> TrappingReport {
    let vacuous = |note: &str| TrappingReport { holds: true, hypotheses_met: false, note: note.to_string() };
    if p.a <= p.d_c {
        return vacuous("hypotheses unmet: a <= d_c");
    }
    let Some(first) = traj.first() else {
        return vacuous("hypotheses unmet: empty trajectory");
    };
    if traj.iter().any(|s| !(s.u > 0.0)) {
        return vacuous("hypotheses unmet: u not positive throughout");
    }
    let x_cap = p.d_c / (p.a - p.d_c);
    let y_cap = p.k_const();
    let th = theta(p).expect("a != d_c");
    let regime_ok = p.kappa0 * p.kappa0 < th || p.u_plus().is_some_and(|up| first.u < up);
    if !regime_ok {
        return vacuous("hypotheses unmet: need kappa0^2 < theta or u(0) < u_plus");
    }
    if !(first.v / first.u < x_cap && first.u * first.w < y_cap) {
        return vacuous("hypotheses unmet: initial X or Y outside the region");
    }
    match traj.iter().find(|s| !(s.v / s.u < x_cap && s.u * s.w < y_cap)) {
        None => TrappingReport { holds: true, hypotheses_met: true, note: "bounds hold at every sample".into() },
        Some(s) => TrappingReport {
            holds: false,
            hypotheses_met: true,
            note: format!("bound violated at t = {} (X = {}, Y = {})", s.t, s.v / s.u, s.u * s.w),
        },
    }
}

/// Trajectory CSV `t,u,v,w[,X,Y]`; X and Y are blank-free NaN where u = 0.
pub fn trajectory_csv(traj: &[KineticState], with_xy: bool) -> String {
    let header: &[&str] = if with_xy { &["t", "u", "v", "w", "X", "Y"] } else { &["t", "u", "v", "w"] };
    csv_table(
        header,
        traj.iter().map(|s| {
            let mut row = vec![s.t, s.u, s.v, s.w];
            if with_xy {
                let (x, y) = if s.u > 0.0 { (s.v / s.u, s.u * s.w) } else { (f64::NAN, 0.0) };
                row.extend([x, y]);
            }
            row
        }),
    )
}

/// Equilibrium table: name, location, eigenvalue real/imaginary parts, verdict.
pub fn equilibria_csv(reports: &[EquilibriumReport]) -> String {
    let mut out = String::from("name,u,X,Y,re1,im1,re2,im2,re3,im3,verdict\n");
    for r in reports {
        let mut fields = vec![r.name.to_string()];
        fields.extend(r.location.iter().map(|v| crate::io::fmt_f64(*v)));
        for z in &r.eigenvalues {
            fields.push(crate::io::fmt_f64(z.re));
            fields.push(crate::io::fmt_f64(z.im));
        }
        fields.push(r.verdict.label().to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
