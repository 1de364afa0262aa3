use crate::model::{self, StateKind};
use crate::numerics::interp::Hermite;
use crate::numerics::ode::{integrate, locate_event, Flow, OdeOptions};
use crate::ModelParams;

use super::potential::{invert_time_map, potential_spec, Potential, PotentialSpec};
use super::{lift, Construction, Orientation, Pattern, PatternError};

pub(crate) const RTOL: f64 = 1e-13;
pub(crate) const ATOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    OnlyTrivial,
    NoPositive,
    OnlyConstants,
    PatternsExist,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::OnlyTrivial => "only-trivial",
            Regime::NoPositive => "no-positive",
            Regime::OnlyConstants => "only-constants",
            Regime::PatternsExist => "patterns-exist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Largest k with γ > k²γ₀ (0 when no pattern exists).
    pub max_modes: usize,
    pub gamma0: Option<f64>,
}

/// Largest k with γ > k²·γ₀.
pub(crate) fn max_feasible_modes(gamma: f64, gamma0: f64) -> usize {
    let mut n = (gamma / gamma0).sqrt().floor() as usize;
    while n > 0 && gamma <= (n * n) as f64 * gamma0 {
        n -= 1;
    }
    while gamma > ((n + 1) * (n + 1)) as f64 * gamma0 {
        n += 1;
    }
    n
}

/// Which kinds of stationary solutions the parameters admit.
pub fn nonexistence_guard(p: &ModelParams) -> RegimeReport {
    if p.a <= p.d_c {
        return RegimeReport { regime: Regime::OnlyTrivial, max_modes: 0, gamma0: None };
    }
    let states = model::constant_states(p);
    if states.iter().any(|s| s.kind == StateKind::Double) {
        return RegimeReport { regime: Regime::OnlyConstants, max_modes: 0, gamma0: None };
    }
    let Ok(spec) = potential_spec(p) else {
        return RegimeReport { regime: Regime::NoPositive, max_modes: 0, gamma0: None };
    };
    let n = max_feasible_modes(p.gamma, spec.gamma0);
    let regime = if n == 0 { Regime::OnlyConstants } else { Regime::PatternsExist };
    RegimeReport { regime, max_modes: n, gamma0: Some(spec.gamma0) }
}

pub(crate) fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Spatially constant pattern at the minus or plus state.
pub fn constant_pattern(p: &ModelParams, kind: StateKind, n_grid: usize) -> Result<Pattern, PatternError> {
    if n_grid < 2 {
        return Err(PatternError::Grid(format!("n_grid = {n_grid} is too small")));
    }
    let state = model::constant_states(p)
        .into_iter()
        .find(|s| s.kind == kind && kind != StateKind::Trivial)
        .ok_or_else(|| PatternError::Regime(format!("no {} constant state for these parameters", kind.label())))?;
    let grid = uniform_grid(n_grid);
    let w = vec![state.w; n_grid];
    let (u, v) = lift(p, &grid, &w, &[]);
    Ok(Pattern {
        grid,
        w,
        wx: vec![0.0; n_grid],
        u,
        v,
        k: 0,
        orientation: Orientation::IncreasingFirst,
        gamma: p.gamma,
        energy: None,
        continuous: true,
        null_set: Vec::new(),
        junctions: Vec::new(),
        construction: Construction { gamma_reconstructed: p.gamma, ..Construction::default() },
    })
}

pub(crate) fn energy_drift(spec: &PotentialSpec, e: f64, y: &[f64; 2]) -> f64 {
    let b = spec.w_minus;
    (0.5 * y[1] * y[1] + spec.energy_increment(b, y[0] - b) - (e - spec.h_min)).abs()
}

/// Continuous k-mode pattern on a uniform grid of `n_grid` points.
///
/// The phase-plane system w′ = z, z′ = −h(w) is integrated in ξ = √γ·x from a
/// turning point, landing on every grid node; zero crossings of z are located
/// along the way to reconstruct the half-period lengths.
pub fn build_pattern(p: &ModelParams, k: usize, orientation: Orientation, n_grid: usize) -> Result<Pattern, PatternError> {
    if n_grid < 64 {
        return Err(PatternError::Grid(format!("n_grid = {n_grid} < 64")));
    }
    if k == 0 {
        return Err(PatternError::Grid("mode count must be at least 1; use constant_pattern for k = 0".into()));
    }
    let spec = potential_spec(p)?;
    let needed = (k * k) as f64 * spec.gamma0;
    if p.gamma <= needed {
        return Err(PatternError::ModeInfeasible {
            k,
            gamma: p.gamma,
            needed,
            max_modes: max_feasible_modes(p.gamma, spec.gamma0),
        });
    }
    let len = p.gamma.sqrt();
    let half = len / k as f64;
    let lvl = invert_time_map(&spec, half)?;
    let start = match orientation {
        Orientation::IncreasingFirst => lvl.w1,
        Orientation::DecreasingFirst => lvl.w2,
    };
    let grid = uniform_grid(n_grid);
    let stops: Vec<f64> = grid[1..].iter().map(|x| x * len).collect();

    let mut w = vec![0.0; n_grid];
    let mut z = vec![0.0; n_grid];
    w[0] = start;
    let mut next = 0usize;
    let mut events: Vec<f64> = Vec::new();
    let mut drift = energy_drift(&spec, lvl.e, &[start, 0.0]);
    let mut opts = OdeOptions::new(RTOL, ATOL);
    opts.h_max = Some(0.05 * half);
    let rhs = |_: f64, y: &[f64; 2]| [y[1], -spec.h(y[0])];
    integrate(rhs, 0.0, [start, 0.0], len + 0.75 * half, &stops, &opts, |step| {
        drift = drift.max(energy_drift(&spec, lvl.e, &step.y1));
        while next < stops.len() && step.t1 >= stops[next] {
            let y = if step.t1 == stops[next] { step.y1 } else { step.at(stops[next]) };
            w[next + 1] = y[0];
            z[next + 1] = y[1];
            next += 1;
        }
        if step.t0 > 0.0 || step.y0[1] != 0.0 {
            if let Some(t) = locate_event(step, |_, y| y[1]) {
                if t > 0.0 && events.last().is_none_or(|&last| t - last > 1e-9 * half) {
                    events.push(t);
                }
            }
        }
        if events.len() >= k && next >= stops.len() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    })?;
    if next < stops.len() || events.len() < k {
        return Err(PatternError::Accuracy(format!(
            "pattern integration ended early: {next} of {} nodes, {} of {k} half-periods",
            stops.len(),
            events.len()
        )));
    }
    let mut half_periods = Vec::with_capacity(k);
    let mut prev = 0.0;
    for &t in events.iter().take(k) {
        half_periods.push(t - prev);
        prev = t;
    }
    let total: f64 = half_periods.iter().sum();
    let wx: Vec<f64> = z.iter().map(|zi| zi * len).collect();
    let (u, v) = lift(p, &grid, &w, &[]);
    Ok(Pattern {
        grid,
        w,
        wx,
        u,
        v,
        k,
        orientation,
        gamma: p.gamma,
        energy: Some(lvl),
        continuous: true,
        null_set: Vec::new(),
        junctions: Vec::new(),
        construction: Construction { energy_drift: drift, half_periods, gamma_reconstructed: total * total },
    })
}

/// Max deviation from the k-mode identities: W(x) = W(x − 2j/k) and W(x) = W(2j/k − x).
///
/// Every grid value is compared with the interpolated first mode at its folded position.
pub fn mode_symmetry_residual(pat: &Pattern) -> f64 {
    if pat.k <= 1 {
        return 0.0;
    }
    let k = pat.k as f64;
    let period = 2.0 / k;
    let interp = Hermite::new(&pat.grid, &pat.w, &pat.wx);
    let mut worst: f64 = 0.0;
    for (x, wi) in pat.grid.iter().zip(&pat.w) {
        let mut y = x.rem_euclid(period);
        if y > 1.0 / k {
            y = period - y;
        }
        worst = worst.max((wi - interp.eval(y)).abs());
    }
    worst
}
