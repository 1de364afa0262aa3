//! Stationary solutions: constants, continuous k-mode patterns built from the
//! time map, and discontinuous weak patterns glued from phase-plane arcs.

mod build;
mod discontinuous;
mod potential;
mod verify;

use thiserror::Error;

use crate::io::fmt_f64;
use crate::model::ModelError;
use crate::numerics::interp::Hermite;
use crate::numerics::OdeError;

pub use build::{build_pattern, constant_pattern, mode_symmetry_residual, nonexistence_guard, Regime, RegimeReport};
pub use discontinuous::{build_discontinuous_pattern, SegmentKind, SegmentPlan, SegmentSpec, StartSide};
pub use potential::{
    critical_period, half_periods, invert_time_map, potential_spec, time_map, time_map_derivative,
    time_map_derivative_halves, turning_points, EnergyLevel, Potential, PotentialSpec, TimeMap, Well,
};
pub use verify::{verify_pattern, VerifyReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("regime: {0}")]
    Regime(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("energy {e} outside the open interval ({lo}, {hi})")]
    EnergyRange { e: f64, lo: f64, hi: f64 },
    #[error("below critical: half-period {target} <= sqrt(gamma0) = {critical}")]
    BelowCritical { target: f64, critical: f64 },
    #[error("below critical: k = {k} needs gamma > k^2 gamma0 = {needed} (gamma = {gamma}); max feasible k is {max_modes}")]
    ModeInfeasible { k: usize, gamma: f64, needed: f64, max_modes: usize },
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
    #[error("plan line {line}: {message}")]
    Plan { line: usize, message: String },
    #[error("gluing infeasible between segments {first} and {second}: {reason}")]
    GluingInfeasible { first: usize, second: usize, reason: String },
    #[error("grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    IncreasingFirst,
    DecreasingFirst,
}

impl Orientation {
    pub fn label(&self) -> &'static str {
        match self {
            Orientation::IncreasingFirst => "increasing-first",
            Orientation::DecreasingFirst => "decreasing-first",
        }
    }
}

/// Switch point between an inner and an outer arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub x: f64,
    pub w: f64,
    /// |Z before − Z after| in the rescaled phase plane.
    pub z_jump: f64,
}

/// Numbers recorded while integrating a pattern.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Construction {
    /// Largest |z²/2 + H(w) − E| over integration nodes.
    pub energy_drift: f64,
    /// Lengths between consecutive z = 0 crossings in the rescaled variable.
    pub half_periods: Vec<f64>,
    /// Square of the summed half-period lengths.
    pub gamma_reconstructed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    /// dW/dx at the grid points.
    pub wx: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub k: usize,
    pub orientation: Orientation,
    pub gamma: f64,
    pub energy: Option<EnergyLevel>,
    pub continuous: bool,
    pub null_set: Vec<(f64, f64)>,
    pub junctions: Vec<Junction>,
    pub construction: Construction,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Cubic Hermite interpolant of W using the stored slopes.
    pub fn w_at(&self, x: f64) -> f64 {
        Hermite::new(&self.grid, &self.w, &self.wx).eval(x)
    }

    pub fn in_null_set(&self, x: f64) -> bool {
        self.null_set.iter().any(|&(a, b)| x >= a && x <= b)
    }

    /// True when `w` is (numerically) a single constant state.
    pub fn is_constant(&self) -> bool {
        self.k == 0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,W,U,V,in_null_set\n");
        for i in 0..self.len() {
            let flag = u8::from(self.in_null_set(self.grid[i]));
            s.push_str(&format!(
                "{},{},{},{},{flag}\n",
                fmt_f64(self.grid[i]),
                fmt_f64(self.w[i]),
                fmt_f64(self.u[i]),
                fmt_f64(self.v[i])
            ));
        }
        s
    }

    /// JSON metadata sidecar with mode count, energy, γ and verification residuals.
    pub fn metadata_json(&self, report: &VerifyReport) -> String {
        let value = serde_json::json!({
            "k": self.k,
            "orientation": self.orientation.label(),
            "continuous": self.continuous,
            "gamma": self.gamma,
            "gamma_reconstructed": self.construction.gamma_reconstructed,
            "energy": self.energy.map(|e| e.e),
            "w1E": self.energy.map(|e| e.w1),
            "w2E": self.energy.map(|e| e.w2),
            "n_grid": self.len(),
            "energy_drift": self.construction.energy_drift,
            "null_set": self.null_set.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
            "junctions": self.junctions.iter().map(|j| serde_json::json!({"x": j.x, "w": j.w, "z_jump": j.z_jump})).collect::<Vec<_>>(),
            "residual": report.residual,
            "residual_scale": report.residual_scale,
            "boundary_slope": report.boundary_slope,
            "weak_residual": report.weak_residual,
            "junction_jump": report.junction_jump,
            "lift_error": report.lift_error,
        });
        serde_json::to_string_pretty(&value).expect("json serialization") + "\n"
    }
}

/// Lifts W to (U, V) off the null set; zero on it.
pub(crate) fn lift(p: &crate::ModelParams, grid: &[f64], w: &[f64], null_set: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let vw = p.vw_product();
    let ratio = (p.a - p.d_c) / p.d_c;
    let mut u = Vec::with_capacity(w.len());
    let mut v = Vec::with_capacity(w.len());
    for (x, &wi) in grid.iter().zip(w) {
        if null_set.iter().any(|&(a, b)| *x >= a && *x <= b) {
            u.push(0.0);
            v.push(0.0);
        } else {
            let vi = vw / wi;
            v.push(vi);
            u.push(ratio * vi);
        }
    }
    (u, v)
}
