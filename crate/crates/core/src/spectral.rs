//! Unstable point spectrum of the linearization around a stationary pattern.
//!
//! An eigenvalue λ ∈ (0, λ₀) exists exactly when the Neumann problem
//! −(1/γ)η″ = μ·q(x, λ)·η has μ_n = 1 for some n, with
//! q(x, λ) = det(𝔸(x) − λI)/det(𝔸₁₂ − λI).

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::io::fmt_f64;
use crate::model::{self, det3, ModelError, StateKind};
use crate::numerics::cubic::eigenvalues3;
use crate::numerics::tridiag::{SymTridiag, TridiagError};
use crate::pattern::Pattern;
use crate::{Mat3, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tridiag(#[from] TridiagError),
    #[error("lambda = {lambda} is within the continuous-spectrum guard of an eigenvalue of A12")]
    NearSingular { lambda: f64 },
    #[error("weight q is not positive at node {index} (q = {value})")]
    Positivity { index: usize, value: f64 },
    #[error("Richardson estimates for mu_{n} moved by {shift:e} (relative) between grid pairs")]
    Resolution { n: usize, shift: f64 },
    #[error("excluded: {0}")]
    Excluded(String),
    #[error("grid: {0}")]
    Grid(String),
}

/// det(𝔸₁₂ − λI).
fn det_a12_shift(p: &ModelParams, lambda: f64) -> Result<f64, SpectralError> {
    let m = model::a12_matrix(p)?;
    Ok((m[0][0] - lambda) * (m[1][1] - lambda) - m[0][1] * m[1][0])
}

fn shifted(m: &Mat3, lambda: f64) -> Mat3 {
    let mut s = *m;
    for (i, row) in s.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    s
}

/// Guard against λ at (or rounding-close to) an eigenvalue of 𝔸₁₂.
fn checked_denominator(p: &ModelParams, lambda: f64) -> Result<f64, SpectralError> {
    let den = det_a12_shift(p, lambda)?;
    let m = model::a12_matrix(p)?;
    let scale = m.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs())).powi(2);
    let (l0, ln) = model::a12_eigenvalues(p)?;
    let guard = 1e-12 * l0.abs().max(1.0);
    if den.abs() <= 1e-12 * scale || (lambda - l0).abs() <= guard || (lambda - ln).abs() <= guard {
        return Err(SpectralError::NearSingular { lambda });
    }
    Ok(den)
}

/// q at one value of W (off the null set).
pub fn q_value(p: &ModelParams, w: f64, lambda: f64) -> Result<f64, SpectralError> {
    let den = checked_denominator(p, lambda)?;
    Ok(det3(&shifted(&model::linearization_matrix(p, w)?, lambda)) / den)
}

/// q(·, λ) sampled on the pattern grid; −d_g − λ on the null set.
pub fn q_potential(p: &ModelParams, pat: &Pattern, lambda: f64) -> Result<Vec<f64>, SpectralError> {
    let den = checked_denominator(p, lambda)?;
    pat.grid
        .iter()
        .zip(&pat.w)
        .map(|(&x, &w)| {
            if pat.in_null_set(x) {
                Ok(-p.d_g - lambda)
            } else {
                Ok(det3(&shifted(&model::linearization_matrix(p, w)?, lambda)) / den)
            }
        })
        .collect()
}

/// Neumann problem −(1/γ)η″ = μ·q·η on [0, 1]; `q` sampled on a uniform grid
/// whose interval count is a multiple of 4.
#[derive(Debug, Clone, PartialEq)]
pub struct SlProblem {
    pub gamma: f64,
    pub q: Vec<f64>,
}

/// Ghost-point Neumann discretization with interval count `n`, symmetrized by
/// trapezoid weights and then by the inverse square root of the weight.
fn sl_matrix(gamma: f64, q: &[f64], stride: usize) -> Result<SymTridiag, SpectralError> {
    let nodes: Vec<f64> = q.iter().step_by(stride).copied().collect();
    let n = nodes.len() - 1;
    let h = 1.0 / n as f64;
    let c = 1.0 / (gamma * h * h);
    let mut mass = Vec::with_capacity(n + 1);
    for (i, &qi) in nodes.iter().enumerate() {
        if !(qi > 0.0) {
            return Err(SpectralError::Positivity { index: i * stride, value: qi });
        }
        let tau = if i == 0 || i == n { 0.5 } else { 1.0 };
        mass.push(tau * qi);
    }
    let mut diag = Vec::with_capacity(n + 1);
    for (i, m) in mass.iter().enumerate() {
        let k = if i == 0 || i == n { c } else { 2.0 * c };
        diag.push(k / m);
    }
    let off = (0..n).map(|i| -c / (mass[i] * mass[i + 1]).sqrt()).collect();
    Ok(SymTridiag::new(diag, off))
}

/// Discrete μ_1..μ_{n_max} on the grid with `q.len() − 1` intervals, without extrapolation.
pub fn sl_eigenvalues_single(prob: &SlProblem, n_max: usize) -> Result<Vec<f64>, SpectralError> {
    let m = sl_matrix(prob.gamma, &prob.q, 1)?;
    (1..=n_max).map(|n| m.eigenvalue(n).map_err(SpectralError::from)).collect()
}

/// Discrete eigenfunctions η_1..η_{n_max} on the full grid, normalized so that
/// the trapezoid sum of q·η² is 1 and η(0) ≥ 0.
pub fn sl_eigenfunctions(prob: &SlProblem, n_max: usize) -> Result<Vec<Vec<f64>>, SpectralError> {
    let m = sl_matrix(prob.gamma, &prob.q, 1)?;
    let n = prob.q.len() - 1;
    let h = 1.0 / n as f64;
    let weight: Vec<f64> =
        prob.q.iter().enumerate().map(|(i, q)| if i == 0 || i == n { 0.5 * q } else { *q }).collect();
    (1..=n_max)
        .map(|k| {
            let mu = m.eigenvalue(k)?;
            let y = m.eigenvector(mu)?;
            let mut eta: Vec<f64> = y.iter().zip(&weight).map(|(y, w)| y / w.sqrt()).collect();
            let norm = eta.iter().zip(&weight).map(|(e, w)| w * e * e * h).sum::<f64>().sqrt();
            let sign = if eta[0] < 0.0 { -1.0 } else { 1.0 };
            eta.iter_mut().for_each(|e| *e *= sign / norm);
            Ok(eta)
        })
        .collect()
}

fn check_grid(prob: &SlProblem, n_max: usize) -> Result<usize, SpectralError> {
    let intervals = prob.q.len().saturating_sub(1);
    if intervals < 32 || !intervals.is_multiple_of(4) {
        return Err(SpectralError::Grid(format!("need a multiple of 4 intervals (>= 32), got {intervals}")));
    }
    if n_max == 0 || n_max > intervals / 4 / 8 {
        return Err(SpectralError::Grid(format!("n_max = {n_max} exceeds coarse grid / 8 = {}", intervals / 32)));
    }
    Ok(intervals)
}

/// Richardson-extrapolated μ_n from the two finest grids, with the shift
/// against the extrapolation from the two coarser ones.
fn richardson(mats: &[SymTridiag; 3], n: usize) -> Result<(f64, f64), SpectralError> {
    let coarse = mats[0].eigenvalue(n)?;
    let mid = mats[1].eigenvalue(n)?;
    let fine = mats[2].eigenvalue(n)?;
    let r_fine = (4.0 * fine - mid) / 3.0;
    let r_coarse = (4.0 * mid - coarse) / 3.0;
    Ok((r_fine, (r_fine - r_coarse).abs() / r_fine.abs()))
}

fn sl_mats(prob: &SlProblem) -> Result<[SymTridiag; 3], SpectralError> {
    Ok([sl_matrix(prob.gamma, &prob.q, 4)?, sl_matrix(prob.gamma, &prob.q, 2)?, sl_matrix(prob.gamma, &prob.q, 1)?])
}

/// Largest accepted relative shift between successive Richardson estimates.
pub const RESOLUTION_TOL: f64 = 1e-6;

/// The `n_max` smallest nonzero eigenvalues, extrapolated from the grids with
/// M/2 and M intervals (M = `q.len() − 1`); the M/4 grid only checks resolution.
pub fn sl_eigenvalues(prob: &SlProblem, n_max: usize) -> Result<Vec<f64>, SpectralError> {
    check_grid(prob, n_max)?;
    let mats = sl_mats(prob)?;
    (1..=n_max)
        .map(|n| {
            let (mu, shift) = richardson(&mats, n)?;
            if shift > RESOLUTION_TOL {
                return Err(SpectralError::Resolution { n, shift });
            }
            Ok(mu)
        })
        .collect()
}

/// Single extrapolated μ_n, used inside root searches.
fn sl_eigenvalue(prob: &SlProblem, n: usize) -> Result<(f64, f64), SpectralError> {
    richardson(&sl_mats(prob)?, n)
}

/// Default finest SL grid (intervals); Richardson uses 2048 and 4096.
pub const SL_INTERVALS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEntry {
    pub n: usize,
    pub lambda: Option<f64>,
    /// |μ_n(q(·, λ_n)) − 1|.
    pub residual: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub lambda0: f64,
    pub lambda_neg: f64,
    pub entries: Vec<LambdaEntry>,
    /// (λ₀ − ε, λ₀): the window actually searched.
    pub epsilon_window: (f64, f64),
    pub notes: Vec<String>,
}

impl SpectrumReport {
    pub fn found(&self) -> Vec<(usize, f64)> {
        self.entries.iter().filter_map(|e| e.lambda.map(|l| (e.n, l))).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "lambda0={}", fmt_f64(self.lambda0));
        let _ = writeln!(s, "epsilon={}", fmt_f64(self.epsilon_window.1 - self.epsilon_window.0));
        s.push_str("n,lambda_n,residual,found\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                e.n,
                fmt_f64(e.lambda.unwrap_or(f64::NAN)),
                fmt_f64(e.residual.unwrap_or(f64::NAN)),
                u8::from(e.lambda.is_some())
            );
        }
        s
    }
}

/// Bracket λ values from λ₀ downward: λ₀(1 − 2^{−j}), j = 20..1, then 0.
fn bracket_ladder(lambda0: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=20).rev().map(|j| lambda0 * (1.0 - 0.5f64.powi(j))).collect();
    v.push(0.0);
    v
}

/// Root of the decreasing-near-λ₀ function `g` between `lo` (g > 0) and `hi` (g < 0).
fn bisect_lambda<G: FnMut(f64) -> Result<f64, SpectralError>>(
    mut g: G,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64), SpectralError> {
    let mut best = (f64::INFINITY, 0.5 * (lo + hi));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid)?;
        if v.abs() < best.0 {
            best = (v.abs(), mid);
        }
        if v == 0.0 {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((best.1, best.0))
}

/// Solves μ_n(q(·, λ)) = 1 for each n, searching downward from λ₀.
pub fn find_unstable_eigenvalues(
    p: &ModelParams,
    pat: &Pattern,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<SpectrumReport, SpectralError> {
    find_unstable_eigenvalues_with(p, pat, n_range, SL_INTERVALS)
}

pub fn find_unstable_eigenvalues_with(
    p: &ModelParams,
    pat: &Pattern,
    n_range: std::ops::RangeInclusive<usize>,
    intervals: usize,
) -> Result<SpectrumReport, SpectralError> {
    if pat.is_constant() {
        if let Some(plus) = model::constant_states(p).into_iter().find(|s| s.kind == StateKind::Plus) {
            if (pat.w[0] - plus.w).abs() <= 1e-12 * plus.w {
                return Err(SpectralError::Excluded(
                    "the plus constant state is excluded from the unstable-eigenvalue ladder".into(),
                ));
            }
        }
    }
    if !pat.null_set.is_empty() {
        return Err(SpectralError::Excluded(
            "patterns with a null set give an indefinite weight; use the continuous part".into(),
        ));
    }
    let (lambda0, lambda_neg) = model::a12_eigenvalues(p)?;
    let n_max = *n_range.end();
    let probe = SlProblem { gamma: pat.gamma, q: vec![1.0; intervals + 1] };
    check_grid(&probe, n_max)?;
    let h = 1.0 / intervals as f64;
    let w_sl: Vec<f64> = (0..=intervals).map(|i| pat.w_at(i as f64 * h)).collect();
    let mats: Vec<Mat3> = w_sl.iter().map(|&w| model::linearization_matrix(p, w)).collect::<Result<_, _>>()?;
    let q_at = |lambda: f64| -> Result<SlProblem, SpectralError> {
        let den = checked_denominator(p, lambda)?;
        Ok(SlProblem { gamma: pat.gamma, q: mats.iter().map(|m| det3(&shifted(m, lambda)) / den).collect() })
    };
    let ladder = bracket_ladder(lambda0);
    let mut lowest = lambda0;
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    for n in n_range {
        let g = |lambda: f64| -> Result<f64, SpectralError> { Ok(sl_eigenvalue(&q_at(lambda)?, n)?.0 - 1.0) };
        let mut prev = ladder[0];
        let g0 = g(prev)?;
        let mut entry = LambdaEntry { n, lambda: None, residual: None, note: String::new() };
        if g0 >= 0.0 {
            entry.note = "mu_n >= 1 already next to lambda0; window too wide".into();
            entries.push(entry);
            continue;
        }
        let mut bracket = None;
        for &lam in &ladder[1..] {
            let val = match g(lam) {
                Ok(v) => v,
                Err(SpectralError::Positivity { .. }) => {
                    entry.note = format!("bracket truncated by q-positivity at lambda = {lam:.6e}");
                    break;
                }
                Err(e) => return Err(e),
            };
            lowest = lowest.min(lam);
            if val > 0.0 {
                bracket = Some((lam, prev));
                break;
            }
            prev = lam;
        }
        if let Some((lo, hi)) = bracket {
            let (lam, res) = bisect_lambda(g, lo, hi)?;
            if lambda0 - lam <= 1e-12 * lambda0 {
                entry.note = "root within the continuous-spectrum guard of lambda0".into();
            } else {
                entry.lambda = Some(lam);
                entry.residual = Some(res);
                let shift = sl_eigenvalue(&q_at(lam)?, n)?.1;
                if shift > RESOLUTION_TOL {
                    notes.push(format!("n = {n}: Richardson shift {shift:.2e} above {RESOLUTION_TOL:e}"));
                }
            }
        } else if entry.note.is_empty() {
            entry.note = "no sign change on (0, lambda0)".into();
        }
        entries.push(entry);
    }
    Ok(SpectrumReport { lambda0, lambda_neg, entries, epsilon_window: (lowest, lambda0), notes })
}

/// q at the constant minus state as a scalar function of λ.
fn constant_ratio(p: &ModelParams, a: &Mat3, lambda: f64) -> f64 {
    det3(&shifted(a, lambda)) / det_a12_shift(p, lambda).unwrap_or(f64::NAN)
}

/// Root of q(λ) = n²π²/γ at the constant minus state nearest below λ₀, if any.
pub fn constant_case_lambda(p: &ModelParams, gamma: f64, n: usize) -> Result<Option<f64>, SpectralError> {
    let minus = model::minus_state(p)?;
    let a = model::linearization_matrix(p, minus.w)?;
    let (lambda0, _) = model::a12_eigenvalues(p)?;
    let sweep = char_poly_sign_sweep(&a, lambda0);
    if !(sweep.applicable && sweep.all_negative) {
        return Err(SpectralError::Excluded(format!("det(A - lambda I) < 0 fails on [0, lambda0]: {}", sweep.note)));
    }
    let target = (n as f64 * PI).powi(2) / gamma;
    let g = |lambda: f64| target / constant_ratio(p, &a, lambda) - 1.0;
    let mut prev = lambda0 * (1.0 - 0.5f64.powi(50));
    if g(prev) >= 0.0 {
        return Ok(None);
    }
    let mut ladder: Vec<f64> = (1..50).rev().map(|j| lambda0 * (1.0 - 0.5f64.powi(j))).collect();
    ladder.push(0.0);
    for lam in ladder {
        if g(lam) > 0.0 {
            let (root, _) = bisect_lambda(|l| Ok(g(l)), lam, prev)?;
            return Ok(Some(root));
        }
        prev = lam;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignSweep {
    pub applicable: bool,
    pub all_negative: bool,
    pub max_value: f64,
    pub note: String,
}

/// Checks det(M − λI) < 0 on 1000 points of [0, λ_max] for a stable M.
pub fn char_poly_sign_sweep(m: &Mat3, lambda_max: f64) -> SignSweep {
    let eig = eigenvalues3(m);
    if eig.iter().any(|z| z.re >= 0.0) {
        return SignSweep {
            applicable: false,
            all_negative: false,
            max_value: f64::NAN,
            note: "inapplicable: matrix has an eigenvalue with nonnegative real part".into(),
        };
    }
    let max_value = (0..1000)
        .map(|i| det3(&shifted(m, lambda_max * i as f64 / 999.0)))
        .fold(f64::NEG_INFINITY, f64::max);
    SignSweep {
        applicable: true,
        all_negative: max_value < 0.0,
        max_value,
        note: if max_value < 0.0 { "negative throughout".into() } else { "sign change found".into() },
    }
}
