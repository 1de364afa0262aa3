//! Potential wells, turning points and the half-period time map.

use std::f64::consts::PI;

use crate::model::{self, ModelParams};
use crate::numerics::quad;
use crate::numerics::roots::bisect;

use super::PatternError;

/// Geometry of a potential well: `bottom` is the minimum, energies in `(e_min, e_max)`
/// give closed orbits whose turning points stay inside `[left, right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Well {
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
    pub e_min: f64,
    pub e_max: f64,
}

/// Conservative oscillator `w'' + h(w) = 0` with potential `H' = h`.
pub trait Potential {
    fn h(&self, w: f64) -> f64;
    fn dh(&self, w: f64) -> f64;
    fn d2h(&self, w: f64) -> f64;
    fn energy(&self, w: f64) -> f64;
    fn well(&self) -> Well;

    /// `H(w0 + t) − H(w0)`; override when cancellation matters for small `t`.
    fn energy_increment(&self, w0: f64, t: f64) -> f64 {
        self.energy(w0 + t) - self.energy(w0)
    }

    /// `h(w0 + t) − h(w0)`.
    fn h_increment(&self, w0: f64, t: f64) -> f64 {
        self.h(w0 + t) - self.h(w0)
    }
}

/// `x − ln(1 + x)` without cancellation for small `x`.
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let mut term = -x;
        let mut sum = 0.0;
        for k in 2..40 {
            term *= -x;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x - x.ln_1p()
    }
}

/// Derived potential of the stationary problem: h(w) = −d_g·w − c_h/w + κ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub d_g: f64,
    pub kappa0: f64,
    pub c_h: f64,
    pub theta: f64,
    pub w_minus: f64,
    pub w_plus: f64,
    /// Point in (0, w̄₋) where H equals H_max.
    pub w_lo: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// h′(w̄₋).
    pub stiffness: f64,
    pub gamma0: f64,
}

impl Potential for PotentialSpec {
    fn h(&self, w: f64) -> f64 {
        -self.d_g * w - self.c_h / w + self.kappa0
    }

    fn dh(&self, w: f64) -> f64 {
        -self.d_g + self.c_h / (w * w)
    }

    fn d2h(&self, w: f64) -> f64 {
        -2.0 * self.c_h / (w * w * w)
    }

    fn energy(&self, w: f64) -> f64 {
        -0.5 * self.d_g * w * w - self.c_h * w.ln() + self.kappa0 * w
    }

    fn well(&self) -> Well {
        Well { bottom: self.w_minus, left: self.w_lo, right: self.w_plus, e_min: self.h_min, e_max: self.h_max }
    }

    fn energy_increment(&self, w0: f64, t: f64) -> f64 {
        t * self.h(w0) - 0.5 * self.d_g * t * t + self.c_h * x_minus_log1p(t / w0)
    }

    fn h_increment(&self, w0: f64, t: f64) -> f64 {
        -self.d_g * t + self.c_h * t / (w0 * (w0 + t))
    }
}

impl PotentialSpec {
    /// Energy of the null-set dynamics, H₀(w) = −d_g·w²/2 + κ₀·w.
    pub fn outer_energy(&self, w: f64) -> f64 {
        -0.5 * self.d_g * w * w + self.kappa0 * w
    }
}

/// Builds the potential for parameters with a > d_c and κ₀² > Θ.
pub fn potential_spec(p: &ModelParams<f64>) -> Result<PotentialSpec, PatternError> {
    if p.a <= p.d_c {
        return Err(PatternError::Regime("a <= d_c: only the trivial stationary solution exists".into()));
    }
    let theta = model::theta(p).map_err(PatternError::Model)?;
    let states = model::constant_states(p);
    let (Some(minus), Some(plus)) = (
        states.iter().find(|s| s.kind == model::StateKind::Minus),
        states.iter().find(|s| s.kind == model::StateKind::Plus),
    ) else {
        return Err(PatternError::Regime(format!(
            "kappa0^2 = {} <= theta = {theta}: no positive non-constant stationary solutions",
            p.kappa0 * p.kappa0
        )));
    };
    let c_h = p.d_b * p.vw_product();
    // h'' = −2c_h/w³ < 0 on (0, ∞) is what makes the time map monotone.
    assert!(c_h > 0.0, "h'' must be negative on (0, w+)");
    let mut spec = PotentialSpec {
        d_g: p.d_g,
        kappa0: p.kappa0,
        c_h,
        theta,
        w_minus: minus.w,
        w_plus: plus.w,
        w_lo: 0.0,
        h_min: 0.0,
        h_max: 0.0,
        stiffness: 0.0,
        gamma0: 0.0,
    };
    spec.h_min = spec.energy(spec.w_minus);
    spec.h_max = spec.energy(spec.w_plus);
    spec.stiffness = spec.dh(spec.w_minus);
    spec.gamma0 = PI * PI / spec.stiffness;
    let mut lo = 1e-12 * spec.w_minus;
    while spec.energy(lo) <= spec.h_max {
        lo *= 1e-3;
        if lo < 1e-300 {
            return Err(PatternError::Regime("potential does not rise above H_max near zero".into()));
        }
    }
    let rise = spec.h_max - spec.h_min;
    spec.w_lo = bisect(|w| spec.energy_increment(spec.w_minus, w - spec.w_minus) - rise, lo, spec.w_minus, 0.0)
        .map_err(|e| PatternError::Numerical(e.to_string()))?;
    Ok(spec)
}

/// An orbit energy with its two turning points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLevel {
    pub e: f64,
    pub w1: f64,
    pub w2: f64,
}

/// Turning points w₁ < bottom < w₂ with H(wᵢ) = E.
pub fn turning_points<P: Potential + ?Sized>(pot: &P, e: f64) -> Result<EnergyLevel, PatternError> {
    let well = pot.well();
    if !(e > well.e_min && e < well.e_max) {
        return Err(PatternError::EnergyRange { e, lo: well.e_min, hi: well.e_max });
    }
    let delta = e - well.e_min;
    let b = well.bottom;
    let g = |t: f64| pot.energy_increment(b, t) - delta;
    let t2 = bisect(g, 0.0, well.right - b, 0.0).map_err(|e| PatternError::Numerical(e.to_string()))?;
    let t1 = bisect(g, well.left - b, 0.0, 0.0).map_err(|e| PatternError::Numerical(e.to_string()))?;
    Ok(EnergyLevel { e, w1: b + t1, w2: b + t2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMap {
    pub t: f64,
    /// Estimated quadrature error.
    pub error: f64,
}

const QUAD_TOL: f64 = 1e-12;
const QUAD_INTERVALS: usize = 4000;

/// `s/√(2(E − H(tp + dir·s²)))`, switching to its `s → 0` limit very close to
/// the turning point where the energy gap is at rounding level.
fn inv_speed<P: Potential + ?Sized>(pot: &P, tp: f64, dir: f64, h_tp: f64, span: f64, s: f64) -> f64 {
    if s <= 1e-4 * span {
        return 1.0 / (2.0 * h_tp).sqrt();
    }
    let gap = -pot.energy_increment(tp, dir * s * s);
    s / (2.0 * gap.max(f64::MIN_POSITIVE)).sqrt()
}

/// Half-periods of the two sides of the well, integrated as `y = turning point ∓ s²`.
fn halves<P: Potential + ?Sized>(pot: &P, lvl: &EnergyLevel) -> Result<[(f64, f64); 2], PatternError> {
    let b = pot.well().bottom;
    let mut out = [(0.0, 0.0); 2];
    for (side, slot) in out.iter_mut().enumerate() {
        let (tp, dir) = if side == 0 { (lvl.w1, 1.0) } else { (lvl.w2, -1.0) };
        let h_tp = pot.h(tp).abs();
        let span = ((b - tp) * dir).max(0.0).sqrt();
        let f = |s: f64| 2.0 * inv_speed(pot, tp, dir, h_tp, span, s);
        let q = quad::integrate(f, 0.0, span, QUAD_TOL, QUAD_TOL, QUAD_INTERVALS)
            .map_err(|e| PatternError::Accuracy(e.to_string()))?;
        *slot = (q.value, q.error);
    }
    Ok(out)
}

/// T(E) = ∫ dy/√(2(E − H(y))) between the turning points.
pub fn time_map<P: Potential + ?Sized>(pot: &P, e: f64) -> Result<TimeMap, PatternError> {
    let well = pot.well();
    if !(e > well.e_min && e < well.e_max) {
        return Err(PatternError::EnergyRange { e, lo: well.e_min, hi: well.e_max });
    }
    if e - well.e_min < 1e-10 * well.e_min.abs() {
        return Ok(TimeMap { t: PI / pot.dh(well.bottom).sqrt(), error: 0.0 });
    }
    let lvl = turning_points(pot, e)?;
    let [(l, el), (r, er)] = halves(pot, &lvl)?;
    let t = l + r;
    let error = el + er;
    if error > 1e-9 * t {
        return Err(PatternError::Accuracy(format!("time map at E = {e}: estimate {t}, error {error}")));
    }
    Ok(TimeMap { t, error })
}

/// Left and right half-periods separately.
pub fn half_periods<P: Potential + ?Sized>(pot: &P, e: f64) -> Result<(f64, f64), PatternError> {
    let lvl = turning_points(pot, e)?;
    let [(l, _), (r, _)] = halves(pot, &lvl)?;
    Ok((l, r))
}

/// Bracket term of Loud's representation, `(H(w)−H(b))·h′(w)/h(w)² − 1/2`.
fn loud_kernel<P: Potential + ?Sized>(pot: &P, b: f64, w: f64) -> f64 {
    let y = w - b;
    if y.abs() < 1e-5 * b.abs().max(1e-3) {
        return pot.d2h(b) / (6.0 * pot.dh(b)) * y;
    }
    let hw = pot.h(b) + pot.h_increment(b, y);
    pot.energy_increment(b, y) * pot.dh(w) / (hw * hw) - 0.5
}

/// Contributions of the left and right halves to dT/dE.
pub fn time_map_derivative_halves<P: Potential + ?Sized>(pot: &P, e: f64) -> Result<(f64, f64), PatternError> {
    let well = pot.well();
    let delta_floor = 1e-10 * well.e_min.abs().max(1e-300);
    let e_eval = if e - well.e_min < delta_floor { well.e_min + delta_floor } else { e };
    let lvl = turning_points(pot, e_eval)?;
    let b = well.bottom;
    let delta = e_eval - well.e_min;
    let mut parts = [0.0; 2];
    for (side, slot) in parts.iter_mut().enumerate() {
        let (tp, dir) = if side == 0 { (lvl.w1, 1.0) } else { (lvl.w2, -1.0) };
        let span = ((b - tp) * dir).max(0.0).sqrt();
        let h_tp = pot.h(tp).abs();
        let f = |s: f64| {
            let w = tp + dir * s * s;
            2.0 * loud_kernel(pot, b, w) * inv_speed(pot, tp, dir, h_tp, span, s)
        };
        let q = quad::integrate(f, 0.0, span, QUAD_TOL, QUAD_TOL, QUAD_INTERVALS)
            .map_err(|e| PatternError::Accuracy(e.to_string()))?;
        *slot = -q.value / delta;
    }
    Ok((parts[0], parts[1]))
}

/// dT/dE from Loud's integral representation on both halves of the well.
pub fn time_map_derivative<P: Potential + ?Sized>(pot: &P, e: f64) -> Result<f64, PatternError> {
    let (l, r) = time_map_derivative_halves(pot, e)?;
    Ok(l + r)
}

/// Smallest attainable half-period, π/√h′(bottom).
pub fn critical_period<P: Potential + ?Sized>(pot: &P) -> f64 {
    PI / pot.dh(pot.well().bottom).sqrt()
}

/// Energy whose half-period equals `t_target`, by bisection on the increasing map E ↦ T(E).
pub fn invert_time_map<P: Potential + ?Sized>(pot: &P, t_target: f64) -> Result<EnergyLevel, PatternError> {
    let t_min = critical_period(pot);
    if !(t_target > t_min * (1.0 + 1e-12)) {
        return Err(PatternError::BelowCritical { target: t_target, critical: t_min });
    }
    let well = pot.well();
    let mut lo = well.e_min;
    let mut hi = well.e_max;
    let top = well.e_max - 4.0 * f64::EPSILON * well.e_max.abs().max(1.0);
    if time_map(pot, top)?.t < t_target {
        return Err(PatternError::Accuracy(format!("half-period {t_target} exceeds the resolvable range")));
    }
    let mut best = (f64::INFINITY, well.e_min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let t = time_map(pot, mid)?.t;
        let gap = (t - t_target).abs();
        if gap < best.0 {
            best = (gap, mid);
        }
        if gap <= 1e-14 * t_target {
            break;
        }
        if t < t_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > 1e-9 * t_target {
        return Err(PatternError::Accuracy(format!(
            "time-map inversion reached |T - target| = {} for target {t_target}",
            best.0
        )));
    }
    turning_points(pot, best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PotentialSpec {
        potential_spec(&ModelParams::reference(20.0)).unwrap()
    }

    /// H(w) = w²/2 on [−1, 1]: every orbit has half-period π.
    struct Harmonic;
    impl Potential for Harmonic {
        fn h(&self, w: f64) -> f64 {
            w
        }
        fn dh(&self, _: f64) -> f64 {
            1.0
        }
        fn d2h(&self, _: f64) -> f64 {
            0.0
        }
        fn energy(&self, w: f64) -> f64 {
            0.5 * w * w + 1.0
        }
        fn energy_increment(&self, w0: f64, t: f64) -> f64 {
            t * (w0 + 0.5 * t)
        }
        fn well(&self) -> Well {
            Well { bottom: 0.0, left: -1.0, right: 1.0, e_min: 1.0, e_max: 1.5 }
        }
    }

    #[test]
    fn reference_spec_values() {
        let s = spec();
        assert!((s.c_h - 0.5).abs() < 1e-15);
        assert!((s.stiffness - (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((s.gamma0 - PI * PI / (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!((s.h_min - 1.1568668074632105).abs() < 1e-12);
        assert!((s.h_max - 1.6897067828167622).abs() < 1e-12);
        assert!(s.h(s.w_minus).abs() < 1e-12 && s.h(s.w_plus).abs() < 1e-12);
        assert!((s.energy(s.w_lo) - s.h_max).abs() < 1e-12);
    }

    #[test]
    fn regime_errors() {
        let p = ModelParams::reference(20.0).with("kappa0", 1.0).unwrap();
        assert!(matches!(potential_spec(&p), Err(PatternError::Regime(_))));
    }

    #[test]
    fn increments_match_naive_away_from_zero() {
        let s = spec();
        for &(w0, t) in &[(0.3, 0.2), (0.5, -0.1), (0.1, 0.4)] {
            let naive = s.energy(w0 + t) - s.energy(w0);
            assert!((s.energy_increment(w0, t) - naive).abs() < 1e-14);
        }
    }

    #[test]
    fn harmonic_time_map_is_pi() {
        for e in [1.01, 1.2, 1.45] {
            let t = time_map(&Harmonic, e).unwrap();
            assert!((t.t - PI).abs() < 1e-12, "{}", t.t);
            assert!(time_map_derivative(&Harmonic, e).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn turning_point_examples() {
        let s = spec();
        let lvl = turning_points(&s, 1.4).unwrap();
        assert!((s.energy(lvl.w1) - 1.4).abs() < 1e-12 * 1.4);
        assert!((s.energy(lvl.w2) - 1.4).abs() < 1e-12 * 1.4);
        assert!(lvl.w1 < s.w_minus && s.w_minus < lvl.w2 && lvl.w2 < s.w_plus);
        let near = turning_points(&s, s.h_min + 1e-12).unwrap();
        assert!((near.w1 - s.w_minus).abs() < 1e-5 && (near.w2 - s.w_minus).abs() < 1e-5);
        assert!(matches!(turning_points(&s, s.h_max), Err(PatternError::EnergyRange { .. })));
    }

    #[test]
    fn inversion_round_trip() {
        let s = spec();
        for t in [1.5, 2.0, 3.0, 3f64.sqrt()] {
            let lvl = invert_time_map(&s, t).unwrap();
            assert!((time_map(&s, lvl.e).unwrap().t - t).abs() <= 1e-9 * t);
        }
        assert!(matches!(invert_time_map(&s, s.gamma0.sqrt()), Err(PatternError::BelowCritical { .. })));
    }

    #[test]
    fn time_map_limits_and_monotonicity() {
        let s = spec();
        let t0 = PI / (2.0 + 2.0 * 2f64.sqrt()).sqrt();
        let mut prev_err = f64::INFINITY;
        for d in [1e-4, 1e-6, 1e-8] {
            let err = (time_map(&s, s.h_min + d).unwrap().t - t0).abs();
            assert!(err < prev_err, "{d}: {err} after {prev_err}");
            prev_err = err;
        }
        assert!(prev_err <= 1e-4);
        let n = 50;
        let ts: Vec<f64> = (1..=n)
            .map(|i| s.h_min + (s.h_max - s.h_min) * i as f64 / (n + 1) as f64)
            .map(|e| time_map(&s, e).unwrap().t)
            .collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        // Logarithmic divergence: independent quadrature gives 8.681231638 at 1e-6.
        let near_top = time_map(&s, s.h_max - 1e-6).unwrap().t;
        assert!((near_top - 8.681231638188866).abs() < 1e-7, "{near_top}");
        assert!(time_map(&s, s.h_max - 1e-12).unwrap().t >= 10.0 * s.gamma0.sqrt());
    }

    #[test]
    fn loud_derivative_matches_differences() {
        let s = spec();
        for i in 1..=10 {
            let e = s.h_min + (s.h_max - s.h_min) * i as f64 / 11.0;
            let step = 1e-5 * e;
            let fd = (time_map(&s, e + step).unwrap().t - time_map(&s, e - step).unwrap().t) / (2.0 * step);
            let d = time_map_derivative(&s, e).unwrap();
            assert!(d > 0.0);
            assert!((d - fd).abs() <= 1e-4 * fd.abs(), "E = {e}: {d} vs {fd}");
            let (l, r) = time_map_derivative_halves(&s, e).unwrap();
            assert!(l < 0.0 && r > 0.0);
        }
        let near = time_map_derivative(&s, s.h_min + 1e-9).unwrap();
        let next = time_map_derivative(&s, s.h_min + 1e-6).unwrap();
        assert!(near.is_finite() && (near - next).abs() < 1e-2 * next.abs().max(1.0));
    }
}
