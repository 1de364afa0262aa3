use crate::ModelParams;

use super::Pattern;

/// Residuals of a stationary pattern against the boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    /// Strong residual for continuous patterns, weak residual otherwise.
    pub residual: f64,
    /// max |(1/γ)W″ + h(W)| with fourth-order differences (uniform grids only).
    pub strong_residual: Option<f64>,
    /// max over hat test functions of |(1/γ)∫W′φ′ − ∫Fφ|.
    pub weak_residual: Option<f64>,
    /// max |F(W)| on the grid, the natural scale of the residual.
    pub residual_scale: f64,
    pub boundary_slope: f64,
    pub junction_jump: Option<f64>,
    /// Deviation of (U, V) from the algebraic lift.
    pub lift_error: f64,
}

const HAT_FUNCTIONS: usize = 64;

/// Right-hand side F(x, W): h(W) off the null set, −d_g·W + κ₀ on it.
fn forcing(p: &ModelParams, w: f64, null: bool) -> f64 {
    let base = -p.d_g * w + p.kappa0;
    if null {
        base
    } else {
        base - p.d_b * p.vw_product() / w
    }
}

fn uniform_spacing(grid: &[f64]) -> Option<f64> {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    grid.windows(2).all(|s| ((s[1] - s[0]) - h).abs() <= 1e-9 * h).then_some(h)
}

/// Fourth-order W″ with even reflection across both ends.
fn strong_residual(p: &ModelParams, pat: &Pattern, h: f64) -> f64 {
    let n = pat.len() as isize;
    let w = &pat.w;
    let at = |i: isize| -> f64 {
        let j = if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i };
        w[j as usize]
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let d2 = (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) / (12.0 * h * h);
        let null = pat.in_null_set(pat.grid[i as usize]);
        worst = worst.max((d2 / pat.gamma + forcing(p, at(i), null)).abs());
    }
    worst
}

fn weak_residual(p: &ModelParams, pat: &Pattern) -> f64 {
    let m = HAT_FUNCTIONS;
    let dx = 1.0 / (m - 1) as f64;
    let nodes: Vec<f64> = (0..m).map(|j| j as f64 * dx).collect();
    let wn: Vec<f64> = nodes.iter().map(|&y| pat.w_at(y)).collect();
    let mut r = vec![0.0; m];
    for j in 0..m {
        let left = if j > 0 { (wn[j] - wn[j - 1]) / dx } else { 0.0 };
        let right = if j + 1 < m { (wn[j + 1] - wn[j]) / dx } else { 0.0 };
        r[j] = (left - right) / pat.gamma;
    }
    let mut breaks: Vec<f64> = pat.grid.iter().chain(nodes.iter()).copied().collect();
    for &(a, b) in &pat.null_set {
        breaks.push(a);
        breaks.push(b);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    const GL: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    for c in breaks.windows(2) {
        let (a, b) = (c[0], c[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let null = pat.in_null_set(mid);
        let j = ((mid / dx).floor() as usize).min(m - 2);
        for &(t, wt) in &GL {
            let x = mid + half * t;
            let f = forcing(p, pat.w_at(x), null) * wt * half;
            let s = (x - nodes[j]) / dx;
            r[j] -= f * (1.0 - s);
            r[j + 1] -= f * s;
        }
    }
    r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn lift_error(p: &ModelParams, pat: &Pattern) -> f64 {
    let vw = p.vw_product();
    let ratio = (p.a - p.d_c) / p.d_c;
    let mut worst: f64 = 0.0;
    for i in 0..pat.len() {
        if pat.in_null_set(pat.grid[i]) {
            worst = worst.max(pat.u[i].abs()).max(pat.v[i].abs());
        } else {
            worst = worst.max((pat.v[i] * pat.w[i] / vw - 1.0).abs());
            worst = worst.max((pat.u[i] - ratio * pat.v[i]).abs() / pat.u[i].abs().max(f64::MIN_POSITIVE));
        }
    }
    worst
}

/// Checks a pattern against the stationary equations: strong residual with
/// fourth-order differences for continuous patterns on a uniform grid, weak
/// residual against hat functions otherwise. Reports only; never fails.
pub fn verify_pattern(p: &ModelParams, pat: &Pattern) -> VerifyReport {
    let n = pat.len();
    let scale = (0..n).map(|i| forcing(p, pat.w[i], pat.in_null_set(pat.grid[i])).abs()).fold(0.0, f64::max);
    let spacing = if n >= 5 { uniform_spacing(&pat.grid) } else { None };
    let strong = match (pat.continuous, spacing) {
        (true, Some(h)) => Some(strong_residual(p, pat, h)),
        _ => None,
    };
    let weak = if strong.is_none() { Some(weak_residual(p, pat)) } else { None };
    let boundary_slope = match spacing {
        Some(h) => {
            let w = &pat.w;
            let d0 = (-25.0 * w[0] + 48.0 * w[1] - 36.0 * w[2] + 16.0 * w[3] - 3.0 * w[4]) / (12.0 * h);
            let d1 = (25.0 * w[n - 1] - 48.0 * w[n - 2] + 36.0 * w[n - 3] - 16.0 * w[n - 4] + 3.0 * w[n - 5]) / (12.0 * h);
            d0.abs().max(d1.abs())
        }
        None => pat.wx[0].abs().max(pat.wx[n - 1].abs()),
    };
    let junction_jump = (!pat.junctions.is_empty()).then(|| pat.junctions.iter().fold(0.0f64, |a, j| a.max(j.z_jump)));
    VerifyReport {
        residual: strong.or(weak).unwrap_or(f64::NAN),
        strong_residual: strong,
        weak_residual: weak,
        residual_scale: scale,
        boundary_slope,
        junction_jump,
        lift_error: lift_error(p, pat),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateKind;
    use crate::pattern::{build_pattern, constant_pattern, Orientation};

    #[test]
    fn constant_minus_is_exact() {
        let p = ModelParams::reference(20.0);
        let pat = constant_pattern(&p, StateKind::Minus, 128).unwrap();
        let r = verify_pattern(&p, &pat);
        assert!(r.residual <= 1e-12, "{r:?}");
        assert!(r.lift_error <= 1e-12);
    }

    #[test]
    fn corrupted_pattern_fails() {
        let p = ModelParams::reference(20.0);
        let mut pat = build_pattern(&p, 3, Orientation::IncreasingFirst, 1024).unwrap();
        let r = verify_pattern(&p, &pat);
        assert!(r.residual < 1e-6, "{r:?}");
        for (w, x) in pat.w.iter_mut().zip(&pat.grid) {
            *w += 0.01 * x;
        }
        assert!(verify_pattern(&p, &pat).residual > 1e-3);
    }

    #[test]
    fn fourth_order_decay() {
        let p = ModelParams::reference(20.0);
        let res: Vec<f64> = [257, 513, 1025]
            .iter()
            .map(|&n| verify_pattern(&p, &build_pattern(&p, 2, Orientation::IncreasingFirst, n).unwrap()).residual)
            .collect();
        for pair in res.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(ratio > 12.0 && ratio < 20.0, "{res:?}");
        }
    }

    #[test]
    fn weak_residual_small_for_smooth_pattern() {
        let p = ModelParams::reference(20.0);
        let pat = build_pattern(&p, 3, Orientation::IncreasingFirst, 1024).unwrap();
        let r = weak_residual(&p, &pat);
        assert!(r < 1e-9, "{r}");
    }
}
