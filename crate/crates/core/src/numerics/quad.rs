//! Adaptive Gauss–Kronrod (7/15) quadrature.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance: estimate {value}, error {error} after {intervals} intervals")]
    Tolerance { value: f64, error: f64, intervals: usize },
    #[error("non-finite integrand value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Result<(T, T), QuadError> {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center.as_f64() });
    }
    let mut rk = fc * T::lit(WGK[7]);
    let mut rg = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(QuadError::NonFinite { x: (center + dx).as_f64() });
        }
        rk = rk + T::lit(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            rg = rg + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = rk * half;
    let err = ((rk - rg) * half).abs();
    Ok((value, err))
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> Result<Quadrature<T>, QuadError> {
    if a == b {
        return Ok(Quadrature { value: T::zero(), error: T::zero(), evaluations: 0 });
    }
    let (v0, e0) = gk15(&mut f, a, b)?;
    let mut parts: Vec<(T, T, T, T)> = vec![(a, b, v0, e0)];
    let mut evals = 15;
    loop {
        let total: T = parts.iter().fold(T::zero(), |s, p| s + p.2);
        let err: T = parts.iter().fold(T::zero(), |s, p| s + p.3);
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Ok(Quadrature { value: total, error: err, evaluations: evals });
        }
        if parts.len() >= max_intervals {
            return Err(QuadError::Tolerance {
                value: total.as_f64(),
                error: err.as_f64(),
                intervals: parts.len(),
            });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            let total: T = parts.iter().fold(T::zero(), |s, p| s + p.2);
            return Err(QuadError::Tolerance {
                value: total.as_f64(),
                error: err.as_f64(),
                intervals: parts.len(),
            });
        }
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}
