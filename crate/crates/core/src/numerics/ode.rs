//! Dormand–Prince 5(4) integrator with PI step control and dense output.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration interval [{t0}, {t_end}]")]
    BadInterval { t0: f64, t_end: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h0: Option<T>,
    pub h_max: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self { rtol, atol, h0: None, h_max: None, max_steps: 2_000_000 }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct Step<T, const N: usize> {
    pub t0: T,
    pub t1: T,
    pub y0: [T; N],
    pub y1: [T; N],
    cont: [[T; N]; 4],
}

impl<T: Real, const N: usize> Step<T, N> {
    /// Fourth-order dense output inside `[t0, t1]`.
    pub fn at(&self, t: T) -> [T; N] {
        let h = self.t1 - self.t0;
        if h == T::zero() {
            return self.y1;
        }
        let th = (t - self.t0) / h;
        let th1 = T::one() - th;
        let mut out = [T::zero(); N];
        for i in 0..N {
            let [r2, r3, r4, r5] = [self.cont[0][i], self.cont[1][i], self.cont[2][i], self.cont[3][i]];
            out[i] = self.y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct OdeSummary<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(T, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + *c * k[i];
        }
        out[i] = out[i] + h * acc;
    }
    out
}

fn rms<T: Real, const N: usize>(v: &[T; N], sc: &[T; N]) -> T {
    let mut s = T::zero();
    for i in 0..N {
        let r = v[i] / sc[i];
        s = s + r * r;
    }
    (s / T::lit(N as f64)).sqrt()
}

fn finite<T: Real, const N: usize>(v: &[T; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, landing exactly on every time in `stops`.
///
/// `on_step` sees each accepted step and may stop the integration early.
pub fn integrate<T, const N: usize, F, O>(
    mut f: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    stops: &[T],
    opts: &OdeOptions<T>,
    mut on_step: O,
) -> Result<OdeSummary<T, N>, OdeError>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
    O: FnMut(&Step<T, N>) -> Flow,
{
    if !(t_end > t0) {
        return Err(OdeError::BadInterval { t0: t0.as_f64(), t_end: t_end.as_f64() });
    }
    let l = T::lit;
    let (c2, c3, c4, c5) = (l(0.2), l(0.3), l(0.8), l(8.0 / 9.0));
    let a21 = l(0.2);
    let (a31, a32) = (l(3.0 / 40.0), l(9.0 / 40.0));
    let (a41, a42, a43) = (l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0));
    let (a51, a52, a53, a54) =
        (l(19372.0 / 6561.0), l(-25360.0 / 2187.0), l(64448.0 / 6561.0), l(-212.0 / 729.0));
    let (a61, a62, a63, a64, a65) = (
        l(9017.0 / 3168.0),
        l(-355.0 / 33.0),
        l(46732.0 / 5247.0),
        l(49.0 / 176.0),
        l(-5103.0 / 18656.0),
    );
    let (a71, a73, a74, a75, a76) =
        (l(35.0 / 384.0), l(500.0 / 1113.0), l(125.0 / 192.0), l(-2187.0 / 6784.0), l(11.0 / 84.0));
    let (e1, e3, e4, e5, e6, e7) = (
        l(71.0 / 57600.0),
        l(-71.0 / 16695.0),
        l(71.0 / 1920.0),
        l(-17253.0 / 339200.0),
        l(22.0 / 525.0),
        l(-1.0 / 40.0),
    );
    let (d1, d3, d4, d5, d6, d7) = (
        l(-12715105075.0 / 11282082432.0),
        l(87487479700.0 / 32700410799.0),
        l(-10690763975.0 / 1880347072.0),
        l(701980252875.0 / 199316789632.0),
        l(-1453857185.0 / 822651844.0),
        l(69997945.0 / 29380423.0),
    );

    let span = t_end - t0;
    let h_max = opts.h_max.unwrap_or(span);
    let scale = |a: &[T; N], b: &[T; N]| {
        let mut sc = [T::zero(); N];
        for i in 0..N {
            sc[i] = opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
        }
        sc
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !finite(&k1) {
        return Err(OdeError::NonFinite { t: t.as_f64() });
    }

    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            let sc = scale(&y, &y);
            let dy0 = rms(&y, &sc);
            let df0 = rms(&k1, &sc);
            let small = l(1e-5);
            let mut h0 = if dy0 < small || df0 < small { l(1e-6) } else { l(0.01) * dy0 / df0 };
            h0 = h0.min(span);
            let yt = axpy(&y, h0, &[(T::one(), &k1)]);
            let ft = f(t + h0, &yt);
            let mut diff = [T::zero(); N];
            for i in 0..N {
                diff[i] = ft[i] - k1[i];
            }
            let d2 = rms(&diff, &sc) / h0;
            let m = df0.max(d2);
            let h1 = if m <= l(1e-15) {
                (h0 * l(1e-3)).max(l(1e-6))
            } else {
                (l(0.01) / m).powf(l(0.2))
            };
            (l(100.0) * h0).min(h1)
        }
    };
    h = h.min(h_max).min(span);

    let mut stop_idx = 0;
    while stop_idx < stops.len() && stops[stop_idx] <= t0 {
        stop_idx += 1;
    }

    let mut err_old = l(1e-4);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;
    let eps = T::epsilon();

    loop {
        if accepted + rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps { t: t.as_f64(), max_steps: opts.max_steps });
        }
        let target = if stop_idx < stops.len() && stops[stop_idx] < t_end { stops[stop_idx] } else { t_end };
        let mut landing = false;
        if t + h >= target || (target - t - h).abs() <= l(16.0) * eps * target.abs().max(T::one()) {
            h = target - t;
            landing = true;
        }
        if h.abs() <= l(16.0) * eps * t.abs().max(T::one()) && !landing {
            return Err(OdeError::StepUnderflow { t: t.as_f64(), h: h.as_f64() });
        }

        let y2 = axpy(&y, h, &[(a21, &k1)]);
        let k2 = f(t + c2 * h, &y2);
        let y3 = axpy(&y, h, &[(a31, &k1), (a32, &k2)]);
        let k3 = f(t + c3 * h, &y3);
        let y4 = axpy(&y, h, &[(a41, &k1), (a42, &k2), (a43, &k3)]);
        let k4 = f(t + c4 * h, &y4);
        let y5 = axpy(&y, h, &[(a51, &k1), (a52, &k2), (a53, &k3), (a54, &k4)]);
        let k5 = f(t + c5 * h, &y5);
        let y6 = axpy(&y, h, &[(a61, &k1), (a62, &k2), (a63, &k3), (a64, &k4), (a65, &k5)]);
        let k6 = f(t + h, &y6);
        let ynew = axpy(&y, h, &[(a71, &k1), (a73, &k3), (a74, &k4), (a75, &k5), (a76, &k6)]);
        let k7 = f(t + h, &ynew);

        let mut errv = [T::zero(); N];
        for i in 0..N {
            errv[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        }
        let sc = scale(&y, &ynew);
        let err = rms(&errv, &sc);

        if !err.is_finite() || !finite(&ynew) {
            rejected += 1;
            last_rejected = true;
            h = h * l(0.1);
            if h.abs() <= l(16.0) * eps * t.abs().max(T::one()) {
                return Err(OdeError::NonFinite { t: t.as_f64() });
            }
            continue;
        }

        let beta = l(0.04);
        let expo1 = l(0.2) - beta * l(0.75);
        let fac11 = err.powf(expo1);
        if err <= T::one() {
            let mut fac = fac11 / err_old.powf(beta);
            fac = (fac / l(0.9)).max(l(0.1)).min(l(5.0));
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = err.max(l(1e-4));

            let t_new = if landing { target } else { t + h };
            let mut cont = [[T::zero(); N]; 4];
            for i in 0..N {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = ydiff;
                cont[1][i] = bspl;
                cont[2][i] = ydiff - h * k7[i] - bspl;
                cont[3][i] =
                    h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            let step = Step { t0: t, t1: t_new, y0: y, y1: ynew, cont };
            accepted += 1;
            last_rejected = false;
            t = t_new;
            y = ynew;
            k1 = k7;
            if landing && stop_idx < stops.len() && target == stops[stop_idx] {
                stop_idx += 1;
            }
            let flow = on_step(&step);
            if flow == Flow::Stop || (landing && target == t_end) {
                return Ok(OdeSummary { t, y, accepted, rejected });
            }
            h = h_new.min(h_max);
        } else {
            let fac = (fac11 / l(0.9)).min(l(5.0));
            h = h / fac;
            rejected += 1;
            last_rejected = true;
        }
    }
}

/// Locates a sign change of `g` along the dense output of `step` by bisection.
///
/// Returns `None` when `g` has the same sign at both ends.
pub fn locate_event<T: Real, const N: usize, G>(step: &Step<T, N>, mut g: G) -> Option<T>
where
    G: FnMut(T, &[T; N]) -> T,
{
    let mut lo = step.t0;
    let mut hi = step.t1;
    let glo = g(lo, &step.y0);
    let ghi = g(hi, &step.y1);
    if glo == T::zero() {
        return Some(lo);
    }
    if ghi == T::zero() {
        return Some(hi);
    }
    if (glo > T::zero()) == (ghi > T::zero()) {
        return None;
    }
    let up = glo < T::zero();
    for _ in 0..200 {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid, &step.at(mid));
        if gm == T::zero() {
            return Some(mid);
        }
        if (gm < T::zero()) == up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo + (hi - lo) * T::lit(0.5))
}
