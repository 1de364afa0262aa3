//! Eigenvalues of real 3×3 matrices through the characteristic polynomial.

use num_complex::Complex64;

pub type Mat3 = [[f64; 3]; 3];

/// Coefficients `(b, c, d)` of the monic characteristic polynomial `λ³ + bλ² + cλ + d`.
pub fn char_poly(m: &Mat3) -> (f64, f64, f64) {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    (-tr, minors, -det3(m))
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Roots of `λ² + pλ + q`.
pub fn quadratic_roots(p: f64, q: f64) -> [Complex64; 2] {
    let half = -0.5 * p;
    let disc = half * half - q;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let r1 = if half >= 0.0 { half + s } else { half - s };
        let r2 = if r1 != 0.0 { q / r1 } else { 0.0 };
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half, -s), Complex64::new(half, s)]
    }
}

/// Roots of `λ³ + bλ² + cλ + d`: one real root by bracketed bisection with Newton polish, the rest by deflation.
pub fn cubic_roots(b: f64, c: f64, d: f64) -> [Complex64; 3] {
    let p = |x: f64| ((x + b) * x + c) * x + d;
    let dp = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    let r = 1.0 + b.abs().max(c.abs()).max(d.abs());
    let (mut lo, mut hi) = (-r, r);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let g = dp(x);
        if g == 0.0 {
            break;
        }
        let nx = x - p(x) / g;
        if (nx - x).abs() > 1e-6 * (1.0 + x.abs()) {
            break;
        }
        x = nx;
    }
    let qb = b + x;
    let qc = c + x * qb;
    let [r1, r2] = quadratic_roots(qb, qc);
    let mut roots = [Complex64::new(x, 0.0), r1, r2];
    roots.sort_by(|u, v| u.re.partial_cmp(&v.re).unwrap().then(u.im.partial_cmp(&v.im).unwrap()));
    roots
}

pub fn eigenvalues3(m: &Mat3) -> [Complex64; 3] {
    let (b, c, d) = char_poly(m);
    cubic_roots(b, c, d)
}
