//! Model parameters, reaction kinetics, Jacobians, constant steady states and the DDI certificate.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::Real;

pub type Mat3<T> = [[T; 3]; 3];
pub type Mat2<T> = [[T; 2]; 2];

/// Parameter keys in canonical order.
pub const PARAM_KEYS: [&str; 7] = ["a", "d_c", "d_b", "d", "d_g", "kappa0", "gamma"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter {key} = {value} is invalid: {reason}")]
    InvalidParam { key: &'static str, value: f64, reason: &'static str },
    #[error("non-finite input {what}")]
    NonFinite { what: &'static str },
    #[error("negative concentration {what} = {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("theta undefined for a = d_c")]
    ThetaUndefined,
    #[error("jacobian undefined at u = v = 0")]
    Singular,
    #[error("minus steady state not found: {reason}")]
    StateNotFound { reason: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("key `{key}` given twice (lines {first} and {second})")]
    DuplicateKey { key: String, first: usize, second: usize },
    #[error("missing key `{key}`")]
    MissingKey { key: &'static str },
}

/// The seven rate constants of one model instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub a: T,
    pub d_c: T,
    pub d_b: T,
    pub d: T,
    pub d_g: T,
    pub kappa0: T,
    pub gamma: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(a: T, d_c: T, d_b: T, d: T, d_g: T, kappa0: T, gamma: T) -> Result<Self, ModelError> {
        let p = Self { a, d_c, d_b, d, d_g, kappa0, gamma };
        p.validate()?;
        Ok(p)
    }

    /// a = 3, d_c = d_b = d = d_g = 1, κ₀ = 2 at the given γ.
    pub fn reference(gamma: T) -> Self {
        let one = T::one();
        Self { a: T::lit(3.0), d_c: one, d_b: one, d: one, d_g: one, kappa0: T::lit(2.0), gamma }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (key, v) in PARAM_KEYS.iter().zip(self.values()) {
            let x = v.as_f64();
            if !v.is_finite() {
                return Err(ModelError::InvalidParam { key, value: x, reason: "must be finite" });
            }
            if *key == "kappa0" {
                if v < T::zero() {
                    return Err(ModelError::InvalidParam { key, value: x, reason: "must be >= 0" });
                }
            } else if v <= T::zero() {
                return Err(ModelError::InvalidParam { key, value: x, reason: "must be > 0" });
            }
        }
        Ok(())
    }

    pub fn values(&self) -> [T; 7] {
        [self.a, self.d_c, self.d_b, self.d, self.d_g, self.kappa0, self.gamma]
    }

    pub fn get(&self, key: &str) -> Option<T> {
        PARAM_KEYS.iter().position(|k| *k == key).map(|i| self.values()[i])
    }

    /// Replaces one parameter by key; the result is validated.
    pub fn with(&self, key: &str, value: T) -> Result<Self, ModelError> {
        let mut p = *self;
        match key {
            "a" => p.a = value,
            "d_c" => p.d_c = value,
            "d_b" => p.d_b = value,
            "d" => p.d = value,
            "d_g" => p.d_g = value,
            "kappa0" => p.kappa0 = value,
            "gamma" => p.gamma = value,
            _ => return Err(ModelError::UnknownKey { key: key.to_string(), line: 0 }),
        }
        p.validate()?;
        Ok(p)
    }

    /// d_b + d.
    pub fn dd(&self) -> T {
        self.d_b + self.d
    }

    /// K = d_c(d_b+d)/(a−d_c); equals Y = u·w at the positive states.
    pub fn k_const(&self) -> T {
        self.d_c * self.dd() / (self.a - self.d_c)
    }

    /// v̄·w̄ = d_c²(d_b+d)/(a−d_c)² at the positive states.
    pub fn vw_product(&self) -> T {
        let r = self.d_c / (self.a - self.d_c);
        r * r * self.dd()
    }

    /// ū₊ = (a−d_c)(κ₀ − √(κ₀²−Θ))/(2 d_b d_c); `None` outside the two-state regime.
    pub fn u_plus(&self) -> Option<T> {
        constant_states(self).into_iter().find(|s| s.kind == StateKind::Plus).map(|s| s.u)
    }

    /// Parses flat `key=value` text. `#` starts a comment; all seven keys are required.
    pub fn from_kv_str(text: &str) -> Result<Self, ModelError> {
        let mut seen: HashMap<&'static str, (usize, T)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| ModelError::Parse { line, message: format!("expected key=value, got `{body}`") })?;
            let k = k.trim();
            let key = PARAM_KEYS
                .iter()
                .find(|p| **p == k)
                .copied()
                .ok_or_else(|| ModelError::UnknownKey { key: k.to_string(), line })?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| ModelError::Parse { line, message: format!("`{}` is not a number for key `{key}`", v.trim()) })?;
            if let Some((first, _)) = seen.get(key) {
                return Err(ModelError::DuplicateKey { key: key.to_string(), first: *first, second: line });
            }
            seen.insert(key, (line, T::lit(value)));
        }
        let get = |key: &'static str| seen.get(key).map(|e| e.1).ok_or(ModelError::MissingKey { key });
        Self::new(get("a")?, get("d_c")?, get("d_b")?, get("d")?, get("d_g")?, get("kappa0")?, get("gamma")?)
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in PARAM_KEYS.iter().zip(self.values()) {
            let _ = writeln!(s, "{k}={}", crate::io::fmt_f64(v.as_f64()));
        }
        s
    }
}

fn check_conc<T: Real>(what: &'static str, x: T) -> Result<(), ModelError> {
    if !x.is_finite() {
        return Err(ModelError::NonFinite { what });
    }
    if x < T::zero() {
        return Err(ModelError::Negative { what, value: x.as_f64() });
    }
    Ok(())
}

/// Reaction terms without input checks; f1 := 0 at u = v = 0.
#[inline]
pub fn reaction<T: Real>(p: &ModelParams<T>, u: T, v: T, w: T) -> [T; 3] {
    let s = u + v;
    let f1 = if s > T::zero() { (p.a * v / s - p.d_c) * u } else { T::zero() };
    let u2w = u * u * w;
    let f2 = -p.d_b * v + u2w - p.d * v;
    let f3 = -p.d_g * w - u2w + p.d * v + p.kappa0;
    [f1, f2, f3]
}

/// Reaction terms `(f1, f2, f3)` with the removable value f1(0,0,·) = 0.
pub fn reaction_rhs<T: Real>(p: &ModelParams<T>, u: T, v: T, w: T) -> Result<[T; 3], ModelError> {
    check_conc("u", u)?;
    check_conc("v", v)?;
    if !w.is_finite() {
        return Err(ModelError::NonFinite { what: "w" });
    }
    Ok(reaction(p, u, v, w))
}

/// Jacobian of the reaction terms with respect to (u, v, w).
pub fn reaction_jacobian<T: Real>(p: &ModelParams<T>, u: T, v: T, w: T) -> Result<Mat3<T>, ModelError> {
    reaction_rhs(p, u, v, w)?;
    let s = u + v;
    if s == T::zero() {
        return Err(ModelError::Singular);
    }
    let s2 = s * s;
    let two = T::lit(2.0);
    Ok([
        [p.a * v * v / s2 - p.d_c, p.a * u * u / s2, T::zero()],
        [two * u * w, -p.d_b - p.d, u * u],
        [-two * u * w, p.d, -p.d_g - u * u],
    ])
}

/// Θ = 4·d_g·d_b·d_c²·(d_b+d)/(a−d_c)².
pub fn theta<T: Real>(p: &ModelParams<T>) -> Result<T, ModelError> {
    if p.a == p.d_c {
        return Err(ModelError::ThetaUndefined);
    }
    Ok(T::lit(4.0) * p.d_g * p.d_b * p.vw_product())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Trivial,
    Minus,
    Plus,
    /// Coalesced positive state at κ₀² = Θ.
    Double,
}

impl StateKind {
    pub fn label(&self) -> &'static str {
        match self {
            StateKind::Trivial => "trivial",
            StateKind::Minus => "minus",
            StateKind::Plus => "plus",
            StateKind::Double => "double",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    pub kind: StateKind,
    pub u: T,
    pub v: T,
    pub w: T,
}

fn positive_state<T: Real>(p: &ModelParams<T>, kind: StateKind, w: T) -> SteadyState<T> {
    let v = p.vw_product() / w;
    let u = (p.a - p.d_c) / p.d_c * v;
    SteadyState { kind, u, v, w }
}

/// All spatially constant steady states, trivial first.
pub fn constant_states<T: Real>(p: &ModelParams<T>) -> Vec<SteadyState<T>> {
    let mut out =
        vec![SteadyState { kind: StateKind::Trivial, u: T::zero(), v: T::zero(), w: p.kappa0 / p.d_g }];
    if p.a <= p.d_c {
        return out;
    }
    let th = T::lit(4.0) * p.d_g * p.d_b * p.vw_product();
    let k2 = p.kappa0 * p.kappa0;
    let two_dg = T::lit(2.0) * p.d_g;
    // κ₀² and Θ equal up to rounding count as the coalesced case.
    let tie = T::lit(8.0) * T::epsilon() * th.max(k2);
    if (k2 - th).abs() <= tie {
        out.push(positive_state(p, StateKind::Double, p.kappa0 / two_dg));
    } else if k2 > th {
        let root = (k2 - th).sqrt();
        let w_plus = (p.kappa0 + root) / two_dg;
        // Vieta keeps the small root accurate: w₋·w₊ = Θ/(4 d_g²).
        let w_minus = th / (T::lit(4.0) * p.d_g * p.d_g * w_plus);
        out.push(positive_state(p, StateKind::Minus, w_minus));
        out.push(positive_state(p, StateKind::Plus, w_plus));
    }
    out
}

pub fn minus_state<T: Real>(p: &ModelParams<T>) -> Result<SteadyState<T>, ModelError> {
    if p.a <= p.d_c {
        return Err(ModelError::StateNotFound { reason: "a <= d_c admits only the trivial state".into() });
    }
    constant_states(p).into_iter().find(|s| s.kind == StateKind::Minus).ok_or_else(|| ModelError::StateNotFound {
        reason: "kappa0^2 <= theta admits no pair of positive states".into(),
    })
}

/// 𝔸₁₂: the (u, v) block of the Jacobian at the positive states (independent of w).
pub fn a12_matrix<T: Real>(p: &ModelParams<T>) -> Result<Mat2<T>, ModelError> {
    if p.a <= p.d_c {
        return Err(ModelError::Domain("a12 requires a > d_c".into()));
    }
    let am = p.a - p.d_c;
    Ok([[-p.d_c * am / p.a, am * am / p.a], [T::lit(2.0) * p.k_const(), -p.dd()]])
}

/// Eigenvalues of 𝔸₁₂: (λ₀ > 0, λ₋ < 0).
pub fn a12_eigenvalues<T: Real>(p: &ModelParams<T>) -> Result<(T, T), ModelError> {
    let m = a12_matrix(p)?;
    let half_tr = (m[0][0] + m[1][1]) * T::lit(0.5);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (half_tr * half_tr - det).sqrt();
    let neg = half_tr - disc;
    Ok((det / neg, neg))
}

/// 𝔸(W): linearization around a pattern value W with K = d_c(d_b+d)/(a−d_c).
pub fn linearization_matrix<T: Real>(p: &ModelParams<T>, w: T) -> Result<Mat3<T>, ModelError> {
    if !(w > T::zero()) {
        return Err(ModelError::Domain(format!("linearization needs w > 0, got {w}")));
    }
    let b = a12_matrix(p)?;
    let k = p.k_const();
    let k2w2 = k * k / (w * w);
    Ok([
        [b[0][0], b[0][1], T::zero()],
        [b[1][0], b[1][1], k2w2],
        [-T::lit(2.0) * k, p.d, -p.d_g - k2w2],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdiReport<T> {
    pub state: SteadyState<T>,
    pub jacobian: Mat3<T>,
    /// −tr 𝔸.
    pub cond1: T,
    /// −tr 𝔸 · Σ det 𝔸ᵢⱼ + det 𝔸.
    pub cond2: T,
    /// −det 𝔸.
    pub cond3: T,
    /// −det 𝔸₁₂.
    pub cond4: T,
    pub ddi: bool,
    /// Whether aᵢᵢ < 0 for all i and a₁₂a₂₁ > 0, the setting the four conditions presume.
    pub assumption_met: bool,
}

pub fn det3<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn ddi_check<T: Real>(p: &ModelParams<T>) -> Result<DdiReport<T>, ModelError> {
    let state = minus_state(p)?;
    let m = reaction_jacobian(p, state.u, state.v, state.w)?;
    let tr = m[0][0] + m[1][1] + m[2][2];
    let d12 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let d13 = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    let d23 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let det = det3(&m);
    let cond1 = -tr;
    let cond2 = -tr * (d12 + d13 + d23) + det;
    let cond3 = -det;
    let cond4 = -d12;
    let z = T::zero();
    let ddi = cond1 > z && cond2 > z && cond3 > z && cond4 > z;
    let assumption_met = m[0][0] < z && m[1][1] < z && m[2][2] < z && m[0][1] * m[1][0] > z;
    Ok(DdiReport { state, jacobian: m, cond1, cond2, cond3, cond4, ddi, assumption_met })
}
