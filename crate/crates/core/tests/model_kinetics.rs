use ddilab_core::kinetics::{
    classify_equilibria, integrate_kinetics, integrate_transformed, transform_xy, KineticState, Verdict,
};
use ddilab_core::model::{self, constant_states, reaction_jacobian, reaction_rhs, StateKind};
use ddilab_core::ModelParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> impl Strategy<Value = ModelParams> {
    (1.2f64..6.0, 0.2f64..2.0, 0.2f64..2.0, 0.2f64..2.0, 0.2f64..2.0, 0.0f64..4.0, 1.0f64..50.0).prop_map(
        |(a_ratio, d_c, d_b, d, d_g, kappa0, gamma)| ModelParams::new(a_ratio * d_c, d_c, d_b, d, d_g, kappa0, gamma).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobian_matches_central_differences(p in params(), u in 0.05f64..5.0, v in 0.05f64..5.0, w in 0.05f64..5.0) {
        let j = reaction_jacobian(&p, u, v, w).unwrap();
        let step = 1e-6;
        for col in 0..3 {
            let mut plus = [u, v, w];
            let mut minus = [u, v, w];
            plus[col] += step;
            minus[col] -= step;
            let fp = reaction_rhs(&p, plus[0], plus[1], plus[2]).unwrap();
            let fm = reaction_rhs(&p, minus[0], minus[1], minus[2]).unwrap();
            for row in 0..3 {
                let fd = (fp[row] - fm[row]) / (2.0 * step);
                let scale = j[row][col].abs().max(1.0);
                prop_assert!((fd - j[row][col]).abs() <= 1e-5 * scale, "({row},{col}): {fd} vs {}", j[row][col]);
            }
        }
    }

    #[test]
    fn v_plus_w_balance(p in params(), u in 0.0f64..5.0, v in 0.0f64..5.0, w in 0.0f64..5.0) {
        let f = reaction_rhs(&p, u, v, w).unwrap();
        let expected = -p.d_b * v - p.d_g * w + p.kappa0;
        prop_assert!((f[1] + f[2] - expected).abs() <= 1e-12 * (1.0 + u * u * w + v + w));
    }

    #[test]
    fn constant_states_satisfy_rhs_and_vieta(p in params()) {
        let states = constant_states(&p);
        for s in &states {
            let f = reaction_rhs(&p, s.u, s.v, s.w).unwrap();
            let scale = 1.0 + s.u.max(s.v).max(s.w).powi(3);
            prop_assert!(f.iter().all(|r| r.abs() <= 1e-12 * scale), "{:?}: {:?}", s.kind, f);
        }
        let minus = states.iter().find(|s| s.kind == StateKind::Minus);
        let plus = states.iter().find(|s| s.kind == StateKind::Plus);
        if let (Some(m), Some(pl)) = (minus, plus) {
            let product = p.d_b * p.vw_product() / p.d_g;
            prop_assert!((m.w * pl.w - product).abs() <= 1e-12 * product);
            prop_assert!((m.w + pl.w - p.kappa0 / p.d_g).abs() <= 1e-12 * p.kappa0 / p.d_g);
        }
    }

    #[test]
    fn ddi_implies_saddle_in_uv_block(p in params()) {
        if let Ok(r) = model::ddi_check(&p) {
            if r.ddi {
                prop_assert!(r.cond4 > 0.0);
                let (l0, ln) = model::a12_eigenvalues(&p).unwrap();
                prop_assert!(l0 > 0.0 && ln < 0.0);
            }
        }
    }
}

#[test]
fn kinetics_stays_nonnegative() {
    let p = ModelParams::reference(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        let init = KineticState {
            t: 0.0,
            u: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..5.0) },
            v: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..5.0) },
            w: rng.gen_range(0.0..5.0),
        };
        let traj = integrate_kinetics(&p, init, 30.0, 1e-9).unwrap();
        assert!(traj.iter().all(|s| s.u >= 0.0 && s.v >= 0.0 && s.w >= 0.0));
        assert!((traj.last().unwrap().t - 30.0).abs() < 1e-9);
    }
}

#[test]
fn v_plus_w_settles_between_mass_bounds() {
    let p = ModelParams { d_b: 0.5, d_g: 1.5, ..ModelParams::reference(1.0) };
    let nu = p.d_b.max(p.d_g);
    let mu = p.d_b.min(p.d_g);
    let tol = 1e-3 * p.kappa0 / mu;
    let traj = integrate_kinetics(&p, KineticState { t: 0.0, u: 0.3, v: 0.2, w: 4.0 }, 200.0, 1e-10).unwrap();
    let tail: Vec<f64> = traj.iter().filter(|s| s.t >= 160.0).map(|s| s.v + s.w).collect();
    let sup = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(sup >= p.kappa0 / nu - tol && sup <= p.kappa0 / mu + tol, "{sup}");
}

#[test]
fn transformed_system_tracks_original() {
    let p = ModelParams::reference(1.0);
    let init = KineticState { t: 0.0, u: 1.2, v: 0.9, w: 0.8 };
    let t_end = 20.0;
    let orig = integrate_kinetics(&p, init, t_end, 1e-12).unwrap();
    let tr = integrate_transformed(&p, transform_xy(init).unwrap(), t_end, 1e-12).unwrap();
    let a = orig.last().unwrap();
    let b = tr.last().unwrap();
    assert!(a.u > 1e-6);
    let z = transform_xy(*a).unwrap();
    for (x, y) in [(z.u, b.u), (z.x, b.x), (z.y, b.y)] {
        assert!((x - y).abs() <= 1e-6 * y.abs(), "{x} vs {y}");
    }
}

#[test]
fn equilibrium_verdicts_agree_with_long_runs() {
    let p = ModelParams::reference(1.0);
    for r in classify_equilibria(&p) {
        let (u, x, y) = (r.location[0], r.location[1], r.location[2]);
        if u <= 0.0 {
            continue;
        }
        let (v, w) = (x * u, y / u);
        let init = KineticState { t: 0.0, u: u * (1.0 + 1e-3), v: v * (1.0 - 1e-3), w: w * (1.0 + 1e-3) };
        let traj = integrate_kinetics(&p, init, 200.0, 1e-10).unwrap();
        let dist = |s: &KineticState| ((s.u - u).powi(2) + (s.v - v).powi(2) + (s.w - w).powi(2)).sqrt();
        match r.verdict {
            Verdict::Stable => assert!(dist(traj.last().unwrap()) <= 1e-4, "{} should return", r.name),
            Verdict::Unstable => assert!(traj.iter().any(|s| dist(s) > 1e-2), "{} should leave", r.name),
            Verdict::Marginal => {}
        }
    }
}

#[test]
fn tighter_tolerance_shrinks_error() {
    let p = ModelParams::reference(1.0);
    let init = KineticState { t: 0.0, u: 2.0, v: 0.5, w: 1.0 };
    let reference = *integrate_kinetics(&p, init, 10.0, 1e-12).unwrap().last().unwrap();
    let mut prev = f64::INFINITY;
    for tol in [1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
        let end = *integrate_kinetics(&p, init, 10.0, tol).unwrap().last().unwrap();
        let err = (end.u - reference.u).abs() + (end.v - reference.v).abs() + (end.w - reference.w).abs();
        assert!(err < prev, "tol {tol}: {err} >= {prev}");
        prev = err;
    }
}

#[test]
fn minus_state_is_kinetically_stable_at_reference() {
    let p = ModelParams::reference(1.0);
    let m = model::minus_state(&p).unwrap();
    let traj = integrate_kinetics(&p, KineticState { t: 0.0, u: m.u * 1.01, v: m.v, w: m.w }, 100.0, 1e-10).unwrap();
    let e = traj.last().unwrap();
    assert!((e.u - m.u).abs() < 1e-6 && (e.w - m.w).abs() < 1e-6);
}
