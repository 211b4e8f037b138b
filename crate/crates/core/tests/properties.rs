//! Invariants of the scheme, the classifier and the closed forms, checked on
//! random inputs.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use repulse_core::deterministic::{
    comparison_solve, integrate_deterministic, sqrt_profile, DeterministicStart, PiecewiseLinear,
};
use repulse_core::integrator::{
    implicit_bessel_substep, rescale_path, simulate_with_increments, step, SchemeKind, SimConfig,
};
use repulse_core::model::{Drift, Params, SimGrid, State};
use repulse_core::regime::{
    c3_holds_at, check_c1, classify_existence, search_c3, ExistenceCase, C3_GRID_POINTS,
    C3_REFINE_TOL,
};
use repulse_core::rng::{gaussian_increments, RngStream};

fn grid(dt: f64, t: f64) -> SimGrid {
    SimGrid::new(dt, t).unwrap()
}

fn diag() -> impl Strategy<Value = f64> {
    0.05f64..3.0
}

fn coupling() -> impl Strategy<Value = f64> {
    -3.0f64..3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn increments_are_a_function_of_the_key(seed in any::<u64>(), idx in 0u64..1_000_000) {
        let g = grid(0.01, 0.5);
        let a = gaussian_increments(RngStream::new(seed, idx), &g);
        let b = gaussian_increments(RngStream::new(seed, idx), &g);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(RngStream::new(seed, idx).increment_at(0.01, 17), a[17]);
    }

    #[test]
    fn c3_is_homogeneous(
        a in diag(), b in coupling(), g in coupling(), d in diag(),
        lambda in 0.01f64..1.0,
    ) {
        let p = Params::new(a, b, g, d);
        let mu = 1.0 - lambda;
        prop_assume!(mu > 0.0);
        let base = c3_holds_at(&p, lambda, mu).unwrap();
        for c in [0.5, 2.0, 10.0] {
            prop_assert_eq!(c3_holds_at(&p, c * lambda, c * mu).unwrap(), base, "c = {}", c);
        }
    }

    #[test]
    fn swapped_coordinates_give_the_mirrored_verdict(
        a in diag(), b in -3.0f64..-0.01, g in 0.01f64..3.0, d in diag(),
    ) {
        let p = Params::new(a, b, g, d);
        let direct = classify_existence(&p);
        let mirrored = classify_existence(&p.swapped());
        prop_assert_eq!(direct.case, ExistenceCase::OpposedCouplingSwapped);
        prop_assert_eq!(mirrored.case, ExistenceCase::OpposedCoupling);
        prop_assert_eq!(direct.regime, mirrored.regime);
    }

    #[test]
    fn c1_implies_a_c3_witness(a in diag(), b in 0.0f64..3.0, g in 0.0f64..3.0, d in diag()) {
        let p = Params::new(a, b, g, d);
        prop_assert!(check_c1(&p));
        let w = search_c3(&p, C3_GRID_POINTS, C3_REFINE_TOL);
        prop_assert!(w.is_some());
        let w = w.unwrap();
        prop_assert!(c3_holds_at(&p, w.lambda, w.mu).unwrap());
    }

    #[test]
    fn substep_solves_its_quadratic(
        x in 0.0f64..10.0, e in -50.0f64..50.0, w in -5.0f64..5.0,
        dt in 1e-8f64..1.0, a in 1e-3f64..5.0,
    ) {
        let r = implicit_bessel_substep(x, e, w, dt, a);
        prop_assert!(r > 0.0);
        let b = x + w + e * dt;
        // r^2 - b r - a dt = 0, checked relative to the size of its terms.
        let scale = (r * r).max(b.abs() * r).max(a * dt);
        prop_assert!((r * r - b * r - a * dt).abs() <= 1e-12 * scale);
    }

    #[test]
    fn substep_is_monotone_in_its_forcing(
        x in 0.0f64..3.0, w in -1.0f64..1.0, dt in 1e-6f64..0.1, a in 0.01f64..3.0,
        e1 in -20.0f64..20.0, de in 0.0f64..20.0,
    ) {
        let lo = implicit_bessel_substep(x, e1, w, dt, a);
        let hi = implicit_bessel_substep(x, e1 + de, w, dt, a);
        prop_assert!(lo <= hi);
    }

    #[test]
    fn stronger_cross_push_gives_larger_x(
        seed in any::<u64>(),
        a in 0.1f64..2.0, d in 0.1f64..2.0,
        b1 in 0.0f64..2.0, db in 0.0f64..2.0, g in 0.0f64..2.0,
    ) {
        let gr = grid(1e-3, 1.0);
        let inc = gaussian_increments(RngStream::new(seed, 0), &gr);
        let run = |b: f64| {
            let cfg = SimConfig::new(Params::new(a, b, g, d), gr).with_start(0.5, 0.5);
            simulate_with_increments(&cfg, &inc).unwrap()
        };
        let p1 = run(b1);
        let p2 = run(b1 + db);
        for k in 0..p1.len() {
            prop_assert!(p2.xs[k] >= p1.xs[k], "step {}: {} < {}", k, p2.xs[k], p1.xs[k]);
            prop_assert!(p2.ys[k] <= p1.ys[k]);
        }
    }

    #[test]
    fn scheme_commutes_with_brownian_scaling(
        seed in any::<u64>(),
        a in diag(), b in 0.0f64..2.0, g in -0.4f64..2.0, d in diag(),
        mu in -1.0f64..1.0, nu in -1.0f64..1.0,
        x0 in 0.0f64..2.0, y0 in 0.1f64..2.0,
        c in prop::sample::select(vec![0.5f64, 2.0]),
    ) {
        let p = Params::new(a, b, g, d);
        let g0 = grid(1e-3, 0.5);
        let inc = gaussian_increments(RngStream::new(seed, 3), &g0);
        let base = SimConfig::new(p, g0).with_start(x0, y0).with_drift(Drift::new(mu, nu)).forced();
        let scaled_inc: Vec<(f64, f64)> = inc.iter().map(|&(u, v)| (u / c, v / c)).collect();
        let scaled = SimConfig {
            grid: grid(1e-3 / (c * c), 0.5 / (c * c)),
            x0: x0 / c,
            y0: y0 / c,
            drift: Drift::new(mu * c, nu * c),
            ..base
        };
        let lhs = rescale_path(&simulate_with_increments(&base, &inc).unwrap(), c);
        let rhs = simulate_with_increments(&scaled, &scaled_inc).unwrap();
        prop_assert_eq!(lhs.len(), rhs.len());
        for k in 0..lhs.len() {
            prop_assert!((lhs.xs[k] - rhs.xs[k]).abs() <= 1e-12);
            prop_assert!((lhs.ys[k] - rhs.ys[k]).abs() <= 1e-12);
            prop_assert!((lhs.times[k] - rhs.times[k]).abs() <= 1e-12);
        }
        prop_assert_eq!(lhs.x_hit, rhs.x_hit);
    }

    #[test]
    fn recorded_integrals_reproduce_the_path(
        seed in any::<u64>(),
        a in 0.5f64..2.0, b in 0.0f64..1.0, g in 0.0f64..1.0, d in 0.5f64..2.0,
        mu in 0.0f64..1.0,
    ) {
        // X_t = X_0 + B_t + alpha int 1/X + beta int 1/Y - mu t, up to the
        // telescoped difference between trapezoid and scheme quadrature.
        let gr = grid(1e-4, 1.0);
        let inc = gaussian_increments(RngStream::new(seed, 0), &gr);
        let cfg = SimConfig::new(Params::new(a, b, g, d), gr).with_drift(Drift::new(mu, 0.0));
        let path = simulate_with_increments(&cfg, &inc).unwrap();
        let last = path.last_state().unwrap();
        let bt: f64 = inc.iter().map(|i| i.0).sum();
        let (ix, iy) = path.final_int_inv();
        let res = last.x - (1.0 + bt + a * ix + b * iy - mu * last.t);
        let min_x = path.xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_y = path.ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let bound = gr.dt() * (a / min_x + b / min_y) + 1e-9;
        prop_assert!(res.abs() <= bound, "residual {} > {}", res, bound);
    }

    #[test]
    fn closed_form_residuals(a in 0.05f64..5.0, b in -5.0f64..5.0, g in -5.0f64..5.0, d in 0.05f64..5.0) {
        let p = Params::new(a, b, g, d);
        prop_assume!(!(b < 0.0 && g < 0.0 && a * d <= b * g));
        let s = sqrt_profile(&p).unwrap();
        prop_assert!(s.big_c > 0.0 && s.big_d > 0.0);
        let (r1, r2) = s.residuals(&p);
        let scale = (a / s.c).abs().max((b / s.d).abs()).max(s.c).max(1.0);
        prop_assert!(r1.abs() <= 1e-12 * scale, "r1 = {}", r1);
        let scale = (g / s.c).abs().max((d / s.d).abs()).max(s.d).max(1.0);
        prop_assert!(r2.abs() <= 1e-12 * scale, "r2 = {}", r2);
    }

    #[test]
    fn deterministic_path_commutes_with_scaling(
        a in diag(), b in 0.0f64..2.0, g in 0.0f64..2.0, d in diag(),
    ) {
        let p = Params::new(a, b, g, d);
        let small = integrate_deterministic(&p, &grid(1e-3, 1.0), DeterministicStart::ClosedForm).unwrap();
        let large = integrate_deterministic(&p, &grid(4e-3, 4.0), DeterministicStart::ClosedForm).unwrap();
        let back = rescale_path(&large, 2.0);
        prop_assert_eq!(&back.xs, &small.xs);
        prop_assert_eq!(&back.ys, &small.ys);
    }
}

#[test]
fn positivity_under_extreme_noise() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut checked = 0u64;
    while checked < 1_000_000 {
        let dt = 10f64.powf(rng.random_range(-6.0..-1.0));
        let p = Params::new(
            rng.random_range(0.01..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.01..3.0),
        );
        let cfg = SimConfig::new(p, grid(dt, 1.0))
            .with_drift(Drift::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
        let sd = dt.sqrt();
        let mut s = State::new(rng.random_range(0.0..2.0 * sd), rng.random_range(0.0..2.0 * sd), 0.0);
        for _ in 0..100 {
            let dw = rng.random_range(-10.0..10.0) * sd;
            let dc = rng.random_range(-10.0..10.0) * sd;
            s = step(s, dw, dc, &cfg);
            assert!(s.x > 0.0 && s.y > 0.0, "non-positive state {s:?} for {p}");
            checked += 1;
        }
    }
}

#[test]
fn truncated_hn_decreases_with_n() {
    let gr = grid(1e-4, 1.0);
    for seed in 0..20 {
        let inc = gaussian_increments(RngStream::new(seed, 0), &gr);
        let p = Params::new(1.0, -0.5, -0.5, 1.0);
        let run = |n: u32| {
            let cfg = SimConfig::new(p, gr).with_scheme(SchemeKind::TruncatedHn { n });
            simulate_with_increments(&cfg, &inc).unwrap()
        };
        let coarse = run(10);
        let fine = run(100);
        for k in 0..coarse.len() {
            assert!(coarse.xs[k] >= fine.xs[k], "seed {seed}, step {k}");
            assert!(coarse.ys[k] >= fine.ys[k], "seed {seed}, step {k}");
        }
    }
}

#[test]
fn truncated_psi_tracks_the_implicit_scheme() {
    let gr = grid(1e-4, 1.0);
    let p = Params::new(1.0, 1.0, 1.0, 1.0);
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let inc = gaussian_increments(RngStream::new(seed, 0), &gr);
        let implicit = simulate_with_increments(&SimConfig::new(p, gr), &inc).unwrap();
        let psi_cfg = SimConfig::new(p, gr).with_scheme(SchemeKind::TruncatedPsi { epsilon: 1e-4 });
        let psi = simulate_with_increments(&psi_cfg, &inc).unwrap();
        for k in 0..implicit.len() {
            worst = worst
                .max((implicit.xs[k] - psi.xs[k]).abs())
                .max((implicit.ys[k] - psi.ys[k]).abs());
        }
    }
    assert!(worst < 0.05, "sup distance {worst}");
}

#[test]
fn truncated_hn_rejects_positive_beta() {
    let cfg = SimConfig::new(Params::new(1.0, 1.0, -0.5, 1.0), grid(1e-3, 1.0))
        .with_scheme(SchemeKind::TruncatedHn { n: 10 });
    assert!(repulse_core::integrator::simulate_truncated(&cfg, RngStream::new(0, 0)).is_err());
}

#[test]
fn noise_free_corner_start_follows_sqrt_profile() {
    let gr = grid(1e-6, 1.0);
    let cfg = SimConfig::new(Params::new(1.0, 1.0, 1.0, 1.0), gr).with_start(0.0, 0.0);
    let path = simulate_with_increments(&cfg, &vec![(0.0, 0.0); gr.n_steps()]).unwrap();
    let last = path.last_state().unwrap();
    assert!((last.x / 2.0 - 1.0).abs() < 1e-2, "x(1) = {}", last.x);
    assert!((last.y / 2.0 - 1.0).abs() < 1e-2, "y(1) = {}", last.y);
}

#[test]
fn comparison_principle_on_random_drivers() {
    let mut rng = StdRng::seed_from_u64(11);
    let gr = grid(1e-3, 1.0);
    for _ in 0..100 {
        let (v1, v2) = random_driver_pair(&mut rng);
        let alpha = rng.random_range(0.05..3.0);
        let x1 = comparison_solve(alpha, &v1, &gr);
        let x2 = comparison_solve(alpha, &v2, &gr);
        assert!(x1[1..].iter().all(|&v| v > 0.0));
        assert!(x1.iter().zip(&x2).all(|(a, b)| a <= b));
    }
}

/// `v1` arbitrary with `v1(0) >= 0`; `v2 = v1 + w` with `w` nondecreasing and
/// `w(0) >= 0`.
fn random_driver_pair(rng: &mut StdRng) -> (PiecewiseLinear, PiecewiseLinear) {
    let n = rng.random_range(2..12);
    let mut times: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    times[0] = 0.0;
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut w = rng.random_range(0.0..0.5);
    let mut k1 = Vec::new();
    let mut k2 = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let v = if i == 0 {
            rng.random_range(0.0..1.0)
        } else {
            rng.random_range(-2.0..2.0)
        };
        if i > 0 {
            w += rng.random_range(0.001..1.0);
        }
        k1.push((t, v));
        k2.push((t, v + w));
    }
    (
        PiecewiseLinear::new(k1).unwrap(),
        PiecewiseLinear::new(k2).unwrap(),
    )
}
