use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;
use tms_core::asymptotics::{extract_tms, partial_integral, u_norm_sq, GSpec};
use tms_core::cli::RunConfig;
use tms_core::extensions::Beta;
use tms_core::kernels::{kernel_t, kernel_w, KernelSpec};
use tms_core::numerics::{legendre_q, Charge, GridSpec, Measure, RadialGrid};
use tms_core::operators::{assemble, w_inner, OperatorKind};
use tms_core::params::{efimov_lambda, solve_m_of_s};
use tms_core::zeromode::{cancellation_coefficient, fit_tail};

fn grid() -> Arc<RadialGrid> {
    static G: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    G.get_or_init(|| {
        Arc::new(GridSpec { n_panels: 28, nodes_per_panel: 10, r_min: 1e-3, r_max: 1e4 }.build(Measure::L2).unwrap())
    })
    .clone()
}

fn bump(ell: usize, a: f64, c: f64) -> Charge {
    Charge::from_fn(ell, 0, grid(), |r| r.powi(ell as i32) * (1.0 + c * r * r) * (-a * r * r).exp()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efimov_function_decreases(m1 in 0.01f64..5.0, gap in 1e-3f64..3.0) {
        prop_assert!(efimov_lambda(m1).unwrap() > efimov_lambda(m1 + gap).unwrap());
    }

    #[test]
    fn kernels_are_symmetric_after_weighting(
        ell in 0usize..=4, m in 0.08f64..3.0, lambda in 0.0f64..4.0, r in 1e-3f64..1e3, rp in 1e-3f64..1e3,
    ) {
        let spec = KernelSpec::from_mass(m, lambda, 0.0, ell).unwrap();
        for k in [kernel_t, kernel_w] {
            let (x, y) = (r * r * k(&spec, r, rp).unwrap(), rp * rp * k(&spec, rp, r).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()));
        }
    }

    #[test]
    fn kernel_signs(m in 0.08f64..3.0, lambda in 0.0f64..4.0, r in 1e-3f64..1e3, rp in 1e-3f64..1e3) {
        let s0 = KernelSpec::from_mass(m, lambda, 0.0, 0).unwrap();
        let s1 = s0.with_ell(1);
        prop_assert!(kernel_t(&s0, r, rp).unwrap() >= 0.0);
        prop_assert!(kernel_t(&s1, r, rp).unwrap() <= 0.0);
    }

    #[test]
    fn legendre_q_is_positive_and_decreasing(ell in 0usize..=8, lz in -3.0f64..4.0, step in 0.01f64..1.0) {
        let z = 1.0 + 10f64.powf(lz);
        let (q0, q1) = (legendre_q(ell, z).unwrap(), legendre_q(ell, z * (1.0 + step)).unwrap());
        prop_assert!(q0 > 0.0 && q1 > 0.0 && q1 < q0);
    }

    #[test]
    fn cancellation_coefficient_is_p_independent_at_zero_cutoff(s in 0.0f64..1.0, m in 0.08f64..1.0) {
        let c: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&p| cancellation_coefficient(s, m, 0.0, p).unwrap()).collect();
        let spread = c.iter().copied().fold(f64::MIN, f64::max) - c.iter().copied().fold(f64::MAX, f64::min);
        prop_assert!(spread < 1e-8);
    }

    #[test]
    fn tail_fit_ignores_vector_scale(e in 0.5f64..3.0, c in prop::sample::select(vec![-7.0, 1e-6, 0.3, 1e5])) {
        let v = Charge::from_fn(1, 0, grid(), |r| r.powf(-e) * (1.0 + 1.0 / r)).unwrap();
        let a = fit_tail(&v, (1e2, 1e4)).unwrap();
        let b = fit_tail(&v.scaled(c), (1e2, 1e4)).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-10);
    }

    #[test]
    fn config_round_trips(
        m in 0.01f64..10.0, lambda in 0.1f64..10.0, alpha in -5.0f64..5.0, seed in any::<u64>(),
        qr in -3.0f64..3.0, qi in -3.0f64..3.0, beta in -4.0f64..4.0,
    ) {
        let mut cfg = RunConfig { m, lambda, alpha, seed, ..RunConfig::default() };
        cfg.q = [Complex64::new(qr, qi), Complex64::new(0.0, 0.0), Complex64::new(qi, qr)];
        cfg.beta = [Beta::Finite(beta), Beta::Friedrichs, Beta::Finite(-beta)];
        let mut back = RunConfig::default();
        for (k, v) in cfg.to_kv() {
            back.set(k, &v).unwrap();
        }
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(9))]

    #[test]
    fn polarization_reproduces_the_w_pairing(
        ell in 0usize..=2, a1 in 0.3f64..2.0, a2 in 0.3f64..2.0, c1 in -0.5f64..1.0, c2 in -0.5f64..1.0,
    ) {
        let spec = KernelSpec::from_mass(1.0, 1.0, 0.0, ell).unwrap();
        let (x, y) = (bump(ell, a1, c1), bump(ell, a2, c2));
        let plus = u_norm_sq(&x.add(&y).unwrap(), &spec).unwrap();
        let minus = u_norm_sq(&x.add(&y.scaled(-1.0)).unwrap(), &spec).unwrap();
        let w = assemble(&spec, grid(), OperatorKind::W).unwrap();
        let want = w_inner(&w, &x, &y).unwrap();
        let scale = (w_inner(&w, &x, &x).unwrap() * w_inner(&w, &y, &y).unwrap()).sqrt();
        prop_assert!(((plus - minus) / 4.0 - want).abs() <= 1e-3 * scale);
    }

    #[test]
    fn tms_slope_ignores_the_eta_part(ell in 0usize..=2, a in 0.5f64..2.0, b in 0.5f64..2.0, c in -2.0f64..2.0) {
        let spec = KernelSpec::from_mass(1.0, 1.0, 0.0, ell).unwrap();
        let radii = [50.0, 100.0, 200.0, 400.0, 800.0];
        let xi = bump(ell, a, 0.0);
        let plain = extract_tms(&GSpec::xi_only(xi.clone()).unwrap(), &spec, 1.0, &radii).unwrap();
        let with_eta = extract_tms(&GSpec::new(xi, bump(ell, b, 0.0).scaled(c)).unwrap(), &spec, 1.0, &radii).unwrap();
        prop_assert!((plain.slope - with_eta.slope).abs() <= 1e-6 * plain.slope.abs());
    }

    #[test]
    fn partial_integral_grows_with_the_ball(ell in 0usize..=2, a in 0.5f64..2.0, p1 in 0.3f64..2.0) {
        let spec = KernelSpec::from_mass(1.0, 1.0, 0.0, ell).unwrap();
        let g = GSpec::xi_only(bump(ell, a, 0.0)).unwrap();
        let vals: Vec<f64> = [5.0, 10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&r| partial_integral(&g, &spec, p1, r).unwrap())
            .collect();
        prop_assert!(vals.windows(2).all(|w| w[1] > w[0]), "{:?}", vals);
    }
}

#[test]
fn m_of_s_increases() {
    let s = [0.0, 0.13, 0.37, 0.61, 0.88, 1.0];
    let m: Vec<f64> = s.iter().map(|&s| solve_m_of_s(s).unwrap().x).collect();
    assert!(m.windows(2).all(|w| w[1] > w[0]), "{m:?}");
}
