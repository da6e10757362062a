mod common;

use proptest::prelude::*;
use tms_core::appendixcheck::{row_integral, schur_bounds};
use tms_core::kernels::{kernel_t, kernel_w, KernelSpec};
use tms_core::numerics::{legendre_q, GridSpec};
use tms_core::params::cancellation_c;

const RC: f64 = 1e6;

#[test]
fn cancellation_constant_matches_the_cutoff_integral() {
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for m in [0.08, 0.095, 0.2, 0.5, 1.0] {
            let c = cancellation_c(s, m).unwrap();
            let bare = common::c_cutoff(s, m, RC);
            let corrected = bare + common::c_cutoff_tail(s, m, RC);
            assert!((corrected - c).abs() < 1e-6, "s={s} m={m}: {corrected} vs {c}");
            // The bare cutoff differs from C by the predicted tail alone.
            assert!((bare - c + common::c_cutoff_tail(s, m, RC)).abs() < 1e-8, "s={s} m={m}");
        }
    }
}

#[test]
fn legendre_q_matches_heine_integral() {
    for ell in 0..=8 {
        for z in [1.01, 1.5, 2.0, 10.0, 1e3] {
            let got = legendre_q(ell, z).unwrap();
            let want = common::q_oracle(ell, z);
            assert!((got / want - 1.0).abs() < 1e-9, "ell={ell} z={z}: {got} vs {want}");
        }
    }
}

#[test]
fn schur_row_at_unit_radius_matches_adaptive_quadrature() {
    let got = row_integral(1, 1.0);
    let want = common::schur_row_oracle(1, 1.0);
    assert!((got / want - 1.0).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn schur_sups_decrease_with_ell() {
    let g = GridSpec { n_panels: 16, nodes_per_panel: 8, r_min: 1e-2, r_max: 1e2 };
    let one = schur_bounds(1, &g).unwrap();
    let two = schur_bounds(2, &g).unwrap();
    assert!(two.sup_row <= one.sup_row && two.sup_col <= one.sup_col);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_match_the_sphere_integral(
        ell in 0usize..=3,
        heavy in any::<bool>(),
        lambda in prop::sample::select(vec![0.0, 1.0]),
        r in 0.2f64..5.0,
        rp in 0.2f64..5.0,
    ) {
        let m = if heavy { 1.0 } else { 0.09 };
        let spec = KernelSpec::from_mass(m, lambda, 0.0, ell).unwrap();
        let (t, w) = common::sphere_kernels(ell, m, lambda, r, rp);
        let kt = kernel_t(&spec, r, rp).unwrap();
        let kw = kernel_w(&spec, r, rp).unwrap();
        prop_assert!((kt / t - 1.0).abs() < 1e-8, "T: {} vs {}", kt, t);
        prop_assert!((kw / w - 1.0).abs() < 1e-8, "W: {} vs {}", kw, w);
    }
}
