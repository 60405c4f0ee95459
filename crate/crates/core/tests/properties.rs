use nlsmix_core::confinement::{fibering_tau, ConfinedNorms};
use nlsmix_core::continuation::fit_exponent;
use nlsmix_core::functionals::{certificate_from_norms, fibering_map, fibering_max};
use nlsmix_core::reduction::{mu_of_t, relative_reduction_residual};
use nlsmix_core::{Norms, ProblemParams};
use proptest::prelude::*;

fn admissible() -> impl Strategy<Value = (ProblemParams, Norms)> {
    (3u32..=6, 0.01f64..0.99, 0.0f64..50.0, 0.0f64..4.0, any::<bool>())
        .prop_flat_map(|(dim, qf, t, lambda, critical)| {
            let c = 2.0 * dim as f64 / (dim as f64 - 2.0);
            let q = 2.0 + qf * (c - 2.0);
            let critical = critical || t == 0.0;
            let params = ProblemParams { dim, q, t: t.max(1e-3), lambda, critical };
            (Just(params), 1e-2f64..1e2, 1e-2f64..1e2, 1e-2f64..1e2, 1e-2f64..1e2)
        })
        .prop_map(|(params, mass, grad, lq, crit)| (params, Norms { mass, grad, lq, crit }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn fibering_derivative_changes_sign_once((params, n) in admissible()) {
        let s0 = fibering_max(&n, &params).unwrap();
        let m = 4000;
        let mut changes = 0;
        let mut prev = fibering_map(&n, &params, 10.0 * s0 / m as f64).d1;
        for i in 2..=m {
            let d1 = fibering_map(&n, &params, 10.0 * s0 * i as f64 / m as f64).d1;
            if (d1 > 0.0) != (prev > 0.0) {
                changes += 1;
            }
            prev = d1;
        }
        prop_assert_eq!(changes, 1);
        prop_assert!(fibering_map(&n, &params, s0).d2 < 0.0);
    }

    #[test]
    fn doubling_the_profile_halves_the_scale((params, n) in admissible(), s in 0.05f64..5.0) {
        let c = params.critical_exponent();
        let doubled = Norms {
            mass: 4.0 * n.mass,
            grad: 4.0 * n.grad,
            lq: 2f64.powf(params.q) * n.lq,
            crit: 2f64.powf(c) * n.crit,
        };
        let a = fibering_map(&n, &params, 2.0 * s).value;
        let b = fibering_map(&doubled, &params, s).value;
        let scale = 1.0 + a.abs().max(b.abs());
        prop_assert!((a - b).abs() < 1e-11 * scale, "{} vs {}", a, b);
        let r = fibering_max(&doubled, &params).unwrap() / fibering_max(&n, &params).unwrap();
        prop_assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nehari_residual_is_the_fibering_slope_at_one((params, n) in admissible()) {
        let cert = certificate_from_norms(&n, &params);
        let d1 = fibering_map(&n, &params, 1.0).d1;
        prop_assert!((cert.nehari_res - d1).abs() < 1e-12 * (1.0 + d1.abs()));
        // Rescaling onto the Nehari manifold zeroes both.
        let s0 = fibering_max(&n, &params).unwrap();
        let c = params.critical_exponent();
        let proj = Norms {
            mass: s0 * s0 * n.mass,
            grad: s0 * s0 * n.grad,
            lq: s0.powf(params.q) * n.lq,
            crit: s0.powf(c) * n.crit,
        };
        let scale = proj.grad + params.lambda * proj.mass;
        prop_assert!(certificate_from_norms(&proj, &params).nehari_res.abs() < 1e-10 * scale);
        prop_assert!(fibering_map(&proj, &params, 1.0).d1.abs() < 1e-10 * scale);
    }

    #[test]
    fn reduction_coupling_zeroes_the_scalar_equation(
        q in 2.05f64..3.3, t in 1e-3f64..1e4, vq in 1e-3f64..1e3, a in 0.1f64..10.0
    ) {
        let mu = mu_of_t(3, q, t, vq, a);
        prop_assert!(mu > 0.0 && mu.is_finite());
        prop_assert!(relative_reduction_residual(3, q, t, vq, a, mu) < 1e-10);
    }

    #[test]
    fn confined_fibering_diverges_at_zero(
        grad in 0.1f64..100.0, pot in 1e-3f64..10.0, lp in 0.1f64..100.0, p in 3.4f64..5.9
    ) {
        let u = ConfinedNorms { mass: 1.0, grad, lp, pot };
        let near = fibering_tau(&u, p, 1e-4).value;
        let one = fibering_tau(&u, p, 1.0).value;
        prop_assert!(near > one && near > 1e6 * pot);
    }

    #[test]
    fn power_fit_recovers_exponent(k in -5.0f64..5.0, c in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = (0..12).map(|i| {
            let t = 10f64.powf(0.25 * i as f64);
            (t, c * t.powf(k))
        }).collect();
        let fit = fit_exponent(&pts, (0.0, f64::INFINITY)).unwrap();
        prop_assert!((fit.exponent - k).abs() < 1e-9);
        prop_assert!((fit.prefactor / c - 1.0).abs() < 1e-8);
    }
}
