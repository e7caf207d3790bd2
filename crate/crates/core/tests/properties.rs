use std::sync::{Arc, OnceLock};

use bubble_core::bubble::{bubble_profile, BubbleSpec};
use bubble_core::harness::normalize_blowup;
use bubble_core::norms::{decay_constant, holder_norm};
use bubble_core::riesz::{ring_kernel, RingKernelTable};
use bubble_core::solver::{shoot_limit_profile, ShootOutcome};
use bubble_core::{make_grid, powerlaw_fit, GridScheme, ModelParams, RadialField, RadialGrid};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn grid(r_max: f64, n: usize) -> Arc<RadialGrid> {
    Arc::new(make_grid(r_max, n, GridScheme::Uniform).unwrap())
}

fn shared_table() -> &'static RingKernelTable {
    static TABLE: OnceLock<RingKernelTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let g = Arc::new(make_grid(20.0, 160, GridScheme::Geometric { ratio: 1.02 }).unwrap());
        RingKernelTable::build(g, 3, 1.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shooting_is_scale_covariant(v0 in 0.5f64..2.0, six in any::<bool>()) {
        let (n, q) = if six { (6usize, 24.0) } else { (3, 3.0) };
        let res = shoot_limit_profile(n, q, v0, grid(10.0, 500)).unwrap();
        prop_assert_eq!(res.outcome, ShootOutcome::Decayed);
        let z = BubbleSpec::unit(n, q).unwrap();
        let k = v0.powf(2.0 / (n as f64 - 2.0));
        for (r, v) in res.profile.nodes().iter().zip(res.profile.values()) {
            prop_assert!((v - v0 * z.value(k * r)).abs() <= 1e-5, "r={} v={}", r, v);
        }
    }

    #[test]
    fn ring_kernel_symmetry_and_homogeneity(
        r in 0.1f64..5.0,
        s in 0.1f64..5.0,
        lambda in 0.2f64..5.0,
        n in 3usize..=7,
        frac in 0.05f64..0.95,
    ) {
        prop_assume!((r - s).abs() > 1e-3);
        let ell = frac * (n as f64 - 1.0);
        let w = ring_kernel(r, s, n, ell).unwrap();
        prop_assert!(w > 0.0);
        prop_assert!(rel(ring_kernel(s, r, n, ell).unwrap(), w) <= 1e-10);
        let scaled = ring_kernel(lambda * r, lambda * s, n, ell).unwrap();
        prop_assert!(rel(scaled, lambda.powf(-ell) * w) <= 1e-9);
    }

    #[test]
    fn decay_constant_is_homogeneous(c in 0.1f64..10.0, rho in 1.0f64..15.0) {
        let z = bubble_profile(&BubbleSpec::unit(6, 24.0).unwrap(), grid(20.0, 400));
        let base = decay_constant(&z, rho, 6).unwrap();
        prop_assert!(rel(decay_constant(&z.scale(c), rho, 6).unwrap(), c * base) <= 1e-12);
        prop_assert!(base <= 1.0 + 1e-12);
    }

    #[test]
    fn holder_norm_grows_with_the_ball(alpha in 0.0f64..0.95, a in 0.5f64..4.0, b in 0.5f64..4.0) {
        let f = RadialField::from_fn(grid(4.0, 120), |r| (3.0 * r).sin() / (1.0 + r), None);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(holder_norm(&f, alpha, lo).unwrap() <= holder_norm(&f, alpha, hi).unwrap());
    }

    #[test]
    fn normalization_invariants(amp in 0.5f64..50.0, width in 0.2f64..3.0, n in 3usize..=7) {
        let u = RadialField::from_fn(grid(10.0, 200), |r| amp / (1.0 + (r / width).powi(2)), None);
        let p = ModelParams::new(n, 1.0, 1.0);
        let norm = normalize_blowup(&u, &p).unwrap();
        prop_assert_eq!(norm.v.values()[0], 1.0);
        prop_assert!(norm.v.values().iter().all(|v| *v > 0.0 && *v <= 1.0));
        prop_assert!(rel(norm.eps.powf((n as f64 - 2.0) / 2.0) * amp, 1.0) <= 1e-12);
        prop_assert!(rel(norm.v.grid().r_max(), 10.0 / norm.eps) <= 1e-12);
    }

    #[test]
    fn powerlaw_fit_recovers_exact_data(k in -5.0f64..5.0, c in 0.01f64..100.0, m in 2usize..12) {
        let pts: Vec<(f64, f64)> = (1..=m).map(|i| {
            let x = 0.3 * i as f64;
            (x, c * x.powf(k))
        }).collect();
        let fit = powerlaw_fit(&pts).unwrap();
        prop_assert!((fit.slope - k).abs() <= 1e-10);
        prop_assert!(rel(fit.coeff(), c) <= 1e-10);
        prop_assert!(fit.max_residual <= 1e-10);
    }

    #[test]
    fn convolution_is_linear_and_positive(a in 0.1f64..3.0, b in 0.1f64..3.0, w in 0.5f64..4.0) {
        let t = shared_table();
        let g = t.grid().clone();
        let f = RadialField::from_fn(g.clone(), |r| (-r * r).exp(), None);
        let h = RadialField::from_fn(g, |r| if r < w { (1.0 - (r / w).powi(2)).powi(3) } else { 0.0 }, None);
        let combined = t.apply(&f.scale(a).axpy(b, &h).unwrap()).unwrap();
        let separate = t.apply(&f).unwrap().scale(a).axpy(b, &t.apply(&h).unwrap()).unwrap();
        let scale = combined.sup_abs();
        for (x, y) in combined.values().iter().zip(separate.values()) {
            prop_assert!(*x > 0.0);
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }
}
