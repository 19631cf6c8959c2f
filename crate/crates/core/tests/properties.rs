//! Algebraic and monotonicity properties of the rate model and the special
//! functions, checked on randomized inputs.

use proptest::prelude::*;

use eealloc::joint::{follower_alloc, psi_from_leader};
use eealloc::model::rate;
use eealloc::special::{lambert_w0, phi};
use eealloc::waterfill::min_power;

proptest! {
    #[test]
    fn rate_increasing_and_concave_in_power(
        w in 0.1f64..20.0,
        g in 0.05f64..10.0,
        p in 0.0f64..50.0,
        h in 0.01f64..0.5,
    ) {
        let r0 = rate(w, p, g).unwrap();
        let r1 = rate(w, p + h, g).unwrap();
        let r2 = rate(w, p + 2.0 * h, g).unwrap();
        prop_assert!(r1 > r0 && r2 > r1);
        // second difference of a strictly concave function
        prop_assert!(r2 - 2.0 * r1 + r0 < 1e-12 * r1.max(1.0));
    }

    #[test]
    fn rate_increasing_and_concave_in_bandwidth(
        w in 0.1f64..20.0,
        g in 0.05f64..10.0,
        p in 0.1f64..50.0,
        h in 0.01f64..0.1,
    ) {
        let r0 = rate(w, p, g).unwrap();
        let r1 = rate(w + h, p, g).unwrap();
        let r2 = rate(w + 2.0 * h, p, g).unwrap();
        prop_assert!(r1 > r0 && r2 > r1);
        prop_assert!(r2 - 2.0 * r1 + r0 < 1e-12 * r1.max(1.0));
    }

    #[test]
    fn rate_is_degree_one_homogeneous(
        w in 0.1f64..10.0,
        g in 0.05f64..10.0,
        p in 0.0f64..20.0,
        c in 0.1f64..10.0,
    ) {
        let scaled = rate(c * w, c * p, g).unwrap();
        let base = rate(w, p, g).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-12 * (c * base).abs().max(1.0));
    }

    #[test]
    fn lambert_identity_on_random_arguments(x in -0.367f64..1e6) {
        let w = lambert_w0(x).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn lambert_strictly_increasing(a in -0.36f64..1e4, d in 1e-6f64..10.0) {
        let w1 = lambert_w0(a).unwrap();
        let w2 = lambert_w0(a + d).unwrap();
        prop_assert!(w2 > w1);
    }

    #[test]
    fn phi_positive_and_decreasing(x in 1e-6f64..1e7, factor in 1.5f64..10.0) {
        let a = phi(x).unwrap();
        let b = phi(x * factor).unwrap();
        prop_assert!(a > 0.0 && b > 0.0);
        prop_assert!(a > b);
    }

    #[test]
    fn min_power_hits_the_rate_floor(
        w in 0.05f64..20.0,
        g in 0.05f64..10.0,
        r_min in 0.0f64..50.0,
    ) {
        let p = min_power(w, g, r_min);
        let achieved = rate(w, p, g).unwrap();
        prop_assert!((achieved - r_min).abs() <= 1e-10 * r_min.max(1.0));
    }

    #[test]
    fn follower_pair_meets_its_floor_exactly(
        psi in 1e-6f64..1e3,
        g in 0.05f64..10.0,
        r_min in 1e-3f64..30.0,
    ) {
        let (w, p) = follower_alloc(psi, g, r_min).unwrap();
        prop_assert!(w > 0.0 && p > 0.0);
        let achieved = rate(w, p, g).unwrap();
        prop_assert!((achieved - r_min).abs() <= 1e-9 * r_min.max(1.0));
    }

    #[test]
    fn leader_psi_round_trip(
        psi in 1e-4f64..1e2,
        g in 0.05f64..10.0,
        r_target in 0.1f64..20.0,
    ) {
        // build a floor-meeting pair from psi, then invert it
        let (w, p) = follower_alloc(psi, g, r_target).unwrap();
        let back = psi_from_leader(w, p, g);
        prop_assert!((back - psi).abs() <= 1e-9 * psi.max(1e-6));
    }

    #[test]
    fn follower_bandwidth_down_power_up_in_psi(
        psi in 1e-4f64..1e2,
        g in 0.05f64..10.0,
        r_min in 0.1f64..20.0,
        factor in 1.01f64..4.0,
    ) {
        let (w1, p1) = follower_alloc(psi, g, r_min).unwrap();
        let (w2, p2) = follower_alloc(psi * factor, g, r_min).unwrap();
        prop_assert!(w2 < w1);
        prop_assert!(p2 > p1);
    }
}

#[test]
fn phi_strictly_decreasing_on_log_grid() {
    let n = 500;
    let mut prev = f64::INFINITY;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let x = 1e-6 * (1e8f64 / 1e-6).powf(t);
        let value = phi(x).unwrap();
        assert!(value > 0.0, "phi({x}) not positive");
        assert!(value < prev, "phi not decreasing at x={x}");
        prev = value;
    }
}

#[test]
fn lambert_log_spaced_grid_meets_residual_bound() {
    // log-spaced offsets from the branch point cover both the flat region
    // and the large-argument tail
    let branch = -1.0 / std::f64::consts::E;
    let lo_offset = 1e-9f64;
    let hi_offset = 1e8 - branch;
    let n = 10_000;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let x = branch + lo_offset * (hi_offset / lo_offset).powf(t);
        let w = lambert_w0(x).unwrap();
        let resid = (w * w.exp() - x).abs();
        assert!(
            resid <= 1e-12 * (1.0 + x.abs()),
            "x={x:e}: residual {resid:e}"
        );
    }
}
