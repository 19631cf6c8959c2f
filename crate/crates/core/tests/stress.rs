//! Broad seeded stress run over both optimizers, ignored by default because
//! of its runtime. Run with `cargo test -p eealloc --test stress -- --ignored`.

use eealloc::ee_fixed::{critical_levels, optimize_fixed};
use eealloc::ee_joint::optimize_joint;
use eealloc::model::Mode;
use eealloc::oracle::{random_scenario, sweep};
use eealloc::waterfill::kkt_residual;
use eealloc::Error;

#[test]
#[ignore]
fn stress_fixed() {
    let mut feasible = 0;
    let mut infeasible = 0;
    for seed in 0..3000u64 {
        let k = 1 + (seed % 4) as usize;
        let s = random_scenario(seed, k, Mode::Fixed);
        match optimize_fixed(&s) {
            Ok(r) => {
                feasible += 1;
                assert!(r.p_opt >= 0.0 && r.p_opt <= s.power_budget * (1.0 + 1e-9), "seed {seed}");
                assert!(r.max_ee.is_finite(), "seed {seed}");
                let (alloc, diag) = eealloc::waterfill::allocate(&s, r.p_opt).unwrap();
                let res = kkt_residual(&s, &alloc, &diag);
                assert!(res <= 1e-9, "seed {seed}: kkt {res:e}");
                let curve = sweep(&s, Mode::Fixed, 160).unwrap();
                let spacing = (s.power_budget - curve.samples[0].total_power) / 159.0;
                assert!(
                    (r.p_opt - curve.argmax_power).abs() <= spacing + 1e-12,
                    "seed {seed}: p_opt {} argmax {}",
                    r.p_opt,
                    curve.argmax_power
                );
            }
            Err(Error::Infeasible { .. }) => infeasible += 1,
            Err(e) => panic!("seed {seed}: unexpected error {e:?}"),
        }
        let _ = critical_levels(&s);
    }
    println!("fixed: {feasible} feasible, {infeasible} infeasible");
}

#[test]
#[ignore]
fn stress_joint() {
    let mut feasible = 0;
    let mut infeasible = 0;
    for seed in 0..3000u64 {
        let k = 1 + (seed % 4) as usize;
        let s = random_scenario(seed, k, Mode::Joint);
        match optimize_joint(&s) {
            Ok(r) => {
                feasible += 1;
                assert!(r.p_opt <= s.power_budget * (1.0 + 1e-9), "seed {seed}");
                assert!(r.max_ee.is_finite() && r.max_ee >= 0.0, "seed {seed}");
                let curve = sweep(&s, Mode::Joint, 160).unwrap();
                let spacing = (s.power_budget - curve.samples[0].total_power) / 159.0;
                assert!(
                    (r.p_opt - curve.argmax_power).abs() <= spacing + 1e-12,
                    "seed {seed}: p_opt {} argmax {} case {:?}",
                    r.p_opt,
                    curve.argmax_power,
                    r.boundary_case
                );
            }
            Err(Error::Infeasible { .. }) => infeasible += 1,
            Err(e) => panic!("seed {seed}: unexpected error {e:?}"),
        }
    }
    println!("joint: {feasible} feasible, {infeasible} infeasible");
}
