//! Cross-checks of the closed-form solvers against brute-force grids, finite
//! differences, and the structural claims they rely on (monotone concave sum
//! rate, quasiconcave efficiency, floor-pinned followers). All scenarios are
//! seeded, so failures replay exactly.

use eealloc::ee_fixed::{critical_levels, optimize_fixed, theta};
use eealloc::ee_joint::{dpsi_dp, lambda_p, optimize_joint};
use eealloc::joint::{floor_power_total, joint_allocate, psi_from_leader, psi_window};
use eealloc::model::{BoundaryCase, Mode, Scenario};
use eealloc::oracle::{grid_joint_oracle, grid_power_oracle, random_scenario, sweep};
use eealloc::waterfill::{allocate, kkt_residual, sum_rate_derivative};

/// First `count` seeds (scanning upward from `base`) whose generated
/// scenario is feasible in the given mode.
fn feasible_scenarios(base: u64, count: usize, users: usize, mode: Mode) -> Vec<(u64, Scenario)> {
    let mut out = Vec::new();
    let mut seed = base;
    while out.len() < count {
        let s = random_scenario(seed, users, mode);
        let feasible = match mode {
            Mode::Fixed => critical_levels(&s)
                .map(|t| t.min_total_power <= s.power_budget)
                .unwrap_or(false),
            Mode::Joint => psi_window(&s, s.bandwidth_budget, s.power_budget)
                .map(|w| w.feasible)
                .unwrap_or(false),
        };
        if feasible {
            out.push((seed, s));
        }
        seed += 1;
        assert!(seed - base < 10_000, "could not find enough feasible seeds");
    }
    out
}

fn pick_power(s: &Scenario, p0: f64, frac: f64) -> f64 {
    p0 + (s.power_budget - p0) * frac
}

#[test]
fn waterfill_beats_power_grid_oracle() {
    for (i, (seed, s)) in feasible_scenarios(1000, 24, 3, Mode::Fixed)
        .into_iter()
        .chain(feasible_scenarios(2000, 6, 2, Mode::Fixed))
        .enumerate()
    {
        let p0 = critical_levels(&s).unwrap().min_total_power;
        let p = pick_power(&s, p0, 0.3 + 0.4 * (i % 3) as f64 / 2.0);
        let (alloc, diag) = allocate(&s, p).unwrap();
        let best = grid_power_oracle(&s, p, 600).unwrap();
        assert!(
            alloc.sum_rate >= best.sum_rate - 1e-3 * alloc.sum_rate,
            "seed {seed}: solver {} vs oracle {}",
            alloc.sum_rate,
            best.sum_rate
        );
        assert!(
            best.sum_rate <= alloc.sum_rate + 1e-6,
            "seed {seed}: oracle beat the closed form"
        );
        assert!(kkt_residual(&s, &alloc, &diag) <= 1e-9, "seed {seed}");
    }
}

#[test]
fn waterfill_allocation_invariants() {
    for (seed, s) in feasible_scenarios(3000, 20, 3, Mode::Fixed) {
        let p0 = critical_levels(&s).unwrap().min_total_power;
        let p = pick_power(&s, p0, 0.6);
        let (alloc, diag) = allocate(&s, p).unwrap();

        let wsum: f64 = alloc.per_user.iter().map(|u| u.bandwidth).sum();
        let psum: f64 = alloc.per_user.iter().map(|u| u.power).sum();
        assert!((wsum - alloc.total_bandwidth).abs() <= 1e-10 * alloc.total_bandwidth.max(1.0));
        assert!((psum - p).abs() <= 1e-10 * p.max(1.0), "seed {seed}");

        for (u, user) in alloc.per_user.iter().zip(&s.users) {
            let direct = eealloc::rate(u.bandwidth, u.power, user.gain).unwrap();
            assert!((u.rate - direct).abs() <= 1e-10 * direct.max(1.0));
            assert!(u.rate >= user.min_rate - 1e-9 * user.min_rate.max(1.0), "seed {seed}");
        }

        // water level reproduces from its defining formula over the binding set
        let mut wsum_nb = 0.0;
        let mut wasum_nb = 0.0;
        for (k, user) in s.users.iter().enumerate() {
            if !diag.binding_set.contains(&k) {
                let w = user.fixed_bandwidth.unwrap();
                wsum_nb += w;
                wasum_nb += w * diag.base_levels[k];
            }
        }
        if wsum_nb > 0.0 {
            let recomputed = (p - diag.min_total_power + wasum_nb) / wsum_nb;
            assert!(
                (recomputed - diag.water_level).abs() <= 1e-12 * diag.water_level.abs(),
                "seed {seed}"
            );
        }
    }
}

#[test]
fn sum_rate_monotone_concave_and_powers_nondecreasing() {
    for (seed, s) in feasible_scenarios(4000, 6, 3, Mode::Fixed) {
        let p0 = critical_levels(&s).unwrap().min_total_power;
        let n = 500;
        let mut rates = Vec::with_capacity(n);
        let mut prev_powers: Option<Vec<f64>> = None;
        for i in 0..n {
            let p = p0 + (s.power_budget - p0) * i as f64 / (n - 1) as f64;
            let (alloc, diag) = allocate(&s, p).unwrap();
            rates.push(alloc.sum_rate);
            let powers: Vec<f64> = alloc.per_user.iter().map(|u| u.power).collect();
            if let Some(prev) = prev_powers {
                for (a, b) in prev.iter().zip(&powers) {
                    assert!(*b >= a - 1e-9, "seed {seed}: per-user power decreased");
                }
            }
            prev_powers = Some(powers);
            // the analytic derivative is positive everywhere
            assert!(sum_rate_derivative(&s, &diag, p).unwrap() > 0.0);
        }
        for i in 1..n {
            assert!(rates[i] > rates[i - 1], "seed {seed}: sum rate not increasing");
            if i + 1 < n {
                let second = rates[i + 1] - 2.0 * rates[i] + rates[i - 1];
                assert!(second <= 1e-9, "seed {seed}: sum rate not concave ({second:e})");
            }
        }
    }
}

#[test]
fn fixed_optimizer_agrees_with_sweep_argmax() {
    for (seed, s) in feasible_scenarios(5000, 15, 3, Mode::Fixed) {
        let r = optimize_fixed(&s).unwrap();
        let n = 800;
        let curve = sweep(&s, Mode::Fixed, n).unwrap();
        let p0 = curve.samples[0].total_power;
        let spacing = (s.power_budget - p0) / (n - 1) as f64;
        assert!(
            (r.p_opt - curve.argmax_power).abs() <= spacing + 1e-12,
            "seed {seed}: p_opt {} vs argmax {}",
            r.p_opt,
            curve.argmax_power
        );

        // efficiency curve is unimodal up to noise
        let mut signs = Vec::new();
        for pair in curve.samples.windows(2) {
            let d = pair[1].energy_efficiency - pair[0].energy_efficiency;
            if d > 1e-9 {
                signs.push(1);
            } else if d < -1e-9 {
                signs.push(-1);
            }
        }
        let mut changes = 0;
        for pair in signs.windows(2) {
            if pair[0] != pair[1] {
                changes += 1;
                assert!(pair[0] == 1 && pair[1] == -1, "seed {seed}: efficiency rose after falling");
            }
        }
        assert!(changes <= 1, "seed {seed}: efficiency not unimodal");

        // optimum dominates the endpoints
        let ee_p0 = curve.samples.first().unwrap().energy_efficiency;
        let ee_pm = curve.samples.last().unwrap().energy_efficiency;
        assert!(r.max_ee >= ee_p0 - 1e-12 && r.max_ee >= ee_pm - 1e-12, "seed {seed}");

        // the selected bracket has the right indicator signs
        if let Some((lo, hi)) = r.bracket {
            let table = critical_levels(&s).unwrap();
            let active = table.levels.iter().filter(|&&l| l < r.p_opt).count();
            if active > 0 {
                let just_inside = lo + 1e-9 * hi.max(1.0);
                assert!(theta(just_inside, active, &table, &s.power_model).unwrap() > 0.0);
                if r.boundary_case == BoundaryCase::Interior {
                    assert!(theta(hi, active, &table, &s.power_model).unwrap() <= 0.0);
                }
            }
        }
    }
}

#[test]
fn lambda_at_levels_matches_scaled_finite_difference() {
    for (seed, s) in feasible_scenarios(6000, 12, 3, Mode::Fixed) {
        let table = critical_levels(&s).unwrap();
        assert_eq!(table.levels[0], table.min_total_power, "seed {seed}");
        for pair in table.levels.windows(2) {
            assert!(pair[1] >= pair[0], "seed {seed}: levels not nondecreasing");
        }
        let pm = &s.power_model;
        for (j, &level) in table.levels.iter().enumerate() {
            // interior levels only: the finite difference needs room on both
            // sides; the step is kept small because the efficiency has a
            // curvature kink at the level itself
            let h = 1e-7 * level.max(1.0);
            if level <= table.min_total_power + h || level >= s.power_budget - h {
                continue;
            }
            let ee = |p: f64| allocate(&s, p).unwrap().0.energy_efficiency;
            let fd = (ee(level + h) - ee(level - h)) / (2.0 * h);
            let lambda_fd = (level / pm.amp_efficiency + pm.circuit_power) * fd;
            let lambda = table.lambda_at_levels[j];
            if lambda.abs() < 1e-6 {
                continue;
            }
            assert!(
                (lambda - lambda_fd).abs() <= 1e-4 * lambda.abs().max(lambda_fd.abs()),
                "seed {seed} level {j}: analytic {lambda} vs fd {lambda_fd}"
            );
        }
    }
}

#[test]
fn joint_structure_floors_and_budgets() {
    for (i, (seed, s)) in feasible_scenarios(7000, 20, 3, Mode::Joint).into_iter().enumerate() {
        let win = psi_window(&s, s.bandwidth_budget, s.power_budget).unwrap();
        let p0 = floor_power_total(&s, win.psi_min).unwrap();
        let p = pick_power(&s, p0, 0.25 + 0.5 * (i % 3) as f64 / 2.0);
        let sol = joint_allocate(&s, s.bandwidth_budget, p).unwrap();

        let leader = sol.leader_index;
        let best_gain = s.users.iter().map(|u| u.gain).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(s.users[leader].gain, best_gain, "seed {seed}");

        for (k, u) in sol.allocation.per_user.iter().enumerate() {
            if k != leader {
                let floor = s.users[k].min_rate;
                assert!(
                    (u.rate - floor).abs() <= 1e-9 * floor.max(1.0),
                    "seed {seed} user {k}: rate {} vs floor {floor}",
                    u.rate
                );
            } else {
                assert!(u.rate >= s.users[k].min_rate - 1e-9);
            }
        }

        assert!(
            (sol.allocation.total_bandwidth - s.bandwidth_budget).abs()
                <= 1e-10 * s.bandwidth_budget
        );
        assert!((sol.allocation.total_power - p).abs() <= 1e-10 * p.max(1.0));

        // psi self-consistency through the leader's own pair
        let lu = &sol.allocation.per_user[leader];
        let back = psi_from_leader(lu.bandwidth, lu.power, s.users[leader].gain);
        assert!(
            (back - sol.psi).abs() <= 1e-8 * sol.psi.abs().max(1e-6),
            "seed {seed}: psi {} vs recovered {back}",
            sol.psi
        );

        // closed-form rate equals the recomputed sum
        assert!(
            (sol.max_sum_rate - sol.allocation.sum_rate).abs()
                <= 1e-10 * sol.allocation.sum_rate.max(1.0)
        );
    }
}

#[test]
fn joint_beats_two_user_grid_oracle() {
    for (seed, s) in feasible_scenarios(8000, 12, 2, Mode::Joint) {
        let win = psi_window(&s, s.bandwidth_budget, s.power_budget).unwrap();
        let p0 = floor_power_total(&s, win.psi_min).unwrap();
        let p = pick_power(&s, p0, 0.5);
        let sol = joint_allocate(&s, s.bandwidth_budget, p).unwrap();
        let best = grid_joint_oracle(&s, s.bandwidth_budget, p, 200)
            .unwrap()
            .expect("feasible instance has feasible grid points");
        assert!(
            sol.max_sum_rate >= best.sum_rate - 1e-3 * sol.max_sum_rate,
            "seed {seed}: solver {} vs oracle {}",
            sol.max_sum_rate,
            best.sum_rate
        );
        assert!(best.sum_rate <= sol.max_sum_rate + 1e-6, "seed {seed}");
    }
}

#[test]
fn joint_rate_increases_in_both_budgets() {
    let s = random_scenario(9001, 3, Mode::Joint);
    // pick a bandwidth floor large enough that all (W, P) pairs below are feasible
    let w_hi = 12.0;
    let w_lo = 6.0;
    let win = psi_window(&s, w_lo, 1e9).unwrap();
    let p_lo = floor_power_total(&s, win.psi_min).unwrap() * 1.05;
    let p_hi = p_lo + 30.0;
    let grid = 8;
    let mut rates = vec![vec![0.0; grid]; grid];
    for (i, row) in rates.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let w = w_lo + (w_hi - w_lo) * i as f64 / (grid - 1) as f64;
            let p = p_lo + (p_hi - p_lo) * j as f64 / (grid - 1) as f64;
            *cell = joint_allocate(&s, w, p).unwrap().max_sum_rate;
        }
    }
    for i in 0..grid {
        for j in 0..grid {
            if i > 0 {
                assert!(rates[i][j] > rates[i - 1][j], "not increasing in W at ({i},{j})");
            }
            if j > 0 {
                assert!(rates[i][j] > rates[i][j - 1], "not increasing in P at ({i},{j})");
            }
        }
    }
}

#[test]
fn dpsi_implicit_matches_finite_difference() {
    for (seed, s) in feasible_scenarios(10_000, 8, 3, Mode::Joint) {
        let w = s.bandwidth_budget;
        let win = psi_window(&s, w, s.power_budget).unwrap();
        let p0 = floor_power_total(&s, win.psi_min).unwrap();
        for frac in [0.3, 0.7] {
            let p = pick_power(&s, p0, frac);
            if p <= p0 * (1.0 + 1e-6) {
                continue;
            }
            let analytic = dpsi_dp(&s, w, p).unwrap();
            assert!(analytic > 0.0, "seed {seed}: dpsi/dP not positive");
            let h = 1e-6 * p.max(1.0);
            if p - h <= p0 {
                continue;
            }
            let psi_at = |pp: f64| joint_allocate(&s, w, pp).unwrap().psi;
            let fd = (psi_at(p + h) - psi_at(p - h)) / (2.0 * h);
            assert!(
                (analytic - fd).abs() <= 1e-4 * analytic.abs().max(fd.abs()),
                "seed {seed} P={p}: implicit {analytic} vs fd {fd}"
            );
        }
    }
}

#[test]
fn lambda_p_sign_matches_efficiency_slope() {
    let mut checked = 0;
    for (seed, s) in feasible_scenarios(11_000, 10, 3, Mode::Joint) {
        let w = s.bandwidth_budget;
        let win = psi_window(&s, w, s.power_budget).unwrap();
        let p0 = floor_power_total(&s, win.psi_min).unwrap();
        for frac in [0.15, 0.5, 0.85] {
            let p = pick_power(&s, p0, frac);
            let h = 1e-5 * p.max(1.0);
            if p - h <= p0 || p + h >= s.power_budget {
                continue;
            }
            let ee = |pp: f64| {
                joint_allocate(&s, w, pp)
                    .unwrap()
                    .allocation
                    .energy_efficiency
            };
            let fd = (ee(p + h) - ee(p - h)) / (2.0 * h);
            if fd.abs() <= 1e-8 {
                continue;
            }
            let lam = lambda_p(&s, w, p).unwrap();
            assert_eq!(
                lam.signum(),
                fd.signum(),
                "seed {seed} P={p}: lambda {lam} vs fd slope {fd}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 15, "only {checked} sign checks ran");
}

#[test]
fn joint_optimizer_agrees_with_sweep_argmax() {
    for (seed, s) in feasible_scenarios(12_000, 10, 3, Mode::Joint) {
        let r = optimize_joint(&s).unwrap();
        let n = 600;
        let curve = sweep(&s, Mode::Joint, n).unwrap();
        let p0 = curve.samples[0].total_power;
        let spacing = (s.power_budget - p0) / (n - 1) as f64;
        assert!(
            (r.p_opt - curve.argmax_power).abs() <= spacing + 1e-12,
            "seed {seed}: p_opt {} vs argmax {} (case {:?})",
            r.p_opt,
            curve.argmax_power,
            r.boundary_case
        );
        for sample in &curve.samples {
            assert!(r.max_ee >= sample.energy_efficiency - 1e-9 * r.max_ee.abs().max(1.0));
        }
        // efficiency along the power line is unimodal up to noise
        let mut signs = Vec::new();
        for pair in curve.samples.windows(2) {
            let d = pair[1].energy_efficiency - pair[0].energy_efficiency;
            if d > 1e-9 {
                signs.push(1);
            } else if d < -1e-9 {
                signs.push(-1);
            }
        }
        for pair in signs.windows(2) {
            if pair[0] != pair[1] {
                assert!(
                    pair[0] == 1 && pair[1] == -1,
                    "seed {seed}: joint efficiency rose after falling"
                );
            }
        }
        // when the optimum is interior, the indicator crosses zero within a step
        if r.boundary_case == BoundaryCase::Interior {
            let before = r.p_opt - spacing;
            let after = (r.p_opt + spacing).min(s.power_budget);
            if before > p0 {
                assert!(lambda_p(&s, s.bandwidth_budget, before).unwrap() > -1e-6);
                assert!(lambda_p(&s, s.bandwidth_budget, after).unwrap() < 1e-6);
            }
        }
    }
}

#[test]
fn joint_efficiency_increasing_in_bandwidth() {
    let s = random_scenario(9002, 3, Mode::Joint);
    let w_lo = 6.0;
    let w_hi = 14.0;
    let win = psi_window(&s, w_lo, 1e9).unwrap();
    let p_lo = floor_power_total(&s, win.psi_min).unwrap() * 1.02;
    for j in 0..5 {
        let p = p_lo + 10.0 * j as f64;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..10 {
            let w = w_lo + (w_hi - w_lo) * i as f64 / 9.0;
            let ee = joint_allocate(&s, w, p).unwrap().allocation.energy_efficiency;
            assert!(ee > prev, "efficiency not increasing in W at ({i},{j})");
            prev = ee;
        }
    }
}
