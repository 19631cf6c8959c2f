//! Independent brute-force and sweep references used by the tests and the
//! CLI `verify` command. The oracles are deliberately dumb grid searches,
//! kept at desk scale by explicit guards, so they stay independent of the
//! closed-form solvers they check.

use crate::ee_joint;
use crate::error::{Error, Result};
use crate::joint;
use crate::model::{rate_value, Mode, PowerModel, Scenario, UserChannel};
use crate::waterfill;

/// One sampled point of a power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSample {
    pub total_power: f64,
    pub sum_rate: f64,
    pub energy_efficiency: f64,
    /// Derivative sign indicator at this power (mode-specific).
    pub indicator: f64,
}

/// Evenly sampled `(P, sum rate, efficiency, indicator)` curve over the
/// feasible power range, with the efficiency argmax recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub samples: Vec<SweepSample>,
    pub mode: Mode,
    pub argmax_power: f64,
}

/// Best point found by a grid oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBest {
    /// Per-user `(bandwidth, power)` pairs at the best grid point.
    pub per_user: Vec<(f64, f64)>,
    pub sum_rate: f64,
}

/// 64-bit linear congruential generator with an output xor-shift.
///
/// State update `s <- s * 6364136223846793005 + 1442695040888963407`
/// (Knuth's MMIX constants), output `s ^ (s >> 33)`. Fixed here, rather than
/// delegated to a platform generator, so seeded scenarios reproduce
/// bit-for-bit across implementations.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    const MULT: u64 = 6364136223846793005;
    const INC: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULT).wrapping_add(Self::INC);
        self.state ^ (self.state >> 33)
    }

    /// Uniform draw from the half-open-below interval `(0, 1]`, using the top
    /// 53 bits of the output.
    pub fn next_unit(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw from `(0, hi]`.
    pub fn next_in(&mut self, hi: f64) -> f64 {
        self.next_unit() * hi
    }
}

/// Deterministic pseudo-random scenario.
///
/// Draw order (one `Lcg64` stream seeded with `seed`): gains uniform on
/// `(0, 10]` (redrawn as a set until pairwise distinct in joint mode), rate
/// floors uniform on `(0, 10]`, then in fixed mode K bandwidth weights and a
/// total bandwidth uniform on `(0, 15]` (weights normalized to that total,
/// budget set equal to it), in joint mode a bandwidth budget uniform on
/// `(0, 15]`; finally a power budget uniform on `(0, 100]`. Amplifier
/// efficiency is 0.8 and circuit power 10. The same seed always produces the
/// same scenario; feasibility is not guaranteed.
pub fn random_scenario(seed: u64, users: usize, mode: Mode) -> Scenario {
    let mut rng = Lcg64::new(seed);
    let gains = loop {
        let draw: Vec<f64> = (0..users).map(|_| rng.next_in(10.0)).collect();
        let distinct = (0..draw.len())
            .all(|a| ((a + 1)..draw.len()).all(|b| draw[a] != draw[b]));
        if mode == Mode::Fixed || distinct {
            break draw;
        }
    };
    let floors: Vec<f64> = (0..users).map(|_| rng.next_in(10.0)).collect();

    let mut user_list: Vec<UserChannel> = gains
        .iter()
        .zip(&floors)
        .map(|(&g, &r)| UserChannel::new(g, r))
        .collect();

    let bandwidth_budget = match mode {
        Mode::Fixed => {
            let weights: Vec<f64> = (0..users).map(|_| rng.next_unit()).collect();
            let total = rng.next_in(15.0);
            let weight_sum: f64 = weights.iter().sum();
            for (u, w) in user_list.iter_mut().zip(&weights) {
                u.fixed_bandwidth = Some(w / weight_sum * total);
            }
            // budget = the exact sum of the parts, which can differ from
            // `total` by an ulp after the normalization
            user_list.iter().map(|u| u.fixed_bandwidth.unwrap()).sum()
        }
        Mode::Joint => rng.next_in(15.0),
    };
    let power_budget = rng.next_in(100.0);

    Scenario {
        users: user_list,
        bandwidth_budget,
        power_budget,
        power_model: PowerModel::new(0.8, 10.0),
    }
}

/// Exhaustive search over the discretized power simplex
/// `{p : p_k >= p_min_k, sum p = P}` for a fixed-bandwidth scenario.
///
/// The excess `P - P0` is split into `steps` increments; every composition
/// over the users is evaluated and the best sum rate returned. Enumeration
/// is lexicographic and ties keep the earliest point, so results are
/// deterministic. Refuses more than 4 users.
pub fn grid_power_oracle(scenario: &Scenario, total_power: f64, steps: usize) -> Result<GridBest> {
    let k = scenario.user_count();
    if k > 4 {
        return Err(Error::OracleGuard(format!(
            "grid_power_oracle: {k} users exceed the exhaustive-search limit of 4"
        )));
    }
    if steps < 10 {
        return Err(Error::Domain("grid_power_oracle: need at least 10 steps".to_string()));
    }
    let bandwidths: Vec<f64> = scenario
        .users
        .iter()
        .enumerate()
        .map(|(i, u)| {
            u.fixed_bandwidth
                .ok_or_else(|| Error::Domain(format!("user {i} has no fixed bandwidth")))
        })
        .collect::<Result<_>>()?;
    let min_powers: Vec<f64> = scenario
        .users
        .iter()
        .zip(&bandwidths)
        .map(|(u, &w)| waterfill::min_power(w, u.gain, u.min_rate))
        .collect();
    let p0: f64 = min_powers.iter().sum();
    if total_power < p0 - 1e-10 * p0.max(1.0) {
        return Err(Error::Infeasible {
            reason: format!("grid_power_oracle: {total_power} below the minimum {p0}"),
            deficit: p0 - total_power,
        });
    }
    let excess = (total_power - p0).max(0.0);
    let unit = excess / steps as f64;

    // Per-user rate lookup tables over the increment counts.
    let tables: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..=steps)
                .map(|n| {
                    rate_value(
                        bandwidths[i],
                        min_powers[i] + n as f64 * unit,
                        scenario.users[i].gain,
                    )
                })
                .collect()
        })
        .collect();

    let mut best_rate = f64::NEG_INFINITY;
    let mut best_counts = vec![0usize; k];
    let mut counts = vec![0usize; k];
    // lexicographic enumeration of compositions of `steps` into k parts
    enumerate_compositions(steps, k, &mut counts, 0, &tables, &mut best_rate, &mut best_counts);

    let per_user: Vec<(f64, f64)> = (0..k)
        .map(|i| (bandwidths[i], min_powers[i] + best_counts[i] as f64 * unit))
        .collect();
    Ok(GridBest { per_user, sum_rate: best_rate })
}

fn enumerate_compositions(
    remaining: usize,
    k: usize,
    counts: &mut Vec<usize>,
    depth: usize,
    tables: &[Vec<f64>],
    best_rate: &mut f64,
    best_counts: &mut Vec<usize>,
) {
    if depth == k - 1 {
        counts[depth] = remaining;
        let total: f64 = (0..k).map(|i| tables[i][counts[i]]).sum();
        if total > *best_rate {
            *best_rate = total;
            best_counts.clone_from(counts);
        }
        return;
    }
    for n in 0..=remaining {
        counts[depth] = n;
        enumerate_compositions(remaining - n, k, counts, depth + 1, tables, best_rate, best_counts);
    }
}

/// Exhaustive search over joint `(w_2, p_2)` grids for a two-user scenario;
/// the other user takes the remainders. Only floor-feasible grid points
/// count. Returns `None` when no grid point is feasible.
pub fn grid_joint_oracle(
    scenario: &Scenario,
    total_bandwidth: f64,
    total_power: f64,
    steps: usize,
) -> Result<Option<GridBest>> {
    if scenario.user_count() != 2 {
        return Err(Error::OracleGuard(format!(
            "grid_joint_oracle: exhaustive joint search handles exactly 2 users, got {}",
            scenario.user_count()
        )));
    }
    if steps < 10 {
        return Err(Error::Domain("grid_joint_oracle: need at least 10 steps".to_string()));
    }
    let g = [scenario.users[0].gain, scenario.users[1].gain];
    let floors = [scenario.users[0].min_rate, scenario.users[1].min_rate];

    let mut best: Option<GridBest> = None;
    for i in 0..=steps {
        let w2 = total_bandwidth * i as f64 / steps as f64;
        let w1 = total_bandwidth - w2;
        for j in 0..=steps {
            let p2 = total_power * j as f64 / steps as f64;
            let p1 = total_power - p2;
            if (w1 == 0.0 && p1 > 0.0) || (w2 == 0.0 && p2 > 0.0) {
                continue;
            }
            let r1 = rate_value(w1, p1, g[0]);
            let r2 = rate_value(w2, p2, g[1]);
            if r1 < floors[0] || r2 < floors[1] {
                continue;
            }
            let sum = r1 + r2;
            if best.as_ref().is_none_or(|b| sum > b.sum_rate) {
                best = Some(GridBest {
                    per_user: vec![(w1, p1), (w2, p2)],
                    sum_rate: sum,
                });
            }
        }
    }
    Ok(best)
}

/// Sample the optimal sum rate, energy efficiency, and the derivative sign
/// indicator at `n` evenly spaced total powers spanning `[P0, P_M]`.
pub fn sweep(scenario: &Scenario, mode: Mode, n: usize) -> Result<SweepCurve> {
    if n == 0 {
        return Err(Error::Domain("sweep: need at least one sample".to_string()));
    }
    let budget = scenario.power_budget;
    let mut samples = Vec::with_capacity(n);
    match mode {
        Mode::Fixed => {
            let p0 = waterfill::FixedProblem::new(scenario)?.min_total_power;
            if p0 > budget * (1.0 + 1e-12) {
                return Err(Error::Infeasible {
                    reason: format!("sweep: minimum power {p0} exceeds the budget {budget}"),
                    deficit: p0 - budget,
                });
            }
            for i in 0..n {
                let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let p = p0 + (budget - p0) * frac;
                let (alloc, diag) = waterfill::allocate(scenario, p)?;
                let drate = waterfill::sum_rate_derivative(scenario, &diag, p)?;
                let indicator =
                    drate - alloc.energy_efficiency / scenario.power_model.amp_efficiency;
                samples.push(SweepSample {
                    total_power: p,
                    sum_rate: alloc.sum_rate,
                    energy_efficiency: alloc.energy_efficiency,
                    indicator,
                });
            }
        }
        Mode::Joint => {
            let w = scenario.bandwidth_budget;
            let window = joint::psi_window(scenario, w, budget)?;
            let floor_rate_total: f64 = scenario.users.iter().map(|u| u.min_rate).sum();
            let p0 = if floor_rate_total == 0.0 {
                0.0
            } else if window.psi_min.is_finite() {
                joint::floor_power_total(scenario, window.psi_min)?
            } else {
                f64::INFINITY
            };
            if !window.feasible || p0 > budget * (1.0 + 1e-12) {
                return Err(Error::Infeasible {
                    reason: format!("sweep: minimum power {p0} exceeds the budget {budget}"),
                    deficit: p0 - budget,
                });
            }
            let nudge = 1e-9 * p0.max(1.0);
            for i in 0..n {
                let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let p = p0 + (budget - p0) * frac;
                let sol = joint::joint_allocate_with_window(scenario, w, p, &window)?;
                // the indicator is evaluated a hair inside the interval; the
                // leader remainder degenerates at exactly P0
                let p_ind = p.max((p0 + nudge).min(budget));
                let indicator = ee_joint::lambda_p_with(scenario, w, p_ind, &window)?;
                samples.push(SweepSample {
                    total_power: p,
                    sum_rate: sol.allocation.sum_rate,
                    energy_efficiency: sol.allocation.energy_efficiency,
                    indicator,
                });
            }
        }
    }
    let argmax_power = samples
        .iter()
        .fold((f64::NEG_INFINITY, 0.0), |(best, at), s| {
            if s.energy_efficiency > best {
                (s.energy_efficiency, s.total_power)
            } else {
                (best, at)
            }
        })
        .1;
    Ok(SweepCurve { samples, mode, argmax_power })
}
