//! Optimal transmit-power allocation across fixed-bandwidth channels for a
//! given total power: a multi-level water-filling rule with per-user rate
//! floors, plus diagnostics and a KKT residual certificate.
//!
//! Each user `k` owns a column of width `w_k` whose base sits at
//! `alpha_k = 1/g_k + p_min_k/w_k`. Pouring total power `P` raises a common
//! water level `1/mu`; users whose base stays above the water keep their
//! minimum power (the binding set), the rest fill up to the level. The
//! binding set is resolved directly by walking the critical power levels at
//! which the water reaches each base, so no iterative level guessing is
//! needed.

use std::collections::BTreeSet;
use std::f64::consts::{LN_2, LOG2_E};

use crate::error::{Error, Result};
use crate::model::{Allocation, BindingSet, Scenario};

/// Spectral-efficiency cap (bits/s/Hz) before `2^x` overflows; rate floors
/// needing more than this are reported as infeasible rather than producing
/// infinities downstream.
pub(crate) const MAX_SPECTRAL_EFFICIENCY: f64 = 700.0 * LOG2_E;

/// Relative feasibility slack on total-power comparisons.
pub(crate) const FEASIBILITY_TOL: f64 = 1e-10;

/// Everything the water-filling rule computed besides the allocation itself.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillDiagnostics {
    /// Minimum power per user (scenario order).
    pub min_powers: Vec<f64>,
    /// Column base `alpha_k = 1/g_k + p_min_k/w_k` per user (scenario order).
    pub base_levels: Vec<f64>,
    /// Final water level `1/mu`.
    pub water_level: f64,
    /// Users pinned at their minimum power.
    pub binding_set: BindingSet,
    /// Sum of minimum powers.
    pub min_total_power: f64,
    /// Sum of rate floors.
    pub min_total_rate: f64,
}

/// Minimum transmit power for one user to reach its rate floor:
/// `(w/g) * (2^(r_min/w) - 1)`. Returns `inf` when the required spectral
/// efficiency exceeds the numeric range; scenario-level calls turn that into
/// an infeasibility error.
pub fn min_power(bandwidth: f64, gain: f64, min_rate: f64) -> f64 {
    if min_rate == 0.0 {
        return 0.0;
    }
    let spectral = min_rate / bandwidth;
    if spectral > MAX_SPECTRAL_EFFICIENCY {
        return f64::INFINITY;
    }
    bandwidth / gain * (spectral * LN_2).exp_m1()
}

/// Per-user arrays shared by `allocate` and the critical-level table.
pub(crate) struct FixedProblem {
    pub bandwidth: Vec<f64>,
    pub gain: Vec<f64>,
    pub min_power: Vec<f64>,
    pub base_level: Vec<f64>,
    /// User indices sorted by base level ascending.
    pub order: Vec<usize>,
    pub min_total_power: f64,
    pub min_total_rate: f64,
}

impl FixedProblem {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let bandwidth = scenario.fixed_bandwidths()?;
        let mut gain = Vec::with_capacity(bandwidth.len());
        let mut min_powers = Vec::with_capacity(bandwidth.len());
        let mut base_level = Vec::with_capacity(bandwidth.len());
        for (i, user) in scenario.users.iter().enumerate() {
            let w = bandwidth[i];
            let p = min_power(w, user.gain, user.min_rate);
            if !p.is_finite() {
                return Err(Error::Infeasible {
                    reason: format!(
                        "user {i}: rate floor {} over bandwidth {w} overflows the minimum power",
                        user.min_rate
                    ),
                    deficit: f64::INFINITY,
                });
            }
            gain.push(user.gain);
            min_powers.push(p);
            base_level.push(1.0 / user.gain + p / w);
        }
        let mut order: Vec<usize> = (0..bandwidth.len()).collect();
        order.sort_by(|&a, &b| base_level[a].total_cmp(&base_level[b]));
        let min_total_power = min_powers.iter().sum();
        let min_total_rate = scenario.users.iter().map(|u| u.min_rate).sum();
        Ok(FixedProblem {
            bandwidth,
            gain,
            min_power: min_powers,
            base_level,
            order,
            min_total_power,
            min_total_rate,
        })
    }

    /// Critical total-power levels `P_0 <= P_1 <= ... <= P_{K-1}`: the j-th
    /// entry is where the water reaches the (j+1)-th smallest base level.
    pub fn critical_levels(&self) -> Vec<f64> {
        let k = self.order.len();
        let mut levels = Vec::with_capacity(k);
        let mut shallow_w = 0.0; // total width of columns already under water
        let mut shallow_wa = 0.0; // same columns, width times base
        for j in 0..k {
            let alpha_j = self.base_level[self.order[j]];
            levels.push(self.min_total_power + alpha_j * shallow_w - shallow_wa);
            let w = self.bandwidth[self.order[j]];
            shallow_w += w;
            shallow_wa += w * alpha_j;
        }
        levels
    }
}

/// Water-fill `total_power` over the fixed bandwidths of `scenario`.
///
/// Requires `total_power >= P0` (sum of minimum powers) up to a small slack;
/// anything lower is infeasible and the error carries the deficit. The power
/// budget `P_M` is deliberately not enforced here — that is caller policy.
pub fn allocate(
    scenario: &Scenario,
    total_power: f64,
) -> Result<(Allocation, WaterfillDiagnostics)> {
    let prob = FixedProblem::new(scenario)?;
    let p0 = prob.min_total_power;
    if total_power < p0 - FEASIBILITY_TOL * p0.max(1.0) {
        return Err(Error::Infeasible {
            reason: format!("total power {total_power} below the minimum required {p0}"),
            deficit: p0 - total_power,
        });
    }

    let levels = prob.critical_levels();
    // Users leave the binding set in base-level order as the water rises;
    // at total_power the first `above` of them are over their base.
    let above = levels.iter().filter(|&&l| l < total_power).count();

    let k = prob.order.len();
    let (water_level, binding_set) = if above == 0 {
        // At (or numerically at) P0 everyone sits at the floor and the water
        // just touches the lowest base.
        let lowest = prob.base_level[prob.order[0]];
        (lowest, prob.order.iter().copied().collect::<BTreeSet<_>>())
    } else {
        let mut wsum = 0.0;
        let mut wasum = 0.0;
        for &i in &prob.order[..above] {
            wsum += prob.bandwidth[i];
            wasum += prob.bandwidth[i] * prob.base_level[i];
        }
        let water = (total_power - p0 + wasum) / wsum;
        let binding: BTreeSet<usize> = prob.order[above..].iter().copied().collect();
        (water, binding)
    };

    let mut pairs = Vec::with_capacity(k);
    for i in 0..k {
        let p = if binding_set.contains(&i) {
            prob.min_power[i]
        } else {
            prob.min_power[i]
                + prob.bandwidth[i] * (water_level - prob.base_level[i]).max(0.0)
        };
        pairs.push((prob.bandwidth[i], p));
    }
    let allocation = Allocation::assemble(&pairs, scenario)?;
    let diagnostics = WaterfillDiagnostics {
        min_powers: prob.min_power,
        base_levels: prob.base_level,
        water_level,
        binding_set,
        min_total_power: p0,
        min_total_rate: prob.min_total_rate,
    };
    Ok((allocation, diagnostics))
}

/// Stationarity / feasibility certificate for a water-filled allocation.
///
/// Returns the worst relative violation over: the power sum against the
/// claimed total, the non-binding stationarity `mu = w g / (w + p g)`, the
/// binding inequality `w g / (w + p g) <= mu`, and the floor `p >= p_min`.
/// Output of `allocate` certifies at `<= 1e-9`; perturbed allocations do not.
pub fn kkt_residual(
    scenario: &Scenario,
    alloc: &Allocation,
    diag: &WaterfillDiagnostics,
) -> f64 {
    let mu = 1.0 / diag.water_level;
    let mut worst: f64 = 0.0;

    let claimed = alloc.total_power;
    let summed: f64 = alloc.per_user.iter().map(|u| u.power).sum();
    worst = worst.max((summed - claimed).abs() / claimed.abs().max(1.0));

    for (i, u) in alloc.per_user.iter().enumerate() {
        let g = scenario.users[i].gain;
        let kappa = u.bandwidth * g / (u.bandwidth + u.power * g);
        if diag.binding_set.contains(&i) {
            worst = worst.max((kappa - mu).max(0.0) / mu);
        } else {
            worst = worst.max((mu - kappa).abs() / mu);
        }
        let floor = diag.min_powers[i];
        worst = worst.max((floor - u.power).max(0.0) / floor.max(1.0));
    }
    worst
}

/// Analytic derivative of the maximum sum rate with respect to total power,
/// at the water level described by `diag`:
/// `(1/ln 2) * sum_j w_j / (P - P0 + sum_j w_j alpha_j)` over the users above
/// water. With everyone at the floor this is the right-derivative
/// `1 / (ln 2 * alpha_min)`.
pub fn sum_rate_derivative(
    scenario: &Scenario,
    diag: &WaterfillDiagnostics,
    total_power: f64,
) -> Result<f64> {
    let bandwidths = scenario.fixed_bandwidths()?;
    let mut wsum = 0.0;
    let mut wasum = 0.0;
    for (i, &w) in bandwidths.iter().enumerate() {
        if !diag.binding_set.contains(&i) {
            wsum += w;
            wasum += w * diag.base_levels[i];
        }
    }
    if wsum == 0.0 {
        let lowest = diag
            .base_levels
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        return Ok(1.0 / (LN_2 * lowest));
    }
    Ok(wsum / (LN_2 * (total_power - diag.min_total_power + wasum)))
}

/// Maximum sum rate via the closed form
/// `sum_{binding} r_min + sum_{above} w log2(g / mu)`; used as a cross-check
/// against the recomputed per-user rates.
pub fn closed_form_sum_rate(scenario: &Scenario, diag: &WaterfillDiagnostics) -> Result<f64> {
    let bandwidths = scenario.fixed_bandwidths()?;
    let mut total = 0.0;
    for (i, u) in scenario.users.iter().enumerate() {
        if diag.binding_set.contains(&i) {
            total += u.min_rate;
        } else {
            total += bandwidths[i] * (u.gain * diag.water_level).log2();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PowerModel, UserChannel};

    fn two_user(gains: (f64, f64), floors: (f64, f64)) -> Scenario {
        Scenario {
            users: vec![
                UserChannel::with_bandwidth(gains.0, floors.0, 1.0),
                UserChannel::with_bandwidth(gains.1, floors.1, 1.0),
            ],
            bandwidth_budget: 2.0,
            power_budget: 10.0,
            power_model: PowerModel::new(1.0, 1.0),
        }
    }

    #[test]
    fn min_power_hand_values() {
        assert_eq!(min_power(1.0, 1.0, 1.0), 1.0);
        assert!((min_power(2.0, 1.0, 2.0) - 2.0).abs() < 1e-12);
        assert_eq!(min_power(1.0, 4.0, 0.0), 0.0);
        assert_eq!(min_power(1.0, 1.0, 2000.0), f64::INFINITY);
    }

    #[test]
    fn symmetric_two_user_split() {
        let s = two_user((1.0, 1.0), (0.0, 0.0));
        let (alloc, diag) = allocate(&s, 4.0).unwrap();
        assert!((alloc.per_user[0].power - 2.0).abs() < 1e-12);
        assert!((alloc.per_user[1].power - 2.0).abs() < 1e-12);
        assert!(diag.binding_set.is_empty());
    }

    #[test]
    fn unequal_gains_low_power_keeps_weak_user_dry() {
        let s = two_user((2.0, 1.0), (0.0, 0.0));
        let (alloc, diag) = allocate(&s, 0.4).unwrap();
        assert!((alloc.per_user[0].power - 0.4).abs() < 1e-12);
        assert_eq!(alloc.per_user[1].power, 0.0);
        assert!((diag.water_level - 0.9).abs() < 1e-12);
        assert_eq!(diag.binding_set.iter().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn unequal_gains_high_power_floods_both() {
        let s = two_user((2.0, 1.0), (0.0, 0.0));
        let (alloc, diag) = allocate(&s, 1.5).unwrap();
        assert!((alloc.per_user[0].power - 1.0).abs() < 1e-12);
        assert!((alloc.per_user[1].power - 0.5).abs() < 1e-12);
        assert!((diag.water_level - 1.5).abs() < 1e-12);
        assert!(diag.binding_set.is_empty());
    }

    #[test]
    fn infeasible_power_reports_deficit() {
        let s = two_user((1.0, 1.0), (1.0, 1.0));
        // each floor needs 1 W, so 1.5 W total is 0.5 short
        match allocate(&s, 1.5) {
            Err(Error::Infeasible { deficit, .. }) => assert!((deficit - 0.5).abs() < 1e-12),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn kkt_residual_certifies_solver_output() {
        let s = two_user((2.0, 1.0), (0.0, 0.0));
        let (alloc, diag) = allocate(&s, 1.5).unwrap();
        assert!(kkt_residual(&s, &alloc, &diag) <= 1e-9);
    }

    #[test]
    fn kkt_residual_flags_perturbed_allocation() {
        let s = two_user((2.0, 1.0), (0.0, 0.0));
        let (mut alloc, diag) = allocate(&s, 1.5).unwrap();
        alloc.per_user[0].power += 0.1;
        alloc.per_user[1].power -= 0.1;
        assert!(kkt_residual(&s, &alloc, &diag) >= 0.01);
    }

    #[test]
    fn kkt_residual_single_user_is_zero() {
        let s = Scenario {
            users: vec![UserChannel::with_bandwidth(1.0, 0.0, 1.0)],
            bandwidth_budget: 1.0,
            power_budget: 10.0,
            power_model: PowerModel::new(1.0, 1.0),
        };
        let (alloc, diag) = allocate(&s, 1.0).unwrap();
        assert!(kkt_residual(&s, &alloc, &diag) <= 1e-12);
    }

    #[test]
    fn sum_rate_derivative_hand_values() {
        let s = two_user((2.0, 1.0), (0.0, 0.0));
        let (_, diag) = allocate(&s, 1.5).unwrap();
        let d = sum_rate_derivative(&s, &diag, 1.5).unwrap();
        assert!((d - 2.0 / (3.0 * LN_2)).abs() < 1e-12);
        // agrees with a central finite difference of the optimal sum rate
        let h = 1e-5;
        let r = |p: f64| allocate(&s, p).unwrap().0.sum_rate;
        let fd = (r(1.5 + h) - r(1.5 - h)) / (2.0 * h);
        assert!((d - fd).abs() <= 1e-7 * d);

        let one = Scenario {
            users: vec![UserChannel::with_bandwidth(1.0, 0.0, 1.0)],
            bandwidth_budget: 1.0,
            power_budget: 10.0,
            power_model: PowerModel::new(1.0, 1.0),
        };
        let (_, diag1) = allocate(&one, 1.0).unwrap();
        let d1 = sum_rate_derivative(&one, &diag1, 1.0).unwrap();
        assert!((d1 - 1.0 / (2.0 * LN_2)).abs() < 1e-12);
    }

    #[test]
    fn sum_rate_derivative_decreases_with_power() {
        let s = two_user((2.0, 1.0), (0.0, 0.0));
        let (_, d_low) = allocate(&s, 0.6).unwrap();
        let (_, d_high) = allocate(&s, 1.5).unwrap();
        let lo = sum_rate_derivative(&s, &d_low, 0.6).unwrap();
        let hi = sum_rate_derivative(&s, &d_high, 1.5).unwrap();
        assert!(lo > hi);
    }

    #[test]
    fn closed_form_sum_rate_matches_recomputed() {
        let s = two_user((2.0, 1.0), (0.5, 0.25));
        for &p in &[1.0, 1.5, 3.0] {
            let (alloc, diag) = allocate(&s, p).unwrap();
            let closed = closed_form_sum_rate(&s, &diag).unwrap();
            assert!(
                (closed - alloc.sum_rate).abs() <= 1e-10 * alloc.sum_rate.max(1.0),
                "P={p}: closed {closed} vs {}",
                alloc.sum_rate
            );
        }
    }

    #[test]
    fn water_level_consistent_with_binding_set() {
        let s = two_user((2.0, 1.0), (0.3, 0.7));
        let (_, diag) = allocate(&s, 2.0).unwrap();
        let mut wsum = 0.0;
        let mut wasum = 0.0;
        for i in 0..2 {
            if !diag.binding_set.contains(&i) {
                wsum += 1.0;
                wasum += diag.base_levels[i];
            }
        }
        let recomputed = (2.0 - diag.min_total_power + wasum) / wsum;
        assert!((recomputed - diag.water_level).abs() <= 1e-12 * diag.water_level);
    }
}
