//! Energy-efficiency maximization over total transmit power with fixed
//! per-user bandwidths.
//!
//! The maximum sum rate is piecewise log-affine in the total power `P`, with
//! breakpoints at the critical levels where another user rises above its
//! floor. Efficiency is either strictly decreasing or strictly quasiconcave
//! in `P`, so the search walks the critical levels using the sign indicator
//! `Lambda` of the efficiency derivative, then bisects the indicator
//! `theta(P)` inside the single bracket where the sign flips.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{energy_efficiency, Allocation, BoundaryCase, PowerModel, Scenario};
use crate::waterfill::{allocate, FixedProblem, FEASIBILITY_TOL};

/// Critical total-power levels with the efficiency and its derivative sign
/// indicator evaluated at each; everything `optimize_fixed` walks over.
///
/// Users are re-indexed by ascending base level `alpha`; `order[j]` maps the
/// j-th smallest back to the scenario index. `levels[j]` is the total power
/// at which the water reaches `sorted_alpha[j]`; levels beyond the power
/// budget are retained (the optimizer skips them).
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalLevelTable {
    pub order: Vec<usize>,
    pub sorted_alpha: Vec<f64>,
    pub sorted_bandwidth: Vec<f64>,
    pub sorted_gain: Vec<f64>,
    pub sorted_min_power: Vec<f64>,
    /// `P_0 <= P_1 <= ... <= P_{K-1}`, nondecreasing, `levels[0] = P0`.
    pub levels: Vec<f64>,
    /// Energy efficiency at each level.
    pub ee_at_levels: Vec<f64>,
    /// Derivative sign indicator `Lambda` at each level.
    pub lambda_at_levels: Vec<f64>,
    pub min_total_power: f64,
    pub min_total_rate: f64,
}

/// Result of the fixed-bandwidth efficiency search.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOptResult {
    pub p_opt: f64,
    pub allocation: Allocation,
    pub max_ee: f64,
    /// The `(P_{J-1}, P_J]`-style interval the bisection ran in, if any.
    pub bracket: Option<(f64, f64)>,
    pub boundary_case: BoundaryCase,
}

/// Build the critical-level table for a fixed-bandwidth scenario.
///
/// At level `P_{J-1}` the closed form for the efficiency is
/// `(R0 + sum_{i<J} w'_i log2(alpha'_J / alpha'_i)) / (P_{J-1}/zeta + P_C)`
/// and the derivative sign indicator is
/// `Lambda_{J-1} = 1/(ln2 * alpha'_J) - ee/zeta`.
pub fn critical_levels(scenario: &Scenario) -> Result<CriticalLevelTable> {
    let prob = FixedProblem::new(scenario)?;
    let levels = prob.critical_levels();
    let k = levels.len();
    let pm = &scenario.power_model;

    let sorted_alpha: Vec<f64> = prob.order.iter().map(|&i| prob.base_level[i]).collect();
    let sorted_bandwidth: Vec<f64> = prob.order.iter().map(|&i| prob.bandwidth[i]).collect();
    let sorted_gain: Vec<f64> = prob.order.iter().map(|&i| prob.gain[i]).collect();
    let sorted_min_power: Vec<f64> = prob.order.iter().map(|&i| prob.min_power[i]).collect();

    let mut ee_at_levels = Vec::with_capacity(k);
    let mut lambda_at_levels = Vec::with_capacity(k);
    for j in 0..k {
        let alpha_j = sorted_alpha[j];
        let rate_at_level = prob.min_total_rate
            + (0..j)
                .map(|i| sorted_bandwidth[i] * (alpha_j / sorted_alpha[i]).log2())
                .sum::<f64>();
        let ee = energy_efficiency(rate_at_level, levels[j], pm)?;
        ee_at_levels.push(ee);
        lambda_at_levels.push(1.0 / (LN_2 * alpha_j) - ee / pm.amp_efficiency);
    }

    Ok(CriticalLevelTable {
        order: prob.order,
        sorted_alpha,
        sorted_bandwidth,
        sorted_gain,
        sorted_min_power,
        levels,
        ee_at_levels,
        lambda_at_levels,
        min_total_power: prob.min_total_power,
        min_total_rate: prob.min_total_rate,
    })
}

/// Interval constants for the bracket with `active_users` users above their
/// floors: the efficiency there is
/// `(A + W_J log2(P - B)) / (P/zeta + P_C)`.
fn bracket_constants(active_users: usize, table: &CriticalLevelTable) -> (f64, f64, f64) {
    let w_total: f64 = table.sorted_bandwidth[..active_users].iter().sum();
    let a = table.min_total_rate
        - table.sorted_bandwidth[..active_users]
            .iter()
            .zip(&table.sorted_alpha)
            .map(|(w, alpha)| w * alpha.log2())
            .sum::<f64>()
        - w_total * w_total.log2();
    let b = table.min_total_power
        - table.sorted_bandwidth[..active_users]
            .iter()
            .zip(&table.sorted_alpha)
            .map(|(w, alpha)| w * alpha)
            .sum::<f64>();
    (w_total, a, b)
}

/// Sign indicator of the efficiency derivative inside one bracket:
/// `theta(P) = (P + zeta*P_C) * W_J / (P - B) - A ln2 - W_J ln(P - B)`
/// with `A`, `B`, `W_J` the bracket constants for `active_users` users above
/// their floors. Requires `P > B`.
pub fn theta(
    total_power: f64,
    active_users: usize,
    table: &CriticalLevelTable,
    pm: &PowerModel,
) -> Result<f64> {
    if active_users == 0 || active_users > table.levels.len() {
        return Err(Error::Domain(format!(
            "theta: active_users {active_users} outside 1..={}",
            table.levels.len()
        )));
    }
    let (w_total, a, b) = bracket_constants(active_users, table);
    if total_power <= b {
        return Err(Error::Domain(format!(
            "theta: total power {total_power} not above the bracket offset {b}"
        )));
    }
    let filled = total_power - b;
    Ok((total_power + pm.amp_efficiency * pm.circuit_power) * w_total / filled
        - a * LN_2
        - w_total * filled.ln())
}

/// Find the total transmit power in `[P0, P_M]` maximizing energy efficiency
/// with optimal (water-filling) per-user allocation.
///
/// Walks the critical levels until the derivative sign indicator goes
/// nonpositive, then bisects `theta` inside that bracket to relative
/// precision `1e-10`. If the indicator stays positive through the budget the
/// efficiency is still climbing there and the optimum clamps to `P_M`.
pub fn optimize_fixed(scenario: &Scenario) -> Result<FixedOptResult> {
    let table = critical_levels(scenario)?;
    let p0 = table.min_total_power;
    let budget = scenario.power_budget;
    if p0 > budget + FEASIBILITY_TOL * budget.max(1.0) {
        return Err(Error::Infeasible {
            reason: format!("minimum total power {p0} exceeds the power budget {budget}"),
            deficit: p0 - budget,
        });
    }
    let p0 = p0.min(budget);
    let pm = &scenario.power_model;
    let k = table.levels.len();

    // (p_opt, bisection bracket, boundary classification)
    type Candidate = (f64, Option<(f64, f64)>, BoundaryCase);
    let mut chosen: Option<Candidate> = None;
    if table.lambda_at_levels[0] <= 0.0 {
        chosen = Some((p0, None, BoundaryCase::AtP0));
    } else {
        for j in 1..=k {
            let lo = table.levels[j - 1];
            if lo >= budget {
                // ran out of budget while the efficiency was still climbing
                chosen = Some((budget, None, BoundaryCase::ClampedAtPm));
                break;
            }
            if j < k && table.levels[j] <= budget && table.lambda_at_levels[j] > 0.0 {
                continue; // still climbing at P_J; also skips zero-width ties
            }
            let hi = if j < k { table.levels[j].min(budget) } else { budget };
            debug_assert!(hi > lo);
            if theta(hi, j, &table, pm)? > 0.0 {
                if hi < budget {
                    // the indicator at this level rounds the other way than
                    // its lambda; the stationary point is the level itself
                    chosen = Some((hi, Some((lo, hi)), BoundaryCase::Interior));
                } else {
                    chosen = Some((budget, Some((lo, hi)), BoundaryCase::ClampedAtPm));
                }
                break;
            }
            let root = bisect_theta(lo, hi, j, &table, pm)?;
            chosen = Some((root, Some((lo, hi)), BoundaryCase::Interior));
            break;
        }
    }
    let (p_opt, bracket, boundary_case) =
        chosen.expect("critical-level walk always terminates with a candidate");

    let (allocation, _) = allocate(scenario, p_opt)?;
    let max_ee = allocation.energy_efficiency;
    Ok(FixedOptResult {
        p_opt,
        allocation,
        max_ee,
        bracket,
        boundary_case,
    })
}

/// Bisection for the root of `theta` in `(lo, hi]`, given `theta(lo+) > 0`
/// and `theta(hi) <= 0`. Only the sign change is relied on.
fn bisect_theta(
    mut lo: f64,
    mut hi: f64,
    active_users: usize,
    table: &CriticalLevelTable,
    pm: &PowerModel,
) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if theta(mid, active_users, table, pm)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
