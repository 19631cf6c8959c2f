//! Joint bandwidth assignment and transmit-power allocation maximizing the
//! sum rate for given totals `(W, P)`.
//!
//! At the optimum every user except the one with the best gain (the leader)
//! transmits at exactly its rate floor, and the leader absorbs all remaining
//! bandwidth and power. A scalar `psi > 0` parameterizes the family of
//! floor-meeting follower allocations: follower bandwidth is strictly
//! decreasing and follower power strictly increasing in `psi`. The optimum
//! is the unique zero of the consistency residual `Psi(psi)` that matches
//! the leader's own spectral density to `psi`.
//!
//! With `omega = W0((psi*g - 1)/e) + 1`, a user at its floor `r` gets
//! `w = r ln2 / omega` and `p = (r ln2 / g) * (e^omega - 1) / omega`. The
//! power is evaluated in that exponential form rather than the algebraically
//! equal rational form `(psi*g - 1 - W0) / (W0 * omega)`, which loses all
//! precision where `psi*g` approaches 1 (`W0 -> 0`) and at `psi -> 0`; the
//! exponential form also makes the recomputed rate reproduce `r` exactly.

use std::f64::consts::{E, LN_2};

use crate::error::{Error, Result};
use crate::model::{Allocation, Scenario};
use crate::special::lambert_w0;

/// Feasible range of the allocation parameter `psi` for given totals.
///
/// `psi_min` saturates the bandwidth budget with every user at its floor;
/// `psi_max` saturates the power budget the same way. The window is empty
/// (infeasible totals) exactly when `psi_min > psi_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiWindow {
    pub psi_min: f64,
    pub psi_max: f64,
    pub feasible: bool,
}

/// The solved joint allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    /// The consistency parameter at the optimum.
    pub psi: f64,
    pub allocation: Allocation,
    /// Index of the best-gain user, the only one above its floor.
    pub leader_index: usize,
    /// Closed-form maximum sum rate `sum r_min + w_1 * omega_1 / ln 2`.
    pub max_sum_rate: f64,
    /// `omega_i = W0((psi*g_i - 1)/e) + 1` per user, scenario order.
    pub omegas: Vec<f64>,
}

/// `(e^x - 1) / x` with its limit value 1 at `x = 0`.
pub(crate) fn expm1_over(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

pub(crate) fn omega(psi: f64, gain: f64) -> Result<f64> {
    Ok(lambert_w0((psi * gain - 1.0) / E)? + 1.0)
}

/// Bandwidth and power that let a user with the given gain meet its rate
/// floor at allocation parameter `psi`. A zero floor consumes nothing.
///
/// The returned pair satisfies `rate(w, p, gain) = min_rate` exactly (the
/// recomputed log reconstitutes `omega`).
pub fn follower_alloc(psi: f64, gain: f64, min_rate: f64) -> Result<(f64, f64)> {
    if min_rate == 0.0 {
        return Ok((0.0, 0.0));
    }
    let arguments_valid = psi.is_finite()
        && psi > 0.0
        && gain.is_finite()
        && gain > 0.0
        && min_rate.is_finite()
        && min_rate > 0.0;
    if !arguments_valid {
        return Err(Error::Domain(format!(
            "follower_alloc: need psi > 0, gain > 0, min_rate >= 0 (psi={psi}, g={gain}, r={min_rate})"
        )));
    }
    let om = omega(psi, gain)?;
    let w = min_rate * LN_2 / om;
    let p = min_rate * LN_2 / gain * expm1_over(om);
    Ok((w, p))
}

/// Recover `psi` from the leader's allocation:
/// `psi = (1/g + p/w) ln(1 + p g / w) - p/w`. Requires `w > 0`.
pub fn psi_from_leader(bandwidth: f64, power: f64, gain: f64) -> f64 {
    let density = power / bandwidth;
    (1.0 / gain + density) * (density * gain).ln_1p() - density
}

/// Total bandwidth needed when every user (leader included) sits at its rate
/// floor for this `psi`. Strictly decreasing in `psi`; infinite at `psi = 0`
/// whenever any floor is positive.
pub fn floor_bandwidth_total(scenario: &Scenario, psi: f64) -> Result<f64> {
    let mut total = 0.0;
    for u in &scenario.users {
        total += follower_alloc(psi, u.gain, u.min_rate)?.0;
    }
    Ok(total)
}

/// Total power needed when every user sits at its rate floor for this `psi`.
/// Strictly increasing in `psi`.
pub fn floor_power_total(scenario: &Scenario, psi: f64) -> Result<f64> {
    let mut total = 0.0;
    for u in &scenario.users {
        total += follower_alloc(psi, u.gain, u.min_rate)?.1;
    }
    Ok(total)
}

const PSI_BRACKET_LO: f64 = 1e-30;
const PSI_BRACKET_CAP: f64 = 1e300;
const PSI_REL_TOL: f64 = 1e-12;

/// Bisection for the `psi` at which a monotone saturation function crosses
/// `target`. `increasing` describes the function's direction.
fn bisect_saturation(
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    increasing: bool,
) -> Result<f64> {
    let mut lo = PSI_BRACKET_LO;
    let lo_val = f(lo)?;
    let lo_crossed = if increasing { lo_val >= target } else { lo_val <= target };
    if lo_crossed {
        return Ok(lo);
    }
    let mut hi = 1.0;
    loop {
        let v = f(hi)?;
        let crossed = if increasing { v >= target } else { v <= target };
        if crossed {
            break;
        }
        hi *= 4.0;
        if hi > PSI_BRACKET_CAP {
            return Err(Error::Numerical(format!(
                "saturation point beyond numeric range (target {target})"
            )));
        }
    }
    for _ in 0..500 {
        if hi - lo <= PSI_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        let crossed = if increasing { v >= target } else { v <= target };
        if crossed {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Compute the feasible `psi` window for totals `(W, P)`.
///
/// With all rate floors zero the window is conventional: `psi_min = 0` and
/// `psi_max` is the leader's own `psi` at `(W, P)`, which is also the
/// solution. Infeasibility (floors unreachable) is reported through the
/// `feasible` flag, never as an error.
pub fn psi_window(scenario: &Scenario, total_bandwidth: f64, total_power: f64) -> Result<PsiWindow> {
    if scenario.users.is_empty() {
        return Err(Error::Domain("psi_window: no users".to_string()));
    }
    let totals_valid = total_bandwidth.is_finite()
        && total_bandwidth > 0.0
        && total_power.is_finite()
        && total_power > 0.0;
    if !totals_valid {
        return Err(Error::Domain(format!(
            "psi_window: totals must be positive (W={total_bandwidth}, P={total_power})"
        )));
    }
    let floor_rate_total: f64 = scenario.users.iter().map(|u| u.min_rate).sum();
    let leader = scenario.leader_index().expect("nonempty");
    if floor_rate_total == 0.0 {
        let psi_max =
            psi_from_leader(total_bandwidth, total_power, scenario.users[leader].gain);
        return Ok(PsiWindow { psi_min: 0.0, psi_max, feasible: true });
    }

    let psi_min = match bisect_saturation(
        |psi| floor_bandwidth_total(scenario, psi),
        total_bandwidth,
        false,
    ) {
        Ok(v) => v,
        // Floors need more bandwidth than the budget at any representable
        // psi: hopelessly infeasible.
        Err(Error::Numerical(_)) => {
            return Ok(PsiWindow { psi_min: f64::INFINITY, psi_max: 0.0, feasible: false })
        }
        Err(e) => return Err(e),
    };

    let power_at_psi_min = floor_power_total(scenario, psi_min)?;
    if power_at_psi_min > total_power {
        // Power side cannot reach the floors; find where it would have
        // saturated (if anywhere) purely for reporting.
        let power_floor_limit: f64 = scenario
            .users
            .iter()
            .map(|u| u.min_rate * LN_2 / u.gain)
            .sum();
        let psi_max = if total_power > power_floor_limit {
            bisect_saturation(|psi| floor_power_total(scenario, psi), total_power, true)?
        } else {
            0.0
        };
        return Ok(PsiWindow { psi_min, psi_max, feasible: false });
    }

    let psi_max =
        bisect_saturation(|psi| floor_power_total(scenario, psi), total_power, true)?;
    Ok(PsiWindow {
        psi_min,
        psi_max,
        feasible: psi_min <= psi_max,
    })
}

/// Consistency residual
/// `Psi(psi) = omega_1(psi) - ln(1 + (P - sum p_i) g_1 / (W - sum w_i))`,
/// strictly increasing in `psi` on the window. Exhausted leader bandwidth
/// maps to `-inf`, exhausted leader power to `+inf`, keeping the bisection
/// bracket ordered.
pub(crate) fn psi_residual(
    scenario: &Scenario,
    leader: usize,
    total_bandwidth: f64,
    total_power: f64,
    psi: f64,
) -> Result<f64> {
    let mut follower_w = 0.0;
    let mut follower_p = 0.0;
    for (i, u) in scenario.users.iter().enumerate() {
        if i != leader {
            let (w, p) = follower_alloc(psi, u.gain, u.min_rate)?;
            follower_w += w;
            follower_p += p;
        }
    }
    let leader_w = total_bandwidth - follower_w;
    let leader_p = total_power - follower_p;
    if leader_w <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if leader_p < 0.0 {
        return Ok(f64::INFINITY);
    }
    let gain = scenario.users[leader].gain;
    let om = omega(psi, gain)?;
    Ok(om - (leader_p * gain / leader_w).ln_1p())
}

/// Solve `Psi(psi) = 0` on a feasible window by bisection, to a residual of
/// at most `1e-10`. A degenerate (zero-width) window is its own solution.
pub fn solve_psi(
    scenario: &Scenario,
    total_bandwidth: f64,
    total_power: f64,
    window: &PsiWindow,
) -> Result<f64> {
    if !window.feasible {
        return Err(Error::Domain(
            "solve_psi: window is infeasible".to_string(),
        ));
    }
    let leader = scenario.leader_index().expect("nonempty");
    let width_floor = PSI_REL_TOL * window.psi_max.abs().max(1e-30);
    if window.psi_max - window.psi_min <= width_floor {
        return Ok(window.psi_min);
    }
    let mut lo = window.psi_min;
    let mut hi = window.psi_max;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = psi_residual(scenario, leader, total_bandwidth, total_power, mid)?;
        if v.abs() <= 1e-10 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1e-300) {
            break;
        }
    }
    // The interval has collapsed; accept the endpoint whose residual is
    // smallest if it meets the contract, otherwise report the failure.
    let mut best = mid;
    let mut best_res = f64::INFINITY;
    for cand in [lo, mid, hi] {
        let r = psi_residual(scenario, leader, total_bandwidth, total_power, cand)?.abs();
        if r < best_res {
            best_res = r;
            best = cand;
        }
    }
    if best_res <= 1e-10 {
        Ok(best)
    } else {
        Err(Error::Numerical(format!(
            "solve_psi: residual {best_res:e} did not reach 1e-10"
        )))
    }
}

/// Joint bandwidth and power allocation for totals `(W, P)`: followers at
/// their floors via `follower_alloc` at the solved `psi`, the leader taking
/// both remainders. Budgets hold with equality by construction.
pub fn joint_allocate(
    scenario: &Scenario,
    total_bandwidth: f64,
    total_power: f64,
) -> Result<JointSolution> {
    let window = psi_window(scenario, total_bandwidth, total_power)?;
    joint_allocate_with_window(scenario, total_bandwidth, total_power, &window)
}

/// Same as [`joint_allocate`] with a pre-computed window; used by sweeps to
/// avoid re-deriving `psi_min` (which does not depend on `P`). The window
/// must have been computed for this bandwidth and a power at least as large.
pub(crate) fn joint_allocate_with_window(
    scenario: &Scenario,
    total_bandwidth: f64,
    total_power: f64,
    window: &PsiWindow,
) -> Result<JointSolution> {
    let leader = scenario
        .leader_index()
        .ok_or_else(|| Error::Domain("joint_allocate: no users".to_string()))?;
    for (i, u) in scenario.users.iter().enumerate() {
        if i != leader && u.gain == scenario.users[leader].gain {
            return Err(Error::Domain("gains not distinct".to_string()));
        }
    }
    if !window.feasible {
        let deficit = if window.psi_min.is_finite() {
            floor_power_total(scenario, window.psi_min)? - total_power
        } else {
            f64::INFINITY
        };
        return Err(Error::Infeasible {
            reason: format!(
                "power budget {total_power} cannot cover the rate floors with bandwidth {total_bandwidth}"
            ),
            deficit,
        });
    }

    let floor_rate_total: f64 = scenario.users.iter().map(|u| u.min_rate).sum();
    let psi = if floor_rate_total == 0.0 {
        // no floors: the leader simply takes both budgets
        psi_from_leader(total_bandwidth, total_power, scenario.users[leader].gain)
    } else {
        // At (numerically) the minimum feasible power the whole allocation
        // sits at the floors and psi_min is exact; the bisection residual is
        // undefined there when the leader floor is zero.
        let p_floor = floor_power_total(scenario, window.psi_min)?;
        if total_power <= p_floor * (1.0 + 1e-12) + 1e-300 {
            window.psi_min
        } else {
            solve_psi(scenario, total_bandwidth, total_power, window)?
        }
    };

    let mut pairs = vec![(0.0, 0.0); scenario.users.len()];
    let mut follower_w = 0.0;
    let mut follower_p = 0.0;
    let mut floor_sum = 0.0;
    for (i, u) in scenario.users.iter().enumerate() {
        if i != leader {
            let (w, p) = if psi > 0.0 {
                follower_alloc(psi, u.gain, u.min_rate)?
            } else {
                (0.0, 0.0) // all-zero-floor convention
            };
            pairs[i] = (w, p);
            follower_w += w;
            follower_p += p;
            floor_sum += u.min_rate;
        }
    }
    let leader_w = (total_bandwidth - follower_w).max(0.0);
    let leader_p = (total_power - follower_p).max(0.0);
    pairs[leader] = (leader_w, leader_p);

    let mut omegas = Vec::with_capacity(scenario.users.len());
    for u in &scenario.users {
        omegas.push(if psi > 0.0 { omega(psi, u.gain)? } else { 0.0 });
    }
    let max_sum_rate = floor_sum + leader_w * omegas[leader] / LN_2;

    let allocation = Allocation::assemble(&pairs, scenario)?;
    Ok(JointSolution {
        psi,
        allocation,
        leader_index: leader,
        max_sum_rate,
        omegas,
    })
}
