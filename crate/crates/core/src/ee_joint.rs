//! Energy-efficiency maximization over total transmit power under joint
//! bandwidth and power allocation.
//!
//! Efficiency is strictly increasing in total bandwidth, so the search always
//! spends the whole bandwidth budget and only the power line remains. Along
//! that line the efficiency is either strictly decreasing or strictly
//! quasiconcave; the sign indicator `Lambda_P` of its derivative locates the
//! optimum by bisection. `Lambda_P` needs `dpsi/dP`, which is obtained by
//! implicit differentiation of the consistency residual `Psi(psi, P) = 0`
//! rather than by differencing solved values: a single-point evaluation with
//! better conditioning. The finite-difference route stays in the tests as
//! the independent check.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::joint::{
    expm1_over, floor_power_total, joint_allocate_with_window, omega, psi_window, solve_psi,
    JointSolution, PsiWindow,
};
use crate::model::{BoundaryCase, Scenario};
use crate::oracle::SweepCurve;
use crate::waterfill::FEASIBILITY_TOL;

/// Result of the joint-mode efficiency search.
#[derive(Debug, Clone, PartialEq)]
pub struct JointOptResult {
    pub p_opt: f64,
    pub solution: JointSolution,
    pub max_ee: f64,
    /// Optional sampled `Lambda_P` curve; populated by callers that want the
    /// indicator trace (for example the CLI sweep facility).
    pub lambda_trace: Option<SweepCurve>,
    pub boundary_case: BoundaryCase,
}

/// Derivative pieces of the follower floor pair with respect to `psi`.
/// Returns `(w, p, dw_dpsi, dp_dpsi)`. Zero-floor users contribute zeros.
fn follower_with_derivatives(psi: f64, gain: f64, min_rate: f64) -> Result<(f64, f64, f64, f64)> {
    if min_rate == 0.0 {
        return Ok((0.0, 0.0, 0.0, 0.0));
    }
    let om = omega(psi, gain)?;
    let eo = om.exp();
    let w = min_rate * LN_2 / om;
    let p = min_rate * LN_2 / gain * expm1_over(om);
    // d omega / d psi = g / (omega * e^omega)
    let dw = -min_rate * LN_2 * gain / (om * om * om * eo);
    let dp = min_rate * LN_2 * (eo * (om - 1.0) + 1.0) / (om * om * om * eo);
    Ok((w, p, dw, dp))
}

/// `d psi / d P` at the solved `psi` for totals `(W, P)`, by implicit
/// differentiation of `Psi(psi, P) = 0`:
/// `-(dPsi/dP) / (dPsi/dpsi)`, both partials in closed form.
///
/// Positive on feasible instances (more power raises the leader's spectral
/// density and with it `psi`). A vanishing `dPsi/dpsi` is reported as a
/// numerical failure; it does not occur on valid inputs since `Psi` is
/// strictly increasing in `psi`.
pub fn dpsi_dp(scenario: &Scenario, total_bandwidth: f64, total_power: f64) -> Result<f64> {
    let window = psi_window(scenario, total_bandwidth, total_power)?;
    if !window.feasible {
        return Err(Error::Infeasible {
            reason: "dpsi_dp: totals cannot meet the rate floors".to_string(),
            deficit: infeasible_power_deficit(scenario, &window, total_power)?,
        });
    }
    let floor_rate_total: f64 = scenario.users.iter().map(|u| u.min_rate).sum();
    let psi = if floor_rate_total == 0.0 {
        window.psi_max
    } else {
        solve_psi(scenario, total_bandwidth, total_power, &window)?
    };
    dpsi_dp_at(scenario, total_bandwidth, total_power, psi)
}

pub(crate) fn dpsi_dp_at(
    scenario: &Scenario,
    total_bandwidth: f64,
    total_power: f64,
    psi: f64,
) -> Result<f64> {
    let leader = scenario
        .leader_index()
        .ok_or_else(|| Error::Domain("dpsi_dp: no users".to_string()))?;
    let g1 = scenario.users[leader].gain;

    let mut follower_w = 0.0;
    let mut follower_p = 0.0;
    let mut follower_dw = 0.0;
    let mut follower_dp = 0.0;
    for (i, u) in scenario.users.iter().enumerate() {
        if i != leader {
            let (w, p, dw, dp) = follower_with_derivatives(psi, u.gain, u.min_rate)?;
            follower_w += w;
            follower_p += p;
            follower_dw += dw;
            follower_dp += dp;
        }
    }
    let b = total_bandwidth - follower_w; // leader bandwidth
    let a = total_power - follower_p; // leader power
    if b <= 0.0 || a < 0.0 {
        return Err(Error::Numerical(format!(
            "dpsi_dp: leader remainder degenerate (w1={b}, p1={a})"
        )));
    }
    let om1 = omega(psi, g1)?;
    let d_om1 = g1 / (om1 * om1.exp());
    // a' and b' are the psi-derivatives of the leader remainders
    let a_prime = -follower_dp;
    let b_prime = -follower_dw;
    let d_log = g1 * (a_prime * b - a * b_prime) / (b * (b + a * g1));
    let d_psi_resid_d_psi = d_om1 - d_log;
    if d_psi_resid_d_psi.abs() < 1e-14 {
        return Err(Error::Numerical(
            "dpsi_dp: degenerate Jacobian (dPsi/dpsi ~ 0)".to_string(),
        ));
    }
    let d_psi_resid_d_p = -g1 / (b + a * g1);
    Ok(-d_psi_resid_d_p / d_psi_resid_d_psi)
}

/// Sign indicator of the efficiency derivative along the power line:
/// `Lambda_P = (P + zeta P_C) F1 dpsi/dP - F2` where `F1 = dR/dpsi` and
/// `F2` equals the maximum sum rate.
pub fn lambda_p(scenario: &Scenario, total_bandwidth: f64, total_power: f64) -> Result<f64> {
    let window = psi_window(scenario, total_bandwidth, total_power)?;
    if !window.feasible {
        return Err(Error::Infeasible {
            reason: "lambda_p: totals cannot meet the rate floors".to_string(),
            deficit: infeasible_power_deficit(scenario, &window, total_power)?,
        });
    }
    lambda_p_with(scenario, total_bandwidth, total_power, &window)
}

/// Power shortfall of an infeasible window; infinite when even the bandwidth
/// side never saturates in range.
fn infeasible_power_deficit(
    scenario: &Scenario,
    window: &PsiWindow,
    total_power: f64,
) -> Result<f64> {
    if window.psi_min.is_finite() {
        Ok(floor_power_total(scenario, window.psi_min)? - total_power)
    } else {
        Ok(f64::INFINITY)
    }
}

pub(crate) fn lambda_p_with(
    scenario: &Scenario,
    total_bandwidth: f64,
    total_power: f64,
    window: &PsiWindow,
) -> Result<f64> {
    let leader = scenario
        .leader_index()
        .ok_or_else(|| Error::Domain("lambda_p: no users".to_string()))?;
    let g1 = scenario.users[leader].gain;
    let floor_rate_total: f64 = scenario.users.iter().map(|u| u.min_rate).sum();
    let psi = if floor_rate_total == 0.0 {
        crate::joint::psi_from_leader(total_bandwidth, total_power, g1)
    } else {
        solve_psi(scenario, total_bandwidth, total_power, window)?
    };

    let om1 = omega(psi, g1)?;
    let mut floor_sum = 0.0; // sum of follower floors
    let mut f1_followers = 0.0; // sum r_i omega_i^-2 g_i / (omega_i e^omega_i)
    let mut floor_over_omega = 0.0; // sum r_i / omega_i
    for (i, u) in scenario.users.iter().enumerate() {
        if i != leader && u.min_rate > 0.0 {
            let om = omega(psi, u.gain)?;
            floor_sum += u.min_rate;
            f1_followers += u.min_rate / (om * om) * u.gain / (om * om.exp());
            floor_over_omega += u.min_rate / om;
        }
    }
    let leader_w_over_ln2 = total_bandwidth / LN_2 - floor_over_omega;
    let f1 = om1 * f1_followers + leader_w_over_ln2 * g1 / (om1 * om1.exp());
    let f2 = floor_sum + leader_w_over_ln2 * om1;

    let dpsi = dpsi_dp_at(scenario, total_bandwidth, total_power, psi)?;
    let pm = &scenario.power_model;
    Ok((total_power + pm.amp_efficiency * pm.circuit_power) * f1 * dpsi - f2)
}

/// Find the total transmit power maximizing energy efficiency with joint
/// allocation at the full bandwidth budget.
///
/// The floors fix a minimum power `P0`; above the budget they are
/// infeasible. If `Lambda_P` is already nonpositive just above `P0` the
/// optimum is `P0`; if it is still positive at the budget the optimum clamps
/// there; otherwise the zero of `Lambda_P` is bisected. Should the located
/// point fail to dominate the endpoints (a broken bracket, not expected),
/// a golden-section search on the efficiency itself takes over.
pub fn optimize_joint(scenario: &Scenario) -> Result<JointOptResult> {
    let w = scenario.bandwidth_budget;
    let budget = scenario.power_budget;
    let window = psi_window(scenario, w, budget)?;
    let floor_rate_total: f64 = scenario.users.iter().map(|u| u.min_rate).sum();
    let p0 = if floor_rate_total == 0.0 {
        0.0
    } else if window.psi_min.is_finite() {
        floor_power_total(scenario, window.psi_min)?
    } else {
        f64::INFINITY
    };
    if !window.feasible || p0 > budget + FEASIBILITY_TOL * budget.max(1.0) {
        return Err(Error::Infeasible {
            reason: format!(
                "minimum rate requirements need {p0} W, exceeding the power budget {budget}"
            ),
            deficit: p0 - budget,
        });
    }
    let p0 = p0.min(budget);

    // Evaluate the indicator a hair inside the interval: at exactly P0 the
    // leader remainder can be the degenerate (0, 0).
    let nudge = 1e-9 * p0.max(1.0);
    let p_lo = (p0 + nudge).min(budget);

    let (p_opt, boundary_case) = if p_lo >= budget {
        (budget, BoundaryCase::AtP0)
    } else if lambda_p_with(scenario, w, p_lo, &window)? <= 0.0 {
        (p0, BoundaryCase::AtP0)
    } else if lambda_p_with(scenario, w, budget, &window)? > 0.0 {
        (budget, BoundaryCase::ClampedAtPm)
    } else {
        let mut lo = p_lo;
        let mut hi = budget;
        for _ in 0..200 {
            if hi - lo <= 1e-10 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if lambda_p_with(scenario, w, mid, &window)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), BoundaryCase::Interior)
    };

    let solution = joint_allocate_with_window(scenario, w, p_opt, &window)?;
    let max_ee = solution.allocation.energy_efficiency;

    // Quasiconcavity guarantees the located point dominates the endpoints;
    // verify, and fall back to a direct search if the assumption broke.
    let ee_at = |p: f64| -> Result<f64> {
        Ok(joint_allocate_with_window(scenario, w, p, &window)?
            .allocation
            .energy_efficiency)
    };
    let ee_p0 = ee_at(p0)?;
    let ee_pm = ee_at(budget)?;
    if max_ee + 1e-12 * max_ee.abs().max(1.0) < ee_p0.max(ee_pm) {
        log::warn!(
            "lambda_p bracket failed (ee {max_ee} below endpoints {ee_p0}/{ee_pm}); \
             falling back to golden-section search"
        );
        let p_gold = golden_section_max(&ee_at, p0, budget)?;
        let solution = joint_allocate_with_window(scenario, w, p_gold, &window)?;
        let max_ee = solution.allocation.energy_efficiency;
        let boundary_case = if (p_gold - p0).abs() <= 1e-8 * budget {
            BoundaryCase::AtP0
        } else if (p_gold - budget).abs() <= 1e-8 * budget {
            BoundaryCase::ClampedAtPm
        } else {
            BoundaryCase::Interior
        };
        return Ok(JointOptResult {
            p_opt: p_gold,
            solution,
            max_ee,
            lambda_trace: None,
            boundary_case,
        });
    }

    Ok(JointOptResult {
        p_opt,
        solution,
        max_ee,
        lambda_trace: None,
        boundary_case,
    })
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_section_max(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi.abs().max(1.0) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a)?;
        }
    }
    Ok(0.5 * (lo + hi))
}
