//! Domain types, validation, and the direct rate / energy-efficiency
//! evaluators shared by all solvers.
//!
//! Every quantity is a plain `f64` in consistent units (Hz, W, bits/s); there
//! is no unit-conversion layer. Rates are base-2 throughout; solver internals
//! that work in natural log convert exactly once.

use std::collections::BTreeSet;
use std::f64::consts::LN_2;

use thiserror::Error;

use crate::error::{Error as CrateError, Result};

/// One receiver: its channel gain and quality-of-service floor.
///
/// `gain` is the per-watt-per-hertz SNR of the user's frequency band (squared
/// channel magnitude over noise spectral density). `min_rate` is the minimum
/// information rate guaranteed to the user. `fixed_bandwidth` is only present
/// when the band widths are pre-assigned (fixed-bandwidth mode).
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub gain: f64,
    pub min_rate: f64,
    pub fixed_bandwidth: Option<f64>,
}

impl UserChannel {
    pub fn new(gain: f64, min_rate: f64) -> Self {
        Self { gain, min_rate, fixed_bandwidth: None }
    }

    pub fn with_bandwidth(gain: f64, min_rate: f64, bandwidth: f64) -> Self {
        Self { gain, min_rate, fixed_bandwidth: Some(bandwidth) }
    }
}

/// Power-consumption model: amplifier efficiency and constant circuit draw.
///
/// Transmit power `P` costs `P / amp_efficiency + circuit_power` consumed
/// watts; energy efficiency divides the sum rate by that figure.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel {
    /// Amplifier efficiency, in (0, 1].
    pub amp_efficiency: f64,
    /// Circuit power consumed regardless of transmission, nonnegative.
    pub circuit_power: f64,
}

impl PowerModel {
    pub fn new(amp_efficiency: f64, circuit_power: f64) -> Self {
        Self { amp_efficiency, circuit_power }
    }

    /// Consumed power for a given transmit power.
    pub fn consumed(&self, transmit_power: f64) -> f64 {
        transmit_power / self.amp_efficiency + self.circuit_power
    }
}

/// A full problem instance: the users plus the bandwidth and power budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<UserChannel>,
    /// Total bandwidth budget W_M (> 0).
    pub bandwidth_budget: f64,
    /// Total transmit power budget P_M (> 0).
    pub power_budget: f64,
    pub power_model: PowerModel,
}

impl Scenario {
    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Index of the user with the largest gain (ties resolved to the lowest
    /// index; joint mode rejects ties in validation).
    pub fn leader_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, u) in self.users.iter().enumerate() {
            match best {
                Some(b) if self.users[b].gain >= u.gain => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// Per-user bandwidths in fixed-bandwidth mode.
    pub(crate) fn fixed_bandwidths(&self) -> Result<Vec<f64>> {
        self.users
            .iter()
            .enumerate()
            .map(|(i, u)| {
                u.fixed_bandwidth.ok_or_else(|| {
                    CrateError::Domain(format!("user {i} has no fixed bandwidth"))
                })
            })
            .collect()
    }
}

/// Which allocation problem is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Per-user bandwidths are given; only transmit power is allocated.
    Fixed,
    /// Bandwidths and powers are allocated jointly.
    Joint,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Joint => "joint",
        }
    }
}

/// Where the optimal total transmit power landed relative to its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCase {
    /// Efficiency is decreasing from the start; minimum feasible power wins.
    AtP0,
    /// Interior stationary point located by bisection.
    Interior,
    /// Efficiency was still climbing at the power budget; clamped there.
    ClampedAtPm,
}

impl BoundaryCase {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCase::AtP0 => "at_P0",
            BoundaryCase::Interior => "interior",
            BoundaryCase::ClampedAtPm => "clamped_at_PM",
        }
    }
}

/// Per-user slice of a resource allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAllocation {
    pub bandwidth: f64,
    pub power: f64,
    pub rate: f64,
}

/// A complete allocation with totals. Rates are always recomputed from the
/// (bandwidth, power) pair so the struct is self-consistent by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub per_user: Vec<UserAllocation>,
    pub total_bandwidth: f64,
    pub total_power: f64,
    pub sum_rate: f64,
    pub energy_efficiency: f64,
}

impl Allocation {
    /// Assemble an allocation from per-user `(bandwidth, power)` pairs,
    /// recomputing every rate and the totals.
    pub fn assemble(pairs: &[(f64, f64)], scenario: &Scenario) -> Result<Allocation> {
        debug_assert_eq!(pairs.len(), scenario.users.len());
        let mut per_user = Vec::with_capacity(pairs.len());
        let mut total_bandwidth = 0.0;
        let mut total_power = 0.0;
        let mut sum_rate = 0.0;
        for (&(w, p), user) in pairs.iter().zip(&scenario.users) {
            debug_assert!(w > 0.0 || p == 0.0, "positive power on zero bandwidth");
            let r = rate_value(w, p, user.gain);
            per_user.push(UserAllocation { bandwidth: w, power: p, rate: r });
            total_bandwidth += w;
            total_power += p;
            sum_rate += r;
        }
        let energy_efficiency =
            energy_efficiency(sum_rate, total_power, &scenario.power_model)?;
        Ok(Allocation {
            per_user,
            total_bandwidth,
            total_power,
            sum_rate,
            energy_efficiency,
        })
    }
}

/// Achievable rate of one Gaussian channel: `w * log2(1 + p*g/w)`.
///
/// The degenerate point `(w, p) = (0, 0)` returns 0 (the limit `w -> 0` at
/// zero power), so users with a zero rate floor can receive no resources.
/// Positive power on zero bandwidth has no meaningful rate and is a domain
/// error.
pub fn rate(bandwidth: f64, power: f64, gain: f64) -> Result<f64> {
    if !bandwidth.is_finite() || !power.is_finite() || !gain.is_finite() {
        return Err(CrateError::Domain(format!(
            "rate: non-finite argument (w={bandwidth}, p={power}, g={gain})"
        )));
    }
    if bandwidth < 0.0 || power < 0.0 || gain <= 0.0 {
        return Err(CrateError::Domain(format!(
            "rate: need w >= 0, p >= 0, g > 0 (w={bandwidth}, p={power}, g={gain})"
        )));
    }
    if bandwidth == 0.0 && power > 0.0 {
        return Err(CrateError::Domain(
            "rate: positive power on zero bandwidth".to_string(),
        ));
    }
    Ok(rate_value(bandwidth, power, gain))
}

/// Infallible rate kernel for call sites that already hold the preconditions.
/// `rate_value(0, 0, g) = 0` by convention.
pub(crate) fn rate_value(bandwidth: f64, power: f64, gain: f64) -> f64 {
    if bandwidth == 0.0 {
        return 0.0;
    }
    bandwidth * (power * gain / bandwidth).ln_1p() / LN_2
}

/// Energy efficiency: sum rate per unit of consumed power,
/// `R / (P/amp_efficiency + circuit_power)`.
pub fn energy_efficiency(sum_rate: f64, transmit_power: f64, pm: &PowerModel) -> Result<f64> {
    if transmit_power < 0.0 {
        return Err(CrateError::Domain(format!(
            "energy_efficiency: negative transmit power {transmit_power}"
        )));
    }
    let consumed = pm.consumed(transmit_power);
    if consumed <= 0.0 {
        return Err(CrateError::Domain(
            "energy_efficiency: zero consumed power (P = 0 and circuit power = 0)".to_string(),
        ));
    }
    Ok(sum_rate / consumed)
}

/// A single validation failure. `validate` collects all of them instead of
/// stopping at the first, so a CLI run can report every problem at once.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("user {user}: gain must be positive and finite (got {value})")]
    BadGain { user: usize, value: f64 },
    #[error("user {user}: min_rate must be nonnegative and finite (got {value})")]
    BadMinRate { user: usize, value: f64 },
    #[error("user {user}: bandwidth must be positive and finite (got {value})")]
    BadFixedBandwidth { user: usize, value: f64 },
    #[error("user {user}: fixed mode requires a bandwidth for every user")]
    MissingFixedBandwidth { user: usize },
    #[error("users {a} and {b}: gains not distinct (joint mode requires pairwise distinct gains)")]
    GainsNotDistinct { a: usize, b: usize },
    #[error("scenario has no users")]
    NoUsers,
    #[error("bandwidth budget must be positive and finite (got {value})")]
    BadBandwidthBudget { value: f64 },
    #[error("power budget must be positive and finite (got {value})")]
    BadPowerBudget { value: f64 },
    #[error("amplifier efficiency must lie in (0, 1] (got {value})")]
    BadAmpEfficiency { value: f64 },
    #[error("circuit power must be nonnegative and finite (got {value})")]
    BadCircuitPower { value: f64 },
    #[error("fixed bandwidths sum to {total}, exceeding the bandwidth budget {budget}")]
    BandwidthOverBudget { total: f64, budget: f64 },
}

/// Check every structural invariant of a scenario for the given mode.
/// Returns the full list of violations; an empty list means the scenario is
/// valid. Never panics.
pub fn validate(scenario: &Scenario, mode: Mode) -> Vec<Violation> {
    let mut out = Vec::new();
    if scenario.users.is_empty() {
        out.push(Violation::NoUsers);
    }
    for (i, u) in scenario.users.iter().enumerate() {
        if !(u.gain.is_finite() && u.gain > 0.0) {
            out.push(Violation::BadGain { user: i, value: u.gain });
        }
        if !(u.min_rate.is_finite() && u.min_rate >= 0.0) {
            out.push(Violation::BadMinRate { user: i, value: u.min_rate });
        }
        if let Some(w) = u.fixed_bandwidth {
            if !(w.is_finite() && w > 0.0) {
                out.push(Violation::BadFixedBandwidth { user: i, value: w });
            }
        } else if mode == Mode::Fixed {
            out.push(Violation::MissingFixedBandwidth { user: i });
        }
    }
    if !(scenario.bandwidth_budget.is_finite() && scenario.bandwidth_budget > 0.0) {
        out.push(Violation::BadBandwidthBudget { value: scenario.bandwidth_budget });
    }
    if !(scenario.power_budget.is_finite() && scenario.power_budget > 0.0) {
        out.push(Violation::BadPowerBudget { value: scenario.power_budget });
    }
    let pm = &scenario.power_model;
    if !(pm.amp_efficiency.is_finite() && pm.amp_efficiency > 0.0 && pm.amp_efficiency <= 1.0) {
        out.push(Violation::BadAmpEfficiency { value: pm.amp_efficiency });
    }
    if !(pm.circuit_power.is_finite() && pm.circuit_power >= 0.0) {
        out.push(Violation::BadCircuitPower { value: pm.circuit_power });
    }
    match mode {
        Mode::Fixed => {
            let total: f64 = scenario
                .users
                .iter()
                .filter_map(|u| u.fixed_bandwidth)
                .filter(|w| w.is_finite() && *w > 0.0)
                .sum();
            if scenario.bandwidth_budget.is_finite() && total > scenario.bandwidth_budget {
                out.push(Violation::BandwidthOverBudget {
                    total,
                    budget: scenario.bandwidth_budget,
                });
            }
        }
        Mode::Joint => {
            for a in 0..scenario.users.len() {
                for b in (a + 1)..scenario.users.len() {
                    if scenario.users[a].gain == scenario.users[b].gain {
                        out.push(Violation::GainsNotDistinct { a, b });
                    }
                }
            }
        }
    }
    out
}

/// Indices of the users transmitting at exactly their floor.
pub type BindingSet = BTreeSet<usize>;
