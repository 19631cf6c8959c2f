//! Deterministic report emission: fixed field order, numbers at 12
//! significant digits, `\n` newlines, no locale dependence. Re-running on
//! the same input yields byte-identical output.

use eealloc::ee_fixed::FixedOptResult;
use eealloc::ee_joint::JointOptResult;
use eealloc::joint::psi_from_leader;
use eealloc::oracle::SweepCurve;
use eealloc::waterfill::WaterfillDiagnostics;
use eealloc::{Allocation, Scenario};

pub const SIG_DIGITS: usize = 12;

/// Format with at most `sig` significant digits, `printf %g` style: fixed
/// notation for moderate exponents, scientific otherwise, trailing zeros
/// trimmed.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent marker");
    let exponent: i32 = exponent.parse().expect("numeric exponent");
    if exponent >= -4 && exponent < sig as i32 {
        let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn num(x: f64) -> String {
    fmt_sig(x, SIG_DIGITS)
}

/// Tiny JSON emitter with explicit field order and our number formatting.
pub struct Doc {
    out: String,
    first_at_depth: Vec<bool>,
    depth: usize,
}

impl Doc {
    pub fn new() -> Self {
        let mut out = String::new();
        out.push_str("{\n");
        Doc { out, first_at_depth: vec![true], depth: 1 }
    }

    fn key(&mut self, name: &str) {
        let first = self.first_at_depth.last_mut().expect("inside an object");
        if !*first {
            self.out.push_str(",\n");
        }
        *first = false;
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push('"');
        self.out.push_str(name);
        self.out.push_str("\": ");
    }

    pub fn str_field(&mut self, name: &str, value: &str) -> &mut Self {
        self.key(name);
        self.out.push('"');
        self.out.push_str(value);
        self.out.push('"');
        self
    }

    pub fn num_field(&mut self, name: &str, value: f64) -> &mut Self {
        self.key(name);
        self.out.push_str(&num(value));
        self
    }

    pub fn int_field(&mut self, name: &str, value: usize) -> &mut Self {
        self.key(name);
        self.out.push_str(&value.to_string());
        self
    }

    pub fn null_field(&mut self, name: &str) -> &mut Self {
        self.key(name);
        self.out.push_str("null");
        self
    }

    pub fn num_list_field(&mut self, name: &str, values: &[f64]) -> &mut Self {
        self.key(name);
        self.out.push('[');
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.out.push_str(&num(*v));
        }
        self.out.push(']');
        self
    }

    pub fn open_object(&mut self, name: &str) -> &mut Self {
        self.key(name);
        self.out.push_str("{\n");
        self.depth += 1;
        self.first_at_depth.push(true);
        self
    }

    pub fn close_object(&mut self) -> &mut Self {
        self.out.push('\n');
        self.depth -= 1;
        self.first_at_depth.pop();
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push('}');
        self
    }

    /// Array of per-user allocation objects, one per line.
    pub fn users_field(&mut self, name: &str, alloc: &Allocation) -> &mut Self {
        self.key(name);
        self.out.push_str("[\n");
        for (i, u) in alloc.per_user.iter().enumerate() {
            for _ in 0..=self.depth {
                self.out.push_str("  ");
            }
            self.out.push_str(&format!(
                "{{ \"bandwidth\": {}, \"power\": {}, \"rate\": {} }}",
                num(u.bandwidth),
                num(u.power),
                num(u.rate)
            ));
            if i + 1 < alloc.per_user.len() {
                self.out.push(',');
            }
            self.out.push('\n');
        }
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push(']');
        self
    }

    pub fn finish(mut self) -> String {
        self.out.push_str("\n}\n");
        self.out
    }
}

fn totals(doc: &mut Doc, alloc: &Allocation) {
    doc.open_object("totals")
        .num_field("bandwidth", alloc.total_bandwidth)
        .num_field("power", alloc.total_power)
        .num_field("sum_rate", alloc.sum_rate)
        .num_field("energy_efficiency", alloc.energy_efficiency)
        .close_object();
}

pub fn fixed_report(
    digest: &str,
    scenario: &Scenario,
    result: &FixedOptResult,
    diag: &WaterfillDiagnostics,
) -> String {
    let alloc = &result.allocation;
    let kkt = eealloc::waterfill::kkt_residual(scenario, alloc, diag);
    let power_sum: f64 = alloc.per_user.iter().map(|u| u.power).sum();
    let floor_worst = alloc
        .per_user
        .iter()
        .zip(&scenario.users)
        .map(|(u, s)| (s.min_rate - u.rate).max(0.0) / s.min_rate.max(1.0))
        .fold(0.0, f64::max);

    let mut doc = Doc::new();
    doc.str_field("scenario_digest", digest)
        .str_field("mode", "fixed")
        .num_field("p_opt", result.p_opt)
        .num_field("max_ee", result.max_ee)
        .str_field("boundary_case", result.boundary_case.as_str());
    match result.bracket {
        Some((lo, hi)) => doc.num_list_field("bracket", &[lo, hi]),
        None => doc.null_field("bracket"),
    };
    doc.num_field("water_level", diag.water_level)
        .num_field("min_total_power", diag.min_total_power)
        .users_field("users", alloc);
    totals(&mut doc, alloc);
    doc.open_object("residuals")
        .num_field("kkt", kkt)
        .num_field("power_sum", (power_sum - result.p_opt).abs() / result.p_opt.max(1.0))
        .num_field("rate_floor_worst", floor_worst)
        .close_object();
    doc.finish()
}

pub fn joint_report(digest: &str, scenario: &Scenario, result: &JointOptResult) -> String {
    let sol = &result.solution;
    let alloc = &sol.allocation;
    let leader = &alloc.per_user[sol.leader_index];
    let psi_back = psi_from_leader(
        leader.bandwidth,
        leader.power,
        scenario.users[sol.leader_index].gain,
    );
    let psi_resid = (psi_back - sol.psi).abs() / sol.psi.abs().max(1e-6);
    let floor_worst = alloc
        .per_user
        .iter()
        .zip(&scenario.users)
        .enumerate()
        .filter(|(i, _)| *i != sol.leader_index)
        .map(|(_, (u, s))| (u.rate - s.min_rate).abs() / s.min_rate.max(1.0))
        .fold(0.0, f64::max);

    let mut doc = Doc::new();
    doc.str_field("scenario_digest", digest)
        .str_field("mode", "joint")
        .num_field("p_opt", result.p_opt)
        .num_field("max_ee", result.max_ee)
        .str_field("boundary_case", result.boundary_case.as_str())
        .num_field("psi", sol.psi)
        .int_field("leader", sol.leader_index)
        .num_list_field("omegas", &sol.omegas)
        .num_field("max_sum_rate", sol.max_sum_rate)
        .users_field("users", alloc);
    totals(&mut doc, alloc);
    doc.open_object("residuals")
        .num_field("psi_consistency", psi_resid)
        .num_field(
            "bandwidth_budget",
            (alloc.total_bandwidth - scenario.bandwidth_budget).abs()
                / scenario.bandwidth_budget.max(1.0),
        )
        .num_field(
            "power_budget",
            (alloc.total_power - result.p_opt).abs() / result.p_opt.max(1.0),
        )
        .num_field("floor_worst", floor_worst)
        .close_object();
    doc.finish()
}

/// CSV rendering of a sweep: header `P,sum_rate,ee,indicator`, one row per
/// sample, comma delimiter, `\n` newlines.
pub fn sweep_csv(curve: &SweepCurve) -> String {
    let mut out = String::from("P,sum_rate,ee,indicator\n");
    for s in &curve.samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            num(s.total_power),
            num(s.sum_rate),
            num(s.energy_efficiency),
            num(s.indicator)
        ));
    }
    out
}
