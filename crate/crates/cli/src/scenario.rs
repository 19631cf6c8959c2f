//! Scenario file handling: a flat JSON document with strict parsing (unknown
//! keys are errors), plus the content digest echoed into every report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use eealloc::{PowerModel, Scenario, UserChannel};

use crate::CliError;

/// On-disk scenario document.
///
/// ```json
/// {
///   "users": [
///     { "gain": 2.5, "min_rate": 1.0, "bandwidth": 3.0 }
///   ],
///   "bandwidth_budget": 10.0,
///   "power_budget": 50.0,
///   "amp_efficiency": 0.8,
///   "circuit_power": 10.0
/// }
/// ```
///
/// `bandwidth` is per-user and only required in fixed mode.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub users: Vec<UserEntry>,
    pub bandwidth_budget: f64,
    pub power_budget: f64,
    pub amp_efficiency: f64,
    pub circuit_power: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub gain: f64,
    pub min_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            users: self
                .users
                .iter()
                .map(|u| UserChannel {
                    gain: u.gain,
                    min_rate: u.min_rate,
                    fixed_bandwidth: u.bandwidth,
                })
                .collect(),
            bandwidth_budget: self.bandwidth_budget,
            power_budget: self.power_budget,
            power_model: PowerModel::new(self.amp_efficiency, self.circuit_power),
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            users: s
                .users
                .iter()
                .map(|u| UserEntry {
                    gain: u.gain,
                    min_rate: u.min_rate,
                    bandwidth: u.fixed_bandwidth,
                })
                .collect(),
            bandwidth_budget: s.bandwidth_budget,
            power_budget: s.power_budget,
            amp_efficiency: s.power_model.amp_efficiency,
            circuit_power: s.power_model.circuit_power,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("scenario serializes");
        text.push('\n');
        text
    }
}

/// Load a scenario file, returning the parsed scenario and the digest of the
/// raw bytes.
pub fn load(path: &Path) -> Result<(Scenario, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError {
        code: 1,
        message: format!("cannot read scenario {}: {e}", path.display()),
    })?;
    let parsed: ScenarioFile = serde_json::from_slice(&bytes).map_err(|e| CliError {
        code: 1,
        message: format!("cannot parse scenario {}: {e}", path.display()),
    })?;
    Ok((parsed.to_scenario(), digest(&bytes)))
}

/// FNV-1a 64-bit content digest, hex-encoded.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("fnv1a64:{h:016x}")
}
