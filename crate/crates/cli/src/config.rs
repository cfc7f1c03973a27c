//! Scenario configuration (JSON).

use std::collections::BTreeMap;
use std::path::Path;

use mono5_core::field::FixtureSpec;
use mono5_core::iteration::RecurrenceSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Profile,
    Project,
    Euler,
    Pressure,
    Iterate,
    Threshold,
}

impl OutputKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputKind::Profile => "profile",
            OutputKind::Project => "project",
            OutputKind::Euler => "euler",
            OutputKind::Pressure => "pressure",
            OutputKind::Iterate => "iterate",
            OutputKind::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    #[serde(default = "default_n_radial")]
    pub n_radial: usize,
    #[serde(default = "default_level")]
    pub level: usize,
    #[serde(default = "default_n_torus")]
    pub n_torus: usize,
    #[serde(default = "default_torus_length")]
    pub torus_length: f64,
}

fn default_n_radial() -> usize {
    32
}
fn default_level() -> usize {
    16
}
fn default_n_torus() -> usize {
    16
}
fn default_torus_length() -> f64 {
    2.0 * std::f64::consts::PI
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_radial: default_n_radial(),
            level: default_level(),
            n_torus: default_n_torus(),
            torus_length: default_torus_length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdInput {
    pub m: f64,
    #[serde(rename = "C_E", default = "default_ce")]
    pub c_e: f64,
}

fn default_ce() -> f64 {
    1.0
}

fn default_pressure() -> serde_json::Value {
    serde_json::Value::String("none".into())
}

/// Invariant keys accepted under `tolerances`. A check runs only when its
/// key is present.
pub const TOLERANCE_KEYS: [&str; 8] = [
    "identity_defect",
    "q_bound",
    "projection_residual",
    "split_identity",
    "convective",
    "pressure_equation",
    "xi_radial",
    "recurrence_bound",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub field: FixtureSpec,
    /// `"none"`, `"recover"` or a scalar fixture object.
    #[serde(default = "default_pressure")]
    pub pressure: serde_json::Value,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<OutputKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub recurrence: Option<RecurrenceSpec>,
    #[serde(default)]
    pub threshold: Option<ThresholdInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PressureSpec {
    None,
    Recover,
    Fixture(FixtureSpec),
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pressure_spec(&self) -> Result<PressureSpec, CliError> {
        match &self.pressure {
            serde_json::Value::String(s) if s == "none" => Ok(PressureSpec::None),
            serde_json::Value::String(s) if s == "recover" => Ok(PressureSpec::Recover),
            serde_json::Value::String(s) => Err(CliError::Config(format!(
                "pressure: unknown keyword `{s}`, expected `none`, `recover` or a fixture object"
            ))),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v.clone())
                .map(PressureSpec::Fixture)
                .map_err(|e| CliError::Config(format!("pressure: {e}"))),
            other => Err(CliError::Config(format!("pressure: unexpected value {other}"))),
        }
    }

    /// Scaled tolerance for `key`, if that check is enabled.
    pub fn tolerance(&self, key: &str, scale: f64) -> Option<f64> {
        self.tolerances.get(key).map(|t| t * scale)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name: `{}` is not a usable file stem", self.name));
        }
        if self.outputs.is_empty() {
            return bad("outputs: at least one report kind is required".into());
        }
        if self.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return bad("radii: every radius must be finite and positive".into());
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return bad("radii: must be strictly ascending".into());
        }
        let needs_radii = self
            .outputs
            .iter()
            .any(|o| matches!(o, OutputKind::Profile | OutputKind::Project));
        if needs_radii && self.radii.is_empty() {
            return bad("radii: profile and project outputs need at least one radius".into());
        }
        let r = &self.resolution;
        if !(4..=512).contains(&r.n_radial) {
            return bad(format!("resolution.n_radial: {} outside 4..=512", r.n_radial));
        }
        if !(2..=64).contains(&r.level) {
            return bad(format!("resolution.level: {} outside 2..=64", r.level));
        }
        if r.n_torus < 8 || r.n_torus > 32 || r.n_torus % 2 == 1 {
            return bad(format!("resolution.n_torus: {} must be even and in 8..=32", r.n_torus));
        }
        if !(r.torus_length > 0.0) {
            return bad("resolution.torus_length: must be positive".into());
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCE_KEYS.contains(&k.as_str()) {
                return bad(format!("tolerances: unknown key `{k}`"));
            }
            if !(*v >= 0.0) {
                return bad(format!("tolerances.{k}: must be nonnegative"));
            }
        }
        if self.outputs.contains(&OutputKind::Iterate) && self.recurrence.is_none() {
            return bad("recurrence: required by the iterate output".into());
        }
        if self.outputs.contains(&OutputKind::Threshold) && self.threshold.is_none() {
            return bad("threshold: required by the threshold output".into());
        }
        self.pressure_spec()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = ScenarioConfig::from_json(
            r#"{"name": "m", "field": {"fixture": "constant", "vector": [1,0,0,0,0]},
                "radii": [1.0], "outputs": ["profile"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.pressure_spec().unwrap(), PressureSpec::None);
        assert_eq!(cfg.tolerance("identity_defect", 2.0), None);
    }

    #[test]
    fn bad_keys_are_named() {
        let err = ScenarioConfig::from_json(
            r#"{"name": "m", "field": {"fixture": "nosuchfield"}, "radii": [1.0], "outputs": ["profile"]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("nosuchfield"));
        let err = ScenarioConfig::from_json(
            r#"{"name": "m", "field": {"fixture": "linear_radial"}, "radii": [1.0, 0.5], "outputs": ["profile"]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("radii"));
        let err = ScenarioConfig::from_json(
            r#"{"name": "m", "field": {"fixture": "linear_radial"}, "radii": [1.0],
                "tolerances": {"identty": 1.0}, "outputs": ["profile"]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("identty"));
    }
}
