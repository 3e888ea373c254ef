use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

/// Name of an exchange configuration of the array (a key of [`DeviceProfile::modes`]).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExchangeModeName(pub String);

impl ExchangeModeName {
    pub fn new(name: impl Into<String>) -> Self {
        ExchangeModeName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ExchangeModeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ExchangeModeName {
    fn from(s: &str) -> Self {
        ExchangeModeName(s.to_string())
    }
}

/// Static description of a dot array. All frequencies are stored in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub n_dots: usize,
    #[serde(rename = "zeeman_hz")]
    pub zeeman: Vec<f64>,
    #[serde(rename = "drive_amplitude_hz")]
    pub drive_amplitude: f64,
    /// Calibrated R_Y(pi/2) pulse length reported for the device, if any.
    #[serde(rename = "ry_half_pi_s", default, skip_serializing_if = "Option::is_none")]
    pub ry_half_pi: Option<f64>,
    /// Mode name to adjacent-pair exchange energies `J_{i,i+1}`.
    pub modes: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

const REFERENCE_PROFILE: &str = include_str!("../../../../profiles/paper_fqd.json");

fn field_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Profile {
        path: path.into(),
        message: message.into(),
    }
}

fn take<T: serde::de::DeserializeOwned>(obj: &mut Map<String, Value>, key: &str) -> Result<T> {
    let v = obj.remove(key).ok_or_else(|| field_err(key, "missing field"))?;
    serde_json::from_value(v).map_err(|e| field_err(key, e.to_string()))
}

impl DeviceProfile {
    /// The five-dot reference device shipped in `profiles/paper_fqd.json`.
    pub fn reference() -> DeviceProfile {
        load_profile(REFERENCE_PROFILE).expect("bundled profile is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    /// Exchange energies of a mode.
    pub fn j(&self, mode: &ExchangeModeName) -> Result<&[f64]> {
        self.modes
            .get(mode.as_str())
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownMode(mode.0.clone()))
    }

    pub fn n_pairs(&self) -> usize {
        self.n_dots.saturating_sub(1)
    }

    /// The idle configuration: the mode whose largest coupling is smallest.
    pub fn weak_mode(&self) -> Result<ExchangeModeName> {
        self.modes
            .iter()
            .map(|(k, v)| (k, v.iter().cloned().fold(0.0, f64::max)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)))
            .map(|(k, _)| ExchangeModeName(k.clone()))
            .ok_or_else(|| field_err("modes", "no exchange modes defined"))
    }

    /// The mode that switches on exchange for `pair` (dots `pair`, `pair + 1`):
    /// the non-idle mode in which that pair carries the largest coupling.
    pub fn strong_mode(&self, pair: usize) -> Result<ExchangeModeName> {
        if pair >= self.n_pairs() {
            return Err(Error::Gate(format!("pair index {pair} out of range")));
        }
        let weak = self.weak_mode()?;
        self.modes
            .iter()
            .filter(|(k, v)| {
                k.as_str() != weak.as_str()
                    && v[pair] > 0.0
                    && v.iter().all(|&x| x <= v[pair])
            })
            .max_by(|a, b| a.1[pair].total_cmp(&b.1[pair]).then_with(|| b.0.cmp(a.0)))
            .map(|(k, _)| ExchangeModeName(k.clone()))
            .ok_or_else(|| Error::UnknownMode(format!("no strong mode for pair {}-{}", pair + 1, pair + 2)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_dots == 0 {
            return Err(field_err("n_dots", "must be at least 1"));
        }
        if self.zeeman.len() != self.n_dots {
            return Err(field_err(
                "zeeman_hz",
                format!("expected {} entries, got {}", self.n_dots, self.zeeman.len()),
            ));
        }
        for (i, f) in self.zeeman.iter().enumerate() {
            if !f.is_finite() || *f <= 0.0 {
                return Err(field_err(format!("zeeman_hz[{i}]"), "must be positive and finite"));
            }
            if i > 0 && *f <= self.zeeman[i - 1] {
                return Err(field_err(format!("zeeman_hz[{i}]"), "must be strictly increasing"));
            }
        }
        if !self.drive_amplitude.is_finite() || self.drive_amplitude <= 0.0 {
            return Err(field_err("drive_amplitude_hz", "must be positive and finite"));
        }
        if let Some(t) = self.ry_half_pi {
            if !t.is_finite() || t <= 0.0 {
                return Err(field_err("ry_half_pi_s", "must be positive and finite"));
            }
        }
        if self.modes.is_empty() {
            return Err(field_err("modes", "at least one exchange mode is required"));
        }
        for (name, js) in &self.modes {
            if js.len() != self.n_pairs() {
                return Err(field_err(
                    format!("modes.{name}"),
                    format!("mode length mismatch: expected {} entries, got {}", self.n_pairs(), js.len()),
                ));
            }
            for (i, j) in js.iter().enumerate() {
                if !j.is_finite() || *j < 0.0 {
                    return Err(field_err(format!("modes.{name}[{i}]"), "must be non-negative and finite"));
                }
            }
        }
        Ok(())
    }

    /// Non-fatal findings, e.g. a drive too strong for spectral selectivity.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let min_gap = self
            .zeeman
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if self.drive_amplitude >= min_gap {
            out.push(format!(
                "drive amplitude {:.3e} Hz is not below the smallest Zeeman spacing {:.3e} Hz; addressing is not selective",
                self.drive_amplitude, min_gap
            ));
        }
        out
    }
}

/// Parses and validates a profile document.
pub fn load_profile(source: &str) -> Result<DeviceProfile> {
    let value: Value = serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(field_err("$", "expected a JSON object"));
    };
    let profile = DeviceProfile {
        n_dots: take(&mut obj, "n_dots")?,
        zeeman: take(&mut obj, "zeeman_hz")?,
        drive_amplitude: take(&mut obj, "drive_amplitude_hz")?,
        modes: take(&mut obj, "modes")?,
        ry_half_pi: match obj.remove("ry_half_pi_s") {
            None | Some(Value::Null) => None,
            Some(v) => Some(serde_json::from_value(v).map_err(|e| field_err("ry_half_pi_s", e.to_string()))?),
        },
        metadata: match obj.remove("metadata") {
            None => BTreeMap::new(),
            Some(v) => serde_json::from_value(v).map_err(|e| field_err("metadata", e.to_string()))?,
        },
    };
    if let Some(key) = obj.keys().next() {
        return Err(field_err(key.as_str(), "unknown field"));
    }
    profile.validate()?;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_profile_zeeman_values() {
        let p = DeviceProfile::reference();
        assert_eq!(p.zeeman, vec![18.33e9, 18.40e9, 18.47e9, 18.54e9, 18.61e9]);
        assert_eq!(p.n_dots, 5);
        assert_eq!(p.drive_amplitude, 5e6);
    }

    #[test]
    fn reference_profile_idle_couplings() {
        let p = DeviceProfile::reference();
        assert_eq!(p.j(&"J_off".into()).unwrap(), &[6.72e1, 2.75e3, 2.80e3, 1.77e2]);
        assert_eq!(p.weak_mode().unwrap().as_str(), "J_off");
    }

    #[test]
    fn strong_modes_resolve_by_pair() {
        let p = DeviceProfile::reference();
        let names: Vec<_> = (0..4).map(|i| p.strong_mode(i).unwrap().0).collect();
        assert_eq!(names, ["J12_on", "J23_on", "J34_on", "J45_on"]);
        assert!(p.strong_mode(4).is_err());
    }

    #[test]
    fn short_mode_is_rejected_with_path() {
        let doc = r#"{"n_dots": 5, "zeeman_hz": [1e9, 2e9, 3e9, 4e9, 5e9],
            "drive_amplitude_hz": 1e6, "modes": {"J_off": [1.0, 2.0, 3.0]}}"#;
        match load_profile(doc) {
            Err(Error::Profile { path, message }) => {
                assert_eq!(path, "modes.J_off");
                assert!(message.contains("mode length mismatch"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_its_path() {
        let doc = r#"{"n_dots": 1, "drive_amplitude_hz": 1e6, "modes": {"off": []}}"#;
        match load_profile(doc) {
            Err(Error::Profile { path, .. }) => assert_eq!(path, "zeeman_hz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decreasing_zeeman_is_rejected() {
        let doc = r#"{"n_dots": 2, "zeeman_hz": [2e9, 1e9], "drive_amplitude_hz": 1e6, "modes": {"off": [0.0]}}"#;
        assert!(matches!(load_profile(doc), Err(Error::Profile { .. })));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(load_profile("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn strong_drive_only_warns() {
        let doc = r#"{"n_dots": 2, "zeeman_hz": [1e9, 1.001e9], "drive_amplitude_hz": 5e6, "modes": {"off": [0.0]}}"#;
        let p = load_profile(doc).unwrap();
        assert_eq!(p.warnings().len(), 1);
        assert!(DeviceProfile::reference().warnings().is_empty());
    }

    #[test]
    fn serialization_round_trips() {
        let p = DeviceProfile::reference();
        assert_eq!(load_profile(&p.to_json()).unwrap(), p);
    }
}
