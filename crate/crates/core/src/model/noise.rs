use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DeviceProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self, delta: f64) -> f64 {
        match self {
            Sign::Plus => 1.0 + delta,
            Sign::Minus => 1.0 - delta,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Which part of the teleportation pipeline runs on the perturbed device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseScope {
    Swap,
    Teleport,
    Full,
}

impl fmt::Display for NoiseScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseScope::Swap => "swap",
            NoiseScope::Teleport => "teleport",
            NoiseScope::Full => "full",
        })
    }
}

impl FromStr for NoiseScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "swap" => Ok(NoiseScope::Swap),
            "teleport" => Ok(NoiseScope::Teleport),
            "full" => Ok(NoiseScope::Full),
            _ => Err(Error::Invalid(format!("unknown scope `{s}` (expected swap, teleport or full)"))),
        }
    }
}

/// Quasi-static multiplicative error on every exchange energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta_j: f64,
    pub sign: Sign,
    pub scope: NoiseScope,
}

impl NoiseSpec {
    pub fn new(delta_j: f64, sign: Sign, scope: NoiseScope) -> Result<Self> {
        let spec = NoiseSpec { delta_j, sign, scope };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta_j) {
            return Err(Error::Invalid(format!("delta_j {} outside [0, 1]", self.delta_j)));
        }
        Ok(())
    }
}

/// Copy of `profile` with every coupling of every mode scaled by `1 +/- delta_j`.
pub fn apply_noise(profile: &DeviceProfile, noise: &NoiseSpec) -> Result<DeviceProfile> {
    profile.validate()?;
    noise.validate()?;
    let k = noise.sign.factor(noise.delta_j);
    let mut out = profile.clone();
    for js in out.modes.values_mut() {
        for j in js.iter_mut() {
            *j *= k;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(d: f64, s: Sign) -> NoiseSpec {
        NoiseSpec::new(d, s, NoiseScope::Full).unwrap()
    }

    #[test]
    fn strong_coupling_scales_up() {
        let p = apply_noise(&DeviceProfile::reference(), &spec(0.30, Sign::Plus)).unwrap();
        assert!((p.modes["J12_on"][0] - 16.12e6).abs() < 1e-6);
    }

    #[test]
    fn idle_coupling_scales_down() {
        let p = apply_noise(&DeviceProfile::reference(), &spec(0.30, Sign::Minus)).unwrap();
        assert!((p.modes["J_off"][0] - 47.04).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_is_identity() {
        let base = DeviceProfile::reference();
        assert_eq!(apply_noise(&base, &spec(0.0, Sign::Plus)).unwrap(), base);
        assert_eq!(apply_noise(&base, &spec(0.0, Sign::Minus)).unwrap(), base);
    }

    #[test]
    fn out_of_range_delta_is_rejected() {
        assert!(NoiseSpec::new(1.5, Sign::Plus, NoiseScope::Swap).is_err());
        assert!(NoiseSpec::new(-0.1, Sign::Plus, NoiseScope::Swap).is_err());
    }

    proptest! {
        #[test]
        fn up_then_down_is_multiplicative(d in 0.0f64..1.0) {
            let base = DeviceProfile::reference();
            let p = apply_noise(&apply_noise(&base, &spec(d, Sign::Plus)).unwrap(), &spec(d, Sign::Minus)).unwrap();
            for (name, js) in &base.modes {
                for (a, b) in js.iter().zip(&p.modes[name]) {
                    prop_assert!((b - a * (1.0 - d * d)).abs() <= 1e-12 * a.max(1.0));
                }
            }
            prop_assert_eq!(&p.zeeman, &base.zeeman);
            prop_assert_eq!(p.drive_amplitude, base.drive_amplitude);
        }
    }
}
