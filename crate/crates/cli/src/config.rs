//! Flat key-value configuration for the sweep harness.
//!
//! The file format is one `key = value` pair per line, `#` comments,
//! blank lines ignored. Command-line flags override file values.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use spintrap_core::units::ConstantsOverride;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("key {key:?}: cannot parse {value:?} as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("{0}")]
    Invalid(String),
}

/// Parses the flat key-value text into a map; later keys win.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: idx + 1,
                text: raw.to_string(),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Which branches a sweep emits rows for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchSelect {
    SingularPlus,
    SingularMinus,
    Regular,
    All,
}

impl BranchSelect {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchSelect::SingularPlus => "singular+",
            BranchSelect::SingularMinus => "singular-",
            BranchSelect::Regular => "regular",
            BranchSelect::All => "all",
        }
    }
}

impl FromStr for BranchSelect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "singular+" | "singular-plus" => Ok(BranchSelect::SingularPlus),
            "singular-" | "singular-minus" => Ok(BranchSelect::SingularMinus),
            "regular" => Ok(BranchSelect::Regular),
            "all" => Ok(BranchSelect::All),
            other => Err(format!(
                "unknown branch selector {other:?} (expected singular+, singular-, regular or all)"
            )),
        }
    }
}

/// Full sweep description; mirrors the config-file keys one to one.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    /// Resonance-parameter grid (equivalently the Hz/Omega ratio grid).
    pub e0_min: f64,
    pub e0_max: f64,
    pub e0_count: usize,
    /// Fixed dimensionless wave amplitude.
    pub wave_amp: f64,
    /// Physical wavelength (cm) for unit-bearing columns.
    pub wavelength_cm: f64,
    /// Desk-scale propagation constant used when `desk_scale` is set.
    pub omega: f64,
    /// Quadrature columns are computed only at desk scale; otherwise rows
    /// carry the closed forms, flagged as such.
    pub desk_scale: bool,
    pub branch: BranchSelect,
    /// Wave phases; the first entry is the row evaluation phase.
    pub phases: Vec<f64>,
    pub quad_order: usize,
    #[serde(skip)]
    pub constants: ConstantsOverride,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            e0_min: 0.9,
            e0_max: 1.1,
            e0_count: 11,
            wave_amp: 1e-3,
            wavelength_cm: 0.3,
            omega: 1e-3,
            desk_scale: false,
            branch: BranchSelect::SingularPlus,
            phases: vec![std::f64::consts::FRAC_PI_4],
            quad_order: 48,
            constants: ConstantsOverride::default(),
        }
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: "number",
    })
}

impl SweepConfig {
    /// Applies config-file keys on top of the defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (key, value) in map {
            match key.as_str() {
                "e0_min" => cfg.e0_min = parse_num(key, value)?,
                "e0_max" => cfg.e0_max = parse_num(key, value)?,
                "e0_count" => {
                    cfg.e0_count = value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "positive integer",
                    })?
                }
                "wave_amp" | "h" => cfg.wave_amp = parse_num(key, value)?,
                "wavelength_cm" | "lambda_cm" => cfg.wavelength_cm = parse_num(key, value)?,
                "omega" => cfg.omega = parse_num(key, value)?,
                "desk_scale" => {
                    cfg.desk_scale = value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "true|false",
                    })?
                }
                "branch" => {
                    cfg.branch = value.parse().map_err(|e: String| ConfigError::Invalid(e))?
                }
                "phases" => {
                    let mut phases = Vec::new();
                    for part in value.split(',') {
                        phases.push(parse_num(key, part.trim())?);
                    }
                    cfg.phases = phases;
                }
                "quad_order" => {
                    cfg.quad_order = value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.clone(),
                        value: value.clone(),
                        expected: "positive integer",
                    })?
                }
                "hbar" => cfg.constants.hbar = Some(parse_num(key, value)?),
                "c" => cfg.constants.c = Some(parse_num(key, value)?),
                "mass" => cfg.constants.mass = Some(parse_num(key, value)?),
                // output routing keys are handled by the CLI layer
                "out" | "format" => {}
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.e0_min.is_finite() && self.e0_min > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "e0_min must be positive, got {}",
                self.e0_min
            )));
        }
        if self.e0_count == 0 {
            return Err(ConfigError::Invalid("e0_count must be at least 1".into()));
        }
        if self.e0_count > 1 && self.e0_max <= self.e0_min {
            return Err(ConfigError::Invalid(format!(
                "grid must be strictly monotonic: e0_max {} <= e0_min {}",
                self.e0_max, self.e0_min
            )));
        }
        if !(self.wave_amp.is_finite() && self.wave_amp >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "wave_amp must be non-negative, got {}",
                self.wave_amp
            )));
        }
        if self.wavelength_cm.is_nan() || self.wavelength_cm <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "wavelength_cm must be positive, got {}",
                self.wavelength_cm
            )));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.quad_order < 32 {
            return Err(ConfigError::Invalid(format!(
                "quad_order must be at least 32, got {}",
                self.quad_order
            )));
        }
        if self.phases.is_empty() || self.phases.iter().any(|p| !p.is_finite()) {
            return Err(ConfigError::Invalid(
                "phases must be non-empty finite".into(),
            ));
        }
        Ok(())
    }

    /// The strictly increasing resonance grid.
    pub fn e0_grid(&self) -> Vec<f64> {
        if self.e0_count == 1 {
            return vec![self.e0_min];
        }
        let step = (self.e0_max - self.e0_min) / (self.e0_count - 1) as f64;
        (0..self.e0_count)
            .map(|i| self.e0_min + step * i as f64)
            .collect()
    }

    /// Branch labels this config emits, fixed order.
    pub fn branch_list(&self) -> Vec<BranchSelect> {
        match self.branch {
            BranchSelect::All => vec![
                BranchSelect::SingularPlus,
                BranchSelect::SingularMinus,
                BranchSelect::Regular,
            ],
            one => vec![one],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values_with_comments() {
        let text = "# sweep setup\n e0_min = 0.8 \ne0_max=1.2\n\n quad_order = 32 # inline\n";
        let map = parse_key_values(text).unwrap();
        assert_eq!(map["e0_min"], "0.8");
        assert_eq!(map["e0_max"], "1.2");
        assert_eq!(map["quad_order"], "32");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            parse_key_values("just a line"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn builds_config_and_grid() {
        let map =
            parse_key_values("e0_min = 1.0\ne0_max = 2.0\ne0_count = 5\nbranch = all\n").unwrap();
        let cfg = SweepConfig::from_map(&map).unwrap();
        let grid = cfg.e0_grid();
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[0], 1.0);
        assert_eq!(grid[4], 2.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(cfg.branch_list().len(), 3);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let map = parse_key_values("wibble = 3").unwrap();
        assert!(matches!(
            SweepConfig::from_map(&map),
            Err(ConfigError::UnknownKey(_))
        ));
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let map = parse_key_values("e0_min = 2.0\ne0_max = 1.0\n").unwrap();
        assert!(SweepConfig::from_map(&map).is_err());
    }

    #[test]
    fn branch_selector_round_trip() {
        for s in ["singular+", "singular-", "regular", "all"] {
            let b: BranchSelect = s.parse().unwrap();
            assert_eq!(b.as_str(), s);
        }
        assert!("sideways".parse::<BranchSelect>().is_err());
    }
}
