//! Robot configuration file: one TOML document per robot.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gait::{GaitEngine, GaitError, ServoSchedule};
use crate::geometry::{BellowsUnit, GeometryError, SegmentGeometry, SizeClass};
use crate::locomotion::{self, Calibration, CalibrationTargets, LocomotionError, PlannerOptions};
use crate::transmission::{BeltCoupling, ClosedSystem, Group, InputUnit, LegId, TransmissionError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("leg structure: {0}")]
    Legs(String),
    #[error("invalid value at `{path}`: {message}")]
    Value { path: String, message: String },
}

impl ConfigError {
    fn value(path: impl Into<String>, message: impl std::fmt::Display) -> Self {
        ConfigError::Value {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub name: String,
    pub body_length_cm: f64,
    pub body_width_cm: f64,
    pub body_height_cm: f64,
    pub mass_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegConfig {
    pub id: LegId,
    pub size_class: SizeClass,
    pub r_mm: f64,
    pub beta: f64,
    pub depth_mm: f64,
    pub n_segments: u32,
    pub v_flat_ml: f64,
}

/// Twist law of one input bellows. Its rest volume is not configured: it
/// holds whatever gas the flat outputs do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub alpha_max_rad: f64,
    pub ribs: u32,
    pub squeeze_exponent: f64,
    pub squeeze_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub v_total_ml: f64,
    pub input: InputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Systems {
    pub a: SystemConfig,
    pub b: SystemConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitConfig {
    /// Large-leg touchdown bend as a fraction of the bend at full twist.
    pub large_contact_fraction: f64,
    pub small_contact_fraction: f64,
    /// Period of one full servo turn for the `cycle` schedule.
    pub cycle_period_s: f64,
    pub dt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub rho_min_per_mm: f64,
    pub rho_max_per_mm: f64,
    pub rho_points: u32,
    pub twist_points: u32,
    pub twist_volumes_ml: Vec<f64>,
}

/// Waypoint geometry of the scripted demonstrations. These set the scale of
/// the S and O paths and are tuned, not measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub walk_cycles: u32,
    pub turn_left_cycles: u32,
    pub turn_right_cycles: u32,
    pub heading_tolerance_rad: f64,
    pub capture_radius_cm: f64,
    pub o_radius_cm: f64,
    pub o_waypoints: u32,
    pub s_amplitude_cm: f64,
    pub s_length_cm: f64,
    pub s_waypoints: u32,
    pub dt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub metadata: Metadata,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub belt: BeltCoupling,
    pub systems: Systems,
    pub legs: Vec<LegConfig>,
    pub gait: GaitConfig,
    pub calibration: CalibrationTargets,
    pub paths: PathConfig,
    pub sweep: SweepConfig,
}

pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/robot.toml");

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig::from_toml_str(DEFAULT_CONFIG).expect("bundled config is valid")
    }
}

fn check_positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::value(
            path,
            format!("must be positive, got {v}"),
        ))
    }
}

impl RobotConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Schema {
            path: String::new(),
            message: e.to_string(),
        })?;
        let cfg: RobotConfig =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
                path: e.path().to_string(),
                message: e.inner().message().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_legs()?;
        for (name, sys) in [("a", &self.systems.a), ("b", &self.systems.b)] {
            check_positive(&format!("systems.{name}.v_total_ml"), sys.v_total_ml)?;
            self.system(if name == "a" { Group::A } else { Group::B })
                .map_err(|e| ConfigError::value(format!("systems.{name}"), e))?;
        }
        if !(self.belt.gear_ratio.is_finite() && self.belt.gear_ratio > 0.0) {
            return Err(ConfigError::value("belt.gear_ratio", "must be positive"));
        }
        check_positive("gait.cycle_period_s", self.gait.cycle_period_s)?;
        check_positive("gait.dt_s", self.gait.dt_s)?;
        self.gait_engine()
            .map_err(|e| ConfigError::value("gait", e))?;
        self.calibrate().map_err(|e| match e {
            LocomotionError::Target { field, value } => ConfigError::value(
                format!("calibration.{field}"),
                format!("must be positive, got {value}"),
            ),
            other => ConfigError::value("calibration", other),
        })?;
        let p = &self.paths;
        for (path, v) in [
            ("paths.heading_tolerance_rad", p.heading_tolerance_rad),
            ("paths.capture_radius_cm", p.capture_radius_cm),
            ("paths.o_radius_cm", p.o_radius_cm),
            ("paths.s_amplitude_cm", p.s_amplitude_cm),
            ("paths.s_length_cm", p.s_length_cm),
            ("paths.dt_s", p.dt_s),
        ] {
            check_positive(path, v)?;
        }
        if p.o_waypoints < 3 {
            return Err(ConfigError::value("paths.o_waypoints", "need at least 3"));
        }
        if p.s_waypoints < 2 {
            return Err(ConfigError::value("paths.s_waypoints", "need at least 2"));
        }
        let s = &self.sweep;
        if !(s.rho_min_per_mm.is_finite()
            && s.rho_min_per_mm >= 0.0
            && s.rho_max_per_mm >= s.rho_min_per_mm)
        {
            return Err(ConfigError::value(
                "sweep",
                "need 0 <= rho_min_per_mm <= rho_max_per_mm",
            ));
        }
        if s.rho_points == 0 || s.twist_points == 0 {
            return Err(ConfigError::value(
                "sweep",
                "point counts must be at least 1",
            ));
        }
        for (i, v) in s.twist_volumes_ml.iter().enumerate() {
            check_positive(&format!("sweep.twist_volumes_ml[{i}]"), *v)?;
        }
        Ok(())
    }

    fn validate_legs(&self) -> Result<(), ConfigError> {
        if self.legs.len() != 10 {
            return Err(ConfigError::Legs(format!(
                "expected 10 legs (3 large + 2 small per group), found {}",
                self.legs.len()
            )));
        }
        let mut seen = BTreeMap::new();
        for (i, leg) in self.legs.iter().enumerate() {
            if seen.insert(leg.id, i).is_some() {
                return Err(ConfigError::Legs(format!("leg {} listed twice", leg.id)));
            }
            if leg.size_class != leg.id.size_class() {
                return Err(ConfigError::Legs(format!(
                    "leg {} must be {:?}, configured as {:?}",
                    leg.id,
                    leg.id.size_class(),
                    leg.size_class
                )));
            }
            self.unit(leg)
                .map_err(|e| ConfigError::value(format!("legs[{i}]"), e))?;
        }
        let min_large = self
            .legs
            .iter()
            .filter(|l| l.size_class == SizeClass::Large)
            .map(|l| l.r_mm)
            .fold(f64::INFINITY, f64::min);
        let max_small = self
            .legs
            .iter()
            .filter(|l| l.size_class == SizeClass::Small)
            .map(|l| l.r_mm)
            .fold(0.0, f64::max);
        if min_large <= max_small {
            return Err(ConfigError::Legs(format!(
                "every large leg radius must exceed every small one ({min_large} mm <= {max_small} mm)"
            )));
        }
        Ok(())
    }

    fn unit(&self, leg: &LegConfig) -> Result<BellowsUnit, GeometryError> {
        BellowsUnit::new(
            leg.id.name(),
            leg.size_class,
            SegmentGeometry::new(leg.r_mm, leg.beta, leg.depth_mm)?,
            leg.n_segments,
            leg.v_flat_ml,
        )
    }

    pub fn leg(&self, id: LegId) -> Option<&LegConfig> {
        self.legs.iter().find(|l| l.id == id)
    }

    /// Output units of a group in leg order.
    pub fn outputs(&self, group: Group) -> Result<Vec<BellowsUnit>, GeometryError> {
        LegId::ALL
            .iter()
            .filter(|l| l.group() == group)
            .map(|&id| {
                let leg = self.leg(id).ok_or(GeometryError::NoSegments)?;
                self.unit(leg)
            })
            .collect()
    }

    fn system_config(&self, group: Group) -> &SystemConfig {
        match group {
            Group::A => &self.systems.a,
            Group::B => &self.systems.b,
        }
    }

    pub fn input(&self, group: Group) -> InputUnit {
        let c = &self.system_config(group).input;
        InputUnit {
            v_rest_ml: 0.0,
            alpha_max_rad: c.alpha_max_rad,
            ribs: c.ribs,
            squeeze_exponent: c.squeeze_exponent,
            squeeze_gain: c.squeeze_gain,
        }
    }

    pub fn system(&self, group: Group) -> Result<ClosedSystem, TransmissionError> {
        self.system_with_volume(group, self.system_config(group).v_total_ml)
    }

    pub fn system_with_volume(
        &self,
        group: Group,
        v_total_ml: f64,
    ) -> Result<ClosedSystem, TransmissionError> {
        ClosedSystem::assembled(self.input(group), self.outputs(group)?, v_total_ml)
    }

    pub fn gait_engine(&self) -> Result<GaitEngine, GaitError> {
        GaitEngine::new(
            self.belt,
            self.system(Group::A)?,
            self.system(Group::B)?,
            self.gait.large_contact_fraction,
            self.gait.small_contact_fraction,
        )
    }

    pub fn calibrate(&self) -> Result<Calibration, LocomotionError> {
        locomotion::calibrate(&self.calibration)
    }

    pub fn planner_options(&self) -> PlannerOptions {
        PlannerOptions {
            heading_tolerance_rad: self.paths.heading_tolerance_rad,
            capture_radius_cm: self.paths.capture_radius_cm,
            ..PlannerOptions::default()
        }
    }

    pub fn cycle_schedule(&self, cycles: u32) -> ServoSchedule {
        ServoSchedule::full_cycle(cycles, self.gait.cycle_period_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_valid() {
        let cfg = RobotConfig::default();
        assert_eq!(cfg.legs.len(), 10);
        assert_eq!(cfg.systems.a.v_total_ml, 600.0);
        assert_eq!(cfg.systems.b.v_total_ml, 600.0);
        assert_eq!(cfg.hash(), RobotConfig::default().hash());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RobotConfig::default();
        let again = RobotConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_missing_leg() {
        let mut cfg = RobotConfig::default();
        cfg.legs.pop();
        assert!(matches!(cfg.validate(), Err(ConfigError::Legs(_))));
    }

    #[test]
    fn rejects_wrong_size_class() {
        let mut cfg = RobotConfig::default();
        cfg.legs[0].size_class = SizeClass::Small;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("A1"), "{err}");
    }

    #[test]
    fn rejects_small_leg_larger_than_large() {
        let mut cfg = RobotConfig::default();
        let small = cfg
            .legs
            .iter_mut()
            .find(|l| l.id == LegId::SmallB1)
            .unwrap();
        small.r_mm = 40.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::Legs(_))));
    }

    #[test]
    fn schema_errors_carry_field_path() {
        let text = DEFAULT_CONFIG.replace("walk_speed_cm_s = 1.75\n", "");
        match RobotConfig::from_toml_str(&text) {
            Err(ConfigError::Schema { path, message }) => {
                assert_eq!(path, "calibration");
                assert!(message.contains("walk_speed_cm_s"), "{message}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
        let text = DEFAULT_CONFIG.replace("ribs = 6", "ribs = \"six\"");
        match RobotConfig::from_toml_str(&text) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "systems.a.input.ribs"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        let text = DEFAULT_CONFIG.replace("left_period_s = 4.0", "left_period_s = -4.0");
        let err = RobotConfig::from_toml_str(&text).unwrap_err();
        assert!(
            err.to_string().contains("calibration.left_period_s"),
            "{err}"
        );
    }
}
