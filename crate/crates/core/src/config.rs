//! Scenario files.
//!
//! A scenario is a single TOML document holding every simulator setting.
//! Omitted sections fall back to the defaults documented on each field.
//!
//! ```toml
//! name = "exp1"
//! strategy = "prioritized"
//! duration = 5.0
//! initial_position = [0.0, 0.0, -0.29]
//!
//! [limits]
//! tau_max = [2.0, 2.0, 2.0]
//!
//! [robot]
//! kind = "delta_like"
//! base_radius = 0.2
//! platform_radius = 0.05
//! upper_arm = 0.2
//! forearm = 0.3
//!
//! [[operator.waypoints]]
//! t = 0.0
//! position = [0.0, 0.0, -0.29]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::{OperatorModel, WallParams};
use crate::error::{Error, Result};
use crate::passivity::StrategyKind;
use crate::robot::{ActuatorLimits, RobotModel};

/// One-mass device plant seen in task space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// kg
    pub mass: f64,
    /// Viscous friction, N·s/m.
    pub damping: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self { mass: 0.5, damping: 2.0 }
    }
}

/// Parameters of the post-run settling detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsParams {
    /// Length of the trailing window (s).
    pub settle_window: f64,
    /// Standard deviation of the rendered normal force below which the contact counts as settled (N).
    pub settle_threshold: f64,
}

impl Default for MetricsParams {
    fn default() -> Self {
        Self { settle_window: 1.0, settle_threshold: 1.0 }
    }
}

fn default_name() -> String {
    "scenario".into()
}

fn default_ts() -> f64 {
    2e-4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Sampling period (s), 5 kHz by default.
    #[serde(default = "default_ts")]
    pub ts: f64,
    /// Simulated time (s).
    pub duration: f64,
    /// Seeds the operator tremor noise.
    #[serde(default)]
    pub seed: u64,
    pub strategy: StrategyKind,
    /// Device position at `t = 0`, at rest.
    pub initial_position: [f64; 3],
    /// Standard deviation of white force noise added to the operator (N).
    #[serde(default)]
    pub tremor_std: f64,
    /// Apply actuator torque limits to what the plant receives.
    #[serde(default = "default_true")]
    pub actuator_saturation: bool,
    /// Clamp the rendered force into the per-axis capacity box before the observer sees it.
    #[serde(default = "default_true")]
    pub clamp_reference: bool,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub robot: RobotModel,
    pub limits: ActuatorLimits,
    #[serde(default)]
    pub wall: WallParams,
    #[serde(default)]
    pub operator: OperatorModel,
    #[serde(default)]
    pub metrics: MetricsParams,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SimConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::config(format!("ts must be positive, got {}", self.ts)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.plant.mass > 0.0 && self.plant.mass.is_finite()) {
            return Err(Error::config("plant mass must be positive"));
        }
        if !(self.plant.damping >= 0.0 && self.plant.damping.is_finite()) {
            return Err(Error::config("plant damping must be non-negative"));
        }
        if !(self.tremor_std >= 0.0 && self.tremor_std.is_finite()) {
            return Err(Error::config("tremor_std must be non-negative"));
        }
        if !self.initial_position.iter().all(|c| c.is_finite()) {
            return Err(Error::config("initial position must be finite"));
        }
        if !(self.metrics.settle_window > 0.0 && self.metrics.settle_threshold > 0.0) {
            return Err(Error::config("settling window and threshold must be positive"));
        }
        self.robot.validate()?;
        self.limits.validate()?;
        self.wall.validate()?;
        self.operator.validate()?;
        Ok(())
    }

    /// Number of samples in a run.
    pub fn steps(&self) -> u64 {
        (self.duration / self.ts).round() as u64
    }
}
