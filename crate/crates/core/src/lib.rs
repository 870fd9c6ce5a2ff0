//! Time-domain passivity control for multi-DoF haptic devices.
//!
//! The crate provides the passivity observer, four passivity-controller
//! strategies (unlimited, norm-limited, direction-only and the two-level
//! prioritized allocation with per-axis limits), a brute-force allocation
//! oracle, 3-DoF device models, an active/passive virtual wall with a scripted
//! operator, and a deterministic fixed-step simulator that logs every sample.

pub mod config;
pub mod environment;
pub mod error;
pub mod metrics;
pub mod passivity;
pub mod record;
pub mod robot;
pub mod sim;
pub mod types;
pub mod validation;

pub use error::{Error, Result};
pub use passivity::{DampingDecision, PassivityController, PcInput, StrategyKind};
pub use types::{EnergyLedger, Force, JointAngles, JointRate, Position, Projector, Torque, Velocity};
