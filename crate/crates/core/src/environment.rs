//! Virtual wall and the scripted operator that closes the loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Force, Position, Velocity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallMode {
    Passive,
    /// Damping sign inverted: the wall injects energy.
    Active,
}

/// Penalty wall occupying `z < plane_z`, pushing along `+z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallParams {
    /// N/m
    pub stiffness: f64,
    /// N·s/m, always given positive; the mode decides its sign.
    pub damping: f64,
    pub mode: WallMode,
    /// Height of the wall surface (m).
    pub plane_z: f64,
}

impl Default for WallParams {
    fn default() -> Self {
        Self { stiffness: 20_000.0, damping: 130.0, mode: WallMode::Active, plane_z: -0.3 }
    }
}

impl WallParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness > 0.0 && self.stiffness.is_finite()) {
            return Err(Error::config("wall stiffness must be positive"));
        }
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return Err(Error::config("wall damping must be positive"));
        }
        if !self.plane_z.is_finite() {
            return Err(Error::config("wall plane height must be finite"));
        }
        Ok(())
    }

    /// Penetration depth `plane_z − z`, positive inside the wall.
    pub fn penetration(&self, x: &Position) -> f64 {
        self.plane_z - x[2]
    }

    fn damping_sign(&self) -> f64 {
        match self.mode {
            WallMode::Passive => 1.0,
            WallMode::Active => -1.0,
        }
    }
}

/// Force the wall applies to the device: `f_z = k·δ − s·b·v_z` inside the
/// wall, zero outside. The passive wall never pulls (`f_z ≥ 0`); the active
/// one is left unclamped.
pub fn wall_force(x: &Position, v: &Velocity, wall: &WallParams) -> Force {
    let depth = wall.penetration(x);
    if depth <= 0.0 {
        return Force::zeros();
    }
    let mut fz = wall.stiffness * depth - wall.damping_sign() * wall.damping * v[2];
    if wall.mode == WallMode::Passive {
        fz = fz.max(0.0);
    }
    Force::new([0.0, 0.0, fz])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub position: [f64; 3],
}

/// Spring-damper "hand" tracking a piecewise-linear waypoint path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorModel {
    /// N/m
    pub k_hand: f64,
    /// N·s/m
    pub b_hand: f64,
    pub waypoints: Vec<Waypoint>,
}

impl Default for OperatorModel {
    fn default() -> Self {
        Self { k_hand: 500.0, b_hand: 20.0, waypoints: vec![Waypoint { t: 0.0, position: [0.0, 0.0, -0.28] }] }
    }
}

impl OperatorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_hand >= 0.0 && self.b_hand >= 0.0 && self.k_hand.is_finite() && self.b_hand.is_finite()) {
            return Err(Error::config("operator gains must be non-negative"));
        }
        if self.waypoints.is_empty() {
            return Err(Error::config("operator needs at least one waypoint"));
        }
        if self.waypoints.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::config("waypoint times must be strictly increasing"));
        }
        if self.waypoints.iter().any(|w| !w.t.is_finite() || w.position.iter().any(|c| !c.is_finite())) {
            return Err(Error::config("waypoints must be finite"));
        }
        Ok(())
    }

    /// Desired position and velocity at `t`. Before the first and after the
    /// last waypoint the hand holds still.
    pub fn reference(&self, t: f64) -> (Position, Velocity) {
        let w = &self.waypoints;
        let idx = w.partition_point(|p| p.t <= t);
        if idx == 0 {
            return (Position::new(w[0].position), Velocity::zeros());
        }
        if idx == w.len() {
            return (Position::new(w[idx - 1].position), Velocity::zeros());
        }
        let (a, b) = (&w[idx - 1], &w[idx]);
        let span = b.t - a.t;
        let s = (t - a.t) / span;
        let pa = Position::new(a.position);
        let pb = Position::new(b.position);
        let position = pa + (pb - pa) * s;
        let velocity = ((pb - pa) * (1.0 / span)).retag();
        (position, velocity)
    }
}

/// `f_h = k_hand·(x_d − x) + b_hand·(ẋ_d − v)`.
pub fn operator_force(t: f64, x: &Position, v: &Velocity, operator: &OperatorModel) -> Force {
    let (xd, vd) = operator.reference(t);
    ((xd - *x) * operator.k_hand).retag::<crate::types::Newton>() + ((vd - *v) * operator.b_hand).retag()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passivity::{observe, port_flow};
    use crate::types::EnergyLedger;
    use proptest::prelude::*;

    fn wall(mode: WallMode) -> WallParams {
        WallParams { mode, plane_z: 0.0, ..WallParams::default() }
    }

    #[test]
    fn no_force_outside() {
        let f = wall_force(&Position::new([0.0, 0.0, 0.001]), &Velocity::new([0.0, 0.0, -1.0]), &wall(WallMode::Active));
        assert_eq!(f, Force::zeros());
    }

    #[test]
    fn static_penetration() {
        let f = wall_force(&Position::new([0.0, 0.0, -0.001]), &Velocity::zeros(), &wall(WallMode::Passive));
        assert!((f[2] - 20.0).abs() < 1e-9);
        assert_eq!((f[0], f[1]), (0.0, 0.0));
    }

    #[test]
    fn pressing_in_passive_resists_active_yields() {
        let x = Position::new([0.0, 0.0, -0.001]);
        let v = Velocity::new([0.0, 0.0, -0.05]);
        // 20 + 130 * 0.05
        assert!((wall_force(&x, &v, &wall(WallMode::Passive))[2] - 26.5).abs() < 1e-9);
        // 20 - 130 * 0.05
        assert!((wall_force(&x, &v, &wall(WallMode::Active))[2] - 13.5).abs() < 1e-9);
    }

    #[test]
    fn passive_wall_never_pulls() {
        let f = wall_force(&Position::new([0.0, 0.0, -1e-4]), &Velocity::new([0.0, 0.0, 1.0]), &wall(WallMode::Passive));
        assert_eq!(f[2], 0.0);
        let f = wall_force(&Position::new([0.0, 0.0, -1e-4]), &Velocity::new([0.0, 0.0, -1.0]), &wall(WallMode::Active));
        assert!(f[2] < 0.0);
    }

    #[test]
    fn continuous_across_surface() {
        let w = wall(WallMode::Passive);
        let v = Velocity::zeros();
        let inside = wall_force(&Position::new([0.0, 0.0, -1e-12]), &v, &w);
        assert!(inside[2] < 1e-7);
        assert_eq!(wall_force(&Position::new([0.0, 0.0, 0.0]), &v, &w)[2], 0.0);
    }

    #[test]
    fn operator_at_reference_exerts_nothing() {
        let op = OperatorModel {
            k_hand: 500.0,
            b_hand: 20.0,
            waypoints: vec![
                Waypoint { t: 0.0, position: [0.0, 0.0, 0.0] },
                Waypoint { t: 1.0, position: [0.1, 0.0, -0.1] },
            ],
        };
        let (xd, vd) = op.reference(0.5);
        assert!((xd - Position::new([0.05, 0.0, -0.05])).max_abs() < 1e-15);
        assert!((vd - Velocity::new([0.1, 0.0, -0.1])).max_abs() < 1e-15);
        assert_eq!(operator_force(0.5, &xd, &vd, &op), Force::zeros());
        let (_, hold) = op.reference(2.0);
        assert_eq!(hold, Velocity::zeros());
        let f = operator_force(2.0, &Position::new([0.1, 0.0, 0.0]), &Velocity::zeros(), &op);
        assert!((f[2] + 50.0).abs() < 1e-12);
    }

    #[test]
    fn operator_validation() {
        let mut op = OperatorModel::default();
        assert!(op.validate().is_ok());
        op.waypoints.push(Waypoint { t: 0.0, position: [0.0; 3] });
        assert!(op.validate().is_err());
        op.waypoints.pop();
        op.k_hand = -1.0;
        assert!(op.validate().is_err());
    }

    #[test]
    fn active_wall_press_and_hold_drives_observer_negative() {
        // scripted in-out dip, observer on the wall port
        let w = wall(WallMode::Active);
        let ts = 2e-4;
        let mut ledger = EnergyLedger::default();
        let mut min_obs = 0.0f64;
        for k in 0..5000 {
            let t = k as f64 * ts;
            let z = -0.002 * (std::f64::consts::PI * t).sin();
            let vz = -0.002 * std::f64::consts::PI * (std::f64::consts::PI * t).cos();
            let x = Position::new([0.0, 0.0, z]);
            let v = Velocity::new([0.0, 0.0, vz]);
            let f = wall_force(&x, &v, &w);
            ledger = observe(&ledger, &f, &port_flow(&v), ts, 0.0).unwrap();
            min_obs = min_obs.min(ledger.e_obs);
        }
        assert!(min_obs < 0.0);
        assert!(ledger.e_obs < 0.0);
    }

    proptest! {
        #[test]
        fn passive_wall_absorbs_energy(depth in 1e-4..5e-3f64, period in 0.05..2.0f64, slide in -0.2..0.2f64) {
            let w = wall(WallMode::Passive);
            let ts = 2e-4;
            let steps = (period / ts).round() as usize;
            let omega = 2.0 * std::f64::consts::PI / period;
            let mut work = 0.0;
            // starts and ends above the wall; dips in for part of the cycle
            for k in 0..=steps {
                let t = k as f64 * ts;
                let z = 0.5 * depth - depth * (1.0 - (omega * t).cos());
                let vz = -depth * omega * (omega * t).sin();
                let x = Position::new([slide * t, 0.0, z]);
                let v = Velocity::new([slide, 0.0, vz]);
                work += ts * wall_force(&x, &v, &w).dot(&v.retag());
            }
            prop_assert!(work <= 1e-6, "wall did {work} J of work on the device");
        }
    }
}
