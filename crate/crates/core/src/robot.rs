//! 3-DoF device models: kinematics, Jacobian, force capacity and actuator
//! saturation.
//!
//! Two models are available. `DeltaLike` is a rotary delta: three RRR legs
//! whose base joints are actuated, legs spaced 120° apart, end-effector
//! translating with fixed orientation. `Synthetic` is an affine map with a
//! time-scheduled Jacobian, used to script specific velocity/limit
//! anisotropies without fighting the delta geometry.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Force, JointAngles, Position, Torque};

/// Jacobians with a condition number above this are treated as singular.
pub const SINGULARITY_CONDITION: f64 = 1e6;

/// Maps joint rates to end-effector velocity, `v = J·q̇`.
pub type Jacobian = Matrix3<f64>;

pub fn condition_number(j: &Jacobian) -> f64 {
    let sv = j.singular_values();
    let (max, min) = (sv.max(), sv.min());
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_conditioning(j: &Jacobian) -> Result<()> {
    if !j.iter().all(|c| c.is_finite()) {
        return Err(Error::Kinematics("non-finite Jacobian".into()));
    }
    let condition = condition_number(j);
    if condition > SINGULARITY_CONDITION {
        return Err(Error::Singularity { condition });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaGeometry {
    /// Distance from the base centre to each actuated joint axis (m).
    pub base_radius: f64,
    /// Distance from the platform centre to each forearm attachment (m).
    pub platform_radius: f64,
    /// Actuated arm length (m).
    pub upper_arm: f64,
    /// Forearm (parallelogram) length (m).
    pub forearm: f64,
}

impl Default for DeltaGeometry {
    fn default() -> Self {
        Self { base_radius: 0.2, platform_radius: 0.05, upper_arm: 0.2, forearm: 0.3 }
    }
}

impl DeltaGeometry {
    fn validate(&self) -> Result<()> {
        let lengths = [self.base_radius, self.platform_radius, self.upper_arm, self.forearm];
        if lengths.iter().all(|l| *l > 0.0 && l.is_finite()) {
            Ok(())
        } else {
            Err(Error::config(format!("delta geometry lengths must be positive: {self:?}")))
        }
    }

    fn leg_axis(leg: usize) -> Vector3<f64> {
        let phi = 2.0 * PI * leg as f64 / 3.0;
        Vector3::new(phi.cos(), phi.sin(), 0.0)
    }

    fn elbow(&self, leg: usize, q: f64) -> Vector3<f64> {
        Self::leg_axis(leg) * (self.base_radius + self.upper_arm * q.cos())
            - Vector3::z() * (self.upper_arm * q.sin())
    }

    fn elbow_rate(&self, leg: usize, q: f64) -> Vector3<f64> {
        -Self::leg_axis(leg) * (self.upper_arm * q.sin()) - Vector3::z() * (self.upper_arm * q.cos())
    }

    /// Centre of the sphere of radius `forearm` the platform centre lies on.
    fn sphere_centre(&self, leg: usize, q: f64) -> Vector3<f64> {
        self.elbow(leg, q) - Self::leg_axis(leg) * self.platform_radius
    }

    fn forward(&self, q: &[f64; 3]) -> Result<Vector3<f64>> {
        let c: [Vector3<f64>; 3] = std::array::from_fn(|i| self.sphere_centre(i, q[i]));
        let l = self.forearm;

        let d_vec = c[1] - c[0];
        let d = d_vec.norm();
        if d < 1e-12 {
            return Err(Error::Kinematics("coincident leg spheres".into()));
        }
        let ex = d_vec / d;
        let i = ex.dot(&(c[2] - c[0]));
        let ey_raw = c[2] - c[0] - ex * i;
        let j = ey_raw.norm();
        if j < 1e-12 {
            return Err(Error::Kinematics("collinear leg spheres".into()));
        }
        let ey = ey_raw / j;
        let ez = ex.cross(&ey);

        let x = d / 2.0;
        let y = (i * i + j * j) / (2.0 * j) - (i / j) * x;
        let h2 = l * l - x * x - y * y;
        if h2 < -1e-12 {
            return Err(Error::Kinematics(format!("joint angles {q:?} are not assemblable")));
        }
        let h = h2.max(0.0).sqrt();
        let a = c[0] + ex * x + ey * y + ez * h;
        let b = c[0] + ex * x + ey * y - ez * h;
        // platform hangs below the elbows
        Ok(if a.z < b.z { a } else { b })
    }

    fn inverse(&self, x: &Vector3<f64>) -> Result<[f64; 3]> {
        let mut q = [0.0; 3];
        for (leg, angle) in q.iter_mut().enumerate() {
            let u = Self::leg_axis(leg);
            let w = Vector3::new(-u.y, u.x, 0.0);
            let a = x.dot(&u) + self.platform_radius - self.base_radius;
            let b = x.dot(&w);
            let z = x.z;
            let big_l = self.upper_arm;
            let k = self.forearm.powi(2) - a * a - b * b - z * z - big_l * big_l;
            let ca = -2.0 * a * big_l;
            let cb = 2.0 * z * big_l;
            let rho = ca.hypot(cb);
            if rho < 1e-15 || k.abs() > rho {
                return Err(Error::Kinematics(format!(
                    "position {:?} is outside the workspace",
                    [x.x, x.y, x.z]
                )));
            }
            // elbow-out branch
            let theta = cb.atan2(ca) + (k / rho).acos();
            *angle = wrap_angle(theta);
        }
        Ok(q)
    }

    fn jacobian(&self, q: &[f64; 3]) -> Result<Jacobian> {
        let x = self.forward(q)?;
        let mut constraint = Matrix3::zeros();
        let mut actuation = Matrix3::zeros();
        for leg in 0..3 {
            let s = x - self.sphere_centre(leg, q[leg]);
            constraint.set_row(leg, &s.transpose());
            actuation[(leg, leg)] = s.dot(&self.elbow_rate(leg, q[leg]));
        }
        let inv = constraint
            .try_inverse()
            .ok_or(Error::Singularity { condition: f64::INFINITY })?;
        Ok(inv * actuation)
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobianKeyframe {
    pub t: f64,
    /// Row-major 3×3 Jacobian (m/rad).
    pub jacobian: [[f64; 3]; 3],
}

/// Piecewise-linear Jacobian schedule around a reference pose:
/// `x = x_ref + J(t)·q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobianSchedule {
    pub reference_position: [f64; 3],
    pub keyframes: Vec<JacobianKeyframe>,
}

impl JacobianSchedule {
    pub fn constant(reference_position: [f64; 3], jacobian: [[f64; 3]; 3]) -> Self {
        Self { reference_position, keyframes: vec![JacobianKeyframe { t: 0.0, jacobian }] }
    }

    fn matrix(rows: &[[f64; 3]; 3]) -> Jacobian {
        Matrix3::from_fn(|r, c| rows[r][c])
    }

    /// Jacobian at time `t`, held constant outside the keyframe range.
    pub fn at(&self, t: f64) -> Jacobian {
        let frames = &self.keyframes;
        let idx = frames.partition_point(|k| k.t <= t);
        if idx == 0 {
            return Self::matrix(&frames[0].jacobian);
        }
        if idx == frames.len() {
            return Self::matrix(&frames[idx - 1].jacobian);
        }
        let (a, b) = (&frames[idx - 1], &frames[idx]);
        let s = (t - a.t) / (b.t - a.t);
        Self::matrix(&a.jacobian) * (1.0 - s) + Self::matrix(&b.jacobian) * s
    }

    fn validate(&self) -> Result<()> {
        if self.keyframes.is_empty() {
            return Err(Error::config("Jacobian schedule needs at least one keyframe"));
        }
        if self.keyframes.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::config("Jacobian keyframe times must be strictly increasing"));
        }
        if !self.reference_position.iter().all(|c| c.is_finite()) {
            return Err(Error::config("reference position must be finite"));
        }
        // sample each segment; interpolation between invertible frames can pass a singularity
        let mut times: Vec<f64> = vec![self.keyframes[0].t];
        for w in self.keyframes.windows(2) {
            times.extend((1..=16).map(|k| w[0].t + (w[1].t - w[0].t) * k as f64 / 16.0));
        }
        for t in times {
            check_conditioning(&self.at(t))
                .map_err(|e| Error::config(format!("Jacobian schedule at t = {t}: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotModel {
    DeltaLike(DeltaGeometry),
    Synthetic(JacobianSchedule),
}

impl Default for RobotModel {
    fn default() -> Self {
        RobotModel::DeltaLike(DeltaGeometry::default())
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            RobotModel::DeltaLike(g) => g.validate(),
            RobotModel::Synthetic(s) => s.validate(),
        }
    }

    /// End-effector position. `t` only matters for scheduled models.
    pub fn forward_kinematics(&self, q: &JointAngles, t: f64) -> Result<Position> {
        q.ensure_finite("joint angles")?;
        match self {
            RobotModel::DeltaLike(g) => g.forward(&q.to_array()).map(Position::from_vector),
            RobotModel::Synthetic(s) => {
                let x = Vector3::from(s.reference_position) + s.at(t) * q.as_vector();
                Ok(Position::from_vector(x))
            }
        }
    }

    pub fn inverse_kinematics(&self, x: &Position, t: f64) -> Result<JointAngles> {
        x.ensure_finite("position")?;
        match self {
            RobotModel::DeltaLike(g) => g.inverse(x.as_vector()).map(JointAngles::new),
            RobotModel::Synthetic(s) => {
                let j = s.at(t);
                check_conditioning(&j)?;
                let inv = j.try_inverse().ok_or(Error::Singularity { condition: f64::INFINITY })?;
                Ok(JointAngles::from_vector(inv * (x.as_vector() - Vector3::from(s.reference_position))))
            }
        }
    }

    /// `J(q)` with `v = J·q̇`; fails when the condition number exceeds
    /// [`SINGULARITY_CONDITION`].
    pub fn jacobian(&self, q: &JointAngles, t: f64) -> Result<Jacobian> {
        q.ensure_finite("joint angles")?;
        let j = match self {
            RobotModel::DeltaLike(g) => g.jacobian(&q.to_array())?,
            RobotModel::Synthetic(s) => s.at(t),
        };
        check_conditioning(&j)?;
        Ok(j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorLimits {
    /// Maximum torque magnitude per joint (N·m).
    pub tau_max: [f64; 3],
}

impl ActuatorLimits {
    pub fn new(tau_max: [f64; 3]) -> Result<Self> {
        let limits = Self { tau_max };
        limits.validate()?;
        Ok(limits)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_max.iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(Error::config(format!("tau_max must be positive and finite: {:?}", self.tau_max)))
        }
    }

    pub fn tau_max(&self) -> Torque {
        Torque::new(self.tau_max)
    }
}

/// Per-axis force capacity `|J⁻ᵀ·τ_max|`, taken componentwise.
pub fn f_max_from_limits(j: &Jacobian, limits: &ActuatorLimits) -> Result<Force> {
    check_conditioning(j)?;
    let inv_t = j
        .transpose()
        .try_inverse()
        .ok_or(Error::Singularity { condition: f64::INFINITY })?;
    Ok(Force::from_vector((inv_t * limits.tau_max().as_vector()).abs()))
}

/// Statics duality `τ = Jᵀ·f`.
pub fn torque_from_force(j: &Jacobian, f: &Force) -> Torque {
    Torque::from_vector(j.transpose() * f.as_vector())
}

/// Task-space force produced by joint torques, `f = J⁻ᵀ·τ`.
pub fn force_from_torque(j: &Jacobian, tau: &Torque) -> Result<Force> {
    let inv_t = j
        .transpose()
        .try_inverse()
        .ok_or(Error::Singularity { condition: f64::INFINITY })?;
    Ok(Force::from_vector(inv_t * tau.as_vector()))
}

/// Componentwise clamp to `[−τ_max_i, τ_max_i]`.
pub fn saturate_torque(tau: &Torque, limits: &ActuatorLimits) -> Torque {
    Torque::from_vector(Vector3::from_fn(|i, _| tau[i].clamp(-limits.tau_max[i], limits.tau_max[i])))
}
