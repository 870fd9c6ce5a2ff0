//! Fixed-step closed-loop simulation of a device touching the virtual wall.
//!
//! Each sample: read the state, render the wall, observe, decide, map to
//! joint torques, saturate, and integrate a one-mass task-space plant with
//! semi-implicit Euler.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::SimConfig;
use crate::environment::{operator_force, wall_force};
use crate::error::{Error, Result};
use crate::passivity::{clamp_to_limits, PassivityController};
use crate::robot::{f_max_from_limits, force_from_torque, saturate_torque, torque_from_force};
use crate::types::{Force, JointAngles, JointRate, Position, Torque, Velocity};

/// Relative slack before a commanded torque counts as exceeding its limit.
pub const JOINT_TOLERANCE: f64 = 1e-9;

/// Everything recorded for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleLog {
    pub t: f64,
    pub q: JointAngles,
    pub qd: JointRate,
    pub x: Position,
    pub v: Velocity,
    /// Rendered wall force after the optional capacity clamp.
    pub f_hat: Force,
    pub f_cmd: Force,
    pub tau_cmd: Torque,
    pub tau_applied: Torque,
    pub alpha: f64,
    pub alpha_o: f64,
    pub e_obs: f64,
    pub e_pc: f64,
    pub dissipated: f64,
    pub sat_alpha: bool,
    pub sat_alpha_o: bool,
    pub joint_viol: bool,
    pub f_max: Force,
    pub reference_clamped: bool,
}

/// Plant state between samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimState {
    pub step: u64,
    pub x: Position,
    pub v: Velocity,
}

pub struct Simulator {
    config: SimConfig,
    state: SimState,
    controller: PassivityController,
    rng: ChaCha8Rng,
    tremor: Option<Normal<f64>>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let tremor = if config.tremor_std > 0.0 {
            Some(Normal::new(0.0, config.tremor_std).map_err(|e| Error::config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            state: SimState { step: 0, x: Position::new(config.initial_position), v: Velocity::zeros() },
            controller: PassivityController::new(config.strategy),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            tremor,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Advances one sample. Failures are wrapped with the step and time.
    pub fn step(&mut self) -> Result<SampleLog> {
        let step = self.state.step;
        let t = step as f64 * self.config.ts;
        self.advance(t).map_err(|e| Error::Aborted { step, t, source: Box::new(e) })
    }

    fn advance(&mut self, t: f64) -> Result<SampleLog> {
        let cfg = &self.config;
        let SimState { x, v, .. } = self.state;

        let q = cfg.robot.inverse_kinematics(&x, t)?;
        let j = cfg.robot.jacobian(&q, t)?;
        let qd = JointRate::from_vector(
            j.try_inverse().ok_or(Error::Singularity { condition: f64::INFINITY })? * v.as_vector(),
        );
        let f_max = f_max_from_limits(&j, &cfg.limits)?;

        let rendered = wall_force(&x, &v, &cfg.wall);
        let (f_hat, reference_clamped) =
            if cfg.clamp_reference { clamp_to_limits(&rendered, &f_max) } else { (rendered, false) };

        let decision = self.controller.update(&f_hat, &v, &f_max, cfg.ts)?;
        let ledger = *self.controller.ledger();

        let tau_cmd = torque_from_force(&j, &decision.f_cmd);
        let tau_max = cfg.limits.tau_max;
        let joint_viol = (0..3).any(|i| tau_cmd[i].abs() > tau_max[i] * (1.0 + JOINT_TOLERANCE));
        let tau_applied = if cfg.actuator_saturation { saturate_torque(&tau_cmd, &cfg.limits) } else { tau_cmd };
        let f_applied = force_from_torque(&j, &tau_applied)?;

        let mut f_op = operator_force(t, &x, &v, &cfg.operator);
        if let Some(noise) = &self.tremor {
            let rng = &mut self.rng;
            f_op = f_op + Force::new([noise.sample(rng), noise.sample(rng), noise.sample(rng)]);
        }

        let accel = (f_op + f_applied - v.retag() * cfg.plant.damping) * (1.0 / cfg.plant.mass);
        let v_next = v + accel.retag() * cfg.ts;
        let x_next = x + v_next.retag() * cfg.ts;
        v_next.ensure_finite("velocity")?;
        x_next.ensure_finite("position")?;

        self.state = SimState { step: self.state.step + 1, x: x_next, v: v_next };

        Ok(SampleLog {
            t,
            q,
            qd,
            x,
            v,
            f_hat,
            f_cmd: decision.f_cmd,
            tau_cmd,
            tau_applied,
            alpha: decision.alpha,
            alpha_o: decision.alpha_o,
            e_obs: ledger.e_obs,
            e_pc: ledger.e_pc,
            dissipated: decision.dissipated_energy,
            sat_alpha: decision.alpha_saturated,
            sat_alpha_o: decision.alpha_o_saturated,
            joint_viol,
            f_max,
            reference_clamped,
        })
    }
}

/// Runs a whole scenario, `duration / ts` samples.
pub fn run(config: &SimConfig) -> Result<Vec<SampleLog>> {
    let steps = config.steps();
    let mut sim = Simulator::new(config.clone())?;
    (0..steps).map(|_| sim.step()).collect()
}
