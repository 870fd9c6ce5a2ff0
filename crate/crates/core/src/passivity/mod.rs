//! Passivity observer and passivity controllers.
//!
//! All controllers share the same damping-injection form
//! `f_cmd = f̂ − α·P·v`, where `v` is the device velocity and `P` a projector
//! (identity for the scalar strategies). The observer works on the
//! environment port flow, which is the device velocity with its sign flipped
//! (see [`PORT_FLOW_SIGN`]): with that choice `f̂ᵀ·flow > 0` is energy absorbed
//! by the environment and the damping term always opposes device motion.

mod oracle;

pub use oracle::{oracle_max_dissipation, OracleSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{make_projector, EnergyLedger, Force, Velocity};

/// Guard on `vᵀPv` in (m/s)² before dividing by it.
pub const VELOCITY_EPS: f64 = 1e-12;

/// Orthogonal-velocity components at or below this magnitude (m/s) impose no
/// per-axis damping bound.
pub const AXIS_VELOCITY_EPS: f64 = 1e-9;

/// Environment port flow = `PORT_FLOW_SIGN` × device velocity.
pub const PORT_FLOW_SIGN: f64 = -1.0;

/// Converts a device velocity into the environment port flow fed to [`observe`].
pub fn port_flow<const N: usize>(device_velocity: &Velocity<N>) -> Velocity<N> {
    *device_velocity * PORT_FLOW_SIGN
}

/// Damping force `α·P·v` expressed along the port flow, ready to be added to `f̂`.
fn damping_term<const N: usize>(alpha: f64, projected_velocity: &Velocity<N>) -> Force<N> {
    (*projected_velocity * (alpha * PORT_FLOW_SIGN)).retag()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Dissipates the whole observed deficit in one sample, no bound on α.
    Unlimited,
    /// Scalar α bounded so that `‖α v‖ ≤ ‖f_max‖`.
    NormLimited,
    /// Dissipation along the reference direction only, α unbounded.
    DirectionOnly,
    /// Reference direction first (bounded by `‖f̂‖`), remainder in the
    /// orthogonal complement bounded per axis by `f_max`.
    Prioritized,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Unlimited,
        StrategyKind::NormLimited,
        StrategyKind::DirectionOnly,
        StrategyKind::Prioritized,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Unlimited => "unlimited",
            StrategyKind::NormLimited => "norm_limited",
            StrategyKind::DirectionOnly => "direction_only",
            StrategyKind::Prioritized => "prioritized",
        }
    }

    pub fn decide<const N: usize>(&self, input: &PcInput<N>) -> DampingDecision<N> {
        match self {
            StrategyKind::Unlimited => pc_unlimited(input),
            StrategyKind::NormLimited => pc_norm_limited(input),
            StrategyKind::DirectionOnly => pc_direction_only(input),
            StrategyKind::Prioritized => pc_prioritized(input),
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown strategy `{s}`")))
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs of one controller decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcInput<const N: usize = 3> {
    /// Rendered (reference) force.
    pub f_hat: Force<N>,
    /// Device velocity.
    pub v: Velocity<N>,
    /// Per-axis force capacity, all components `≥ 0`.
    pub f_max: Force<N>,
    /// Observed energy after this sample's observer update (J).
    pub e_obs: f64,
    /// Sampling period (s).
    pub ts: f64,
}

impl<const N: usize> PcInput<N> {
    pub fn validate(&self) -> Result<()> {
        self.f_hat.ensure_finite("f_hat")?;
        self.v.ensure_finite("v")?;
        self.f_max.ensure_finite("f_max")?;
        if !self.e_obs.is_finite() {
            return Err(Error::invalid("e_obs is not finite"));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::invalid(format!("ts must be positive, got {}", self.ts)));
        }
        if self.f_max.iter().any(|c| c < 0.0) {
            return Err(Error::invalid("f_max components must be non-negative"));
        }
        Ok(())
    }

    /// Energy still to be removed this sample (`−min(e_obs, 0)`).
    pub fn demand(&self) -> f64 {
        (-self.e_obs).max(0.0)
    }
}

/// Output of one controller decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampingDecision<const N: usize = 3> {
    /// Damping along the primary channel (N·s/m).
    pub alpha: f64,
    /// Damping in the orthogonal complement (N·s/m), prioritized strategy only.
    pub alpha_o: f64,
    pub f_cmd: Force<N>,
    /// Energy removed by this decision (J).
    pub dissipated_energy: f64,
    pub alpha_saturated: bool,
    pub alpha_o_saturated: bool,
    /// The reference was outside the `f_max` box and got clamped first.
    pub reference_clamped: bool,
}

impl<const N: usize> DampingDecision<N> {
    fn passive(f_hat: Force<N>) -> Self {
        Self {
            alpha: 0.0,
            alpha_o: 0.0,
            f_cmd: f_hat,
            dissipated_energy: 0.0,
            alpha_saturated: false,
            alpha_o_saturated: false,
            reference_clamped: false,
        }
    }

    /// Dissipation vector `f_cmd − f̂` for the reference actually used.
    pub fn dissipation(&self, f_hat: &Force<N>) -> Force<N> {
        self.f_cmd - *f_hat
    }
}

/// Passivity observer update:
/// `e_obs(k) = e_obs(k−1) + ts·f̂ᵀ·flow + e_pc_prev_step`.
///
/// `flow` is the environment port flow (see [`port_flow`]) and
/// `e_pc_prev_step` the energy dissipated by the previous decision. Fields
/// other than `e_obs` are carried over.
pub fn observe<const N: usize>(
    ledger: &EnergyLedger,
    f_hat: &Force<N>,
    flow: &Velocity<N>,
    ts: f64,
    e_pc_prev_step: f64,
) -> Result<EnergyLedger> {
    f_hat.ensure_finite("f_hat")?;
    flow.ensure_finite("port flow")?;
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::invalid(format!("ts must be positive, got {ts}")));
    }
    if !e_pc_prev_step.is_finite() || !ledger.is_finite() {
        return Err(Error::invalid("non-finite energy in observer update"));
    }
    let power: f64 = f_hat.iter().zip(flow.iter()).map(|(f, v)| f * v).sum();
    Ok(EnergyLedger { e_obs: ledger.e_obs + ts * power + e_pc_prev_step, ..*ledger })
}

/// Clamps each component of `f_hat` into `[−f_max_i, f_max_i]`.
pub fn clamp_to_limits<const N: usize>(f_hat: &Force<N>, f_max: &Force<N>) -> (Force<N>, bool) {
    let mut clamped = false;
    let mut out = *f_hat.as_vector();
    for (c, &limit) in out.iter_mut().zip(f_max.as_vector().iter()) {
        if c.abs() > limit {
            *c = c.clamp(-limit, limit);
            clamped = true;
        }
    }
    (Force::from_vector(out), clamped)
}

fn feasible_reference<const N: usize>(input: &PcInput<N>) -> (Force<N>, bool) {
    let (f_hat, clamped) = clamp_to_limits(&input.f_hat, &input.f_max);
    if clamped {
        log::warn!(
            "reference {:?} exceeds force capacity {:?}; clamped to {:?}",
            input.f_hat,
            input.f_max,
            f_hat
        );
    }
    (f_hat, clamped)
}

/// Classic passivity controller: removes the whole deficit in one sample.
pub fn pc_unlimited<const N: usize>(input: &PcInput<N>) -> DampingDecision<N> {
    let vv = input.v.norm_squared();
    if input.e_obs >= 0.0 || vv <= VELOCITY_EPS {
        return DampingDecision::passive(input.f_hat);
    }
    let alpha = -input.e_obs / (input.ts * vv);
    DampingDecision {
        alpha,
        f_cmd: input.f_hat + damping_term(alpha, &input.v),
        dissipated_energy: input.ts * alpha * vv,
        ..DampingDecision::passive(input.f_hat)
    }
}

/// Norm bound `sqrt(f_maxᵀf_max / vᵀv)`; `None` when the velocity vanishes.
pub fn alpha_max_norm<const N: usize>(input: &PcInput<N>) -> Option<f64> {
    let vv = input.v.norm_squared();
    (vv > VELOCITY_EPS).then(|| (input.f_max.norm_squared() / vv).sqrt())
}

/// Scalar damping bounded so the dissipation norm never exceeds `‖f_max‖`.
pub fn pc_norm_limited<const N: usize>(input: &PcInput<N>) -> DampingDecision<N> {
    let (f_hat, reference_clamped) = feasible_reference(input);
    let vv = input.v.norm_squared();
    let passive = DampingDecision { reference_clamped, ..DampingDecision::passive(f_hat) };
    let Some(alpha_max) = alpha_max_norm(input) else {
        return passive;
    };
    if input.e_obs >= 0.0 {
        return passive;
    }
    let demand = -input.e_obs / (input.ts * vv);
    let alpha = demand.min(alpha_max);
    DampingDecision {
        alpha,
        f_cmd: f_hat + damping_term(alpha, &input.v),
        dissipated_energy: input.ts * alpha * vv,
        alpha_saturated: demand > alpha_max,
        ..passive
    }
}

/// Dissipation restricted to the reference direction without any bound on α.
/// Large deficits make the damping term overwhelm the reference and flip the
/// sign of the rendered force.
pub fn pc_direction_only<const N: usize>(input: &PcInput<N>) -> DampingDecision<N> {
    let Ok(projector) = make_projector(&input.f_hat) else {
        return DampingDecision::passive(input.f_hat);
    };
    let along = projector.quadratic_form(&input.v);
    if input.e_obs >= 0.0 || along <= VELOCITY_EPS {
        return DampingDecision::passive(input.f_hat);
    }
    let alpha = -input.e_obs / (input.ts * along);
    DampingDecision {
        alpha,
        f_cmd: input.f_hat + damping_term(alpha, &projector.apply(&input.v)),
        dissipated_energy: input.ts * alpha * along,
        ..DampingDecision::passive(input.f_hat)
    }
}

/// Largest damping along the reference direction that keeps `‖α·F·v‖ ≤ ‖f̂‖`:
/// `sqrt(f̂ᵀf̂ / vᵀFv)`. `None` when `vᵀFv ≤ VELOCITY_EPS`.
pub fn alpha_max_priority<const N: usize>(f_hat: &Force<N>, v: &Velocity<N>) -> Option<f64> {
    let projector = make_projector(f_hat).ok()?;
    let along = projector.quadratic_form(v);
    (along > VELOCITY_EPS).then(|| (f_hat.norm_squared() / along).sqrt())
}

/// Per-axis bound on the orthogonal damping: the smallest `f_max_i / |v_o,i|`
/// over axes where `v_o = (I − F)·v` is non-negligible. Returns
/// `f64::INFINITY` when no axis constrains it.
pub fn alpha_o_max<const N: usize>(f_hat: &Force<N>, v: &Velocity<N>, f_max: &Force<N>) -> f64 {
    let Ok(projector) = make_projector(f_hat) else {
        return f64::INFINITY;
    };
    let v_o = projector.complement().apply(v);
    v_o.iter()
        .zip(f_max.iter())
        .filter(|(vi, _)| vi.abs() > AXIS_VELOCITY_EPS)
        .map(|(vi, fi)| fi / vi.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Two-level prioritized dissipation.
///
/// Stage one damps along the reference direction up to
/// [`alpha_max_priority`], so the commanded force never reverses. Whatever
/// deficit remains is damped in the orthogonal complement up to
/// [`alpha_o_max`]. Anything left after both stages stays in the observer
/// and is picked up on the next sample.
pub fn pc_prioritized<const N: usize>(input: &PcInput<N>) -> DampingDecision<N> {
    let (f_hat, reference_clamped) = feasible_reference(input);
    let Ok(primary) = make_projector(&f_hat) else {
        return DampingDecision::passive(input.f_hat);
    };
    let orthogonal = primary.complement();
    let along = primary.quadratic_form(&input.v);
    let across = orthogonal.quadratic_form(&input.v);
    let ts = input.ts;

    let (alpha, alpha_saturated) = if input.e_obs < 0.0 && along > VELOCITY_EPS {
        let demand = -input.e_obs / (ts * along);
        let bound = (f_hat.norm_squared() / along).sqrt();
        (demand.min(bound), demand > bound)
    } else {
        (0.0, false)
    };

    let e_res = input.e_obs + ts * alpha * along;
    let (alpha_o, alpha_o_saturated) = if e_res < 0.0 && across > VELOCITY_EPS {
        let demand = -e_res / (ts * across);
        let bound = alpha_o_max(&f_hat, &input.v, &input.f_max);
        (demand.min(bound), demand > bound)
    } else {
        (0.0, false)
    };

    let f_cmd = f_hat
        + damping_term(alpha, &primary.apply(&input.v))
        + damping_term(alpha_o, &orthogonal.apply(&input.v));
    DampingDecision {
        alpha,
        alpha_o,
        f_cmd,
        dissipated_energy: ts * (alpha * along + alpha_o * across),
        alpha_saturated,
        alpha_o_saturated,
        reference_clamped,
    }
}

/// Observer plus one strategy, carrying the energy ledger between samples.
#[derive(Clone, Debug)]
pub struct PassivityController<const N: usize = 3> {
    strategy: StrategyKind,
    ledger: EnergyLedger,
    last_dissipated: f64,
}

impl<const N: usize> PassivityController<N> {
    pub fn new(strategy: StrategyKind) -> Self {
        Self { strategy, ledger: EnergyLedger::default(), last_dissipated: 0.0 }
    }

    pub fn strategy(&self) -> StrategyKind {
        self.strategy
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    /// Observes one sample and decides the damping for it.
    pub fn update(
        &mut self,
        f_hat: &Force<N>,
        device_velocity: &Velocity<N>,
        f_max: &Force<N>,
        ts: f64,
    ) -> Result<DampingDecision<N>> {
        let observed = observe(&self.ledger, f_hat, &port_flow(device_velocity), ts, self.last_dissipated)?;
        let input = PcInput { f_hat: *f_hat, v: *device_velocity, f_max: *f_max, e_obs: observed.e_obs, ts };
        input.validate()?;
        let decision = self.strategy.decide(&input);
        self.ledger = observed.settle(decision.dissipated_energy);
        self.last_dissipated = decision.dissipated_energy;
        Ok(decision)
    }
}

/// Pure form of one controller step: `(input, ledger) → (decision, ledger')`.
/// `input.e_obs` must already hold the observed energy for this sample.
pub fn apply<const N: usize>(
    strategy: StrategyKind,
    input: &PcInput<N>,
    ledger: &EnergyLedger,
) -> Result<(DampingDecision<N>, EnergyLedger)> {
    input.validate()?;
    let decision = strategy.decide(input);
    let ledger = EnergyLedger { e_obs: input.e_obs, ..*ledger }.settle(decision.dissipated_energy);
    Ok((decision, ledger))
}
