//! Self-check suites: projector properties on random directions and the
//! prioritized controller against the brute-force oracle on random inputs.
//!
//! Both suites can run against a deliberately broken implementation to show
//! that they catch the corresponding fault.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::passivity::{oracle_max_dissipation, pc_prioritized, DampingDecision, PcInput};
use crate::types::{make_projector, Force, Position, Projector, Velocity};

pub const PROJECTOR_TOL: f64 = 1e-12;
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Relative gap allowed between closed form and oracle dissipation.
pub const ORACLE_REL_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectedBug {
    #[default]
    None,
    /// Orthogonal damping bounded by `‖f_max‖ / ‖v_o‖` instead of per axis.
    PerAxisBound,
    /// Projector normalized by `‖d‖` instead of `‖d‖²`.
    ProjectorIdempotence,
}

impl std::str::FromStr for InjectedBug {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(InjectedBug::None),
            "per-axis-bound" => Ok(InjectedBug::PerAxisBound),
            "projector-idempotence" => Ok(InjectedBug::ProjectorIdempotence),
            other => Err(format!("unknown bug `{other}` (per-axis-bound, projector-idempotence)")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Worst violation seen, in the suite's own measure.
    pub worst: f64,
    pub first_failure: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, ok: bool, worst: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(worst);
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }
}

impl std::fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {}/{} cases passed, worst {:.3e}, {:.3} s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases - self.failures,
            self.cases,
            self.worst,
            self.elapsed.as_secs_f64()
        )?;
        if let Some(msg) = &self.first_failure {
            write!(f, "\n  first failure: {msg}")?;
        }
        Ok(())
    }
}

fn random_direction(rng: &mut impl Rng) -> Position {
    let scale = 10f64.powf(rng.random_range(-5.0..3.0));
    Position::new(std::array::from_fn(|_| scale * rng.random_range(-1.0..1.0)))
}

fn broken_projector(direction: &Position) -> Projector {
    let d = direction.as_vector();
    Projector::from_matrix_unchecked((d * d.transpose()) / d.norm())
}

/// Symmetry, idempotence and complement orthogonality on `cases` random
/// directions spanning eight orders of magnitude.
pub fn projector_suite(cases: usize, seed: u64, bug: InjectedBug) -> SuiteOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome {
        name: "projector properties",
        cases: 0,
        failures: 0,
        worst: 0.0,
        first_failure: None,
        elapsed: Duration::ZERO,
    };
    for _ in 0..cases {
        let d = random_direction(&mut rng);
        let p = match bug {
            InjectedBug::ProjectorIdempotence => broken_projector(&d),
            _ => make_projector(&d).expect("finite direction"),
        };
        let fixed = (p.apply(&d) - d).max_abs() / d.max_abs();
        let err = p.max_property_error().max(fixed);
        out.record(err <= PROJECTOR_TOL, err, || format!("direction {:?}: error {err:.3e}", d.to_array()));
    }
    out.elapsed = start.elapsed();
    out
}

/// Random controller input. Roughly one case in ten has a positive energy,
/// a zero reference, or a velocity parallel to the reference.
pub fn random_pc_input(rng: &mut impl Rng) -> PcInput {
    let f_max: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..40.0));
    let mut f_hat: [f64; 3] = std::array::from_fn(|i| f_max[i] * rng.random_range(-1.0..1.0));
    let mut v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.3..0.3));
    match rng.random_range(0..10) {
        0 => f_hat = [0.0; 3],
        1 => {
            let s = rng.random_range(-0.02..0.02);
            v = f_hat.map(|c| s * c);
        }
        _ => {}
    }
    let magnitude = 10f64.powf(rng.random_range(-8.0..-1.0));
    let e_obs = if rng.random_range(0..10) == 0 { magnitude } else { -magnitude };
    PcInput { f_hat: Force::new(f_hat), v: Velocity::new(v), f_max: Force::new(f_max), e_obs, ts: 2e-4 }
}

fn prioritized_with_norm_axis_bound(input: &PcInput) -> DampingDecision {
    let mut d = pc_prioritized(input);
    let primary = make_projector(&input.f_hat).expect("finite reference");
    let v_o = primary.complement().apply(&input.v);
    let across = v_o.norm_squared();
    let e_res = input.e_obs + input.ts * d.alpha * primary.quadratic_form(&input.v);
    if e_res < 0.0 && across > crate::passivity::VELOCITY_EPS {
        let bound = input.f_max.norm() / across.sqrt();
        d.alpha_o = (-e_res / (input.ts * across)).min(bound);
        d.dissipated_energy = input.ts * (d.alpha * primary.quadratic_form(&input.v) + d.alpha_o * across);
    }
    d
}

/// Constraint residuals of a decision: primary-norm excess, worst per-axis
/// excess, and dissipation beyond the deficit.
pub fn constraint_excess(input: &PcInput, alpha: f64, alpha_o: f64, dissipated: f64) -> [f64; 3] {
    let primary = make_projector(&input.f_hat).expect("finite reference");
    let along = primary.apply(&input.v);
    let v_o = primary.complement().apply(&input.v);
    let norm_excess = (along * alpha).norm() - input.f_hat.norm();
    let axis_excess =
        v_o.iter().zip(input.f_max.iter()).map(|(vo, fm)| (alpha_o * vo).abs() - fm).fold(f64::NEG_INFINITY, f64::max);
    [norm_excess, axis_excess, dissipated - input.demand()]
}

/// Closed-form prioritized decisions against the oracle on `cases` random inputs.
pub fn oracle_suite(cases: usize, seed: u64, bug: InjectedBug) -> SuiteOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome {
        name: "oracle agreement",
        cases: 0,
        failures: 0,
        worst: 0.0,
        first_failure: None,
        elapsed: Duration::ZERO,
    };
    for _ in 0..cases {
        let input = random_pc_input(&mut rng);
        let d = match bug {
            InjectedBug::PerAxisBound => prioritized_with_norm_axis_bound(&input),
            _ => pc_prioritized(&input),
        };
        let oracle = oracle_max_dissipation(&input);
        let excess = constraint_excess(&input, d.alpha, d.alpha_o, d.dissipated_energy);
        let feasible = excess[0] <= CONSTRAINT_TOL && excess[1] <= CONSTRAINT_TOL && excess[2] <= 1e-12;
        let gap = if oracle.dissipated > 0.0 {
            (d.dissipated_energy - oracle.dissipated).abs() / oracle.dissipated
        } else {
            d.dissipated_energy.abs() / 1e-12
        };
        let worst = gap.max(excess[0].max(excess[1]).max(0.0));
        out.record(feasible && gap <= ORACLE_REL_TOL, worst, || {
            format!(
                "{input:?}: closed form α={} α_O={} E={:.6e}, oracle α={} α_O={} E={:.6e}, excess {excess:?}",
                d.alpha, d.alpha_o, d.dissipated_energy, oracle.alpha, oracle.alpha_o, oracle.dissipated
            )
        });
    }
    out.elapsed = start.elapsed();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_the_real_implementation() {
        let p = projector_suite(200, 1, InjectedBug::None);
        assert!(p.passed(), "{p}");
        let o = oracle_suite(40, 1, InjectedBug::None);
        assert!(o.passed(), "{o}");
    }

    #[test]
    fn injected_faults_are_caught() {
        assert!(!projector_suite(200, 1, InjectedBug::ProjectorIdempotence).passed());
        assert!(!oracle_suite(200, 1, InjectedBug::PerAxisBound).passed());
    }

    #[test]
    fn bug_names_parse() {
        assert_eq!("per-axis-bound".parse::<InjectedBug>(), Ok(InjectedBug::PerAxisBound));
        assert!("nope".parse::<InjectedBug>().is_err());
    }
}
