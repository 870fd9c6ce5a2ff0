//! Brute-force reference for the prioritized allocation.
//!
//! Searches `(α, α_O)` on successively refined grids over
//! `[0, α_demand] × [0, α_O_demand]` and keeps the point that removes the most
//! energy while satisfying, evaluated directly at each grid point:
//!
//! * `‖α·F·v‖ ≤ ‖f̂‖`
//! * `|α_O·v_o,i| ≤ f_max_i` for every axis
//! * total dissipation `≤ −e_obs`
//!
//! Near-ties are broken towards larger `α`, then larger `α_O`, which encodes
//! the priority of the reference direction without using any closed form.

use super::PcInput;

const GRID: usize = 100;
const LEVELS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSolution {
    pub alpha: f64,
    pub alpha_o: f64,
    /// Energy removed at the returned point (J).
    pub dissipated: f64,
}

struct Problem<const N: usize> {
    f_v: [f64; N],
    v_o: [f64; N],
    along: f64,
    across: f64,
    f_hat_norm: f64,
    f_max: [f64; N],
    budget: f64,
    ts: f64,
}

impl<const N: usize> Problem<N> {
    fn new(input: &PcInput<N>) -> Self {
        let f = input.f_hat.to_array();
        let v = input.v.to_array();
        let ff: f64 = f.iter().map(|c| c * c).sum();
        let fv: f64 = f.iter().zip(&v).map(|(a, b)| a * b).sum();
        let mut f_v = [0.0; N];
        let mut v_o = v;
        if ff > crate::types::DIRECTION_EPS {
            for i in 0..N {
                f_v[i] = f[i] * fv / ff;
                v_o[i] = v[i] - f_v[i];
            }
        }
        Self {
            along: f_v.iter().zip(&v).map(|(a, b)| a * b).sum(),
            across: v_o.iter().zip(&v).map(|(a, b)| a * b).sum(),
            f_v,
            v_o,
            f_hat_norm: ff.sqrt(),
            f_max: input.f_max.to_array(),
            budget: input.demand(),
            ts: input.ts,
        }
    }

    fn dissipated(&self, alpha: f64, alpha_o: f64) -> f64 {
        self.ts * (alpha * self.along + alpha_o * self.across)
    }

    fn feasible(&self, alpha: f64, alpha_o: f64) -> bool {
        let primary: f64 = self.f_v.iter().map(|c| (alpha * c).powi(2)).sum::<f64>().sqrt();
        primary <= self.f_hat_norm * (1.0 + 1e-12)
            && self
                .v_o
                .iter()
                .zip(&self.f_max)
                .all(|(vo, fm)| (alpha_o * vo).abs() <= fm * (1.0 + 1e-12))
            && self.dissipated(alpha, alpha_o) <= self.budget * (1.0 + 1e-12)
    }
}

fn axis(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / GRID as f64;
    (0..=GRID).map(move |k| if k == GRID { hi } else { lo + step * k as f64 })
}

/// Maximum-dissipation `(α, α_O)` found by grid search.
pub fn oracle_max_dissipation<const N: usize>(input: &PcInput<N>) -> OracleSolution {
    let p = Problem::new(input);
    let demand_of = |quad: f64| {
        if p.budget > 0.0 && quad > super::VELOCITY_EPS {
            p.budget / (p.ts * quad)
        } else {
            0.0
        }
    };
    let (mut a_lo, mut a_hi) = (0.0, demand_of(p.along));
    let (mut o_lo, mut o_hi) = (0.0, demand_of(p.across));
    let mut best = (0.0, 0.0);

    for _ in 0..LEVELS {
        let da = (a_hi - a_lo) / GRID as f64;
        let d_o = (o_hi - o_lo) / GRID as f64;
        let tie = p.ts * (p.along * da + p.across * d_o);

        let points: Vec<(f64, f64, f64)> = axis(a_lo, a_hi)
            .flat_map(|a| axis(o_lo, o_hi).map(move |o| (a, o)))
            .filter(|&(a, o)| p.feasible(a, o))
            .map(|(a, o)| (a, o, p.dissipated(a, o)))
            .collect();
        let top = points.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            break;
        }
        let near: Vec<_> = points.iter().filter(|t| t.2 >= top - tie).collect();
        let alpha = near.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        let alpha_o = near
            .iter()
            .filter(|t| t.0 >= alpha - 0.5 * da)
            .map(|t| t.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if p.dissipated(alpha, alpha_o) >= p.dissipated(best.0, best.1) || !p.feasible(best.0, best.1) {
            best = (alpha, alpha_o);
        }

        a_lo = (best.0 - 2.0 * da).max(0.0);
        a_hi = (best.0 + 2.0 * da).min(a_hi);
        o_lo = (best.1 - 2.0 * d_o).max(0.0);
        o_hi = (best.1 + 2.0 * d_o).min(o_hi);
    }

    OracleSolution { alpha: best.0, alpha_o: best.1, dissipated: p.dissipated(best.0, best.1) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passivity::{alpha_max_priority, alpha_o_max, pc_prioritized};
    use crate::types::{Force, Velocity};

    fn input(f_hat: [f64; 3], v: [f64; 3], f_max: [f64; 3], e_obs: f64) -> PcInput {
        PcInput { f_hat: Force::new(f_hat), v: Velocity::new(v), f_max: Force::new(f_max), e_obs, ts: 2e-4 }
    }

    #[test]
    fn unsaturated_instance_matches_demand() {
        let inp = input([0.0, 0.0, 10.0], [0.0, 0.0, 0.1], [30.0; 3], -1e-4);
        let o = oracle_max_dissipation(&inp);
        assert!((o.alpha - 50.0).abs() <= 0.5, "{o:?}");
        assert!((o.dissipated - 1e-4).abs() <= 1e-6);
    }

    #[test]
    fn saturated_first_stage_hits_priority_bound() {
        // plenty of deficit, no orthogonal motion
        let inp = input([0.0, 0.0, 10.0], [0.0, 0.0, 0.1], [30.0; 3], -1.0);
        let o = oracle_max_dissipation(&inp);
        let bound = alpha_max_priority(&inp.f_hat, &inp.v).unwrap();
        assert!((o.alpha - bound).abs() <= 0.01 * bound, "{o:?} vs {bound}");
    }

    #[test]
    fn saturated_second_stage_hits_axis_bound() {
        let inp = input([0.0, 0.0, 10.0], [0.1, 0.05, 0.1], [3.0, 1.0, 30.0], -1.0);
        let o = oracle_max_dissipation(&inp);
        let bound = alpha_o_max(&inp.f_hat, &inp.v, &inp.f_max);
        assert!((bound - 20.0).abs() < 1e-12);
        assert!((o.alpha_o - bound).abs() <= 0.01 * bound, "{o:?} vs {bound}");
    }

    #[test]
    fn agrees_with_closed_form_on_mixed_instance() {
        let inp = input([2.0, -1.0, 8.0], [0.05, 0.2, -0.1], [4.0, 2.0, 9.0], -3e-4);
        let o = oracle_max_dissipation(&inp);
        let d = pc_prioritized(&inp);
        assert!((o.dissipated - d.dissipated_energy).abs() <= 0.01 * o.dissipated.max(1e-300));
    }

    #[test]
    fn passive_instance_does_nothing() {
        let o = oracle_max_dissipation(&input([0.0, 0.0, 10.0], [0.1, 0.0, 0.1], [3.0; 3], 0.2));
        assert_eq!((o.alpha, o.alpha_o, o.dissipated), (0.0, 0.0, 0.0));
    }
}
