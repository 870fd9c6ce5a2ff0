//! Run summaries computed from the CSV rows alone.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::record::CsvRecord;

/// `f̂ᵀf_cmd` below `−SIGN_INVERSION_TOL·‖f̂‖²` counts as a sign inversion.
/// The slack absorbs rounding when the damping cancels the reference exactly.
pub const SIGN_INVERSION_TOL: f64 = 1e-9;

/// Settings a report needs besides the rows; stored in the report so it can
/// be recomputed later from the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub name: String,
    pub strategy: String,
    pub ts: f64,
    pub wall_plane_z: f64,
    pub tau_max: [f64; 3],
    pub settle_window: f64,
    pub settle_threshold: f64,
}

impl ReportParams {
    pub fn from_config(config: &SimConfig) -> Self {
        Self {
            name: config.name.clone(),
            strategy: config.strategy.name().to_string(),
            ts: config.ts,
            wall_plane_z: config.wall.plane_z,
            tau_max: config.limits.tau_max,
            settle_window: config.metrics.settle_window,
            settle_threshold: config.metrics.settle_threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub params: ReportParams,
    pub samples: usize,
    /// Samples with positive wall penetration.
    pub contact_samples: usize,
    /// Mean of `‖f_cmd‖` over contact samples (N).
    pub mean_contact_force: f64,
    pub contact_force_variance: f64,
    /// Per joint, `max |τ_cmd| / τ_max`.
    pub joint_torque_ratio: [f64; 3],
    pub joint_violations: usize,
    pub mean_alpha: f64,
    pub mean_alpha_o: f64,
    /// Sum of the per-sample dissipated energy (J).
    pub total_dissipated: f64,
    pub final_e_pc: f64,
    pub sign_inversions: usize,
    pub alpha_saturations: usize,
    pub alpha_o_saturations: usize,
    /// Peak-to-peak `f̂_z` in the third and the last quarter of the run (N).
    pub late_amplitudes: [f64; 2],
    /// Standard deviation of `f̂_z` over the trailing window (N).
    pub trailing_fz_std: f64,
    pub settled: bool,
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var)
}

fn peak_to_peak(rows: &[CsvRecord]) -> f64 {
    let hi = rows.iter().map(|r| r.f_hat[2]).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.f_hat[2]).fold(f64::INFINITY, f64::min);
    if rows.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl MetricsReport {
    pub fn compute(params: ReportParams, rows: &[CsvRecord]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("no samples to summarize"));
        }
        let n = rows.len();
        let contact = rows.iter().filter(|r| params.wall_plane_z - r.x[2] > 0.0);
        let (mean_contact_force, contact_force_variance) =
            mean_var(contact.clone().map(|r| dot(&r.f_cmd, &r.f_cmd).sqrt()));

        let mut joint_torque_ratio = [0.0f64; 3];
        for r in rows {
            for (i, ratio) in joint_torque_ratio.iter_mut().enumerate() {
                *ratio = ratio.max(r.tau_cmd[i].abs() / params.tau_max[i]);
            }
        }

        let quarter = n / 4;
        let late_amplitudes = [peak_to_peak(&rows[n - 2 * quarter..n - quarter]), peak_to_peak(&rows[n - quarter..])];

        let window = ((params.settle_window / params.ts).round() as usize).clamp(1, n);
        let (_, trailing_var) = mean_var(rows[n - window..].iter().map(|r| r.f_hat[2]));
        let trailing_fz_std = trailing_var.sqrt();

        Ok(Self {
            samples: n,
            contact_samples: contact.count(),
            mean_contact_force,
            contact_force_variance,
            joint_torque_ratio,
            joint_violations: rows.iter().filter(|r| r.joint_viol).count(),
            mean_alpha: rows.iter().map(|r| r.alpha).sum::<f64>() / n as f64,
            mean_alpha_o: rows.iter().map(|r| r.alpha_o).sum::<f64>() / n as f64,
            total_dissipated: rows.iter().map(|r| r.dissipated).sum(),
            final_e_pc: rows[n - 1].e_pc,
            sign_inversions: rows
                .iter()
                .filter(|r| dot(&r.f_hat, &r.f_cmd) < -SIGN_INVERSION_TOL * dot(&r.f_hat, &r.f_hat))
                .count(),
            alpha_saturations: rows.iter().filter(|r| r.sat_alpha).count(),
            alpha_o_saturations: rows.iter().filter(|r| r.sat_alpha_o).count(),
            late_amplitudes,
            trailing_fz_std,
            settled: trailing_fz_std < params.settle_threshold,
            params,
        })
    }

    /// Whether the oscillation did not shrink over the second half of the run.
    pub fn amplitude_non_decreasing(&self) -> bool {
        self.late_amplitudes[1] >= self.late_amplitudes[0]
    }

    /// Largest relative difference between the numeric fields of two reports,
    /// or an error naming the first field whose counts differ.
    pub fn max_relative_difference(&self, other: &MetricsReport) -> Result<f64> {
        let counts = [
            ("samples", self.samples, other.samples),
            ("contact_samples", self.contact_samples, other.contact_samples),
            ("joint_violations", self.joint_violations, other.joint_violations),
            ("sign_inversions", self.sign_inversions, other.sign_inversions),
            ("alpha_saturations", self.alpha_saturations, other.alpha_saturations),
            ("alpha_o_saturations", self.alpha_o_saturations, other.alpha_o_saturations),
        ];
        if let Some((name, a, b)) = counts.iter().find(|(_, a, b)| a != b) {
            return Err(Error::invalid(format!("{name} differs: {a} vs {b}")));
        }
        if self.settled != other.settled {
            return Err(Error::invalid("settled flag differs"));
        }
        let pairs = [
            (self.mean_contact_force, other.mean_contact_force),
            (self.contact_force_variance, other.contact_force_variance),
            (self.mean_alpha, other.mean_alpha),
            (self.mean_alpha_o, other.mean_alpha_o),
            (self.total_dissipated, other.total_dissipated),
            (self.final_e_pc, other.final_e_pc),
            (self.trailing_fz_std, other.trailing_fz_std),
            (self.late_amplitudes[0], other.late_amplitudes[0]),
            (self.late_amplitudes[1], other.late_amplitudes[1]),
        ]
        .into_iter()
        .chain(self.joint_torque_ratio.into_iter().zip(other.joint_torque_ratio));
        Ok(pairs
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()).max(1e-300) })
            .fold(0.0, f64::max))
    }
}

/// Side-by-side summary of two runs over the same horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub a: MetricsReport,
    pub b: MetricsReport,
    /// `b − a`
    pub delta_mean_contact_force: f64,
    pub delta_mean_alpha: f64,
    pub delta_total_dissipated: f64,
    pub joint_violations: [usize; 2],
    pub sign_inversions: [usize; 2],
}

impl CompareReport {
    pub fn new(a: MetricsReport, b: MetricsReport) -> Self {
        Self {
            delta_mean_contact_force: b.mean_contact_force - a.mean_contact_force,
            delta_mean_alpha: b.mean_alpha - a.mean_alpha,
            delta_total_dissipated: b.total_dissipated - a.total_dissipated,
            joint_violations: [a.joint_violations, b.joint_violations],
            sign_inversions: [a.sign_inversions, b.sign_inversions],
            a,
            b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ReportParams {
        ReportParams {
            name: "t".into(),
            strategy: "prioritized".into(),
            ts: 0.25,
            wall_plane_z: 0.0,
            tau_max: [1.0, 2.0, 4.0],
            settle_window: 1.0,
            settle_threshold: 1.0,
        }
    }

    fn row(z: f64, fz: f64, fcz: f64, tau: [f64; 3], alpha: f64, diss: f64) -> CsvRecord {
        CsvRecord {
            t: 0.0,
            q: [0.0; 3],
            qd: [0.0; 3],
            x: [0.0, 0.0, z],
            v: [0.0; 3],
            f_hat: [0.0, 0.0, fz],
            f_cmd: [0.0, 0.0, fcz],
            tau_cmd: tau,
            tau_applied: tau,
            alpha,
            alpha_o: 0.0,
            e_obs: 0.0,
            e_pc: 0.0,
            dissipated: diss,
            sat_alpha: false,
            sat_alpha_o: false,
            joint_viol: tau[0].abs() > 1.0,
        }
    }

    #[test]
    fn hand_computed_summary() {
        let rows = [
            row(0.01, 0.0, 0.0, [0.5, 0.0, 0.0], 0.0, 0.0),
            row(-0.01, 10.0, 8.0, [1.5, 1.0, 0.0], 2.0, 1e-3),
            row(-0.02, 20.0, -4.0, [0.0, -3.0, 1.0], 6.0, 2e-3),
            row(0.0, 0.0, 0.0, [0.0; 3], 0.0, 0.0),
        ];
        let r = MetricsReport::compute(params(), &rows).unwrap();
        assert_eq!(r.samples, 4);
        assert_eq!(r.contact_samples, 2);
        assert!((r.mean_contact_force - 6.0).abs() < 1e-12);
        assert!((r.contact_force_variance - 4.0).abs() < 1e-12);
        assert_eq!(r.joint_torque_ratio, [1.5, 1.5, 0.25]);
        assert_eq!(r.joint_violations, 1);
        assert!((r.mean_alpha - 2.0).abs() < 1e-12);
        assert!((r.total_dissipated - 3e-3).abs() < 1e-15);
        assert_eq!(r.sign_inversions, 1);
        // window of 4 samples: fz = 0, 10, 20, 0
        assert!((r.trailing_fz_std - 68.75f64.sqrt()).abs() < 1e-12);
        assert!(!r.settled);
    }

    #[test]
    fn late_amplitudes_split_second_half() {
        let fz = [0.0, 50.0, 0.0, 50.0, 0.0, 6.0, 1.0, 9.0];
        let rows: Vec<_> = fz.iter().map(|&f| row(-0.01, f, f, [0.0; 3], 0.0, 0.0)).collect();
        let r = MetricsReport::compute(params(), &rows).unwrap();
        assert_eq!(r.late_amplitudes, [6.0, 8.0]);
        assert!(r.amplitude_non_decreasing());
    }

    #[test]
    fn exact_cancellation_is_not_an_inversion() {
        let rows = [row(-0.01, 10.0, -1e-15, [0.0; 3], 1.0, 0.0)];
        assert_eq!(MetricsReport::compute(params(), &rows).unwrap().sign_inversions, 0);
    }

    #[test]
    fn compare_of_identical_runs_is_zero() {
        let rows = [row(-0.01, 10.0, 8.0, [0.1; 3], 2.0, 1e-3)];
        let r = MetricsReport::compute(params(), &rows).unwrap();
        let c = CompareReport::new(r.clone(), r.clone());
        assert_eq!((c.delta_mean_contact_force, c.delta_mean_alpha, c.delta_total_dissipated), (0.0, 0.0, 0.0));
        assert_eq!(r.max_relative_difference(&r).unwrap(), 0.0);
    }

    #[test]
    fn empty_log_is_rejected() {
        assert!(MetricsReport::compute(params(), &[]).is_err());
    }
}
