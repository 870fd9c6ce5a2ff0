//! CSV sample log.
//!
//! Floats are written in scientific notation with nine significant digits,
//! flags as `0`/`1`. [`CsvRecord`] is what a reader gets back; metrics are
//! computed from it so they can be reproduced from the file alone.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SampleLog;

pub const CSV_COLUMNS: [&str; 33] = [
    "t", "q1", "q2", "q3", "qd1", "qd2", "qd3", "x", "y", "z", "vx", "vy", "vz", "fhx", "fhy", "fhz", "fcx", "fcy",
    "fcz", "tau1", "tau2", "tau3", "tauap1", "tauap2", "tauap3", "alpha", "alphao", "eobs", "epc", "ediss",
    "sat_alpha", "sat_alphao", "joint_viol",
];

/// One parsed CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub t: f64,
    pub q: [f64; 3],
    pub qd: [f64; 3],
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub f_hat: [f64; 3],
    pub f_cmd: [f64; 3],
    pub tau_cmd: [f64; 3],
    pub tau_applied: [f64; 3],
    pub alpha: f64,
    pub alpha_o: f64,
    pub e_obs: f64,
    pub e_pc: f64,
    pub dissipated: f64,
    pub sat_alpha: bool,
    pub sat_alpha_o: bool,
    pub joint_viol: bool,
}

fn fmt(value: f64) -> String {
    format!("{value:.8e}")
}

fn round(value: f64) -> f64 {
    fmt(value).parse().expect("formatted float parses")
}

fn round3(values: [f64; 3]) -> [f64; 3] {
    values.map(round)
}

impl CsvRecord {
    /// The row exactly as it reads back from the file.
    pub fn from_log(log: &SampleLog) -> Self {
        Self {
            t: round(log.t),
            q: round3(log.q.to_array()),
            qd: round3(log.qd.to_array()),
            x: round3(log.x.to_array()),
            v: round3(log.v.to_array()),
            f_hat: round3(log.f_hat.to_array()),
            f_cmd: round3(log.f_cmd.to_array()),
            tau_cmd: round3(log.tau_cmd.to_array()),
            tau_applied: round3(log.tau_applied.to_array()),
            alpha: round(log.alpha),
            alpha_o: round(log.alpha_o),
            e_obs: round(log.e_obs),
            e_pc: round(log.e_pc),
            dissipated: round(log.dissipated),
            sat_alpha: log.sat_alpha,
            sat_alpha_o: log.sat_alpha_o,
            joint_viol: log.joint_viol,
        }
    }

    fn from_fields(fields: &[f64], flags: [bool; 3]) -> Self {
        let tri = |at: usize| [fields[at], fields[at + 1], fields[at + 2]];
        Self {
            t: fields[0],
            q: tri(1),
            qd: tri(4),
            x: tri(7),
            v: tri(10),
            f_hat: tri(13),
            f_cmd: tri(16),
            tau_cmd: tri(19),
            tau_applied: tri(22),
            alpha: fields[25],
            alpha_o: fields[26],
            e_obs: fields[27],
            e_pc: fields[28],
            dissipated: fields[29],
            sat_alpha: flags[0],
            sat_alpha_o: flags[1],
            joint_viol: flags[2],
        }
    }
}

const FLOAT_COLUMNS: usize = 30;

fn write_row<W: Write>(out: &mut W, log: &SampleLog) -> std::io::Result<()> {
    let floats = std::iter::once(log.t)
        .chain(log.q.iter())
        .chain(log.qd.iter())
        .chain(log.x.iter())
        .chain(log.v.iter())
        .chain(log.f_hat.iter())
        .chain(log.f_cmd.iter())
        .chain(log.tau_cmd.iter())
        .chain(log.tau_applied.iter())
        .chain([log.alpha, log.alpha_o, log.e_obs, log.e_pc, log.dissipated]);
    let mut line = String::with_capacity(512);
    for value in floats {
        line.push_str(&fmt(value));
        line.push(',');
    }
    for (i, flag) in [log.sat_alpha, log.sat_alpha_o, log.joint_viol].into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push(if flag { '1' } else { '0' });
    }
    line.push('\n');
    out.write_all(line.as_bytes())
}

pub fn write_csv<W: Write>(mut out: W, logs: &[SampleLog]) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid(format!("cannot write CSV: {e}"));
    writeln!(out, "{}", CSV_COLUMNS.join(",")).map_err(io)?;
    for log in logs {
        write_row(&mut out, log).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn csv_string(logs: &[SampleLog]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, logs).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

fn parse_flag(text: &str, line: usize) -> Result<bool> {
    match text {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::invalid(format!("line {line}: bad flag {other:?}"))),
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(|e| Error::invalid(format!("bad CSV header: {e}")))?;
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::invalid(format!("unexpected CSV columns: {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut records = Vec::new();
    let mut fields = [0.0; FLOAT_COLUMNS];
    for (row, result) in reader.records().enumerate() {
        let line = row + 2;
        let rec = result.map_err(|e| Error::invalid(format!("line {line}: {e}")))?;
        for (slot, text) in fields.iter_mut().zip(rec.iter()) {
            *slot = text.parse().map_err(|_| Error::invalid(format!("line {line}: bad number {text:?}")))?;
        }
        let flags = [
            parse_flag(&rec[FLOAT_COLUMNS], line)?,
            parse_flag(&rec[FLOAT_COLUMNS + 1], line)?,
            parse_flag(&rec[FLOAT_COLUMNS + 2], line)?,
        ];
        records.push(CsvRecord::from_fields(&fields, flags));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::*;

    fn sample(t: f64) -> SampleLog {
        SampleLog {
            t,
            q: JointAngles::new([0.1, -0.2, 1.0 / 3.0]),
            qd: JointRate::zeros(),
            x: Position::new([1e-3, 0.0, -0.3]),
            v: Velocity::new([0.0, 0.0, -0.05]),
            f_hat: Force::new([0.0, 0.0, 26.5]),
            f_cmd: Force::new([0.0, 0.0, 9.0]),
            tau_cmd: Torque::new([1.0, 2.0, 3.0]),
            tau_applied: Torque::new([1.0, 2.0, 2.5]),
            alpha: 50.0,
            alpha_o: 0.0,
            e_obs: -1e-4,
            e_pc: 1e-4,
            dissipated: 1e-4,
            sat_alpha: true,
            sat_alpha_o: false,
            joint_viol: true,
            f_max: Force::new([1.0, 1.0, 30.0]),
            reference_clamped: false,
        }
    }

    #[test]
    fn header_has_every_column() {
        assert_eq!(CSV_COLUMNS.len(), FLOAT_COLUMNS + 3);
        let text = csv_string(&[]);
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(fmt(0.0), "0.00000000e0");
        assert_eq!(fmt(-26.5), "-2.65000000e1");
    }

    #[test]
    fn row_round_trip() {
        let logs = [sample(0.0), sample(2e-4)];
        let text = csv_string(&logs);
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1], CsvRecord::from_log(&logs[1]));
        assert!((back[0].q[2] - 1.0 / 3.0).abs() < 1e-9);
        assert!(back[0].sat_alpha && !back[0].sat_alpha_o && back[0].joint_viol);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let mut text = csv_string(&[sample(0.0)]);
        text = text.replace(",1,0,1\n", ",1,0,2\n");
        assert!(read_csv(text.as_bytes()).is_err());
    }
}
