//! Closed-form table of the attack quantities over a grid of error rates.

use fpb_core::povm::{beamsplitter_reflectance, beamsplitter_reflectance_trig, povm_report};
use fpb_core::probe::{
    error_rate_from_inconclusive, eve_correct_prob_projective, overlap_q, renyi_info,
    MAX_ERROR_RATE,
};
use fpb_core::quantum::ALGEBRA_TOL;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::numfmt::{fmt_sig, round_sig};

pub const CSV_HEADER: [&str; 6] = [
    "E",
    "Q",
    "R_inconclusive",
    "R1",
    "p_eve_correct",
    "renyi_bits",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "E")]
    pub error_rate: f64,
    #[serde(rename = "Q")]
    pub overlap: f64,
    #[serde(rename = "R_inconclusive")]
    pub inconclusive_rate: f64,
    #[serde(rename = "R1")]
    pub reflectance: f64,
    #[serde(rename = "p_eve_correct")]
    pub p_eve_correct: f64,
    #[serde(rename = "renyi_bits")]
    pub renyi_bits: f64,
}

impl CurveRow {
    /// Evaluates one row. `R_inconclusive` is the Born probability of the
    /// inconclusive outcome of the constructed receiver, not a copy of `Q`.
    pub fn at(error_rate: f64) -> CliResult<Self> {
        let overlap = overlap_q(error_rate)?;
        let report = povm_report(error_rate, overlap)?;
        let inconclusive_rate = report.inconclusive_rate;
        Ok(Self {
            error_rate,
            overlap,
            inconclusive_rate,
            reflectance: beamsplitter_reflectance(inconclusive_rate)?,
            p_eve_correct: eve_correct_prob_projective(error_rate)?,
            renyi_bits: renyi_info(error_rate)?,
        })
    }

    /// Checks the row against the rate identities; returns the failed one.
    pub fn check(&self) -> Result<(), String> {
        let close = |a: f64, b: f64| (a - b).abs() <= ALGEBRA_TOL;
        let e = self.error_rate;
        let r = self.inconclusive_rate;
        let round_trip =
            error_rate_from_inconclusive(r.clamp(0.0, 1.0)).map_err(|x| x.to_string())?;
        if !close(round_trip, e) {
            return Err(format!("E={e}: E -> R? -> E gives {round_trip}"));
        }
        if !close(self.overlap, r) {
            return Err(format!("E={e}: Q={} but R?={r}", self.overlap));
        }
        if !close(self.reflectance, (1.0 - r) / (1.0 + r)) {
            return Err(format!("E={e}: R1={} off the rate form", self.reflectance));
        }
        let trig = beamsplitter_reflectance_trig(self.overlap).map_err(|x| x.to_string())?;
        if !close(self.reflectance, trig) {
            return Err(format!(
                "E={e}: R1={} but tan² form gives {trig}",
                self.reflectance
            ));
        }
        let p = self.p_eve_correct;
        let renyi = (2.0 * (p * p + (1.0 - p) * (1.0 - p))).log2();
        if !close(renyi, self.renyi_bits) {
            return Err(format!(
                "E={e}: Rényi {} but channel form gives {renyi}",
                self.renyi_bits
            ));
        }
        Ok(())
    }

    fn fields(&self) -> [f64; 6] {
        [
            self.error_rate,
            self.overlap,
            self.inconclusive_rate,
            self.reflectance,
            self.p_eve_correct,
            self.renyi_bits,
        ]
    }

    fn from_fields(f: [f64; 6]) -> Self {
        Self {
            error_rate: f[0],
            overlap: f[1],
            inconclusive_rate: f[2],
            reflectance: f[3],
            p_eve_correct: f[4],
            renyi_bits: f[5],
        }
    }

    fn rounded(&self) -> Self {
        Self::from_fields(self.fields().map(round_sig))
    }
}

/// Parses a rate written as a decimal or as a fraction `a/b`.
pub fn parse_rate(text: &str) -> Result<f64, String> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {text:?}"))
    };
    let value = match text.split_once('/') {
        Some((a, b)) => number(a)? / number(b)?,
        None => number(text)?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("not a finite number: {text:?}"))
    }
}

/// `steps` evenly spaced points from `e_min` to `e_max`, both included.
pub fn grid(e_min: f64, e_max: f64, steps: usize) -> CliResult<Vec<f64>> {
    if steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }
    if !(0.0 <= e_min && e_min <= e_max && e_max <= MAX_ERROR_RATE) {
        return Err(CliError::Usage(format!(
            "need 0 <= E_MIN <= E_MAX <= 1/3, got {e_min} and {e_max}"
        )));
    }
    if steps == 1 {
        return Ok(vec![e_min]);
    }
    let last = steps - 1;
    Ok((0..steps)
        .map(|i| {
            if i == last {
                e_max
            } else {
                e_min + (e_max - e_min) * i as f64 / last as f64
            }
        })
        .collect())
}

/// Builds and self-checks every row.
pub fn table(e_min: f64, e_max: f64, steps: usize) -> CliResult<Vec<CurveRow>> {
    grid(e_min, e_max, steps)?
        .into_iter()
        .map(|e| {
            let row = CurveRow::at(e)?;
            row.check().map_err(CliError::Validation)?;
            Ok(row)
        })
        .collect()
}

pub fn to_csv(rows: &[CurveRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        w.write_record(row.fields().map(fmt_sig))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn to_json(rows: &[CurveRow]) -> String {
    let rounded: Vec<CurveRow> = rows.iter().map(CurveRow::rounded).collect();
    let mut s = serde_json::to_string_pretty(&rounded).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_csv(text: &str) -> CliResult<Vec<CurveRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(CliError::Parse(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
            let mut f = [0.0; 6];
            for (slot, cell) in f.iter_mut().zip(rec.iter()) {
                *slot = cell
                    .parse()
                    .map_err(|_| CliError::Parse(format!("bad number {cell:?}")))?;
            }
            Ok(CurveRow::from_fields(f))
        })
        .collect()
}

pub fn read_json(text: &str) -> CliResult<Vec<CurveRow>> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}
