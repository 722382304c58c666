//! Session output: the JSON envelope, its flat CSV form and the per-pulse log.

use fpb_core::probe::SignalBasis;
use fpb_core::sim::{EveOutcome, PulseRecord, SessionConfig, SessionStats};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::numfmt::{fmt_sig, round_json};

pub const LOG_HEADER: [&str; 10] = [
    "idx",
    "alice_bit",
    "alice_basis",
    "eve_outcome",
    "relayed",
    "bob_received",
    "bob_basis",
    "bob_bit",
    "sifted",
    "eve_guess",
];

/// Config is echoed at full precision so that it reproduces the run exactly;
/// result floats are rounded to 12 significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub version: String,
    pub config: SessionConfig,
    pub seed: u64,
    pub results: SessionStats,
}

impl Envelope {
    pub fn new(config: SessionConfig, results: SessionStats) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config,
            results,
        }
    }

    fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("plain data serializes");
        if let Some(results) = v.get_mut("results") {
            round_json(results);
        }
        v
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Two-column `field,value` table with dotted paths; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        flatten("", &self.to_value(), &mut rows);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["field", "value"]).expect("in-memory write");
        for (k, v) in rows {
            w.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) if n.is_f64() => {
            out.push((prefix.to_string(), fmt_sig(n.as_f64().unwrap_or(f64::NAN))))
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn opt_bit(b: Option<u8>) -> String {
    b.map(|b| b.to_string()).unwrap_or_default()
}

pub fn log_to_csv(log: &[PulseRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LOG_HEADER).expect("in-memory write");
    for r in log {
        w.write_record([
            r.idx.to_string().as_str(),
            &r.alice_bit.to_string(),
            r.alice_basis.label(),
            r.eve_outcome.map(EveOutcome::label).unwrap_or(""),
            flag(r.relayed),
            flag(r.bob_received),
            r.bob_basis.label(),
            &opt_bit(r.bob_bit),
            flag(r.sifted),
            &opt_bit(r.eve_guess),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn read_log_csv(text: &str) -> CliResult<Vec<PulseRecord>> {
    let bad = |what: &str, cell: &str| CliError::Parse(format!("bad {what} {cell:?}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Parse(e.to_string()))?;
    if header.iter().ne(LOG_HEADER) {
        return Err(CliError::Parse(format!("unexpected header {header:?}")));
    }
    let bit = |s: &str| match s {
        "0" => Ok(0u8),
        "1" => Ok(1u8),
        _ => Err(bad("bit", s)),
    };
    let opt_bit = |s: &str| {
        if s.is_empty() {
            Ok(None)
        } else {
            bit(s).map(Some)
        }
    };
    let boolean = |s: &str| bit(s).map(|b| b == 1);
    let basis = |s: &str| match s {
        "u" => Ok(SignalBasis::U),
        "v" => Ok(SignalBasis::V),
        _ => Err(bad("basis", s)),
    };
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
            let c: Vec<&str> = rec.iter().collect();
            let eve_outcome = match c[3] {
                "" => None,
                s => Some(EveOutcome::from_label(s).ok_or_else(|| bad("eve outcome", s))?),
            };
            Ok(PulseRecord {
                idx: c[0].parse().map_err(|_| bad("index", c[0]))?,
                alice_bit: bit(c[1])?,
                alice_basis: basis(c[2])?,
                eve_outcome,
                relayed: boolean(c[4])?,
                bob_received: boolean(c[5])?,
                bob_basis: basis(c[6])?,
                bob_bit: opt_bit(c[7])?,
                sifted: boolean(c[8])?,
                eve_guess: opt_bit(c[9])?,
            })
        })
        .collect()
}
