use std::io::Write;

use super::run::{RunOutcome, RunRecord};
use crate::Result;

pub const CSV_HEADER: [&str; 18] = [
    "protocol",
    "mode",
    "sweep_param",
    "sweep_value",
    "eta0_t0",
    "eta0_t1",
    "eta1_t0",
    "eta1_t1",
    "rounds",
    "sifted",
    "errors",
    "qber",
    "qber_ci_low",
    "qber_ci_high",
    "expected_qber",
    "eve_knowledge",
    "coincidence_rate",
    "chsh",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row(r: &RunRecord) -> [String; 18] {
    [
        r.protocol.to_string(),
        r.mode.to_string(),
        opt(r.sweep_param),
        opt(r.sweep_value),
        r.eta[0].to_string(),
        r.eta[1].to_string(),
        r.eta[2].to_string(),
        r.eta[3].to_string(),
        r.rounds.to_string(),
        r.sifted.to_string(),
        r.errors.to_string(),
        opt(r.qber),
        opt(r.qber_ci.map(|c| c.0)),
        opt(r.qber_ci.map(|c| c.1)),
        opt(r.expected_qber),
        opt(r.eve_knowledge),
        opt(r.coincidence_rate),
        opt(r.chsh),
    ]
}

/// One header line and one row per record; missing values are empty.
pub fn write_csv<W: Write>(outcome: &RunOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &outcome.records {
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(outcome: &RunOutcome, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, outcome).map_err(|e| crate::Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}
