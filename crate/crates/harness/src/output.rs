//! CSV, JSON and shield dumps.

use std::io::Write;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::stats::{aggregate, Aggregate};
use crate::sweep::{RunError, RunRecord, SweepOutput};

pub const CSV_COLUMNS: [&str; 7] = [
    "method",
    "size",
    "run",
    "performance",
    "theta_safe",
    "relaxed_states",
    "seconds",
];

/// Writes one row per record; `theta_safe` is empty when no shield was built.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.method.name().to_string(),
            r.size.to_string(),
            r.run.to_string(),
            r.performance.to_string(),
            r.theta_safe.map(|b| b.to_string()).unwrap_or_default(),
            r.relaxed_states.to_string(),
            r.seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a ExperimentConfig,
    records: &'a [RunRecord],
    aggregates: Vec<Aggregate>,
    errors: &'a [RunError],
}

pub fn write_json<W: Write>(
    config: &ExperimentConfig,
    sweep: &SweepOutput,
    out: W,
) -> serde_json::Result<()> {
    let report = JsonReport {
        config,
        records: &sweep.records,
        aggregates: aggregate(&sweep.records),
        errors: &sweep.errors,
    };
    serde_json::to_writer_pretty(out, &report)
}

/// Plain-text table of the aggregates for the terminal.
pub fn summary_table(aggregates: &[Aggregate]) -> String {
    let mut s = format!(
        "{:<18} {:>7} {:>5} {:>10} {:>10} {:>9} {:>6}\n",
        "method", "size", "n", "mean", "cvar1%", "ci95", "safe"
    );
    for a in aggregates {
        let safe = a
            .safe_fraction
            .map(|f| format!("{f:.2}"))
            .unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:<18} {:>7} {:>5} {:>10.4} {:>10.4} {:>9.4} {:>6}\n",
            a.method.name(),
            a.size,
            a.count,
            a.mean,
            a.cvar_1pct,
            a.ci95_halfwidth,
            safe
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Method;

    #[test]
    fn csv_layout() {
        let recs = [
            RunRecord {
                method: Method::SpibbShield,
                size: 10,
                run: 0,
                performance: 0.5,
                theta_safe: Some(true),
                relaxed_states: 2,
                seconds: 0.0,
            },
            RunRecord {
                method: Method::Baseline,
                size: 10,
                run: 1,
                performance: -0.25,
                theta_safe: None,
                relaxed_states: 0,
                seconds: 0.0,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "method,size,run,performance,theta_safe,relaxed_states,seconds\n\
             spibb_shield,10,0,0.5,true,2,0\n\
             baseline,10,1,-0.25,,0,0\n"
        );
    }
}
