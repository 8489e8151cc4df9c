//! Trial rows, CSV emission and pass-rate summaries.
//!
//! CSV columns, in order: `scenario, check, trial, seed, pass, value, bound,
//! samples, queries, detail`. A row passes when its measured `value` meets
//! `bound` in the direction the check defines. Wall time is kept out of the
//! CSV so identical runs give identical bytes; it goes to a sidecar file.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use downsample::stats::wilson_interval;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scenario: String,
    pub check: String,
    pub trial: usize,
    pub seed: u64,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    pub samples: usize,
    pub queries: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub scenario: String,
    pub trial: usize,
    pub seconds: f64,
}

pub fn to_csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().context("flushing csv")?)
}

pub fn timings_csv(t: &[Timing]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in t {
        w.serialize(r)?;
    }
    Ok(w.into_inner().context("flushing csv")?)
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<Row>, _>>()
        .with_context(|| format!("reading {}", path.display()))
}

/// Pass counts for one `(scenario, check)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub scenario: String,
    pub check: String,
    pub passes: usize,
    pub total: usize,
    pub wilson: (f64, f64),
}

impl CheckSummary {
    pub fn fraction(&self) -> f64 {
        self.passes as f64 / self.total.max(1) as f64
    }
}

/// Groups rows by scenario and check in first-seen order.
pub fn summarize(rows: &[Row]) -> Vec<CheckSummary> {
    let mut out: Vec<CheckSummary> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|s| s.scenario == r.scenario && s.check == r.check) {
            Some(i) => i,
            None => {
                out.push(CheckSummary {
                    scenario: r.scenario.clone(),
                    check: r.check.clone(),
                    passes: 0,
                    total: 0,
                    wilson: (0.0, 0.0),
                });
                out.len() - 1
            }
        };
        out[i].total += 1;
        out[i].passes += r.pass as usize;
    }
    for s in &mut out {
        s.wilson = wilson_interval(s.passes, s.total, 0.95);
    }
    out
}

pub fn summary_line(s: &CheckSummary, required: Option<f64>) -> String {
    let mut line = format!(
        "{:<32} {:<22} {:>5}/{:<5} {:.4}  95% [{:.4}, {:.4}]",
        s.scenario,
        s.check,
        s.passes,
        s.total,
        s.fraction(),
        s.wilson.0,
        s.wilson.1
    );
    if let Some(req) = required {
        let ok = s.fraction() + 1e-12 >= req;
        let _ = write!(line, "  need >= {req:.4}  {}", if ok { "ok" } else { "FAILED" });
    }
    line
}

/// Gnuplot data: one block per file, one line per check with
/// `index fraction wilson_lo wilson_hi passes total "scenario/check"`.
pub fn gnuplot_dat(summaries: &[CheckSummary]) -> String {
    let mut out = String::from("# index fraction wilson_lo wilson_hi passes total label\n");
    for (i, s) in summaries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i} {} {} {} {} {} \"{}/{}\"",
            s.fraction(),
            s.wilson.0,
            s.wilson.1,
            s.passes,
            s.total,
            s.scenario,
            s.check
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(check: &str, pass: bool) -> Row {
        Row {
            scenario: "s".into(),
            check: check.into(),
            trial: 0,
            seed: 1,
            pass,
            value: 0.1,
            bound: 0.2,
            samples: 3,
            queries: 4,
            detail: "a, \"quoted\" note".into(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row("a", true), row("b", false), row("a", false)];
        let bytes = to_csv(&rows).unwrap();
        let dir = std::env::temp_dir().join(format!("dsrep-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("r.csv");
        std::fs::write(&p, &bytes).unwrap();
        assert_eq!(read_csv(&p).unwrap(), rows);
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].passes, s[0].total), (1, 2));
        assert!(s[0].wilson.0 < 0.5 && s[0].wilson.1 > 0.5);
        assert!(gnuplot_dat(&s).lines().count() == 3);
        std::fs::remove_dir_all(dir).ok();
    }
}
