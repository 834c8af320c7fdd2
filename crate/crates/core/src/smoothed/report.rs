use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Estimate, SweepRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: &[&str] =
    &["experiment", "rule", "axiom", "model", "phi", "n", "z", "trials", "p_hat", "ci_low", "ci_high", "seed", "ms"];

/// One results line. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub rule: String,
    pub axiom: String,
    pub model: String,
    pub phi: f64,
    pub n: usize,
    pub z: usize,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub ms: u64,
}

impl CsvRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        rule: &str,
        axiom: &str,
        model: &str,
        phi: f64,
        n: usize,
        z: usize,
        e: &Estimate,
        ms: u64,
    ) -> Self {
        CsvRow {
            experiment: experiment.into(),
            rule: rule.into(),
            axiom: axiom.into(),
            model: model.into(),
            phi,
            n,
            z,
            trials: e.trials,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            seed: e.seed,
            ms,
        }
    }
}

impl SweepRow {
    /// The CSV line for this row; `ms` is zeroed unless `timings` so reruns compare equal.
    pub fn to_csv(&self, timings: bool) -> CsvRow {
        let ms = if timings { self.ms } else { 0 };
        CsvRow::new(
            &self.experiment,
            &self.rule,
            &self.axiom,
            self.model.name(),
            self.phi,
            self.n,
            self.z,
            &self.estimate,
            ms,
        )
    }
}

pub fn write_csv(rows: &[CsvRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // Written by hand so a file with no rows still has its header.
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a results file, rejecting one whose header is not the expected columns.
pub fn read_csv(input: impl Read) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV columns: {}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
