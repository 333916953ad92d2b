//! Run records: one row per evaluation, stamped with the config hash, plus
//! CSV/JSON export.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::config::TrainConfig;

/// One evaluation checkpoint in a run. Losses are means over the update
/// iterations since the previous row and absent before the first update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub step: u64,
    pub r_pi: f64,
    /// Fraction of environment steps since the last row that were guided.
    pub guided_fraction: f64,
    pub loss_q: Option<f64>,
    pub loss_v: Option<f64>,
    pub loss_pi: Option<f64>,
    /// Seed the evaluation ran under; re-evaluating a checkpoint with it
    /// reproduces `r_pi` exactly.
    pub eval_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub config_hash: String,
    pub wall_clock_secs: f64,
    pub rows: Vec<EvalRow>,
}

impl RunRecord {
    pub fn final_return(&self) -> Option<f64> {
        self.rows.last().map(|r| r.r_pi)
    }

    /// Bitwise equality of everything except wall-clock time.
    pub fn rows_identical(&self, other: &RunRecord) -> bool {
        if self.rows.len() != other.rows.len() {
            return false;
        }
        self.rows.iter().zip(&other.rows).all(|(a, b)| {
            a.step == b.step
                && a.r_pi.to_bits() == b.r_pi.to_bits()
                && a.guided_fraction.to_bits() == b.guided_fraction.to_bits()
                && opt_bits(a.loss_q) == opt_bits(b.loss_q)
                && opt_bits(a.loss_v) == opt_bits(b.loss_v)
                && opt_bits(a.loss_pi) == opt_bits(b.loss_pi)
                && a.eval_seed == b.eval_seed
        })
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Per-row CSV: step, return, guided fraction, and the three losses
    /// (empty fields before the first update).
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "step,r_pi,guided_fraction,loss_q,loss_v,loss_pi,eval_seed")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.step,
                row.r_pi,
                row.guided_fraction,
                opt_str(row.loss_q),
                opt_str(row.loss_v),
                opt_str(row.loss_pi),
                row.eval_seed
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn opt_bits(x: Option<f64>) -> Option<u64> {
    x.map(f64::to_bits)
}

fn opt_str(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> RunRecord {
        RunRecord {
            config: TrainConfig::default(),
            config_hash: TrainConfig::default().hash(),
            wall_clock_secs: 1.25,
            rows: vec![
                EvalRow {
                    step: 0,
                    r_pi: -1.5,
                    guided_fraction: 0.0,
                    loss_q: None,
                    loss_v: None,
                    loss_pi: None,
                    eval_seed: 42,
                },
                EvalRow {
                    step: 1000,
                    r_pi: 3.5,
                    guided_fraction: 0.25,
                    loss_q: Some(0.1),
                    loss_v: Some(0.2),
                    loss_pi: Some(-0.3),
                    eval_seed: 43,
                },
            ],
        }
    }

    #[test]
    fn json_roundtrip_is_equal() {
        let r = record();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        r.save_json(&path).unwrap();
        let back = RunRecord::load_json(&path).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rows_identical_ignores_wall_clock() {
        let a = record();
        let mut b = record();
        b.wall_clock_secs = 99.0;
        assert!(a.rows_identical(&b));
        b.rows[1].r_pi += 1e-12;
        assert!(!a.rows_identical(&b));
    }

    #[test]
    fn csv_has_header_plus_one_line_per_row() {
        let r = record();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        r.export_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,-1.5,0,,,,"));
    }

    #[test]
    fn rows_increase_strictly_in_step() {
        let r = record();
        assert!(r.rows.windows(2).all(|w| w[0].step < w[1].step));
    }
}
