//! Comparative experiments: the method × seed cross product, aggregated into
//! mean/min/max learning curves and a final-performance table.

use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::TrainConfig;
use super::record::RunRecord;
use super::train::train;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub label: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub label: String,
    /// Base config; each run overwrites only the seed.
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub records: Vec<RunRecord>,
}

impl MethodResult {
    pub fn final_returns(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.final_return())
            .collect()
    }
}

/// Aggregated curve for one method: at each eval step, the arithmetic mean
/// and the min/max envelope over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodCurve {
    pub label: String,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub methods: Vec<MethodResult>,
    pub failures: Vec<RunFailure>,
}

/// Runs every `(method, seed)` combination. Runs execute in parallel and are
/// internally single-threaded; a failed run is recorded, not fatal.
pub fn compare(methods: &[(String, TrainConfig)], seeds: &[u64]) -> Result<Comparison> {
    if methods.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "compare needs at least one config and one seed".to_string(),
        ));
    }
    let tasks: Vec<(usize, u64)> = (0..methods.len())
        .flat_map(|m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let outcomes: Vec<(usize, u64, std::result::Result<RunRecord, String>)> = tasks
        .par_iter()
        .map(|&(m, seed)| {
            let mut cfg = methods[m].1.clone();
            cfg.seed = seed;
            let outcome = train(&cfg)
                .map(|out| out.record)
                .map_err(|e| e.to_string());
            (m, seed, outcome)
        })
        .collect();

    let mut results: Vec<MethodResult> = methods
        .iter()
        .map(|(label, config)| MethodResult {
            label: label.clone(),
            config: config.clone(),
            seeds: Vec::new(),
            records: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for (m, seed, outcome) in outcomes {
        match outcome {
            Ok(record) => {
                results[m].seeds.push(seed);
                results[m].records.push(record);
            }
            Err(message) => failures.push(RunFailure {
                label: methods[m].0.clone(),
                seed,
                message,
            }),
        }
    }
    Ok(Comparison {
        methods: results,
        failures,
    })
}

impl Comparison {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn method(&self, label: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.label == label)
    }

    /// Mean/min/max curve over seeds; all runs of a method share eval steps.
    pub fn curve(&self, label: &str) -> Result<MethodCurve> {
        let method = self
            .method(label)
            .ok_or_else(|| Error::InvalidArgument(format!("no method '{label}'")))?;
        if method.records.is_empty() {
            return Err(Error::Usage(format!("method '{label}' has no finished runs")));
        }
        let steps: Vec<u64> = method.records[0].rows.iter().map(|r| r.step).collect();
        for rec in &method.records {
            let s: Vec<u64> = rec.rows.iter().map(|r| r.step).collect();
            if s != steps {
                return Err(Error::Usage(format!(
                    "method '{label}' runs disagree on eval steps"
                )));
            }
        }
        let n = method.records.len() as f64;
        let mut mean = vec![0.0; steps.len()];
        let mut min = vec![f64::INFINITY; steps.len()];
        let mut max = vec![f64::NEG_INFINITY; steps.len()];
        for rec in &method.records {
            for (i, row) in rec.rows.iter().enumerate() {
                mean[i] += row.r_pi / n;
                min[i] = min[i].min(row.r_pi);
                max[i] = max[i].max(row.r_pi);
            }
        }
        Ok(MethodCurve {
            label: label.to_string(),
            steps,
            mean,
            min,
            max,
        })
    }

    /// Curve CSV: `step` then `mean,min,max` per method, so
    /// `1 + 3 * method_count` columns.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let curves: Vec<MethodCurve> = self
            .methods
            .iter()
            .map(|m| self.curve(&m.label))
            .collect::<Result<_>>()?;
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["step".to_string()];
        for c in &curves {
            header.push(format!("{}_mean", c.label));
            header.push(format!("{}_min", c.label));
            header.push(format!("{}_max", c.label));
        }
        writeln!(w, "{}", header.join(","))?;
        let steps = &curves[0].steps;
        for c in &curves {
            if &c.steps != steps {
                return Err(Error::Usage(
                    "methods disagree on eval steps; export them separately".to_string(),
                ));
            }
        }
        for (i, step) in steps.iter().enumerate() {
            let mut row = vec![step.to_string()];
            for c in &curves {
                row.push(c.mean[i].to_string());
                row.push(c.min[i].to_string());
                row.push(c.max[i].to_string());
            }
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Final-performance table, one line per method.
    pub fn final_table(&self) -> String {
        let mut out = String::from("method,seeds,final_mean,final_min,final_max\n");
        for m in &self.methods {
            let finals = m.final_returns();
            if finals.is_empty() {
                out.push_str(&format!("{},0,,,\n", m.label));
                continue;
            }
            let mean = finals.iter().sum::<f64>() / finals.len() as f64;
            let min = finals.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.push_str(&format!(
                "{},{},{mean},{min},{max}\n",
                m.label,
                finals.len()
            ));
        }
        out
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(env: &str) -> TrainConfig {
        TrainConfig {
            env: env.to_string(),
            total_steps: 200,
            update_every: 50,
            updates_per_round: 2,
            eval_every: 100,
            eval_episodes: 1,
            warmup_steps: 50,
            learning_starts: 50,
            batch_size: 16,
            hidden: vec![8, 8],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_seed_compare_equals_train() {
        let cfg = tiny("sparse_reacher");
        let cmp = compare(&[("sac".to_string(), cfg.clone())], &[7]).unwrap();
        assert!(cmp.is_complete());
        let mut direct_cfg = cfg;
        direct_cfg.seed = 7;
        let direct = train(&direct_cfg).unwrap();
        assert!(cmp.methods[0].records[0].rows_identical(&direct.record));
        let curve = cmp.curve("sac").unwrap();
        for (i, row) in direct.record.rows.iter().enumerate() {
            assert_eq!(curve.mean[i].to_bits(), row.r_pi.to_bits());
            assert_eq!(curve.min[i].to_bits(), row.r_pi.to_bits());
        }
    }

    #[test]
    fn duplicate_methods_produce_identical_columns() {
        let cfg = tiny("pendulum");
        let methods = vec![("a".to_string(), cfg.clone()), ("b".to_string(), cfg)];
        let cmp = compare(&methods, &[1, 2]).unwrap();
        let a = cmp.curve("a").unwrap();
        let b = cmp.curve("b").unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.min, b.min);
        assert_eq!(a.max, b.max);
    }

    #[test]
    fn three_seed_curve_is_the_arithmetic_mean() {
        let cfg = tiny("sparse_reacher");
        let cmp = compare(&[("sac".to_string(), cfg)], &[1, 2, 3]).unwrap();
        let m = cmp.method("sac").unwrap();
        let curve = cmp.curve("sac").unwrap();
        for i in 0..curve.steps.len() {
            let mean: f64 = m.records.iter().map(|r| r.rows[i].r_pi).sum::<f64>() / 3.0;
            assert!((curve.mean[i] - mean).abs() < 1e-12);
            let min = m
                .records
                .iter()
                .map(|r| r.rows[i].r_pi)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(curve.min[i], min);
        }
    }

    #[test]
    fn failures_are_flagged_not_fatal() {
        let mut bad = tiny("mountain_car");
        bad.guidance.enabled = true;
        bad.demo_path = Some("/nonexistent/demo.bin".into());
        let good = tiny("pendulum");
        let cmp = compare(
            &[("bad".to_string(), bad), ("good".to_string(), good)],
            &[1],
        )
        .unwrap();
        assert!(!cmp.is_complete());
        assert_eq!(cmp.failures.len(), 1);
        assert_eq!(cmp.failures[0].label, "bad");
        assert_eq!(cmp.method("good").unwrap().records.len(), 1);
    }

    #[test]
    fn csv_has_one_plus_three_per_method_columns() {
        let cfg = tiny("pendulum");
        let methods = vec![
            ("x".to_string(), cfg.clone()),
            ("y".to_string(), cfg),
        ];
        let cmp = compare(&methods, &[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cmp.csv");
        cmp.export_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + 3 * 2);
    }

    #[test]
    fn comparison_json_roundtrip() {
        let cfg = tiny("pendulum");
        let cmp = compare(&[("sac".to_string(), cfg)], &[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cmp.json");
        cmp.save_json(&path).unwrap();
        let back = Comparison::load_json(&path).unwrap();
        assert_eq!(back, cmp);
    }
}
