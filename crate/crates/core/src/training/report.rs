use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError};

pub const TRAINING_CSV_HEADER: &str = "epoch,train_acc,test_acc,loss,g_bar";

/// One row of a training run. `epoch` counts from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub mean_train_loss: f64,
    /// `Ḡ`, present when input gradients were tracked.
    pub gradient_magnitude: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingReport {
    pub records: Vec<EpochRecord>,
    pub config: TrainConfig,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainingReport {
    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("at least one epoch")
    }

    /// First epoch whose training accuracy exceeds `threshold`.
    pub fn epochs_to_fit(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.train_accuracy > threshold).map(|r| r.epoch)
    }

    /// Epoch with the largest `Ḡ` (earliest on ties).
    pub fn peak_gradient_epoch(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in &self.records {
            if let Some(g) = r.gradient_magnitude {
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((r.epoch, g));
                }
            }
        }
        best.map(|(e, _)| e)
    }

    /// `epoch,train_acc,test_acc,loss,g_bar`, one row per epoch; absent
    /// values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAINING_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.epoch,
                r.train_accuracy,
                opt(r.test_accuracy),
                r.mean_train_loss,
                opt(r.gradient_magnitude)
            ));
        }
        out
    }

    /// Structured-text echo of the config that produced this report.
    pub fn config_echo(&self) -> String {
        toml::to_string(&self.config).expect("config serializes")
    }
}

/// Parses the rows written by [`TrainingReport::to_csv`].
pub fn parse_training_csv(text: &str) -> Result<Vec<EpochRecord>, TrainError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAINING_CSV_HEADER) {
        return Err(TrainError::Config(format!("training CSV must start with `{TRAINING_CSV_HEADER}`")));
    }
    let num = |s: &str, line: usize| -> Result<Option<f64>, TrainError> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| TrainError::Config(format!("line {line}: bad number {s:?}")))
    };
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(TrainError::Config(format!("line {}: expected 5 fields", i + 2)));
            }
            let missing = || TrainError::Config(format!("line {}: missing value", i + 2));
            Ok(EpochRecord {
                epoch: f[0]
                    .parse()
                    .map_err(|_| TrainError::Config(format!("line {}: bad epoch", i + 2)))?,
                train_accuracy: num(f[1], i + 2)?.ok_or_else(missing)?,
                test_accuracy: num(f[2], i + 2)?,
                mean_train_loss: num(f[3], i + 2)?.ok_or_else(missing)?,
                gradient_magnitude: num(f[4], i + 2)?,
            })
        })
        .collect()
}
