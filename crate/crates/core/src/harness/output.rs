//! File schemas and the in-memory bundle of files an experiment produces.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a time-series file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t_s: f64,
    pub sig_s1: f64,
    pub sig_s2: f64,
    pub sig_s3: f64,
    pub deviation_deg: f64,
    pub loss: f64,
    pub i1: f64,
    pub i3: f64,
}

/// Received reference SOPs alongside a time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub t_s: f64,
    pub ref1_s1: f64,
    pub ref1_s2: f64,
    pub ref1_s3: f64,
    pub ref3_s1: f64,
    pub ref3_s2: f64,
    pub ref3_s3: f64,
}

/// Time-series row of a recovery run; `power` is the transmission through
/// the analyzer aligned with the launched signal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub t_s: f64,
    pub sig_s1: f64,
    pub sig_s2: f64,
    pub sig_s3: f64,
    pub deviation_deg: f64,
    pub loss: f64,
    pub i1: f64,
    pub i3: f64,
    pub power: f64,
}

impl RecoveryRow {
    pub fn series(&self) -> SeriesRow {
        SeriesRow {
            t_s: self.t_s,
            sig_s1: self.sig_s1,
            sig_s2: self.sig_s2,
            sig_s3: self.sig_s3,
            deviation_deg: self.deviation_deg,
            loss: self.loss,
            i1: self.i1,
            i3: self.i3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub samples: usize,
    pub mean_deviation_deg: f64,
    pub max_deviation_deg: f64,
    pub mean_loss: f64,
    pub max_loss: f64,
    pub qber_added: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovery_time_90_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovery_time_full_s: Option<f64>,
    /// False when the full-recovery threshold was never reached; the reported
    /// times then equal the run duration.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovered: Option<bool>,
    /// Controller cycles executed, warm-up included.
    pub iterations: u64,
}

impl RunSummary {
    /// Statistics over the deviation and loss columns.
    pub fn from_series(experiment: &str, seed: u64, iterations: u64, rows: &[SeriesRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("summary needs at least one sample"));
        }
        let n = rows.len() as f64;
        let mean = |f: fn(&SeriesRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let max = |f: fn(&SeriesRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        let mean_loss = mean(|r| r.loss);
        Ok(Self {
            experiment: experiment.into(),
            seed,
            samples: rows.len(),
            mean_deviation_deg: mean(|r| r.deviation_deg),
            max_deviation_deg: max(|r| r.deviation_deg),
            mean_loss,
            max_loss: max(|r| r.loss),
            qber_added: mean_loss,
            recovery_time_90_s: None,
            recovery_time_full_s: None,
            recovered: None,
            iterations,
        })
    }
}

/// Named output files, kept in memory until written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.files.insert(name.into(), bytes);
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.insert(name.into(), bytes);
        Ok(())
    }

    pub fn add_text(&mut self, name: &str, text: String) {
        self.files.insert(name.into(), text.into_bytes());
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

pub fn read_csv<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(bytes);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
