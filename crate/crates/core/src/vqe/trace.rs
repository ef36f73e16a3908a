use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{write_file, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Energy at the parameters entering this iteration, from shots.
    pub estimated_energy: f64,
    /// Noiseless energy at the same parameters (diagnostic).
    pub exact_energy: f64,
    pub shots_this_iter: u64,
    pub cumulative_shots: u64,
    #[serde(skip)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VqeTrace {
    records: Vec<IterationRecord>,
}

impl VqeTrace {
    pub fn push(&mut self, record: IterationRecord) {
        debug_assert!(record.cumulative_shots >= self.cumulative_shots());
        self.records.push(record);
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn cumulative_shots(&self) -> u64 {
        self.last().map_or(0, |r| r.cumulative_shots)
    }

    pub fn estimated(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.estimated_energy).collect()
    }

    pub fn exact(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.exact_energy).collect()
    }

    /// Trailing `n` estimated energies, if at least `n` iterations exist.
    pub fn window(&self, n: usize) -> Option<Vec<f64>> {
        let len = self.records.len();
        (len >= n).then(|| self.records[len - n..].iter().map(|r| r.estimated_energy).collect())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record([
                "iteration",
                "estimated_energy",
                "exact_energy",
                "shots_this_iter",
                "cumulative_shots",
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<IterationRecord>, _>>()?;
        Ok(VqeTrace { records })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, self.to_csv_string()?)
    }
}
