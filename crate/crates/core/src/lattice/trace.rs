use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Run parameters carried alongside a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub radius: usize,
    pub dt: f64,
    pub j0: usize,
    pub boundary: String,
}

/// Observables sampled along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTrace {
    pub sample_times: Vec<f64>,
    pub diffusion_values: Vec<f64>,
    pub l2_values: Vec<f64>,
    pub energy_values: Vec<f64>,
    pub tail_values: Vec<f64>,
    pub metadata: TraceMetadata,
}

impl DiffusionTrace {
    pub fn new(metadata: TraceMetadata) -> Self {
        Self {
            sample_times: Vec::new(),
            diffusion_values: Vec::new(),
            l2_values: Vec::new(),
            energy_values: Vec::new(),
            tail_values: Vec::new(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn push(&mut self, t: f64, diffusion: f64, l2: f64, energy: f64, tail: f64) {
        self.sample_times.push(t);
        self.diffusion_values.push(diffusion);
        self.l2_values.push(l2);
        self.energy_values.push(energy);
        self.tail_values.push(tail);
    }

    /// Arrays share one length and times strictly increase.
    pub fn is_consistent(&self) -> bool {
        let n = self.sample_times.len();
        self.diffusion_values.len() == n
            && self.l2_values.len() == n
            && self.energy_values.len() == n
            && self.tail_values.len() == n
            && self.sample_times.windows(2).all(|w| w[0] < w[1])
    }

    /// CSV with header `t,D,l2,energy,tail`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,D,l2,energy,tail")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                self.sample_times[i],
                self.diffusion_values[i],
                self.l2_values[i],
                self.energy_values[i],
                self.tail_values[i]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, metadata: TraceMetadata) -> Result<Self> {
        let mut trace = Self::new(metadata);
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::parse("trace csv", e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('t') || line.starts_with('#') {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|_| Error::parse("trace csv", format!("bad number on line {}", lineno + 1)))?;
            if vals.len() != 5 {
                return Err(Error::parse(
                    "trace csv",
                    format!("expected 5 fields on line {}", lineno + 1),
                ));
            }
            trace.push(vals[0], vals[1], vals[2], vals[3], vals[4]);
        }
        Ok(trace)
    }

    /// Writes `<stem>.csv` and the JSON sidecar `<stem>.json` next to it.
    ///
    /// Both files go through a temporary name and a rename, so an interrupted
    /// run never leaves a truncated trace under the final name.
    pub fn save(&self, dir: &Path, stem: &str, sidecar: &serde_json::Value) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let tmp_csv = dir.join(format!(".{stem}.csv.tmp"));
        let tmp_json = dir.join(format!(".{stem}.json.tmp"));
        {
            let file = fs::File::create(&tmp_csv).map_err(|e| Error::io(&tmp_csv, e))?;
            let mut out = BufWriter::new(file);
            self.write_csv(&mut out).map_err(|e| Error::io(&tmp_csv, e))?;
            out.flush().map_err(|e| Error::io(&tmp_csv, e))?;
        }
        let text = serde_json::to_string_pretty(sidecar).map_err(|e| Error::parse("trace sidecar", e.to_string()))?;
        fs::write(&tmp_json, text).map_err(|e| Error::io(&tmp_json, e))?;
        // the sidecar lands last: its presence marks a complete trace
        fs::rename(&tmp_csv, &csv_path).map_err(|e| Error::io(&csv_path, e))?;
        fs::rename(&tmp_json, &json_path).map_err(|e| Error::io(&json_path, e))?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let sidecar: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::parse("trace sidecar", e.to_string()))?;
        let metadata: TraceMetadata = serde_json::from_value(sidecar["metadata"].clone())
            .map_err(|e| Error::parse("trace sidecar", e.to_string()))?;
        let file = fs::File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        Self::read_csv(BufReader::new(file), metadata)
    }
}
