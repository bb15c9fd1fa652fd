//! CSV tables and JSON-lines snapshots.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kdv5::flows::TrajectoryRecord;
use kdv5::hamiltonians::ConservedReport;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub t: f64,
    pub samples: Vec<f64>,
}

/// Owns the output directory and records every file written.
pub struct Sink {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(write_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `header` and then one serialized record per row.
    pub fn table<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .map_err(csv_err(&path))?;
        w.write_record(header).map_err(csv_err(&path))?;
        for row in rows {
            w.serialize(row).map_err(csv_err(&path))?;
        }
        w.flush().map_err(write_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    /// `(t, quantity, kappa, value)`; `kappa` is empty for the polynomial
    /// functionals.
    pub fn conserved(&mut self, name: &str, reports: &[ConservedReport]) -> Result<(), CliError> {
        let rows = reports
            .iter()
            .flat_map(|r| r.rows().into_iter().map(move |(q, k, v)| (r.t, q, k, v)));
        self.table(name, &["t", "quantity", "kappa", "value"], rows)
    }

    pub fn snapshots(&mut self, name: &str, traj: &TrajectoryRecord) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(write_err(&path))?;
        let mut w = BufWriter::new(file);
        for (t, q) in &traj.snapshots {
            let rec = SnapshotRecord {
                t: *t,
                samples: q.samples().to_vec(),
            };
            serde_json::to_writer(&mut w, &rec).map_err(|e| CliError::Write {
                path: path.clone(),
                source: e.into(),
            })?;
            w.write_all(b"\n").map_err(write_err(&path))?;
        }
        w.flush().map_err(write_err(&path))?;
        self.written.push(path);
        Ok(())
    }
}
