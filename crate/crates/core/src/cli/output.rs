//! Artifact writers. Every file starts with the code version and config
//! hash; CSV numbers use 17 significant digits so nested resolutions can be
//! compared without serialization loss.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::run::{RunError, RunOutcome, CODE_VERSION, SCHEMA_VERSION};
use crate::radiation::RadiationField;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct Csv {
    path: PathBuf,
    out: BufWriter<fs::File>,
}

impl Csv {
    fn create(dir: &Path, name: &str, hash: &str, what: &str, columns: &[&str]) -> Result<Self, RunError> {
        let path = dir.join(name);
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut csv = Self {
            out: BufWriter::new(file),
            path,
        };
        let header = format!(
            "# radfield {CODE_VERSION} schema {SCHEMA_VERSION}\n# config_hash {hash}\n# {what}\n{}\n",
            columns.join(",")
        );
        csv.raw(&header)?;
        Ok(csv)
    }

    fn raw(&mut self, s: &str) -> Result<(), RunError> {
        self.out.write_all(s.as_bytes()).map_err(io_err(&self.path))
    }

    fn row(&mut self, ints: &[i64], floats: &[f64]) -> Result<(), RunError> {
        let mut line = String::with_capacity(24 * (ints.len() + floats.len()));
        for (k, x) in ints.iter().map(|i| i.to_string()).chain(floats.iter().map(|x| fmt(*x))).enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&x);
        }
        line.push('\n');
        self.raw(&line)
    }

    fn finish(mut self) -> Result<PathBuf, RunError> {
        self.out.flush().map_err(io_err(&self.path))?;
        Ok(self.path)
    }
}

/// Round-trip decimal with 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn waveform_csv(dir: &Path, hash: &str, field: &RadiationField) -> Result<PathBuf, RunError> {
    let name = format!("waveform_{}.csv", field.component.name());
    let what = format!("component {}, time is v on the horizon line and u on the scri line", field.component.name());
    let mut csv = Csv::create(dir, &name, hash, &what, &["time", "l", "m", "psi", "dtpsi", "value"])?;
    for w in &field.waveforms {
        let lm = [i64::from(w.mode.l), i64::from(w.mode.m)];
        for k in 0..w.time.len() {
            // columns: time, l, m, psi, dtpsi, value
            csv.raw(&fmt(w.time[k]))?;
            csv.raw(",")?;
            csv.row(&lm, &[w.psi[k], w.dtpsi[k], w.value[k]])?;
        }
    }
    csv.finish()
}

/// Writes every artifact of `outcome` into `dir` and returns the paths in
/// write order.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let report = &outcome.report;
    let hash = report.config_hash.as_str();
    let mut files = vec![
        waveform_csv(dir, hash, &outcome.horizon)?,
        waveform_csv(dir, hash, &outcome.scri)?,
    ];

    if outcome.runs.iter().any(|r| !r.series.is_empty()) {
        let mut csv = Csv::create(dir, "series.csv", hash, "psi at fixed r*", &["t", "l", "m", "rstar", "psi"])?;
        for run in &outcome.runs {
            let lm = [i64::from(run.mode.l), i64::from(run.mode.m)];
            for s in &run.series {
                for (t, psi) in s.t.iter().zip(&s.psi) {
                    csv.raw(&fmt(*t))?;
                    csv.raw(",")?;
                    csv.row(&lm, &[s.rstar, *psi])?;
                }
            }
        }
        files.push(csv.finish()?);
    }

    for run in &outcome.runs {
        let Some(snap) = &run.snapshot else { continue };
        let name = format!("snapshot_l{}_m{}.csv", run.mode.l, run.mode.m);
        let what = format!("mode l={} m={}, every {}th lattice point", run.mode.l, run.mode.m, snap.stride);
        let mut csv = Csv::create(dir, &name, hash, &what, &["u", "v", "rstar", "psi"])?;
        for k in 0..snap.psi.len() {
            let (u, v) = (snap.u[k], snap.v[k]);
            csv.row(&[], &[u, v, 0.5 * (v - u), snap.psi[k]])?;
        }
        files.push(csv.finish()?);
    }

    if let Some(conv) = &report.convergence {
        let mut csv = Csv::create(
            dir,
            "convergence.csv",
            hash,
            "summed unitarity defect per ladder rung",
            &["h", "defect", "relative_defect"],
        )?;
        for k in 0..conv.ladder.len() {
            csv.row(&[], &[conv.ladder[k], conv.total_defect[k], conv.relative_defect[k]])?;
        }
        files.push(csv.finish()?);
    }

    if let Some(probes) = &report.probe {
        let mut csv = Csv::create(
            dir,
            "probe_ladder.csv",
            hash,
            "dyadic ladder differences, end 0 = horizon and 1 = scri",
            &["l", "m", "end", "a", "diff"],
        )?;
        for p in probes {
            let end = match p.end {
                crate::analysis::ProbeEnd::Horizon => 0,
                crate::analysis::ProbeEnd::Scri => 1,
            };
            for (a, d) in p.ladder_a.iter().zip(&p.ladder_diff) {
                csv.row(&[i64::from(p.mode.l), i64::from(p.mode.m), end], &[*a, *d])?;
            }
        }
        files.push(csv.finish()?);
    }

    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    files.push(path);
    Ok(files)
}
