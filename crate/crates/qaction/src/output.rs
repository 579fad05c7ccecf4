//! CSV files: one comment line, a header, comma separated, `.` decimal.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use qaction_core::fitter::{FitResult, FitSeries};
use qaction_core::instanton::InstantonProfile;
use qaction_core::pimc::EntryDiagnostics;
use qaction_core::PropagatorTable;

use crate::error::RunError;

/// Shortest round-trip decimal, scientific below `1e-3` in magnitude.
pub fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Collects rows and writes them in one go.
pub struct CsvFile {
    comment: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvFile {
    pub fn new(comment: impl Into<String>, header: &[&str]) -> Self {
        CsvFile {
            comment: comment.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(comment: impl Into<String>, header: Vec<String>) -> Self {
        CsvFile {
            comment: comment.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        let mut file = File::create(path).map_err(|e| RunError::io(path, e))?;
        writeln!(file, "# {}", self.comment).map_err(|e| RunError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| RunError::io(path, e))?;
        Ok(())
    }
}

/// Tracks every file written under the output directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(root).map_err(|e| RunError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write(&mut self, name: &str, csv: &CsvFile) -> Result<(), RunError> {
        csv.write(&self.root.join(name))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.root.join(name);
        std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Compact label for a number in file names: `0.5` → `0p5`.
pub fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m").replace('.', "p")
}

pub fn table_csv(table: &PropagatorTable, comment: &str) -> CsvFile {
    let mut csv = CsvFile::new(comment, &["x_in", "x_fi", "T", "G", "sigma"]);
    let x = table.boundary.points();
    for i in 0..x.len() {
        for j in 0..x.len() {
            csv.push_numbers(&[x[i], x[j], table.transition_time, table.get(i, j), table.sigma(i, j)]);
        }
    }
    csv
}

fn series_header(degree: usize, scan: &str) -> Vec<String> {
    let mut h = vec!["m".to_string()];
    h.extend((0..=degree).map(|k| format!("v{k}")));
    h.extend([scan, "chi2", "dof", "logZ", "gauge_invariant", "v0_free_particle"].map(String::from));
    h.push("m_err".into());
    h.extend((0..=degree).map(|k| format!("v{k}_err")));
    h.push("logZ_err".into());
    h
}

fn fit_row(r: &FitResult, scan: String, degree: usize) -> Vec<String> {
    let mut row: Vec<String> = r.table_row().iter().map(|&x| num(x)).collect();
    row.resize(degree + 2, num(0.0));
    row.push(scan);
    row.push(num(r.chi2));
    row.push(r.dof.to_string());
    row.push(num(r.params.log_z));
    row.push(num(r.gauge_invariant()));
    row.push(num(r.v0_free_particle()));
    let mut errs: Vec<String> = r.table_errors().iter().map(|&x| num(x)).collect();
    errs.resize(degree + 2, num(0.0));
    row.extend(errs);
    row.push(num(r.log_z_error));
    row
}

/// Table-style rows `m, v0 … vN, <scan>, …` plus `mean` and `sigma` rows.
/// `v0` is in the unit-`Z` convention; the scan column holds `−a,+a` for
/// interval scans and `T` otherwise.
pub fn series_csv(series: &FitSeries, comment: &str, interval_scan: bool) -> CsvFile {
    let degree = series.results.iter().map(FitResult::degree).max().unwrap_or(0);
    let scan = if interval_scan { "interval" } else { "T" };
    let mut csv = CsvFile::with_header(comment, series_header(degree, scan));
    for (s, r) in series.scan.iter().zip(&series.results) {
        let label = if interval_scan {
            format!("{},{}", num(-s), num(*s))
        } else {
            num(*s)
        };
        csv.push(fit_row(r, label, degree));
    }
    let width = csv.header.len();
    for (label, values) in [("mean", &series.mean), ("sigma", &series.sigma)] {
        let mut row: Vec<String> = values[..degree + 2].iter().map(|&x| num(x)).collect();
        row.push(label.into());
        row.push(String::new());
        row.push(String::new());
        row.push(num(values[degree + 2]));
        row.resize(width, String::new());
        csv.push(row);
    }
    csv
}

pub fn profile_csv(profile: &InstantonProfile, comment: &str) -> CsvFile {
    let mut csv = CsvFile::new(comment, &["t", "x"]);
    for (t, x) in profile.times.iter().zip(&profile.positions) {
        csv.push_numbers(&[*t, *x]);
    }
    csv
}

pub fn instanton_summary_header() -> CsvFile {
    CsvFile::new(
        "instanton action and wells per source action",
        &["source", "T", "tau", "well", "action", "omega_well", "mismatch", "status"],
    )
}

pub fn instanton_summary_row(csv: &mut CsvFile, source: &str, t: Option<f64>, tau: Option<f64>, r: &Result<InstantonProfile, String>) {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    match r {
        Ok(p) => csv.push(vec![
            source.into(),
            opt(t),
            opt(tau),
            num(p.well),
            num(p.action),
            num(p.omega_well),
            num(p.mismatch),
            "ok".into(),
        ]),
        Err(e) => csv.push(vec![
            source.into(),
            opt(t),
            opt(tau),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            e.clone(),
        ]),
    }
}

pub fn diagnostics_csv(diag: &[EntryDiagnostics], comment: &str) -> CsvFile {
    let mut csv = CsvFile::new(
        comment,
        &["i", "j", "acceptance", "tau_int", "stages", "segment", "slow_mixing", "log_g", "log_g_error"],
    );
    for d in diag {
        csv.push(vec![
            d.i.to_string(),
            d.j.to_string(),
            num(d.acceptance),
            num(d.tau),
            d.stages.to_string(),
            d.segment.to_string(),
            d.slow_mixing.to_string(),
            num(d.log_g),
            num(d.log_g_error),
        ]);
    }
    csv
}
