//! Benchmark metric rows, per-sample predictions, and their CSV/JSON forms.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::pipeline::ModelChoice;
use hsreg_core::PreprocessKind;

/// Columns of the metric CSV.
pub const REPORT_COLUMNS: [&str; 7] = ["model", "preprocessing", "n", "seed", "r2", "mse", "seconds"];
/// Columns of the plot-data CSV.
pub const PLOT_COLUMNS: [&str; 4] = ["cell_id", "sample_id", "truth", "prediction"];

/// One grid cell's test-set metrics. Failed cells carry `None` metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelChoice,
    pub preprocessing: PreprocessKind,
    pub n: usize,
    pub seed: u64,
    pub r2: Option<f64>,
    pub mse: Option<f64>,
    pub seconds: f64,
}

impl ReportRow {
    /// Identifier of the row at `index`; unique even for repeated cells.
    pub fn cell_id(&self, index: usize) -> String {
        format!("{index}-{}-{}-n{}-s{}", self.model, self.preprocessing.as_str(), self.n, self.seed)
    }
}

/// One test sample's truth and prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub cell_id: String,
    /// Row index in the benchmarked table.
    pub sample_id: usize,
    pub truth: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub plot: Vec<PlotPoint>,
    #[serde(default)]
    pub failures: Vec<CellFailure>,
}

fn parse_metric(s: &str, what: &str) -> Result<Option<f64>> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| BenchError::Report(format!("bad {what} value `{s}`")))?;
    Ok(v.is_finite().then_some(v))
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

fn csv_err(e: csv::Error) -> BenchError {
    BenchError::Report(e.to_string())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(csv_err)?;
    if h.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(BenchError::Report(format!(
            "expected columns {}, found {}",
            expected.join(","),
            h.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| BenchError::Report("short row".into()))
}

impl BenchmarkReport {
    pub fn cell_ids(&self) -> Vec<String> {
        self.rows.iter().enumerate().map(|(i, r)| r.cell_id(i)).collect()
    }

    /// Test predictions of one cell.
    pub fn plot_for<'a>(&'a self, cell_id: &'a str) -> impl Iterator<Item = &'a PlotPoint> + 'a {
        self.plot.iter().filter(move |p| p.cell_id == cell_id)
    }

    pub fn metrics_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.model.to_string(),
                r.preprocessing.as_str().to_string(),
                r.n.to_string(),
                r.seed.to_string(),
                fmt_metric(r.r2),
                fmt_metric(r.mse),
                r.seconds.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    pub fn plot_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(PLOT_COLUMNS).expect("in-memory write");
        for p in &self.plot {
            w.write_record([
                p.cell_id.clone(),
                p.sample_id.to_string(),
                p.truth.to_string(),
                p.prediction.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Rebuilds a report from its two CSV files. Failure messages live only
    /// in the JSON form.
    pub fn from_csv(metrics: &str, plot: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut rdr = csv::Reader::from_reader(metrics.as_bytes());
        check_header(&mut rdr, &REPORT_COLUMNS)?;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let prep = match field(&rec, 1)? {
                "none" => PreprocessKind::None,
                "msc" => PreprocessKind::Msc,
                "d2" => PreprocessKind::SecondDiff,
                other => return Err(BenchError::Report(format!("unknown preprocessing `{other}`"))),
            };
            let int = |i: usize, what: &str| -> Result<u64> {
                field(&rec, i)?
                    .parse()
                    .map_err(|_| BenchError::Report(format!("bad {what} `{}`", rec.get(i).unwrap_or(""))))
            };
            rows.push(ReportRow {
                model: field(&rec, 0)?.parse()?,
                preprocessing: prep,
                n: int(2, "n")? as usize,
                seed: int(3, "seed")?,
                r2: parse_metric(field(&rec, 4)?, "r2")?,
                mse: parse_metric(field(&rec, 5)?, "mse")?,
                seconds: parse_metric(field(&rec, 6)?, "seconds")?.unwrap_or(f64::NAN),
            });
        }
        let mut points = Vec::new();
        let mut rdr = csv::Reader::from_reader(plot.as_bytes());
        check_header(&mut rdr, &PLOT_COLUMNS)?;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let num = |i: usize| -> Result<f64> {
                field(&rec, i)?
                    .parse()
                    .map_err(|_| BenchError::Report(format!("bad number `{}`", rec.get(i).unwrap_or(""))))
            };
            points.push(PlotPoint {
                cell_id: field(&rec, 0)?.to_string(),
                sample_id: field(&rec, 1)?
                    .parse()
                    .map_err(|_| BenchError::Report("bad sample_id".into()))?,
                truth: num(2)?,
                prediction: num(3)?,
            });
        }
        Ok(Self {
            rows,
            plot: points,
            failures: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::Report(e.to_string()))
    }

    /// Writes `<stem>.csv`, `<stem>.json` and `<stem>_plotdata.csv` next to
    /// `stem`, each atomically. Returns the paths written.
    pub fn emit(&self, stem: &Path) -> Result<Vec<PathBuf>> {
        if self.rows.is_empty() {
            return Err(BenchError::Report("refusing to write an empty report".into()));
        }
        let base = stem.to_string_lossy();
        let files = [
            (PathBuf::from(format!("{base}.csv")), self.metrics_csv()),
            (PathBuf::from(format!("{base}.json")), self.to_json()?),
            (PathBuf::from(format!("{base}_plotdata.csv")), self.plot_csv()),
        ];
        let mut written = Vec::new();
        for (path, text) in files {
            write_atomic(&path, text.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
