//! The model × preprocessing × sample-size × seed grid.
//!
//! Each cell subsamples the table, splits it 7:1:2, fits on the training
//! rows, selects on the validation rows and scores the test rows. Every row
//! handed to a fitting step is logged, so leakage can be audited afterwards.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::pipeline::{fit_pipeline, ModelChoice, PipelineSettings};
use crate::report::{BenchmarkReport, CellFailure, PlotPoint, ReportRow};
use hsreg_core::{mse, r_squared, split_dataset, PreprocessKind, SpectraTable};

/// Offset separating the subsampling stream from the split stream.
const SUBSAMPLE_SALT: u64 = 0x5eed_5ab5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub model: ModelChoice,
    pub prep: PreprocessKind,
    pub n: usize,
    pub seed: u64,
}

/// The standard grid: every classical model with every preprocessing, and
/// the network on raw spectra, at each size and seed.
pub fn default_grid(sizes: &[usize], seeds: &[u64]) -> Vec<Cell> {
    let preps = [PreprocessKind::None, PreprocessKind::Msc, PreprocessKind::SecondDiff];
    let mut cells = Vec::new();
    for &seed in seeds {
        for &n in sizes {
            for model in ModelChoice::ALL {
                let ps: &[PreprocessKind] = if model == ModelChoice::Con1dResNet {
                    &preps[..1]
                } else {
                    &preps
                };
                for &prep in ps {
                    cells.push(Cell { model, prep, n, seed });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchSettings {
    pub pipeline: PipelineSettings,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
    /// Record wall time per cell; otherwise `seconds` is 0 so reports are
    /// reproducible byte for byte.
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    PreprocessFit,
    ModelFit,
    Select,
    Evaluate,
}

/// Rows of the benchmarked table released to one phase of one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEvent {
    pub phase: Phase,
    pub rows: Vec<usize>,
}

/// Hands out table subsets and remembers who asked for what.
struct AuditedTable<'a> {
    table: &'a SpectraTable,
    log: Vec<AccessEvent>,
}

impl AuditedTable<'_> {
    fn take(&mut self, phases: &[Phase], rows: &[usize]) -> Result<SpectraTable> {
        for &phase in phases {
            self.log.push(AccessEvent {
                phase,
                rows: rows.to_vec(),
            });
        }
        Ok(self.table.select(rows)?)
    }
}

/// Result of one cell, successful or not.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub row: ReportRow,
    /// `(sample_id, truth, prediction)` for each test row.
    pub predictions: Vec<(usize, f64, f64)>,
    pub audit: Vec<AccessEvent>,
    pub error: Option<String>,
}

/// Table rows used by a cell of size `n`.
pub fn subsample(n_total: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_total).collect();
    if n < n_total {
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ SUBSAMPLE_SALT));
        idx.truncate(n);
        idx.sort_unstable();
    }
    idx
}

fn cell_body(table: &SpectraTable, cell: &Cell, settings: &PipelineSettings, audit: &mut AuditedTable) -> Result<(f64, f64, Vec<(usize, f64, f64)>)> {
    let pool = subsample(table.n_samples(), cell.n, cell.seed);
    let split = split_dataset(pool.len(), cell.seed)?;
    let pick = |ix: &[usize]| -> Vec<usize> { ix.iter().map(|&i| pool[i]).collect() };
    let (tr_rows, va_rows, te_rows) = (pick(&split.train), pick(&split.val), pick(&split.test));

    let train = audit.take(&[Phase::PreprocessFit, Phase::ModelFit], &tr_rows)?;
    let val = audit.take(&[Phase::Select], &va_rows)?;
    let (pipe, _) = fit_pipeline(cell.model, cell.prep, &train, &val, settings, cell.seed)?;

    let test = audit.take(&[Phase::Evaluate], &te_rows)?;
    let pred = pipe.predict(&test)?;
    let r2 = r_squared(&pred, test.targets())?;
    let e = mse(&pred, test.targets())?;
    let points = te_rows
        .iter()
        .zip(test.targets())
        .zip(&pred)
        .map(|((&i, &t), &p)| (i, t, p))
        .collect();
    Ok((r2, e, points))
}

/// Runs one cell; failures are captured in the outcome.
pub fn run_cell(table: &SpectraTable, cell: &Cell, settings: &BenchSettings) -> CellOutcome {
    let start = Instant::now();
    let mut audit = AuditedTable { table, log: Vec::new() };
    let res = cell_body(table, cell, &settings.pipeline, &mut audit);
    let seconds = if settings.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let (r2, e, predictions, error) = match res {
        Ok((r2, e, p)) if r2.is_finite() && e.is_finite() => (Some(r2), Some(e), p, None),
        Ok(_) => (None, None, Vec::new(), Some("non-finite test metrics".to_string())),
        Err(err) => (None, None, Vec::new(), Some(err.to_string())),
    };
    if let Some(msg) = &error {
        log::warn!("cell {:?} failed: {msg}", cell);
    }
    CellOutcome {
        row: ReportRow {
            model: cell.model,
            preprocessing: cell.prep,
            n: cell.n,
            seed: cell.seed,
            r2,
            mse: e,
            seconds,
        },
        predictions,
        audit: audit.log,
        error,
    }
}

/// Runs every cell (concurrently when threads allow) and assembles the
/// report in grid order.
pub fn run_benchmark(table: &SpectraTable, cells: &[Cell], settings: &BenchSettings) -> Result<BenchmarkReport> {
    if cells.is_empty() {
        return Err(BenchError::Config("the benchmark grid is empty".into()));
    }
    if let Some(c) = cells.iter().find(|c| c.n > table.n_samples()) {
        return Err(BenchError::Config(format!(
            "sample size {} exceeds the {} available samples",
            c.n,
            table.n_samples()
        )));
    }
    let threads = match settings.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .min(cells.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CellOutcome>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                log::info!("cell {}/{}: {} {} n={} seed={}", i + 1, cells.len(), cell.model, cell.prep.as_str(), cell.n, cell.seed);
                let out = run_cell(table, cell, settings);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(out);
            });
        }
    });
    let mut report = BenchmarkReport::default();
    for (i, out) in slots.into_inner().expect("workers joined").into_iter().enumerate() {
        let out = out.expect("every cell ran");
        let id = out.row.cell_id(i);
        report.plot.extend(out.predictions.iter().map(|&(sample_id, truth, prediction)| PlotPoint {
            cell_id: id.clone(),
            sample_id,
            truth,
            prediction,
        }));
        if let Some(message) = out.error {
            report.failures.push(CellFailure { cell_id: id, message });
        }
        report.rows.push(out.row);
    }
    Ok(report)
}
