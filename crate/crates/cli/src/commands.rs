//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::args::*;
use crate::error::CliError;
use crate::output::Run;
use hsreg_bench::pipeline::PipelineModel;
use hsreg_bench::{default_grid, fit_pipeline, generate_synthetic_dataset, run_benchmark, BenchSettings, FittedPipeline, ModelChoice, PipelineSettings, SynthConfig};
use hsreg_core::calibration::{calibrate_cube, cube_mean_spectrum, CalibrationRefs};
use hsreg_core::envi::{parse_envi_header, read_cube, roi_mean_spectrum, locate_payload, ByteOrder, DataType, RoiMask, SpectralCube};
use hsreg_core::preprocess::msc_fit;
use hsreg_core::table_csv::{read_spectra_csv, write_spectra_csv};
use hsreg_core::{mse, r_squared, split_dataset, PreprocessKind, Preprocessor, SpectraTable, TargetKind};

pub fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Convert(a) => convert(&a),
        Command::Calibrate(a) => calibrate(&a),
        Command::Preprocess(a) => preprocess(&a),
        Command::Split(a) => split(&a),
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Benchmark(a) => benchmark(&a),
    }
}

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::usage(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(())
}

fn require_output_dir(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => {
            Err(CliError::usage(format!("output directory {} does not exist", d.display())))
        }
        _ => Ok(()),
    }
}

fn config_of<T: serde::Serialize>(args: &T) -> Result<serde_json::Value, CliError> {
    Ok(serde_json::to_value(args)?)
}

fn load_cube(run: &mut Run, header: &Path, payload: Option<&Path>) -> Result<SpectralCube, CliError> {
    let text = run.read_text(header)?;
    let h = parse_envi_header(&text).map_err(|e| CliError::from(e).context(header.display()))?;
    let data_path = match payload {
        Some(p) => p.to_path_buf(),
        None => locate_payload(header).map_err(|e| CliError::usage(e.to_string()))?,
    };
    let raw = run.read(&data_path)?;
    read_cube(&h, &raw).map_err(|e| CliError::from(e).context(data_path.display()))
}

fn reference_pair(run: &mut Run, white: &Path, dark: &Path) -> Result<CalibrationRefs, CliError> {
    let w = cube_mean_spectrum(&load_cube(run, white, None)?)?;
    let d = cube_mean_spectrum(&load_cube(run, dark, None)?)?;
    Ok(CalibrationRefs::new(d, w)?)
}

fn convert(a: &ConvertArgs) -> Result<(), CliError> {
    let mut inputs: Vec<&Path> = vec![&a.header];
    inputs.extend(a.cube.as_deref());
    inputs.extend(a.roi.iter().map(PathBuf::as_path));
    inputs.extend(a.white.as_deref());
    inputs.extend(a.dark.as_deref());
    require_inputs(inputs)?;
    require_output_dir(&a.output)?;
    if !a.target_values.is_empty() && a.target_values.len() != a.roi.len() {
        return Err(CliError::usage(format!(
            "{} target values for {} ROI files",
            a.target_values.len(),
            a.roi.len()
        )));
    }

    let mut run = Run::new("convert");
    let mut cube = load_cube(&mut run, &a.header, a.cube.as_deref())?;
    if let (Some(w), Some(d)) = (&a.white, &a.dark) {
        let refs = reference_pair(&mut run, w, d)?;
        let cal = calibrate_cube(&cube, &refs)?;
        if !cal.warnings.is_empty() {
            log::warn!("{} calibrated values fall outside the plausible reflectance range", cal.warnings.len());
        }
        cube = cal.output;
    }
    let mut rows = Vec::new();
    for roi in &a.roi {
        let text = run.read_text(roi)?;
        let mask = RoiMask::parse(&text).map_err(|e| CliError::from(e).context(roi.display()))?;
        let s = roi_mean_spectrum(&cube, &mask).map_err(|e| CliError::from(e).context(roi.display()))?;
        rows.push(s.values().to_vec());
    }
    if a.target_values.is_empty() {
        log::warn!("no target values given; writing 0 for every row");
    }
    let y = if a.target_values.is_empty() {
        vec![0.0; rows.len()]
    } else {
        a.target_values.clone()
    };
    let table = SpectraTable::new(cube.header().band_axis(), rows, y, TargetKind::Ssc)?;
    run.output(a.output.clone(), write_spectra_csv(&table));
    run.finish(None, &config_of(a)?)?;
    Ok(())
}

fn calibrate(a: &CalibrateArgs) -> Result<(), CliError> {
    let mut inputs: Vec<&Path> = vec![&a.header, &a.white, &a.dark];
    inputs.extend(a.cube.as_deref());
    require_inputs(inputs)?;
    require_output_dir(&a.output)?;
    let mut run = Run::new("calibrate");
    let cube = load_cube(&mut run, &a.header, a.cube.as_deref())?;
    let refs = reference_pair(&mut run, &a.white, &a.dark)?;
    let cal = calibrate_cube(&cube, &refs)?;
    for w in cal.warnings.iter().take(10) {
        log::warn!("pixel {} band {}: reflectance {} outside the plausible range", w.pixel, w.band, w.value);
    }
    let out = &cal.output;
    let mut header = out.header().clone();
    header.data_type = DataType::F64;
    header.byte_order = ByteOrder::Little;
    let payload = out.encode(header.interleave, DataType::F64, ByteOrder::Little)?;
    run.output(a.output.clone(), payload);
    run.output(a.output.with_extension("hdr"), header.to_text());
    let mut config = config_of(a)?;
    config["range_warnings"] = json!(cal.warnings.len());
    run.finish(None, &config)?;
    Ok(())
}

fn read_table(run: &mut Run, path: &Path, target: TargetKind) -> Result<SpectraTable, CliError> {
    let text = run.read_text(path)?;
    read_spectra_csv(&text, target).map_err(|e| CliError::from(e).context(path.display()))
}

fn preprocess(a: &PreprocessArgs) -> Result<(), CliError> {
    let mut inputs: Vec<&Path> = vec![&a.input];
    inputs.extend(a.reference.as_deref());
    require_inputs(inputs)?;
    require_output_dir(&a.output)?;
    let mut run = Run::new("preprocess");
    let table = read_table(&mut run, &a.input, a.target.into())?;
    let kind: PreprocessKind = a.method.into();
    let prep = match (&a.reference, kind) {
        (Some(r), PreprocessKind::Msc) => {
            let reference = read_table(&mut run, r, a.target.into())?;
            Preprocessor::Msc(msc_fit(&reference)?)
        }
        _ => Preprocessor::fit(kind, &table)?,
    };
    let out = prep.transform(&table)?;
    run.output(a.output.clone(), write_spectra_csv(&out));
    run.finish(None, &config_of(a)?)?;
    Ok(())
}

fn split(a: &SplitArgs) -> Result<(), CliError> {
    require_inputs([a.input.as_path()])?;
    if !a.out_dir.is_dir() {
        return Err(CliError::usage(format!("output directory {} does not exist", a.out_dir.display())));
    }
    let mut run = Run::new("split");
    let table = read_table(&mut run, &a.input, a.target.into())?;
    let s = split_dataset(table.n_samples(), a.seed)?;
    for (name, idx) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        run.output(a.out_dir.join(format!("{name}.csv")), write_spectra_csv(&table.select(idx)?));
    }
    let mut indices = serde_json::to_string_pretty(&s)?;
    indices.push('\n');
    run.output(a.out_dir.join("split.json"), indices);
    let (tr, va, te) = s.sizes();
    println!("train={tr} val={va} test={te}");
    run.finish(Some(a.seed), &config_of(a)?)?;
    Ok(())
}

fn synth_config(a: &SynthArgs) -> SynthConfig {
    let d = SynthConfig::default();
    SynthConfig {
        n_samples: a.n_samples,
        seed: a.seed,
        target: a.target.into(),
        noise_sigma: a.noise_sigma.unwrap_or(d.noise_sigma),
        curvature: a.curvature.unwrap_or(d.curvature),
        scatter: !a.no_scatter,
        ..d
    }
}

fn synth(a: &SynthArgs) -> Result<(), CliError> {
    require_output_dir(&a.output)?;
    let cfg = synth_config(a);
    let table = generate_synthetic_dataset(&cfg)?;
    let mut run = Run::new("synth");
    run.output(a.output.clone(), write_spectra_csv(&table));
    let config = json!({ "args": config_of(a)?, "generator": cfg });
    run.finish(Some(a.seed), &config)?;
    Ok(())
}

fn pipeline_settings(net: &NetArgs, params: &[(ModelChoice, BTreeMap<String, f64>)]) -> Result<PipelineSettings, CliError> {
    let mut s = PipelineSettings::default();
    if let Some(e) = net.epochs {
        s.train.epochs = e;
    }
    if let Some(b) = net.batch_size {
        s.train.batch_size = b;
    }
    if let Some(lr) = net.lr {
        s.train.adam.lr = lr;
    }
    if let Some(p) = net.dropout {
        s.arch.dropout_p = p;
    }
    for (m, hp) in params {
        s.hyperparams.insert(*m, hp.clone());
    }
    Ok(s)
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--param expects key=value, got `{item}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("--param {k}: `{v}` is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Preprocessing used by `train` when none is given.
pub fn default_preprocess(model: ModelChoice) -> PreprocessKind {
    match model {
        ModelChoice::Con1dResNet => PreprocessKind::None,
        _ => PreprocessKind::SecondDiff,
    }
}

fn train(a: &TrainArgs) -> Result<(), CliError> {
    require_inputs([a.train.as_path(), a.val.as_path()])?;
    require_output_dir(&a.output)?;
    if let Some(h) = &a.history {
        require_output_dir(h)?;
    }
    let model: ModelChoice = a.model.into();
    let prep = a.preprocess.map(Into::into).unwrap_or_else(|| default_preprocess(model));
    let params = parse_params(&a.param)?;
    let settings = pipeline_settings(&a.net, &[(model, params)])?;

    let mut run = Run::new("train");
    let train_set = read_table(&mut run, &a.train, a.target.into())?;
    let val_set = read_table(&mut run, &a.val, a.target.into())?;
    let (pipe, details) = fit_pipeline(model, prep, &train_set, &val_set, &settings, a.seed)?;
    for w in &details.warnings {
        log::warn!("{w}");
    }
    let pred = pipe.predict(&val_set)?;
    println!(
        "validation r2={:?} mse={:?}",
        r_squared(&pred, val_set.targets())?,
        mse(&pred, val_set.targets())?
    );

    run.output(a.output.clone(), pipe.to_json()?);
    if let (Some(path), Some(h)) = (&a.history, &details.history) {
        run.output(path.clone(), h.to_csv(a.timing));
    }
    let resolved = match &pipe.model {
        PipelineModel::Classical { hyperparams, .. } => json!({ "hyperparams": hyperparams }),
        PipelineModel::Resnet { network } => json!({
            "architecture": network.config,
            "training": hsreg_nn::TrainConfig { seed: a.seed, ..settings.train.clone() },
            "best_epoch": details.history.as_ref().map(|h| h.best_epoch),
        }),
    };
    let config = json!({ "args": config_of(a)?, "preprocess": prep, "resolved": resolved });
    run.finish(Some(a.seed), &config)?;
    Ok(())
}

/// `r2=… mse=…` with every digit, as printed by `evaluate`.
pub fn format_metrics(r2: f64, mse: f64) -> String {
    format!("r2={r2:?} mse={mse:?}")
}

fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    require_inputs([a.model.as_path(), a.input.as_path()])?;
    if let Some(p) = &a.predictions {
        require_output_dir(p)?;
    }
    let mut run = Run::new("evaluate");
    let text = run.read_text(&a.model)?;
    let pipe = FittedPipeline::from_json(&text).map_err(|e| CliError::from(e).context(a.model.display()))?;
    let table = read_table(&mut run, &a.input, pipe.target)?;
    let pred = pipe.predict(&table)?;
    let r2 = r_squared(&pred, table.targets())?;
    let e = mse(&pred, table.targets())?;
    println!("{}", format_metrics(r2, e));
    if let Some(p) = &a.predictions {
        let mut csv = String::from("sample_id,truth,prediction\n");
        for (i, (t, y)) in table.targets().iter().zip(&pred).enumerate() {
            csv.push_str(&format!("{i},{t:?},{y:?}\n"));
        }
        run.output(p.clone(), csv);
        let config = json!({ "args": config_of(a)?, "r2": r2, "mse": e });
        run.finish(None, &config)?;
    }
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> Result<(), CliError> {
    if let Some(i) = &a.input {
        require_inputs([i.as_path()])?;
    }
    require_output_dir(&a.output)?;
    let mut run = Run::new("benchmark");
    let (table, generator) = match &a.input {
        Some(i) => (read_table(&mut run, i, a.target.into())?, None),
        None => {
            let cfg = SynthConfig {
                n_samples: a.n_samples,
                seed: a.seed,
                target: a.target.into(),
                ..SynthConfig::default()
            };
            (generate_synthetic_dataset(&cfg)?, Some(cfg))
        }
    };
    let seeds = if a.seeds.is_empty() { vec![a.seed] } else { a.seeds.clone() };
    let models: Vec<ModelChoice> = if a.models.is_empty() {
        ModelChoice::ALL.to_vec()
    } else {
        a.models.iter().map(|&m| m.into()).collect()
    };
    let preps: Vec<PreprocessKind> = if a.preprocess.is_empty() {
        vec![PreprocessKind::None, PreprocessKind::Msc, PreprocessKind::SecondDiff]
    } else {
        a.preprocess.iter().map(|&p| p.into()).collect()
    };
    let cells: Vec<_> = default_grid(&a.sizes, &seeds)
        .into_iter()
        .filter(|c| models.contains(&c.model) && (c.model == ModelChoice::Con1dResNet || preps.contains(&c.prep)))
        .collect();
    let settings = BenchSettings {
        pipeline: pipeline_settings(&a.net, &[])?,
        threads: a.threads,
        timing: a.timing,
    };
    let report = run_benchmark(&table, &cells, &settings)?;
    for r in &report.rows {
        println!(
            "{:<12} {:<5} n={:<4} seed={:<6} r2={} mse={}",
            r.model.as_str(),
            r.preprocessing.as_str(),
            r.n,
            r.seed,
            r.r2.map_or("NaN".into(), |v| format!("{v:.4}")),
            r.mse.map_or("NaN".into(), |v| format!("{v:.4}")),
        );
    }
    for f in &report.failures {
        log::warn!("{}: {}", f.cell_id, f.message);
    }
    let stem = a.output.to_string_lossy();
    run.output(PathBuf::from(format!("{stem}.csv")), report.metrics_csv());
    run.output(PathBuf::from(format!("{stem}.json")), report.to_json()?);
    run.output(PathBuf::from(format!("{stem}_plotdata.csv")), report.plot_csv());
    let config = json!({
        "args": config_of(a)?,
        "seeds": seeds,
        "cells": cells,
        "generator": generator,
        "pipeline": settings.pipeline,
    });
    run.finish(Some(a.seed), &config)?;
    Ok(())
}
