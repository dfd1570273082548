use std::collections::BTreeMap;

use hsreg_bench::harness::{subsample, CellOutcome};
use hsreg_bench::pipeline::PipelineModel;
use hsreg_bench::synth::TruncatedNormal;
use hsreg_bench::*;
use hsreg_core::preprocess::{msc_coefficients, msc_fit};
use hsreg_core::table_csv::write_spectra_csv;
use hsreg_core::{PreprocessKind, Preprocessor, SpectraTable, TargetKind};
use hsreg_nn::{ArchitectureConfig, TrainConfig};
use proptest::prelude::*;

fn small_cfg(n: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n_samples: n,
        seed,
        ..SynthConfig::default()
    }
}

fn tiny_settings() -> PipelineSettings {
    PipelineSettings {
        arch: ArchitectureConfig {
            stage_widths: vec![4, 8, 16],
            residual_counts: vec![1, 1, 2],
            mid_dropout_after: Some(1),
            ..ArchitectureConfig::default()
        },
        train: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        ..PipelineSettings::default()
    }
}

#[test]
fn equal_latents_without_noise_or_scatter_give_identical_spectra() {
    let cfg = SynthConfig {
        noise_sigma: 0.0,
        scatter: false,
        ..SynthConfig::default()
    };
    let wl = cfg.wavelengths();
    let z = SampleLatents {
        ssc: 9.1,
        firmness: 8.0,
        proxy_noise: 0.3,
        nuisance: vec![0.004; cfg.nuisance_centers_nm.len()],
    };
    let a = render_spectrum(&cfg, &wl, &z);
    let b = render_spectrum(&cfg, &wl, &z.clone());
    assert_eq!(a, b);
    assert_eq!(a.len(), 462);
}

#[test]
fn ssc_mean_matches_the_calibration_target() {
    let t = generate_synthetic_dataset(&SynthConfig::default()).unwrap();
    let y = t.targets();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    assert!((mean - 8.7).abs() <= 3.0 * se, "mean {mean}, se {se}");
    assert!(y.iter().all(|v| (7.2..=11.1).contains(v)));
}

#[test]
fn firmness_targets_respect_truncation() {
    let t = generate_synthetic_dataset(&SynthConfig {
        target: TargetKind::Firmness,
        ..SynthConfig::default()
    })
    .unwrap();
    assert_eq!(t.target_kind(), TargetKind::Firmness);
    assert!(t.targets().iter().all(|v| (5.98..=12.94).contains(v)));
}

#[test]
fn msc_recovers_equal_latent_spectra_to_the_noise_floor() {
    // Zero gains and no nuisance dips: every sample has the same clean
    // spectrum, so only scatter and noise separate them.
    let cfg = SynthConfig {
        n_samples: 40,
        ssc_gains: vec![0.0; 3],
        firmness_gains: vec![0.0; 3],
        nuisance_amplitude: 0.0,
        noise_sigma: 1e-3,
        ..SynthConfig::default()
    };
    let t = generate_synthetic_dataset(&cfg).unwrap();
    let reference = msc_fit(&t).unwrap();
    let prep = Preprocessor::Msc(reference.clone());
    let out = prep.transform(&t).unwrap();
    let slopes: Vec<f64> = t
        .rows()
        .iter()
        .map(|r| msc_coefficients(r, reference.reference.values()).unwrap().1)
        .collect();
    let sigma = cfg.effective_sigma();
    let raw_spread = (0..462).map(|j| (t.row(0)[j] - t.row(1)[j]).abs()).fold(0.0, f64::max);
    assert!(raw_spread > 0.01, "scatter should separate raw spectra");
    for i in 0..t.n_samples() {
        for k in i + 1..t.n_samples() {
            let floor = 5.0 * ((sigma / slopes[i]).powi(2) + (sigma / slopes[k]).powi(2)).sqrt();
            for j in 0..462 {
                let d = (out.row(i)[j] - out.row(k)[j]).abs();
                assert!(d <= floor, "samples {i},{k} band {j}: {d} > {floor}");
            }
        }
    }
}

#[test]
fn generator_is_bit_identical_for_equal_configs() {
    let cfg = small_cfg(30, 7);
    let a = generate_synthetic_dataset(&cfg).unwrap();
    let b = generate_synthetic_dataset(&cfg).unwrap();
    assert_eq!(write_spectra_csv(&a), write_spectra_csv(&b));
    let c = generate_synthetic_dataset(&small_cfg(30, 8)).unwrap();
    assert_ne!(a.rows(), c.rows());
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SynthConfig {
            n_samples: 9,
            ..SynthConfig::default()
        },
        SynthConfig {
            centers_nm: vec![585.0, 685.0, 1200.0],
            ..SynthConfig::default()
        },
        SynthConfig {
            noise_sigma: -1e-3,
            ..SynthConfig::default()
        },
        SynthConfig {
            first_nm: 900.0,
            last_nm: 400.0,
            ..SynthConfig::default()
        },
        SynthConfig {
            bands: 1,
            ..SynthConfig::default()
        },
        SynthConfig {
            depths: vec![0.1],
            ..SynthConfig::default()
        },
        SynthConfig {
            ssc: TruncatedNormal {
                mean: 8.7,
                sd: 0.0,
                lo: 7.0,
                hi: 9.0,
            },
            ..SynthConfig::default()
        },
    ];
    for cfg in bad {
        assert!(matches!(generate_synthetic_dataset(&cfg), Err(BenchError::Config(_))), "{cfg:?}");
    }
}

#[test]
fn plsr_is_near_perfect_in_the_linear_noise_free_regime() {
    let cfg = SynthConfig {
        curvature: 0.0,
        noise_sigma: 0.0,
        scatter: false,
        ..SynthConfig::default()
    };
    let t = generate_synthetic_dataset(&cfg).unwrap();
    let cell = Cell {
        model: ModelChoice::Plsr,
        prep: PreprocessKind::None,
        n: 200,
        seed: 42,
    };
    let out = run_cell(&t, &cell, &BenchSettings::default());
    let r2 = out.row.r2.unwrap();
    assert!(r2 >= 0.99, "r2 {r2}");
}

#[test]
fn one_cell_grid_gives_one_finite_row() {
    let t = generate_synthetic_dataset(&small_cfg(60, 1)).unwrap();
    let cells = [Cell {
        model: ModelChoice::Knnr,
        prep: PreprocessKind::SecondDiff,
        n: 50,
        seed: 42,
    }];
    let r = run_benchmark(&t, &cells, &BenchSettings::default()).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(r.rows[0].r2.unwrap().is_finite() && r.rows[0].mse.unwrap().is_finite());
    assert!(r.failures.is_empty());
    let id = &r.cell_ids()[0];
    assert_eq!(r.plot_for(id).count(), 10);
    assert_eq!(r.plot.len(), 10);
}

#[test]
fn duplicate_cells_produce_identical_rows() {
    let t = generate_synthetic_dataset(&small_cfg(80, 2)).unwrap();
    let c = Cell {
        model: ModelChoice::AdaBoost,
        prep: PreprocessKind::Msc,
        n: 60,
        seed: 5,
    };
    let settings = BenchSettings {
        threads: 2,
        ..BenchSettings::default()
    };
    let r = run_benchmark(&t, &[c, c], &settings).unwrap();
    assert_eq!(r.rows[0], r.rows[1]);
    let ids = r.cell_ids();
    let p0: Vec<_> = r.plot_for(&ids[0]).map(|p| (p.sample_id, p.truth, p.prediction)).collect();
    let p1: Vec<_> = r.plot_for(&ids[1]).map(|p| (p.sample_id, p.truth, p.prediction)).collect();
    assert_eq!(p0, p1);
}

#[test]
fn failing_cells_are_recorded_without_aborting() {
    let t = generate_synthetic_dataset(&small_cfg(60, 3)).unwrap();
    let mut settings = BenchSettings::default();
    settings
        .pipeline
        .hyperparams
        .insert(ModelChoice::Knnr, BTreeMap::from([("k".to_string(), 500.0)]));
    let cells = [
        Cell {
            model: ModelChoice::Knnr,
            prep: PreprocessKind::None,
            n: 50,
            seed: 1,
        },
        Cell {
            model: ModelChoice::Plsr,
            prep: PreprocessKind::None,
            n: 50,
            seed: 1,
        },
    ];
    let r = run_benchmark(&t, &cells, &settings).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.rows[0].r2, None);
    assert!(r.rows[1].r2.is_some());
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].cell_id, r.cell_ids()[0]);
    assert!(r.metrics_csv().lines().nth(1).unwrap().contains("NaN"));
    assert!(r.to_json().unwrap().contains("\"r2\": null"));
}

#[test]
fn oversized_cells_are_rejected_up_front() {
    let t = generate_synthetic_dataset(&small_cfg(30, 3)).unwrap();
    let cells = [Cell {
        model: ModelChoice::Knnr,
        prep: PreprocessKind::None,
        n: 50,
        seed: 1,
    }];
    assert!(matches!(run_benchmark(&t, &cells, &BenchSettings::default()), Err(BenchError::Config(_))));
}

#[test]
fn default_grid_covers_classical_preprocessing_and_raw_network() {
    let g = default_grid(&[50, 200], &[42, 43]);
    assert_eq!(g.len(), 2 * 2 * 13);
    assert!(g
        .iter()
        .filter(|c| c.model == ModelChoice::Con1dResNet)
        .all(|c| c.prep == PreprocessKind::None));
}

fn fit_phases_avoid_test_rows(out: &CellOutcome) -> bool {
    let test: Vec<usize> = out
        .audit
        .iter()
        .filter(|e| e.phase == Phase::Evaluate)
        .flat_map(|e| e.rows.iter().copied())
        .collect();
    !test.is_empty()
        && out
            .audit
            .iter()
            .filter(|e| e.phase != Phase::Evaluate)
            .all(|e| e.rows.iter().all(|r| !test.contains(r)))
}

#[test]
fn network_cells_never_touch_test_rows_before_evaluation() {
    let t = generate_synthetic_dataset(&small_cfg(60, 4)).unwrap();
    let cell = Cell {
        model: ModelChoice::Con1dResNet,
        prep: PreprocessKind::None,
        n: 50,
        seed: 9,
    };
    let settings = BenchSettings {
        pipeline: tiny_settings(),
        ..BenchSettings::default()
    };
    let out = run_cell(&t, &cell, &settings);
    assert!(out.error.is_none(), "{:?}", out.error);
    assert!(fit_phases_avoid_test_rows(&out));
    let phases: Vec<Phase> = out.audit.iter().map(|e| e.phase).collect();
    assert_eq!(phases, [Phase::PreprocessFit, Phase::ModelFit, Phase::Select, Phase::Evaluate]);
}

#[test]
fn pipelines_round_trip_through_json() {
    let t = generate_synthetic_dataset(&small_cfg(40, 5)).unwrap();
    let train = t.select(&(0..28).collect::<Vec<_>>()).unwrap();
    let val = t.select(&(28..32).collect::<Vec<_>>()).unwrap();
    let test = t.select(&(32..40).collect::<Vec<_>>()).unwrap();
    for model in ModelChoice::ALL {
        let prep = if model == ModelChoice::Con1dResNet {
            PreprocessKind::None
        } else {
            PreprocessKind::Msc
        };
        let (pipe, details) = fit_pipeline(model, prep, &train, &val, &tiny_settings(), 3).unwrap();
        assert_eq!(details.history.is_some(), model == ModelChoice::Con1dResNet);
        let back = FittedPipeline::from_json(&pipe.to_json().unwrap()).unwrap();
        assert_eq!(pipe.predict(&test).unwrap(), back.predict(&test).unwrap(), "{model}");
        if let PipelineModel::Classical { hyperparams, .. } = &pipe.model {
            assert!(!hyperparams.is_empty());
        }
    }
}

#[test]
fn pipeline_rejects_a_foreign_grid() {
    let t = generate_synthetic_dataset(&small_cfg(20, 5)).unwrap();
    let (pipe, _) = fit_pipeline(
        ModelChoice::Knnr,
        PreprocessKind::None,
        &t.select(&(0..14).collect::<Vec<_>>()).unwrap(),
        &t.select(&(14..16).collect::<Vec<_>>()).unwrap(),
        &PipelineSettings::default(),
        1,
    )
    .unwrap();
    let other = SpectraTable::new(vec![1.0, 2.0, 3.0], vec![vec![0.0; 3]], vec![1.0], TargetKind::Ssc).unwrap();
    assert!(pipe.predict(&other).is_err());
}

fn sample_report() -> BenchmarkReport {
    let t = generate_synthetic_dataset(&small_cfg(60, 6)).unwrap();
    let cells = [
        Cell {
            model: ModelChoice::Plsr,
            prep: PreprocessKind::SecondDiff,
            n: 50,
            seed: 1,
        },
        Cell {
            model: ModelChoice::Svr,
            prep: PreprocessKind::None,
            n: 60,
            seed: 2,
        },
    ];
    run_benchmark(&t, &cells, &BenchSettings::default()).unwrap()
}

#[test]
fn csv_and_json_round_trip() {
    let r = sample_report();
    assert_eq!(BenchmarkReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    assert_eq!(BenchmarkReport::from_csv(&r.metrics_csv(), &r.plot_csv()).unwrap(), r);
    assert_eq!(r.metrics_csv().lines().next().unwrap(), "model,preprocessing,n,seed,r2,mse,seconds");
    assert_eq!(r.plot_csv().lines().next().unwrap(), "cell_id,sample_id,truth,prediction");
}

#[test]
fn plotdata_has_one_row_per_test_sample() {
    let r = sample_report();
    let ids = r.cell_ids();
    assert_eq!(r.plot_for(&ids[0]).count(), 10);
    assert_eq!(r.plot_for(&ids[1]).count(), 12);
}

#[test]
fn emit_writes_three_files_and_names_failing_paths() {
    let r = sample_report();
    let dir = tempfile::tempdir().unwrap();
    let written = r.emit(&dir.path().join("bench")).unwrap();
    assert_eq!(written.len(), 3);
    let metrics = std::fs::read_to_string(&written[0]).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    let plot = std::fs::read_to_string(&written[2]).unwrap();
    assert_eq!(BenchmarkReport::from_csv(&metrics, &plot).unwrap(), r);

    let missing = dir.path().join("no/such/dir/bench");
    let err = r.emit(&missing).unwrap_err();
    assert!(err.to_string().contains("no/such/dir"), "{err}");
    assert!(BenchmarkReport::default().emit(&dir.path().join("empty")).is_err());
}

#[test]
fn malformed_report_csv_is_rejected() {
    assert!(BenchmarkReport::from_csv("model,n\nsvr,3\n", "cell_id,sample_id,truth,prediction\n").is_err());
    let r = sample_report();
    let broken = r.metrics_csv().replace("plsr", "lasso");
    assert!(BenchmarkReport::from_csv(&broken, &r.plot_csv()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_determinism(seed in any::<u64>(), n in 10usize..30) {
        let cfg = small_cfg(n, seed);
        let a = generate_synthetic_dataset(&cfg).unwrap();
        let b = generate_synthetic_dataset(&cfg).unwrap();
        prop_assert_eq!(a.rows(), b.rows());
        prop_assert_eq!(a.targets(), b.targets());
    }

    #[test]
    fn classical_cells_never_leak_test_rows(
        seed in any::<u64>(),
        n in 20usize..=40,
        model in prop::sample::select(vec![ModelChoice::Svr, ModelChoice::Knnr, ModelChoice::Plsr]),
        prep in prop::sample::select(vec![PreprocessKind::None, PreprocessKind::Msc, PreprocessKind::SecondDiff]),
    ) {
        let t = generate_synthetic_dataset(&small_cfg(40, seed)).unwrap();
        let out = run_cell(&t, &Cell { model, prep, n, seed }, &BenchSettings::default());
        prop_assert!(out.error.is_none(), "{:?}", out.error);
        prop_assert!(fit_phases_avoid_test_rows(&out));
        prop_assert!(out.row.r2.unwrap() <= 1.0);
        let used: usize = out.audit.iter().filter(|e| e.phase != Phase::ModelFit).map(|e| e.rows.len()).sum();
        prop_assert_eq!(used, n);
    }

    #[test]
    fn subsample_is_a_sorted_subset(total in 10usize..300, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let n = ((total as f64 * frac) as usize).max(1);
        let s = subsample(total, n, seed);
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|&i| i < total));
    }
}
