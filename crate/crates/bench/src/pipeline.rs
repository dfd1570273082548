//! A preprocessing step fitted on training rows, chained with a regressor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use hsreg_core::classical::{fit_regressor, RegressorKind, RegressorSpec, TrainedModel};
use hsreg_core::{PreprocessKind, Preprocessor, SpectraTable, TargetKind};
use hsreg_nn::resnet::train;
use hsreg_nn::{ArchitectureConfig, Con1dResNet, SavedModel, TrainConfig, TrainHistory};

const PIPELINE_FORMAT: &str = "hsreg-pipeline";
const PIPELINE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Svr,
    Knnr,
    #[serde(rename = "adaboost")]
    AdaBoost,
    Plsr,
    #[serde(rename = "con1dresnet")]
    Con1dResNet,
}

impl ModelChoice {
    pub const ALL: [ModelChoice; 5] = [
        ModelChoice::Svr,
        ModelChoice::Knnr,
        ModelChoice::AdaBoost,
        ModelChoice::Plsr,
        ModelChoice::Con1dResNet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelChoice::Svr => "svr",
            ModelChoice::Knnr => "knnr",
            ModelChoice::AdaBoost => "adaboost",
            ModelChoice::Plsr => "plsr",
            ModelChoice::Con1dResNet => "con1dresnet",
        }
    }

    pub fn classical(self) -> Option<RegressorKind> {
        match self {
            ModelChoice::Svr => Some(RegressorKind::Svr),
            ModelChoice::Knnr => Some(RegressorKind::Knnr),
            ModelChoice::AdaBoost => Some(RegressorKind::AdaBoostR),
            ModelChoice::Plsr => Some(RegressorKind::Plsr),
            ModelChoice::Con1dResNet => None,
        }
    }
}

impl std::fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelChoice {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "con1dresnet" | "resnet" | "cnn" => Ok(ModelChoice::Con1dResNet),
            other => match other.parse::<RegressorKind>() {
                Ok(RegressorKind::Svr) => Ok(ModelChoice::Svr),
                Ok(RegressorKind::Knnr) => Ok(ModelChoice::Knnr),
                Ok(RegressorKind::AdaBoostR) => Ok(ModelChoice::AdaBoost),
                Ok(RegressorKind::Plsr) => Ok(ModelChoice::Plsr),
                Err(_) => Err(BenchError::Config(format!("unknown model `{s}`"))),
            },
        }
    }
}

/// Hyperparameter overrides and network settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    /// Overrides on top of each classical model's defaults, keyed by model.
    pub hyperparams: BTreeMap<ModelChoice, BTreeMap<String, f64>>,
    /// `input_bands` is replaced by the preprocessed band count.
    pub arch: ArchitectureConfig,
    /// `seed` is replaced by the pipeline seed.
    pub train: TrainConfig,
}

impl PipelineSettings {
    pub fn regressor_spec(&self, kind: RegressorKind, choice: ModelChoice) -> RegressorSpec {
        let mut spec = RegressorSpec::with_defaults(kind);
        if let Some(over) = self.hyperparams.get(&choice) {
            if kind == RegressorKind::Plsr && over.contains_key("n_components") {
                spec.hyperparams.remove("grid_max");
            }
            for (k, v) in over {
                spec = spec.set(k, *v);
            }
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PipelineModel {
    Classical {
        model: TrainedModel,
        hyperparams: BTreeMap<String, f64>,
    },
    Resnet {
        network: SavedModel,
    },
}

/// Everything needed to predict a raw spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub format: String,
    pub version: u32,
    pub model_choice: ModelChoice,
    pub target: TargetKind,
    /// Raw wavelength grid the pipeline accepts.
    pub bands: Vec<f64>,
    pub preprocessor: Preprocessor,
    pub model: PipelineModel,
}

/// Side results of fitting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitDetails {
    pub history: Option<TrainHistory>,
    pub warnings: Vec<String>,
}

/// Fits the preprocessing on `train`, then the model on the preprocessed
/// training rows. `val` is used only for PLSR component selection and
/// network checkpoint selection.
pub fn fit_pipeline(
    model: ModelChoice,
    prep: PreprocessKind,
    train_set: &SpectraTable,
    val_set: &SpectraTable,
    settings: &PipelineSettings,
    seed: u64,
) -> Result<(FittedPipeline, FitDetails)> {
    if train_set.bands() != val_set.bands() {
        return Err(BenchError::Config("training and validation grids differ".into()));
    }
    let preprocessor = Preprocessor::fit(prep, train_set)?;
    let tr = preprocessor.transform(train_set)?;
    let va = preprocessor.transform(val_set)?;
    let mut details = FitDetails::default();
    let fitted = match model.classical() {
        Some(kind) => {
            let spec = settings.regressor_spec(kind, model);
            let out = fit_regressor(&spec, tr.rows(), tr.targets(), Some((va.rows(), va.targets())))?;
            details.warnings = out.warnings;
            PipelineModel::Classical {
                model: out.model,
                hyperparams: out.resolved.hyperparams,
            }
        }
        None => {
            let arch = ArchitectureConfig {
                input_bands: tr.n_bands(),
                ..settings.arch.clone()
            };
            let cfg = TrainConfig {
                seed,
                ..settings.train.clone()
            };
            let net = Con1dResNet::build(arch, seed)?;
            let (net, history) = train(net, &tr, &va, &cfg)?;
            details.history = Some(history);
            PipelineModel::Resnet { network: net.to_saved() }
        }
    };
    Ok((
        FittedPipeline {
            format: PIPELINE_FORMAT.into(),
            version: PIPELINE_VERSION,
            model_choice: model,
            target: train_set.target_kind(),
            bands: train_set.bands().to_vec(),
            preprocessor,
            model: fitted,
        },
        details,
    ))
}

/// A pipeline ready to predict, with the network rebuilt once.
pub enum Predictor<'a> {
    Classical(&'a TrainedModel),
    Resnet(Box<Con1dResNet>),
}

impl FittedPipeline {
    pub fn predictor(&self) -> Result<Predictor<'_>> {
        Ok(match &self.model {
            PipelineModel::Classical { model, .. } => Predictor::Classical(model),
            PipelineModel::Resnet { network } => Predictor::Resnet(Box::new(network.clone().into_model()?)),
        })
    }

    /// Predicts every row of a raw table on the pipeline's grid.
    pub fn predict(&self, table: &SpectraTable) -> Result<Vec<f64>> {
        if table.bands() != self.bands.as_slice() {
            return Err(BenchError::Core(hsreg_core::Error::Dimension(format!(
                "pipeline expects {} bands on its training grid, table has {}",
                self.bands.len(),
                table.n_bands()
            ))));
        }
        let x = self.preprocessor.transform(table)?;
        Ok(match self.predictor()? {
            Predictor::Classical(m) => m.predict_rows(x.rows())?,
            Predictor::Resnet(net) => net.predict_rows(x.rows())?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: FittedPipeline = serde_json::from_str(text)?;
        if p.format != PIPELINE_FORMAT || p.version != PIPELINE_VERSION {
            return Err(BenchError::Report(format!(
                "unsupported model file {} v{}",
                p.format, p.version
            )));
        }
        Ok(p)
    }
}
