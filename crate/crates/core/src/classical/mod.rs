//! The four classical regressors behind one fit/predict/serialize contract.

pub mod adaboost;
pub mod knn;
pub mod linalg;
pub mod pls;
pub mod svr;
pub mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use adaboost::{adaboost_r2_fit, AdaBoostModel, AdaBoostParams, BoostRound};
pub use knn::{knnr_fit, KnnModel};
pub use pls::{plsr_fit, plsr_select_components, ComponentSearch, PlsModel};
pub use svr::{svr_fit, SvrModel, SvrParams};
pub use tree::{tree_fit, RegressionTree};

use crate::error::{Error, Result};

/// Version of the model JSON document.
pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "hsreg-classical-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Svr,
    Knnr,
    #[serde(rename = "adaboost")]
    AdaBoostR,
    Plsr,
}

impl RegressorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegressorKind::Svr => "svr",
            RegressorKind::Knnr => "knnr",
            RegressorKind::AdaBoostR => "adaboost",
            RegressorKind::Plsr => "plsr",
        }
    }

    pub const ALL: [RegressorKind; 4] = [
        RegressorKind::Svr,
        RegressorKind::Knnr,
        RegressorKind::AdaBoostR,
        RegressorKind::Plsr,
    ];
}

impl std::fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svr" => Ok(RegressorKind::Svr),
            "knnr" | "knn" => Ok(RegressorKind::Knnr),
            "adaboost" | "adaboostr" => Ok(RegressorKind::AdaBoostR),
            "plsr" | "pls" => Ok(RegressorKind::Plsr),
            other => Err(Error::Unsupported {
                key: "model".into(),
                value: other.into(),
            }),
        }
    }
}

/// A regressor kind plus its hyperparameters.
///
/// Recognized keys: `k` (KNNR); `c`, `epsilon`, `gamma`, `tol`, `max_iter`
/// (SVR, `gamma` defaulting to the data-driven rule); `n_estimators`,
/// `learning_rate`, `max_depth` (AdaBoost); `n_components` or `grid_max`
/// (PLSR, the latter selecting on validation data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    pub hyperparams: BTreeMap<String, f64>,
}

impl RegressorSpec {
    pub fn with_defaults(kind: RegressorKind) -> Self {
        let pairs: &[(&str, f64)] = match kind {
            RegressorKind::Knnr => &[("k", 5.0)],
            RegressorKind::Svr => &[("c", 1.0), ("epsilon", 0.1), ("tol", 1e-3), ("max_iter", 1e7)],
            RegressorKind::AdaBoostR => &[("n_estimators", 60.0), ("learning_rate", 0.8), ("max_depth", 3.0)],
            RegressorKind::Plsr => &[("grid_max", 20.0)],
        };
        Self {
            kind,
            hyperparams: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.hyperparams.insert(key.to_string(), value);
        self
    }

    fn allowed_keys(&self) -> &'static [&'static str] {
        match self.kind {
            RegressorKind::Knnr => &["k"],
            RegressorKind::Svr => &["c", "epsilon", "gamma", "tol", "max_iter"],
            RegressorKind::AdaBoostR => &["n_estimators", "learning_rate", "max_depth"],
            RegressorKind::Plsr => &["n_components", "grid_max"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.hyperparams {
            if !self.allowed_keys().contains(&k.as_str()) {
                return Err(Error::Hyperparameter(format!("`{k}` does not apply to {}", self.kind)));
            }
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::Hyperparameter(format!("`{k}` must be positive, got {v}")));
            }
        }
        let required: &[&str] = match self.kind {
            RegressorKind::Knnr => &["k"],
            RegressorKind::Svr => &["c", "epsilon"],
            RegressorKind::AdaBoostR => &["n_estimators", "learning_rate"],
            RegressorKind::Plsr => &[],
        };
        if let Some(k) = required.iter().find(|k| !self.hyperparams.contains_key(**k)) {
            return Err(Error::Hyperparameter(format!("{} requires `{k}`", self.kind)));
        }
        if self.kind == RegressorKind::Plsr
            && !(self.hyperparams.contains_key("n_components") ^ self.hyperparams.contains_key("grid_max"))
        {
            return Err(Error::Hyperparameter(
                "plsr takes exactly one of `n_components` or `grid_max`".into(),
            ));
        }
        Ok(())
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.hyperparams.get(key) {
            None => Ok(None),
            Some(v) if v.fract() == 0.0 => Ok(Some(*v as usize)),
            Some(v) => Err(Error::Hyperparameter(format!("`{key}` must be an integer, got {v}"))),
        }
    }
}

/// A fitted classical regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum TrainedModel {
    Svr(SvrModel),
    Knnr(KnnModel),
    #[serde(rename = "adaboost")]
    AdaBoostR(AdaBoostModel),
    Plsr(PlsModel),
}

/// Fitted model plus the hyperparameters actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub model: TrainedModel,
    /// The spec with every default and data-driven choice filled in.
    pub resolved: RegressorSpec,
    pub warnings: Vec<String>,
}

/// Fits `spec` on training rows. Validation rows are used only for PLSR
/// component selection when `grid_max` is given.
pub fn fit_regressor(
    spec: &RegressorSpec,
    x: &[Vec<f64>],
    y: &[f64],
    val: Option<(&[Vec<f64>], &[f64])>,
) -> Result<FitOutcome> {
    spec.validate()?;
    let mut resolved = spec.clone();
    let (model, warnings) = match spec.kind {
        RegressorKind::Knnr => (TrainedModel::Knnr(knnr_fit(x, y, spec.count("k")?.unwrap())?), Vec::new()),
        RegressorKind::Svr => {
            let params = SvrParams {
                c: spec.hyperparams["c"],
                epsilon: spec.hyperparams["epsilon"],
                gamma: spec.hyperparams.get("gamma").copied(),
                tol: spec.hyperparams.get("tol").copied().unwrap_or(1e-3),
                max_iter: spec.count("max_iter")?.unwrap_or(10_000_000),
            };
            let m = svr_fit(x, y, &params)?;
            resolved.hyperparams.insert("gamma".into(), m.gamma);
            resolved.hyperparams.insert("tol".into(), params.tol);
            resolved.hyperparams.insert("max_iter".into(), params.max_iter as f64);
            (TrainedModel::Svr(m), Vec::new())
        }
        RegressorKind::AdaBoostR => {
            let params = AdaBoostParams {
                n_estimators: spec.count("n_estimators")?.unwrap(),
                learning_rate: spec.hyperparams["learning_rate"],
                max_depth: spec.count("max_depth")?.unwrap_or(3),
            };
            resolved.hyperparams.insert("max_depth".into(), params.max_depth as f64);
            let (m, _) = adaboost_r2_fit(x, y, &params)?;
            let w = m.warnings.clone();
            (TrainedModel::AdaBoostR(m), w)
        }
        RegressorKind::Plsr => {
            let a = match (spec.count("n_components")?, spec.count("grid_max")?) {
                (Some(a), _) => a,
                (None, Some(g)) => {
                    let (xv, yv) = val.ok_or_else(|| {
                        Error::Hyperparameter("plsr component search needs validation data".into())
                    })?;
                    let grid: Vec<usize> = (1..=g).collect();
                    plsr_select_components(x, y, xv, yv, &grid)?.selected
                }
                (None, None) => unreachable!("validated above"),
            };
            let m = plsr_fit(x, y, a)?;
            resolved.hyperparams.remove("grid_max");
            resolved.hyperparams.insert("n_components".into(), m.n_components.max(1) as f64);
            let w = m.warnings.clone();
            (TrainedModel::Plsr(m), w)
        }
    };
    Ok(FitOutcome {
        model,
        resolved,
        warnings,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> RegressorKind {
        match self {
            TrainedModel::Svr(_) => RegressorKind::Svr,
            TrainedModel::Knnr(_) => RegressorKind::Knnr,
            TrainedModel::AdaBoostR(_) => RegressorKind::AdaBoostR,
            TrainedModel::Plsr(_) => RegressorKind::Plsr,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Svr(m) => m.predict(x),
            TrainedModel::Knnr(m) => m.predict(x),
            TrainedModel::AdaBoostR(m) => m.predict(x),
            TrainedModel::Plsr(m) => m.predict(x),
        }
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    hyperparams: BTreeMap<String, f64>,
    model: TrainedModel,
}

/// Versioned JSON: format tag, version, hyperparameters and the fitted parameters.
pub fn save_model(model: &TrainedModel, hyperparams: &BTreeMap<String, f64>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelDocument {
        format: MODEL_FORMAT.into(),
        version: MODEL_FORMAT_VERSION,
        hyperparams: hyperparams.clone(),
        model: model.clone(),
    })?)
}

pub fn load_model(text: &str) -> Result<(TrainedModel, BTreeMap<String, f64>)> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!("unexpected format tag {:?}", doc.format)));
    }
    if doc.version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "model version {} is not supported (expected {MODEL_FORMAT_VERSION})",
            doc.version
        )));
    }
    Ok((doc.model, doc.hyperparams))
}
