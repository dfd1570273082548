//! Con1dResNet: a 1-D residual network regressing one quality attribute
//! directly from a raw spectrum.
//!
//! Layout for the default configuration on 462 bands:
//!
//! ```text
//! stem   conv 1→32 k3 s3            462 → 154
//! pool   maxpool k3 s2, dropout     154 → 76
//! stage1 3 × res(32)                 76 → 76
//! stage2 down(32→64 s3), 3 × res     76 → 26
//! stage3 down(64→128 s3), 5 × res, dropout, 3 × res   26 → 9
//! gap    global average pool          9 → 1
//! head   linear 128→1
//! ```
//!
//! Residual modules use stride 1 with "same" padding; only the stem and the
//! two downsample modules stride, otherwise the sequence would vanish.

mod train;

pub use train::{train, train_rows, EpochRecord, TrainConfig, TrainHistory};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{NnError, Result};
use crate::layer::{Layer, Mode, Sequential};
use crate::layers::{conv_output_len, pool_output_len, BatchNorm1d, Conv1d, Dropout, GlobalAvgPool, Linear, MaxPool1d, Relu, Residual};
use crate::param::Param;
use crate::rng::init_stream;
use crate::tensor::Batch;
use hsreg_core::Spectrum;

pub const MODEL_FORMAT: &str = "hsreg-con1dresnet";
pub const MODEL_VERSION: u32 = 1;

/// Names of the top-level blocks, in order.
pub const BLOCK_NAMES: [&str; 7] = ["stem", "pool", "stage1", "stage2", "stage3", "gap", "head"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureConfig {
    pub input_bands: usize,
    /// Channel width of each stage; each doubles the previous one.
    pub stage_widths: Vec<usize>,
    /// Plain residual modules per stage, excluding the downsample module that
    /// opens every stage after the first.
    pub residual_counts: Vec<usize>,
    /// In the last stage, a dropout layer follows this many residual modules.
    pub mid_dropout_after: Option<usize>,
    pub dropout_p: f64,
    /// Stride of the stem and of the downsample modules.
    pub stride: usize,
    pub kernel: usize,
    pub pool_kernel: usize,
    pub pool_stride: usize,
    pub batch_norm: bool,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            input_bands: hsreg_core::spectrum::DEFAULT_BANDS,
            stage_widths: vec![32, 64, 128],
            residual_counts: vec![3, 3, 8],
            mid_dropout_after: Some(5),
            dropout_p: 0.5,
            stride: 3,
            kernel: 3,
            pool_kernel: 3,
            pool_stride: 2,
            batch_norm: true,
        }
    }
}

/// Sequence length after each block, from the closed-form shape formulas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeLedger {
    pub stem: usize,
    pub pooled: usize,
    pub stages: Vec<usize>,
    pub global: usize,
}

impl ShapeLedger {
    /// `[stem, pooled, stage…, global]`.
    pub fn lengths(&self) -> Vec<usize> {
        let mut v = vec![self.stem, self.pooled];
        v.extend(&self.stages);
        v.push(self.global);
        v
    }
}

impl ArchitectureConfig {
    fn same_pad(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NnError::Config(m));
        if self.stage_widths.is_empty() || self.stage_widths.len() != self.residual_counts.len() {
            return bad(format!(
                "{} stage widths for {} residual counts",
                self.stage_widths.len(),
                self.residual_counts.len()
            ));
        }
        if self.stage_widths[0] == 0 || self.stage_widths.windows(2).any(|w| w[1] != 2 * w[0]) {
            return bad(format!("stage widths must double from stage to stage: {:?}", self.stage_widths));
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return bad(format!("kernel must be odd, got {}", self.kernel));
        }
        if self.stride == 0 || self.pool_kernel == 0 || self.pool_stride == 0 {
            return bad("strides and pool geometry must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout probability must be in [0, 1), got {}", self.dropout_p));
        }
        if let Some(k) = self.mid_dropout_after {
            let last = *self.residual_counts.last().unwrap();
            if k > last {
                return bad(format!("mid-stage dropout after module {k} of {last}"));
            }
        }
        self.ledger().map(|_| ())
    }

    /// Closed-form per-block lengths; fails with every length computed so
    /// far when the sequence underflows.
    pub fn ledger(&self) -> Result<ShapeLedger> {
        let mut trail: Vec<usize> = Vec::new();
        let underflow = |trail: &[usize], e: NnError| {
            NnError::Shape(format!(
                "sequence underflow for {} input bands; per-block lengths so far {trail:?}: {e}",
                self.input_bands
            ))
        };
        let stem = conv_output_len(self.input_bands, self.kernel, self.stride, 0).map_err(|e| underflow(&trail, e))?;
        trail.push(stem);
        let pooled = pool_output_len(stem, self.pool_kernel, self.pool_stride).map_err(|e| underflow(&trail, e))?;
        trail.push(pooled);
        let mut stages = Vec::new();
        let mut l = pooled;
        for s in 0..self.stage_widths.len() {
            if s > 0 {
                l = conv_output_len(l, self.kernel, self.stride, self.same_pad()).map_err(|e| underflow(&trail, e))?;
            }
            trail.push(l);
            stages.push(l);
        }
        Ok(ShapeLedger {
            stem,
            pooled,
            stages,
            global: 1,
        })
    }

    pub fn parameter_count(&self) -> usize {
        let k = self.kernel;
        let bn = |c: usize| if self.batch_norm { 2 * c } else { c };
        let w0 = self.stage_widths[0];
        let mut n = w0 * k + w0;
        let mut prev = w0;
        for (s, (&w, &count)) in self.stage_widths.iter().zip(&self.residual_counts).enumerate() {
            if s > 0 {
                n += prev * w * k + bn(w) + w * w * k + bn(w) + prev * w + bn(w);
            }
            n += count * 2 * (w * w * k + bn(w));
            prev = w;
        }
        n + prev + 1
    }
}

struct Builder {
    seed: u64,
    next: usize,
    batch_norm: bool,
}

impl Builder {
    fn rng(&mut self) -> ChaCha8Rng {
        self.next += 1;
        init_stream(self.seed, self.next - 1)
    }

    /// conv → (bn), with a conv bias only when there is no normalization.
    fn conv_bn(&mut self, seq: &mut Sequential, name: &str, c_in: usize, c_out: usize, k: usize, stride: usize, pad: usize) {
        let mut rng = self.rng();
        seq.push(Conv1d::new(&format!("{name}.conv"), c_in, c_out, k, stride, pad, !self.batch_norm, &mut rng));
        if self.batch_norm {
            seq.push(BatchNorm1d::new(&format!("{name}.bn"), c_out));
        }
    }

    fn residual(&mut self, name: &str, c_in: usize, c_out: usize, k: usize, stride: usize) -> Residual {
        let pad = (k - 1) / 2;
        let mut main = Sequential::new();
        self.conv_bn(&mut main, &format!("{name}.a"), c_in, c_out, k, stride, pad);
        main.push(Relu::new());
        self.conv_bn(&mut main, &format!("{name}.b"), c_out, c_out, k, 1, pad);
        let skip = (c_in != c_out || stride != 1).then(|| {
            let mut s = Sequential::new();
            self.conv_bn(&mut s, &format!("{name}.proj"), c_in, c_out, 1, stride, 0);
            s
        });
        Residual::new(main, skip)
    }
}

pub struct Con1dResNet {
    config: ArchitectureConfig,
    seed: u64,
    net: Sequential,
}

impl Con1dResNet {
    /// He-normal weights from `seed`; zero biases, unit batch-norm scales.
    pub fn build(config: ArchitectureConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let mut b = Builder {
            seed,
            next: 0,
            batch_norm: c.batch_norm,
        };
        let w0 = c.stage_widths[0];
        let mut stem = Sequential::new();
        let mut rng = b.rng();
        stem.push(Conv1d::new("stem.conv", 1, w0, c.kernel, c.stride, 0, true, &mut rng));
        let pool = Sequential::new()
            .with(MaxPool1d::new(c.pool_kernel, c.pool_stride))
            .with(Dropout::new(c.dropout_p)?);
        let mut net = Sequential::new().with(stem).with(pool);
        let last = c.stage_widths.len() - 1;
        let mut prev = w0;
        for (s, (&w, &count)) in c.stage_widths.iter().zip(&c.residual_counts).enumerate() {
            let mut stage = Sequential::new();
            if s > 0 {
                stage.push(b.residual(&format!("stage{}.down", s + 1), prev, w, c.kernel, c.stride));
            }
            for r in 0..count {
                if s == last && c.mid_dropout_after == Some(r) {
                    stage.push(Dropout::new(c.dropout_p)?);
                }
                stage.push(b.residual(&format!("stage{}.res{r}", s + 1), w, w, c.kernel, 1));
            }
            if s == last && c.mid_dropout_after == Some(count) {
                stage.push(Dropout::new(c.dropout_p)?);
            }
            net.push(stage);
            prev = w;
        }
        net.push(Sequential::new().with(GlobalAvgPool::new()));
        let mut rng = b.rng();
        net.push(Sequential::new().with(Linear::new("head.linear", prev, 1, &mut rng)));
        Ok(Self { config, seed, net })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ledger(&self) -> Result<ShapeLedger> {
        self.config.ledger()
    }

    pub fn parameter_count(&self) -> usize {
        self.net.parameter_count()
    }

    pub fn network(&self) -> &Sequential {
        &self.net
    }

    /// Runs `x` block by block and returns `(block, channels, length)` after each.
    pub fn trace(&self, x: &Batch) -> Result<Vec<(&'static str, usize, usize)>> {
        let mut h = x.clone();
        let mut out = Vec::new();
        for (name, block) in BLOCK_NAMES.iter().zip(self.net.layers()) {
            h = block.infer(&h)?;
            out.push((*name, h.channels, h.length));
        }
        Ok(out)
    }

    fn check_bands(&self, n: usize) -> Result<()> {
        if n != self.config.input_bands {
            return Err(NnError::Shape(format!(
                "model expects {} bands, got {n}",
                self.config.input_bands
            )));
        }
        Ok(())
    }

    /// Evaluation-mode prediction; never mutates the model.
    pub fn predict(&self, x: &Spectrum) -> Result<f64> {
        Ok(self.predict_rows(&[x.values().to_vec()])?[0])
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(64) {
            let x = Batch::from_rows(chunk)?;
            self.check_bands(x.length)?;
            out.extend(self.net.infer(&x)?.data);
        }
        Ok(out)
    }

    /// Sum of all parameter and buffer values, for detecting mutation.
    pub fn checksum(&self) -> f64 {
        let p: f64 = self.net.params().iter().flat_map(|p| p.value.iter()).sum();
        let b: f64 = self.net.buffers().iter().flat_map(|(_, v)| v.iter()).sum();
        p + b
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(&self.net, self.seed)
    }

    /// Loads weights saved from a network of identical architecture.
    pub fn restore(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.restore(&mut self.net)
    }

    /// Serializable form: configuration plus weights.
    pub fn to_saved(&self) -> SavedModel {
        SavedModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            weights: self.checkpoint(),
        }
    }

    pub fn save(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_saved())?)
    }

    /// Rebuilds the architecture recorded in the file and loads its weights.
    pub fn load(text: &str) -> Result<Self> {
        SavedModel::parse(text)?.into_model()
    }

    /// Loads a saved model's weights into this network; the architectures
    /// must match.
    pub fn load_weights(&mut self, text: &str) -> Result<()> {
        let saved = SavedModel::parse(text)?;
        self.restore(&saved.weights)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub config: ArchitectureConfig,
    pub weights: Checkpoint,
}

impl SavedModel {
    pub fn parse(text: &str) -> Result<Self> {
        let s: SavedModel = serde_json::from_str(text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported model file {} v{}",
                self.format, self.version
            )));
        }
        self.weights.check_header()
    }

    pub fn into_model(self) -> Result<Con1dResNet> {
        self.check()?;
        let mut m = Con1dResNet::build(self.config, self.weights.seed)?;
        m.restore(&self.weights)?;
        Ok(m)
    }
}

impl Layer for Con1dResNet {
    fn describe(&self) -> String {
        self.net.describe()
    }

    fn output_shape(&self, channels: usize, length: usize) -> Result<(usize, usize)> {
        self.net.output_shape(channels, length)
    }

    fn forward(&mut self, x: &Batch, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Batch> {
        self.check_bands(x.length)?;
        self.net.forward(x, mode, rng)
    }

    fn infer(&self, x: &Batch) -> Result<Batch> {
        self.check_bands(x.length)?;
        self.net.infer(x)
    }

    fn backward(&mut self, dy: &Batch) -> Result<Batch> {
        self.net.backward(dy)
    }

    fn params(&self) -> Vec<&Param> {
        self.net.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.params_mut()
    }

    fn buffers(&self) -> Vec<(String, &Vec<f64>)> {
        self.net.buffers()
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Vec<f64>)> {
        self.net.buffers_mut()
    }

    fn pattern(&self, out: &mut Vec<u32>) {
        self.net.pattern(out)
    }
}
