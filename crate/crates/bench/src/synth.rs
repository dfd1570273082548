//! Synthetic fruit spectra with known soluble-solids and firmness values.
//!
//! Each spectrum is a sigmoid red-edge baseline minus three broad Gaussian
//! absorption dips (near 585, 685 and 975 nm) and nine narrow nuisance dips.
//! The broad dip depths carry the target signal:
//!
//! ```text
//! depth_k = D_k · (1 + g_k · h(z_ssc) + φ_k · z̃_firm)
//! h(z)    = z + curvature · z²
//! z̃_firm  = ρ · z_firm + √(1 − ρ²) · ε
//! ```
//!
//! so SSC enters through a mildly nonlinear warp and firmness only through a
//! noisy proxy. Per-sample scatter `a·x + b` and white noise follow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use hsreg_core::spectrum::linear_grid;
use hsreg_core::{SpectraTable, TargetKind};

/// A normal distribution truncated to `[lo, hi]` by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedNormal {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let n = Normal::new(self.mean, self.sd).expect("validated sd");
        loop {
            let v = n.sample(rng);
            if (self.lo..=self.hi).contains(&v) {
                return v;
            }
        }
    }

    fn z(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub target: TargetKind,
    pub first_nm: f64,
    pub last_nm: f64,
    pub bands: usize,
    /// Centers of the target-bearing absorption dips.
    pub centers_nm: Vec<f64>,
    pub widths_nm: Vec<f64>,
    /// Dip depths `D_k` at average latents.
    pub depths: Vec<f64>,
    /// SSC gains `g_k`.
    pub ssc_gains: Vec<f64>,
    /// Firmness-proxy gains `φ_k`.
    pub firmness_gains: Vec<f64>,
    /// Quadratic coefficient of the SSC warp.
    pub curvature: f64,
    /// Correlation ρ between firmness and the proxy the spectrum sees.
    pub firmness_coupling: f64,
    pub baseline_offset: f64,
    pub baseline_amplitude: f64,
    pub edge_nm: f64,
    pub edge_width_nm: f64,
    pub nuisance_centers_nm: Vec<f64>,
    pub nuisance_width_nm: f64,
    /// Standard deviation of each nuisance dip's depth.
    pub nuisance_amplitude: f64,
    pub scatter: bool,
    pub scatter_gain: (f64, f64),
    pub scatter_offset: (f64, f64),
    pub noise_sigma: f64,
    /// Noise multiplier when the target is firmness.
    pub firmness_noise_factor: f64,
    pub ssc: TruncatedNormal,
    pub firmness: TruncatedNormal,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 200,
            seed: 42,
            target: TargetKind::Ssc,
            first_nm: hsreg_core::spectrum::DEFAULT_FIRST_NM,
            last_nm: hsreg_core::spectrum::DEFAULT_LAST_NM,
            bands: hsreg_core::spectrum::DEFAULT_BANDS,
            centers_nm: vec![585.0, 685.0, 975.0],
            widths_nm: vec![30.0, 30.0, 45.0],
            depths: vec![0.2, 0.16, 0.12],
            ssc_gains: vec![0.5, 0.5, 0.3],
            firmness_gains: vec![0.0, 0.4, 0.4],
            curvature: 0.15,
            firmness_coupling: 0.75,
            baseline_offset: 0.08,
            baseline_amplitude: 0.5,
            edge_nm: 600.0,
            edge_width_nm: 15.0,
            nuisance_centers_nm: vec![430.0, 480.0, 530.0, 640.0, 730.0, 760.0, 820.0, 880.0, 930.0],
            nuisance_width_nm: 6.0,
            nuisance_amplitude: 0.01,
            scatter: true,
            scatter_gain: (0.8, 1.2),
            scatter_offset: (-0.05, 0.05),
            noise_sigma: 5e-5,
            firmness_noise_factor: 2.0,
            ssc: TruncatedNormal {
                mean: 8.7,
                sd: 0.66,
                lo: 7.2,
                hi: 11.1,
            },
            firmness: TruncatedNormal {
                mean: 8.85,
                sd: 1.23,
                lo: 5.98,
                hi: 12.94,
            },
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.n_samples < 10 {
            return bad(format!("need at least 10 samples, got {}", self.n_samples));
        }
        if self.bands < 3 || !(self.first_nm < self.last_nm) || !self.first_nm.is_finite() || !self.last_nm.is_finite() {
            return bad(format!(
                "degenerate band grid: {} bands over [{}, {}] nm",
                self.bands, self.first_nm, self.last_nm
            ));
        }
        let k = self.centers_nm.len();
        if [self.widths_nm.len(), self.depths.len(), self.ssc_gains.len(), self.firmness_gains.len()]
            .iter()
            .any(|&l| l != k)
        {
            return bad("feature centers, widths, depths and gains must have equal lengths".into());
        }
        if let Some(c) = self
            .centers_nm
            .iter()
            .chain(&self.nuisance_centers_nm)
            .find(|c| !(self.first_nm..=self.last_nm).contains(*c))
        {
            return bad(format!("feature center {c} nm lies outside the band range"));
        }
        if self.widths_nm.iter().any(|w| !(*w > 0.0)) || !(self.nuisance_width_nm > 0.0) {
            return bad("feature widths must be positive".into());
        }
        if !(self.noise_sigma >= 0.0) || !(self.firmness_noise_factor >= 0.0) || !(self.nuisance_amplitude >= 0.0) {
            return bad("noise levels must be nonnegative".into());
        }
        if !(-1.0..=1.0).contains(&self.firmness_coupling) {
            return bad(format!("firmness coupling must lie in [-1, 1], got {}", self.firmness_coupling));
        }
        for (name, (lo, hi)) in [("gain", self.scatter_gain), ("offset", self.scatter_offset)] {
            if !(lo <= hi) {
                return bad(format!("scatter {name} range is empty"));
            }
        }
        for (name, d) in [("ssc", self.ssc), ("firmness", self.firmness)] {
            if !(d.sd > 0.0) || !(d.lo < d.hi) || d.mean < d.lo || d.mean > d.hi {
                return bad(format!("invalid {name} distribution"));
            }
        }
        Ok(())
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        linear_grid(self.first_nm, self.last_nm, self.bands)
    }

    /// Noise standard deviation for the configured target.
    pub fn effective_sigma(&self) -> f64 {
        match self.target {
            TargetKind::Ssc => self.noise_sigma,
            TargetKind::Firmness => self.noise_sigma * self.firmness_noise_factor,
        }
    }
}

/// Everything that determines a noise-free, scatter-free spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLatents {
    pub ssc: f64,
    pub firmness: f64,
    /// Standard-normal innovation of the firmness proxy.
    pub proxy_noise: f64,
    /// Depth of each nuisance dip.
    pub nuisance: Vec<f64>,
}

impl SampleLatents {
    pub fn draw(cfg: &SynthConfig, rng: &mut impl Rng) -> Self {
        Self {
            ssc: cfg.ssc.sample(rng),
            firmness: cfg.firmness.sample(rng),
            proxy_noise: rng.sample(StandardNormal),
            nuisance: (0..cfg.nuisance_centers_nm.len())
                .map(|_| cfg.nuisance_amplitude * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        }
    }

    pub fn target(&self, kind: TargetKind) -> f64 {
        match kind {
            TargetKind::Ssc => self.ssc,
            TargetKind::Firmness => self.firmness,
        }
    }
}

fn gaussian(l: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((l - center) / width).powi(2)).exp()
}

/// The clean spectrum of one sample, before scatter and noise.
pub fn render_spectrum(cfg: &SynthConfig, wavelengths: &[f64], z: &SampleLatents) -> Vec<f64> {
    let zs = cfg.ssc.z(z.ssc);
    let h = zs + cfg.curvature * zs * zs;
    let rho = cfg.firmness_coupling;
    let proxy = rho * cfg.firmness.z(z.firmness) + (1.0 - rho * rho).sqrt() * z.proxy_noise;
    let depths: Vec<f64> = (0..cfg.centers_nm.len())
        .map(|k| cfg.depths[k] * (1.0 + cfg.ssc_gains[k] * h + cfg.firmness_gains[k] * proxy))
        .collect();
    wavelengths
        .iter()
        .map(|&l| {
            let mut v = cfg.baseline_offset + cfg.baseline_amplitude / (1.0 + (-(l - cfg.edge_nm) / cfg.edge_width_nm).exp());
            for (k, d) in depths.iter().enumerate() {
                v -= d * gaussian(l, cfg.centers_nm[k], cfg.widths_nm[k]);
            }
            for (c, a) in cfg.nuisance_centers_nm.iter().zip(&z.nuisance) {
                v -= a * gaussian(l, *c, cfg.nuisance_width_nm);
            }
            v
        })
        .collect()
}

/// Draws `n_samples` fruits and records the configured target.
pub fn generate_synthetic_dataset(cfg: &SynthConfig) -> Result<SpectraTable> {
    cfg.validate()?;
    let wl = cfg.wavelengths();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.effective_sigma()).map_err(|e| BenchError::Config(e.to_string()))?;
    let mut rows = Vec::with_capacity(cfg.n_samples);
    let mut y = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let z = SampleLatents::draw(cfg, &mut rng);
        let mut x = render_spectrum(cfg, &wl, &z);
        if cfg.scatter {
            let a = rng.random_range(cfg.scatter_gain.0..=cfg.scatter_gain.1);
            let b = rng.random_range(cfg.scatter_offset.0..=cfg.scatter_offset.1);
            x.iter_mut().for_each(|v| *v = a * *v + b);
        }
        for v in &mut x {
            *v += noise.sample(&mut rng);
        }
        rows.push(x);
        y.push(z.target(cfg.target));
    }
    Ok(SpectraTable::new(wl, rows, y, cfg.target)?)
}
