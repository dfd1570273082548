//! Central-difference verification of analytic gradients.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::layer::{Layer, Mode};
use crate::loss::mse_loss;
use crate::param::Param;
use crate::tensor::Batch;

/// A scalar loss of some parameters.
pub trait GradObjective {
    fn params_mut(&mut self) -> Vec<&mut Param>;

    /// Loss at the current parameters.
    fn loss(&mut self) -> Result<f64>;

    /// Loss plus freshly computed gradients in every `Param::grad`.
    fn loss_and_grad(&mut self) -> Result<f64>;

    /// Discrete state of the last evaluation (see [`Layer::pattern`]).
    fn pattern(&self) -> Vec<u32> {
        Vec::new()
    }
}

/// MSE of a network on one fixed batch, with batch statistics and no dropout.
pub struct SupervisedObjective<'a, L: Layer + ?Sized> {
    pub net: &'a mut L,
    pub input: &'a Batch,
    pub target: &'a [f64],
}

impl<L: Layer + ?Sized> GradObjective for SupervisedObjective<'_, L> {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.net.params_mut()
    }

    fn loss(&mut self) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = self.net.forward(self.input, Mode::TrainNoDropout, &mut rng)?;
        Ok(mse_loss(&y.data, self.target)?.0)
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        for p in self.net.params_mut() {
            p.zero_grad();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = self.net.forward(self.input, Mode::TrainNoDropout, &mut rng)?;
        let (loss, g) = mse_loss(&y.data, self.target)?;
        self.net.backward(&Batch { data: g, ..y })?;
        Ok(loss)
    }

    fn pattern(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.net.pattern(&mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Minimum number of coordinates to compare (all of them if fewer exist).
    pub coordinates: usize,
    pub h: f64,
    /// Floor on the relative-error denominator.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            coordinates: 200,
            h: 1e-4,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinates compared.
    pub checked: usize,
    /// Coordinates skipped because a relu or pool decision flipped within ±h.
    pub skipped: usize,
    /// `(parameter, index, analytic, numeric)` of the worst coordinate.
    pub worst: Option<(String, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.checked > 0 && self.max_rel_error < tolerance
    }
}

/// Compares analytic and central-difference gradients on a stratified
/// sample: every parameter tensor contributes coordinates, and random extra
/// ones are drawn until `coordinates` have been compared.
pub fn gradient_check(obj: &mut dyn GradObjective, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    obj.loss_and_grad()?;
    let base_pattern = obj.pattern();
    let (sizes, analytic): (Vec<usize>, Vec<Vec<f64>>) =
        obj.params_mut().iter().map(|p| (p.len(), p.grad.clone())).unzip();
    let names: Vec<String> = obj.params_mut().iter().map(|p| p.name.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total: usize = sizes.iter().sum();
    let mut queue: Vec<(usize, usize)> = Vec::new();
    if total <= cfg.coordinates {
        for (t, &n) in sizes.iter().enumerate() {
            queue.extend((0..n).map(|i| (t, i)));
        }
    } else {
        let per = cfg.coordinates.div_ceil(sizes.len().max(1));
        for (t, &n) in sizes.iter().enumerate() {
            queue.extend(sample(&mut rng, n, per.min(n)).into_iter().map(|i| (t, i)));
        }
    }
    let mut seen: HashSet<(usize, usize)> = queue.iter().copied().collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
        worst: None,
    };
    let budget = 50 * cfg.coordinates.max(1);
    let mut next = 0;
    loop {
        let (t, i) = if next < queue.len() {
            next += 1;
            queue[next - 1]
        } else if report.checked < cfg.coordinates && seen.len() < total.min(budget) {
            // Coordinates skipped at a kink are replaced by fresh random ones.
            let t = rng.random_range(0..sizes.len());
            let c = (t, rng.random_range(0..sizes[t]));
            if !seen.insert(c) {
                continue;
            }
            c
        } else {
            break;
        };
        let original = obj.params_mut()[t].value[i];
        obj.params_mut()[t].value[i] = original + cfg.h;
        let plus = obj.loss()?;
        let same_plus = obj.pattern() == base_pattern;
        obj.params_mut()[t].value[i] = original - cfg.h;
        let minus = obj.loss()?;
        let same_minus = obj.pattern() == base_pattern;
        obj.params_mut()[t].value[i] = original;
        if !(same_plus && same_minus) {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * cfg.h);
        let a = analytic[t][i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(cfg.floor);
        report.checked += 1;
        if report.worst.is_none() || rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst = Some((names[t].clone(), i, a, numeric));
        }
    }
    Ok(report)
}
