//! Multiplicative scatter correction, second-order differences and peak picking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{SpectraTable, Spectrum};

/// Fitted scales at or below this magnitude cannot be inverted.
pub const MSC_MIN_SLOPE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PreprocessKind {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "msc")]
    Msc,
    #[serde(rename = "d2")]
    SecondDiff,
}

impl PreprocessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PreprocessKind::None => "none",
            PreprocessKind::Msc => "msc",
            PreprocessKind::SecondDiff => "d2",
        }
    }
}

impl std::fmt::Display for PreprocessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PreprocessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "raw" => Ok(PreprocessKind::None),
            "msc" => Ok(PreprocessKind::Msc),
            "d2" | "second-diff" | "sd" => Ok(PreprocessKind::SecondDiff),
            other => Err(Error::Unsupported {
                key: "preprocessing".into(),
                value: other.into(),
            }),
        }
    }
}

/// Mean spectrum of the fitting rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MscReference {
    pub reference: Spectrum,
}

/// Column means of `table`; every row must be a training row.
pub fn msc_fit(table: &SpectraTable) -> Result<MscReference> {
    let n = table.n_samples();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut mean = vec![0.0; table.n_bands()];
    for row in table.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let first = mean[0];
    if mean.iter().all(|&m| m == first) {
        return Err(Error::Degenerate("MSC reference has zero variance across bands".into()));
    }
    Ok(MscReference {
        reference: Spectrum::new(table.bands().to_vec(), mean)?,
    })
}

/// Least-squares `(a, b)` in `x ≈ a + b·reference`.
pub fn msc_coefficients(x: &[f64], reference: &[f64]) -> Result<(f64, f64)> {
    if x.len() != reference.len() {
        return Err(Error::Dimension(format!(
            "spectrum has {} bands, reference has {}",
            x.len(),
            reference.len()
        )));
    }
    let n = x.len() as f64;
    let rm = reference.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (r, v) in reference.iter().zip(x) {
        sxy += (r - rm) * (v - xm);
        sxx += (r - rm) * (r - rm);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("MSC reference has zero variance across bands".into()));
    }
    let b = sxy / sxx;
    Ok((xm - b * rm, b))
}

/// MSC on raw values: `(x - a) / b`.
pub fn msc_apply_values(x: &[f64], reference: &MscReference) -> Result<Vec<f64>> {
    let (a, b) = msc_coefficients(x, reference.reference.values())?;
    if b.abs() <= MSC_MIN_SLOPE {
        return Err(Error::Degenerate(format!(
            "scatter slope {b:e} is too small to invert"
        )));
    }
    Ok(x.iter().map(|v| (v - a) / b).collect())
}

pub fn msc_apply(x: &Spectrum, reference: &MscReference) -> Result<Spectrum> {
    x.check_same_grid(&reference.reference)?;
    Spectrum::new(x.wavelengths().to_vec(), msc_apply_values(x.values(), reference)?)
}

/// `d[i] = x[i-1] - 2x[i] + x[i+1]`, in band-index units.
pub fn second_order_diff_values(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 3 {
        return Err(Error::InvalidSpectrum(format!(
            "second difference needs at least 3 bands, got {}",
            x.len()
        )));
    }
    Ok(x.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect())
}

/// Second difference with the wavelength grid trimmed by one band at each end.
///
/// The result must itself be a valid spectrum, so at least 5 input bands are needed.
pub fn second_order_diff(x: &Spectrum) -> Result<Spectrum> {
    let d = second_order_diff_values(x.values())?;
    let w = x.wavelengths();
    Spectrum::new(w[1..w.len() - 1].to_vec(), d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub wavelength_nm: f64,
    pub value: f64,
    pub prominence: f64,
}

/// Height of a peak above the higher of the two minima separating it from
/// taller points (or the signal edges).
fn prominence(x: &[f64], i: usize) -> f64 {
    let peak = x[i];
    let mut left_min = peak;
    for &v in x[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &x[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Strict local maxima whose prominence is at least `min_prominence`, by wavelength.
pub fn find_peaks(x: &Spectrum, min_prominence: f64) -> Vec<Peak> {
    let v = x.values();
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .filter_map(|i| {
            let p = prominence(v, i);
            (p >= min_prominence).then(|| Peak {
                wavelength_nm: x.wavelengths()[i],
                value: v[i],
                prominence: p,
            })
        })
        .collect()
}

/// A preprocessing step with any statistics it learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Preprocessor {
    None,
    Msc(MscReference),
    #[serde(rename = "d2")]
    SecondDiff,
}

impl Preprocessor {
    /// Fits on `train`; only MSC learns anything.
    pub fn fit(kind: PreprocessKind, train: &SpectraTable) -> Result<Self> {
        Ok(match kind {
            PreprocessKind::None => Preprocessor::None,
            PreprocessKind::Msc => Preprocessor::Msc(msc_fit(train)?),
            PreprocessKind::SecondDiff => Preprocessor::SecondDiff,
        })
    }

    pub fn kind(&self) -> PreprocessKind {
        match self {
            Preprocessor::None => PreprocessKind::None,
            Preprocessor::Msc(_) => PreprocessKind::Msc,
            Preprocessor::SecondDiff => PreprocessKind::SecondDiff,
        }
    }

    pub fn transform_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Preprocessor::None => Ok(x.to_vec()),
            Preprocessor::Msc(r) => msc_apply_values(x, r),
            Preprocessor::SecondDiff => second_order_diff_values(x),
        }
    }

    /// Output wavelength grid for an input grid.
    pub fn output_bands(&self, bands: &[f64]) -> Vec<f64> {
        match self {
            Preprocessor::SecondDiff if bands.len() >= 2 => bands[1..bands.len() - 1].to_vec(),
            _ => bands.to_vec(),
        }
    }

    pub fn transform(&self, table: &SpectraTable) -> Result<SpectraTable> {
        if let Preprocessor::Msc(r) = self {
            if r.reference.wavelengths() != table.bands() {
                return Err(Error::Dimension("table grid differs from the MSC reference grid".into()));
            }
        }
        let rows = table
            .rows()
            .iter()
            .map(|r| self.transform_values(r))
            .collect::<Result<Vec<_>>>()?;
        table.with_rows(self.output_bands(table.bands()), rows)
    }
}
