//! Spectrum and dataset types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First band of the default camera grid, in nm.
pub const DEFAULT_FIRST_NM: f64 = 386.0;
/// Last band of the default camera grid, in nm.
pub const DEFAULT_LAST_NM: f64 = 1004.0;
/// Number of bands in the default grid.
pub const DEFAULT_BANDS: usize = 462;

/// Evenly spaced grid of `bands` wavelengths from `first` to `last` inclusive.
pub fn linear_grid(first: f64, last: f64, bands: usize) -> Vec<f64> {
    match bands {
        0 => Vec::new(),
        1 => vec![first],
        _ => {
            let step = (last - first) / (bands - 1) as f64;
            (0..bands).map(|i| first + step * i as f64).collect()
        }
    }
}

/// The 462-band grid over 386–1004 nm.
pub fn default_grid() -> Vec<f64> {
    linear_grid(DEFAULT_FIRST_NM, DEFAULT_LAST_NM, DEFAULT_BANDS)
}

fn check_grid(wavelengths: &[f64]) -> Result<()> {
    if wavelengths.len() < 3 {
        return Err(Error::InvalidSpectrum(format!(
            "need at least 3 bands, got {}",
            wavelengths.len()
        )));
    }
    if let Some(i) = wavelengths.iter().position(|w| !w.is_finite()) {
        return Err(Error::InvalidSpectrum(format!("wavelength {i} is not finite")));
    }
    if let Some(i) = wavelengths.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpectrum(format!(
            "wavelengths not strictly increasing at band {}",
            i + 1
        )));
    }
    Ok(())
}

/// One sample's reflectance signature on its wavelength grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    wavelengths_nm: Vec<f64>,
    reflectance: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelengths_nm: Vec<f64>, reflectance: Vec<f64>) -> Result<Self> {
        check_grid(&wavelengths_nm)?;
        if wavelengths_nm.len() != reflectance.len() {
            return Err(Error::Dimension(format!(
                "{} wavelengths but {} reflectance values",
                wavelengths_nm.len(),
                reflectance.len()
            )));
        }
        if let Some(i) = reflectance.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("reflectance at band {i} is not finite")));
        }
        Ok(Self {
            wavelengths_nm,
            reflectance,
        })
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn values(&self) -> &[f64] {
        &self.reflectance
    }

    pub fn len(&self) -> usize {
        self.reflectance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reflectance.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.wavelengths_nm, self.reflectance)
    }

    /// Returns an error unless `other` lives on exactly the same grid.
    pub fn check_same_grid(&self, other: &Spectrum) -> Result<()> {
        if self.wavelengths_nm != other.wavelengths_nm {
            return Err(Error::Dimension(format!(
                "wavelength grids differ ({} vs {} bands)",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Which quality attribute the targets measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// Soluble solids content, °Brix.
    Ssc,
    /// Firmness, N/cm².
    Firmness,
}

impl TargetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Ssc => "ssc",
            TargetKind::Firmness => "firmness",
        }
    }
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssc" => Ok(TargetKind::Ssc),
            "firmness" => Ok(TargetKind::Firmness),
            other => Err(Error::Unsupported {
                key: "target".into(),
                value: other.into(),
            }),
        }
    }
}

/// N samples × B bands plus one target per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraTable {
    bands: Vec<f64>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    target_kind: TargetKind,
}

impl SpectraTable {
    pub fn new(bands: Vec<f64>, x: Vec<Vec<f64>>, y: Vec<f64>, target_kind: TargetKind) -> Result<Self> {
        check_grid(&bands)?;
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("{} rows but {} targets", x.len(), y.len())));
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != bands.len() {
                return Err(Error::Dimension(format!(
                    "row {i} has {} values, grid has {} bands",
                    row.len(),
                    bands.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidSpectrum(format!("row {i}, band {j} is not finite")));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("target {i} is not finite")));
        }
        Ok(Self {
            bands,
            x,
            y,
            target_kind,
        })
    }

    pub fn bands(&self) -> &[f64] {
        &self.bands
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn target_kind(&self) -> TargetKind {
        self.target_kind
    }

    pub fn n_samples(&self) -> usize {
        self.x.len()
    }

    pub fn n_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn spectrum(&self, i: usize) -> Spectrum {
        Spectrum {
            wavelengths_nm: self.bands.clone(),
            reflectance: self.x[i].clone(),
        }
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<SpectraTable> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_samples()) {
            return Err(Error::Dimension(format!(
                "row index {bad} out of range for {} samples",
                self.n_samples()
            )));
        }
        Ok(SpectraTable {
            bands: self.bands.clone(),
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            target_kind: self.target_kind,
        })
    }

    /// Same targets with every row replaced; the new grid may differ in length.
    pub fn with_rows(&self, bands: Vec<f64>, x: Vec<Vec<f64>>) -> Result<SpectraTable> {
        SpectraTable::new(bands, x, self.y.clone(), self.target_kind)
    }
}
