//! White/dark reference calibration: `R = (raw - dark) / (white - dark)`.

use serde::{Deserialize, Serialize};

use crate::envi::SpectralCube;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Minimum white-minus-dark gap for a band to count as live.
pub const EPS_CAL: f64 = 1e-9;
/// Calibrated values outside this range are reported, not clamped.
pub const PLAUSIBLE_RANGE: (f64, f64) = (-0.05, 1.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRefs {
    dark: Spectrum,
    white: Spectrum,
}

impl CalibrationRefs {
    pub fn new(dark: Spectrum, white: Spectrum) -> Result<Self> {
        dark.check_same_grid(&white)?;
        for (band, (d, w)) in dark.values().iter().zip(white.values()).enumerate() {
            let gap = w - d;
            if gap <= EPS_CAL {
                return Err(Error::DegenerateReference { band, gap });
            }
        }
        Ok(Self { dark, white })
    }

    pub fn dark(&self) -> &Spectrum {
        &self.dark
    }

    pub fn white(&self) -> &Spectrum {
        &self.white
    }
}

/// A calibrated value outside the plausible reflectance range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeWarning {
    /// Pixel index in raster order; 0 for a single spectrum.
    pub pixel: usize,
    pub band: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibrated<T> {
    pub output: T,
    pub warnings: Vec<RangeWarning>,
}

fn calibrate_values(raw: &[f64], refs: &CalibrationRefs, pixel: usize, out: &mut Vec<f64>, warnings: &mut Vec<RangeWarning>) {
    let (lo, hi) = PLAUSIBLE_RANGE;
    for (band, ((r, d), w)) in raw.iter().zip(refs.dark.values()).zip(refs.white.values()).enumerate() {
        let value = (r - d) / (w - d);
        if !(lo..=hi).contains(&value) {
            warnings.push(RangeWarning { pixel, band, value });
        }
        out.push(value);
    }
}

pub fn reflectance_calibrate(raw: &Spectrum, refs: &CalibrationRefs) -> Result<Calibrated<Spectrum>> {
    raw.check_same_grid(&refs.dark)?;
    let mut values = Vec::with_capacity(raw.len());
    let mut warnings = Vec::new();
    calibrate_values(raw.values(), refs, 0, &mut values, &mut warnings);
    Ok(Calibrated {
        output: Spectrum::new(raw.wavelengths().to_vec(), values)?,
        warnings,
    })
}

/// Pixel-wise calibration of a whole cube.
///
/// The cube's band axis (wavelengths, or indices if it has none) must
/// match the reference grid.
pub fn calibrate_cube(cube: &SpectralCube, refs: &CalibrationRefs) -> Result<Calibrated<SpectralCube>> {
    if cube.header().band_axis() != refs.dark.wavelengths() {
        return Err(Error::Dimension(format!(
            "cube has {} bands on a different grid than the {}-band references",
            cube.header().bands,
            refs.dark.len()
        )));
    }
    let mut values = Vec::with_capacity(cube.data().len());
    let mut warnings = Vec::new();
    for (pixel, raw) in cube.pixels().enumerate() {
        calibrate_values(raw, refs, pixel, &mut values, &mut warnings);
    }
    Ok(Calibrated {
        output: cube.with_data(values)?,
        warnings,
    })
}

/// Mean spectrum over every pixel of a reference cube (dark cap or white panel).
pub fn cube_mean_spectrum(cube: &SpectralCube) -> Result<Spectrum> {
    let h = cube.header();
    let mut sum = vec![0.0; h.bands];
    for p in cube.pixels() {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    let n = (h.samples * h.lines) as f64;
    Spectrum::new(h.band_axis(), sum.into_iter().map(|s| s / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::new((0..v.len()).map(|i| 400.0 + i as f64).collect(), v.to_vec()).unwrap()
    }

    #[test]
    fn white_and_dark_map_to_one_and_zero() {
        let dark = spectrum(&[0.1, 0.05, 0.2]);
        let white = spectrum(&[0.9, 0.7, 0.95]);
        let refs = CalibrationRefs::new(dark.clone(), white.clone()).unwrap();
        assert_eq!(reflectance_calibrate(&white, &refs).unwrap().output.values(), &[1.0, 1.0, 1.0]);
        assert_eq!(reflectance_calibrate(&dark, &refs).unwrap().output.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn midpoint() {
        let refs = CalibrationRefs::new(spectrum(&[0.1, 0.1, 0.1]), spectrum(&[0.9, 0.9, 0.9])).unwrap();
        let out = reflectance_calibrate(&spectrum(&[0.5, 0.5, 0.5]), &refs).unwrap();
        assert_eq!(out.output.values(), &[0.5, 0.5, 0.5]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn degenerate_band_is_named() {
        match CalibrationRefs::new(spectrum(&[0.1, 0.5, 0.1]), spectrum(&[0.9, 0.5, 0.9])) {
            Err(Error::DegenerateReference { band, .. }) => assert_eq!(band, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_values_warn_without_clamping() {
        let refs = CalibrationRefs::new(spectrum(&[0.0, 0.0, 0.0]), spectrum(&[1.0, 1.0, 1.0])).unwrap();
        let out = reflectance_calibrate(&spectrum(&[-0.2, 0.5, 2.0]), &refs).unwrap();
        assert_eq!(out.output.values(), &[-0.2, 0.5, 2.0]);
        let bands: Vec<usize> = out.warnings.iter().map(|w| w.band).collect();
        assert_eq!(bands, vec![0, 2]);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let refs = CalibrationRefs::new(spectrum(&[0.0, 0.0, 0.0]), spectrum(&[1.0, 1.0, 1.0])).unwrap();
        let other = Spectrum::new(vec![1.0, 2.0, 3.0], vec![0.5; 3]).unwrap();
        assert!(matches!(reflectance_calibrate(&other, &refs), Err(Error::Dimension(_))));
    }
}
