//! ENVI decoding, ROI extraction and spectra CSV round trips.

use hsreg_core::envi::{
    parse_envi_header, read_cube, roi_mean_spectrum, roi_summary, ByteOrder, DataType, EnviHeader, Interleave, RoiMask,
    SpectralCube,
};
use hsreg_core::spectrum::{default_grid, SpectraTable, TargetKind};
use hsreg_core::table_csv::{read_spectra_csv, write_spectra_csv};
use hsreg_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn header(samples: usize, lines: usize, bands: usize, interleave: Interleave) -> EnviHeader {
    EnviHeader {
        samples,
        lines,
        bands,
        interleave,
        data_type: DataType::F64,
        byte_order: ByteOrder::Little,
        wavelengths_nm: None,
    }
}

/// Independent encoder: walks the payload in storage order and asks which
/// (line, sample, band) belongs there.
fn oracle_encode(values: &[Vec<Vec<f64>>], interleave: Interleave) -> Vec<u8> {
    let lines = values.len();
    let samples = values[0].len();
    let bands = values[0][0].len();
    let mut out = Vec::new();
    match interleave {
        Interleave::Bsq => {
            for b in 0..bands {
                for l in 0..lines {
                    for s in 0..samples {
                        out.extend(values[l][s][b].to_le_bytes());
                    }
                }
            }
        }
        Interleave::Bil => {
            for l in 0..lines {
                for b in 0..bands {
                    for s in 0..samples {
                        out.extend(values[l][s][b].to_le_bytes());
                    }
                }
            }
        }
        Interleave::Bip => {
            for l in 0..lines {
                for s in 0..samples {
                    for b in 0..bands {
                        out.extend(values[l][s][b].to_le_bytes());
                    }
                }
            }
        }
    }
    out
}

fn random_values(rng: &mut ChaCha8Rng, lines: usize, samples: usize, bands: usize) -> Vec<Vec<Vec<f64>>> {
    (0..lines)
        .map(|_| (0..samples).map(|_| (0..bands).map(|_| rng.random_range(0.0..1.0)).collect()).collect())
        .collect()
}

#[test]
fn wavelength_block_of_462_bands() {
    let grid = default_grid();
    let body: Vec<String> = grid.iter().map(|w| format!("{w:.3}")).collect();
    let text = format!(
        "ENVI\ndescription = {{camera export}}\nsamples = 4\nlines = 3\nbands = 462\nheader offset = 0\n\
         file type = ENVI Standard\ndata type = 12\ninterleave = bil\nbyte order = 0\nwavelength = {{\n{}\n}}\n",
        body.join(",\n")
    );
    let h = parse_envi_header(&text).unwrap();
    let w = h.wavelengths_nm.unwrap();
    assert_eq!(w.len(), 462);
    assert_eq!(w[0], 386.0);
    assert_eq!(w[461], 1004.0);
}

#[test]
fn all_interleaves_decode_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values = random_values(&mut rng, 3, 4, 5);
    let cubes: Vec<SpectralCube> = [Interleave::Bsq, Interleave::Bil, Interleave::Bip]
        .into_iter()
        .map(|il| read_cube(&header(4, 3, 5, il), &oracle_encode(&values, il)).unwrap())
        .collect();
    for c in &cubes[1..] {
        assert_eq!(c.data(), cubes[0].data());
    }
    for l in 0..3 {
        for s in 0..4 {
            assert_eq!(cubes[0].pixel(l, s), values[l][s].as_slice());
        }
    }
}

#[test]
fn encoder_matches_oracle_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let values = random_values(&mut rng, 2, 3, 4);
    let cube = read_cube(&header(3, 2, 4, Interleave::Bip), &oracle_encode(&values, Interleave::Bip)).unwrap();
    for il in [Interleave::Bsq, Interleave::Bil, Interleave::Bip] {
        assert_eq!(cube.encode(il, DataType::F64, ByteOrder::Little).unwrap(), oracle_encode(&values, il));
    }
}

#[test]
fn u16_and_f32_payloads_widen() {
    let mut h = header(2, 1, 3, Interleave::Bsq);
    h.data_type = DataType::U16;
    let data = vec![1.0, 2.0, 3.0, 400.0, 500.0, 65535.0];
    let cube = SpectralCube::new(h.clone(), data.clone()).unwrap();
    for order in [ByteOrder::Little, ByteOrder::Big] {
        let mut h2 = h.clone();
        h2.byte_order = order;
        let raw = cube.encode(Interleave::Bsq, DataType::U16, order).unwrap();
        assert_eq!(read_cube(&h2, &raw).unwrap().data(), data.as_slice());
        h2.data_type = DataType::F32;
        let raw = cube.encode(Interleave::Bsq, DataType::F32, order).unwrap();
        assert_eq!(read_cube(&h2, &raw).unwrap().data(), data.as_slice());
    }
}

#[test]
fn size_mismatch_reports_both_sizes() {
    let h = header(2, 2, 3, Interleave::Bsq);
    match read_cube(&h, &vec![0u8; 95]) {
        Err(e @ Error::Truncated { expected: 96, actual: 95 }) => {
            let msg = e.to_string();
            assert!(msg.contains("96") && msg.contains("95"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn roi_constant_cube_and_single_pixel() {
    let h = header(3, 2, 4, Interleave::Bip);
    let cube = SpectralCube::new(h.clone(), vec![0.7; 24]).unwrap();
    let mask = RoiMask::parse("1 0 1\n0 1 0\n").unwrap();
    assert_eq!(roi_mean_spectrum(&cube, &mask).unwrap().values(), &[0.7; 4]);

    let data: Vec<f64> = (0..24).map(|i| i as f64 * 0.1).collect();
    let cube = SpectralCube::new(h, data).unwrap();
    let one = RoiMask::parse("0 0 0\n0 0 1\n").unwrap();
    let s = roi_summary(&cube, &one).unwrap();
    assert_eq!(s.mean.values(), cube.pixel(1, 2));
    assert_eq!(s.band_max, cube.pixel(1, 2));
    assert_eq!(s.pixels, 1);
}

#[test]
fn roi_mean_matches_double_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let values = random_values(&mut rng, 4, 4, 5);
    let cube = read_cube(&header(4, 4, 5, Interleave::Bsq), &oracle_encode(&values, Interleave::Bsq)).unwrap();
    let flags: Vec<bool> = (0..16).map(|i| i % 3 == 0 || i == 7).collect();
    let mask = RoiMask::new(4, 4, flags.clone()).unwrap();
    let got = roi_mean_spectrum(&cube, &mask).unwrap();
    for b in 0..5 {
        let mut sum = 0.0;
        let mut count = 0.0;
        for l in 0..4 {
            for s in 0..4 {
                if flags[l * 4 + s] {
                    sum += values[l][s][b];
                    count += 1.0;
                }
            }
        }
        assert!((got.values()[b] - sum / count).abs() < 1e-12);
    }
}

#[test]
fn mask_dimension_mismatch() {
    let cube = SpectralCube::new(header(3, 2, 3, Interleave::Bsq), vec![0.5; 18]).unwrap();
    let mask = RoiMask::parse("1 1\n1 1\n").unwrap();
    assert!(matches!(roi_mean_spectrum(&cube, &mask), Err(Error::Dimension(_))));
}

#[test]
fn large_random_table_round_trips_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x: Vec<Vec<f64>> = (0..200).map(|_| (0..462).map(|_| rng.random::<f64>() * 1.3 - 0.1).collect()).collect();
    let y: Vec<f64> = (0..200).map(|_| rng.random_range(7.0..11.0)).collect();
    let t = SpectraTable::new(default_grid(), x, y, TargetKind::Firmness).unwrap();
    let back = read_spectra_csv(&write_spectra_csv(&t), TargetKind::Firmness).unwrap();
    assert_eq!(back, t);
}

proptest! {
    #[test]
    fn interleave_invariance(lines in 1usize..5, samples in 1usize..5, bands in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = random_values(&mut rng, lines, samples, bands);
        let canonical = read_cube(&header(samples, lines, bands, Interleave::Bip), &oracle_encode(&values, Interleave::Bip)).unwrap();
        for il in [Interleave::Bsq, Interleave::Bil, Interleave::Bip] {
            let raw = canonical.encode(il, DataType::F64, ByteOrder::Big).unwrap();
            let mut h = header(samples, lines, bands, il);
            h.byte_order = ByteOrder::Big;
            let decoded = read_cube(&h, &raw).unwrap();
            prop_assert_eq!(decoded.data(), canonical.data());
        }
    }

    #[test]
    fn roi_mean_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = header(3, 3, 4, Interleave::Bip);
        let d1: Vec<f64> = (0..36).map(|_| rng.random::<f64>()).collect();
        let d2: Vec<f64> = (0..36).map(|_| rng.random::<f64>()).collect();
        let mix: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| a * x + b * y).collect();
        let flags: Vec<bool> = (0..9).map(|_| rng.random_bool(0.5)).collect();
        prop_assume!(flags.iter().any(|f| *f));
        let mask = RoiMask::new(3, 3, flags).unwrap();
        let m1 = roi_mean_spectrum(&SpectralCube::new(h.clone(), d1).unwrap(), &mask).unwrap();
        let m2 = roi_mean_spectrum(&SpectralCube::new(h.clone(), d2).unwrap(), &mask).unwrap();
        let mm = roi_mean_spectrum(&SpectralCube::new(h, mix).unwrap(), &mask).unwrap();
        for i in 0..4 {
            prop_assert!((mm.values()[i] - (a * m1.values()[i] + b * m2.values()[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_round_trip(rows in 1usize..8, bands in 3usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid: Vec<f64> = (0..bands).map(|i| 386.0 + 1.337 * i as f64).collect();
        let x: Vec<Vec<f64>> = (0..rows).map(|_| (0..bands).map(|_| f64::from_bits(rng.random::<u64>() >> 2).min(1e300) * if rng.random_bool(0.5) { -1.0 } else { 1.0 }).collect()).collect();
        let y: Vec<f64> = (0..rows).map(|_| rng.random::<f64>() * 1e-7).collect();
        let t = SpectraTable::new(grid, x, y, TargetKind::Ssc).unwrap();
        prop_assert_eq!(read_spectra_csv(&write_spectra_csv(&t), TargetKind::Ssc).unwrap(), t);
    }
}
