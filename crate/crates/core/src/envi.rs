//! ENVI header parsing, cube decoding and region-of-interest extraction.
//!
//! Only the header keys needed for cube geometry and wavelengths are
//! interpreted: `samples`, `lines`, `bands`, `interleave`, `data type`,
//! `byte order` and `wavelength`. Everything else is ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub fn as_str(self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }

    /// Offset of element (line, sample, band) in a payload of this layout.
    fn offset(self, line: usize, sample: usize, band: usize, samples: usize, lines: usize, bands: usize) -> usize {
        match self {
            Interleave::Bsq => (band * lines + line) * samples + sample,
            Interleave::Bil => (line * bands + band) * samples + sample,
            Interleave::Bip => (line * samples + sample) * bands + band,
        }
    }
}

/// Sample encodings understood by the reader, with their ENVI codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    /// Code 12.
    U16,
    /// Code 4.
    F32,
    /// Code 5.
    F64,
}

impl DataType {
    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            12 => Some(DataType::U16),
            4 => Some(DataType::F32),
            5 => Some(DataType::F64),
            _ => None,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            DataType::U16 => 12,
            DataType::F32 => 4,
            DataType::F64 => 5,
        }
    }

    pub fn size(self) -> usize {
        match self {
            DataType::U16 => 2,
            DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    pub wavelengths_nm: Option<Vec<f64>>,
}

/// One `key = value` entry; brace blocks keep the line of every fragment.
struct Entry {
    key: String,
    line: usize,
    fragments: Vec<(usize, String)>,
}

impl Entry {
    fn value(&self) -> String {
        self.fragments
            .iter()
            .map(|(_, s)| s.as_str())
            .collect::<Vec<_>>()
            .join(" ")
            .trim()
            .to_string()
    }
}

fn entries(text: &str) -> Result<Vec<Entry>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.by_ref().find(|(_, l)| !l.trim().is_empty()) {
        Some((_, l)) if l.trim() == "ENVI" => {}
        Some((n, _)) => {
            return Err(Error::Parse {
                line: n,
                msg: "header must start with `ENVI`".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty header".into(),
            })
        }
    }

    let mut out = Vec::new();
    while let Some((n, raw)) = lines.next() {
        let Some((key, value)) = raw.split_once('=') else {
            continue;
        };
        let mut entry = Entry {
            key: key.trim().to_ascii_lowercase(),
            line: n,
            fragments: vec![(n, value.trim().to_string())],
        };
        if value.contains('{') && !value.contains('}') {
            loop {
                let Some((m, more)) = lines.next() else {
                    return Err(Error::Parse {
                        line: n,
                        msg: format!("unterminated brace block for `{}`", entry.key),
                    });
                };
                entry.fragments.push((m, more.trim().to_string()));
                if more.contains('}') {
                    break;
                }
            }
        }
        out.push(entry);
    }
    Ok(out)
}

fn parse_count(entry: &Entry) -> Result<usize> {
    let v = entry.value();
    match v.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        Ok(_) => Err(Error::Parse {
            line: entry.line,
            msg: format!("`{}` must be at least 1", entry.key),
        }),
        Err(_) => Err(Error::Parse {
            line: entry.line,
            msg: format!("`{}` is not a count: {v:?}", entry.key),
        }),
    }
}

fn parse_wavelengths(entry: &Entry) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (line, fragment) in &entry.fragments {
        let body = fragment.replace(['{', '}'], " ");
        for token in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let v: f64 = token.parse().map_err(|_| Error::Parse {
                line: *line,
                msg: format!("malformed wavelength {token:?}"),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

/// Parses an ENVI ASCII header.
pub fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let entries = entries(text)?;
    let find = |key: &str| entries.iter().rev().find(|e| e.key == key);
    let require = |key: &str| find(key).ok_or_else(|| Error::MissingKey(key.to_string()));

    let samples = parse_count(require("samples")?)?;
    let lines = parse_count(require("lines")?)?;
    let bands = parse_count(require("bands")?)?;

    let il = require("interleave")?;
    let interleave = match il.value().to_ascii_lowercase().as_str() {
        "bsq" => Interleave::Bsq,
        "bil" => Interleave::Bil,
        "bip" => Interleave::Bip,
        other => {
            return Err(Error::Parse {
                line: il.line,
                msg: format!("unknown interleave {other:?}"),
            })
        }
    };

    let dt = require("data type")?;
    let code: u32 = dt.value().parse().map_err(|_| Error::Parse {
        line: dt.line,
        msg: format!("`data type` is not a number: {:?}", dt.value()),
    })?;
    let data_type = DataType::from_code(code).ok_or_else(|| Error::Unsupported {
        key: "data type".into(),
        value: code.to_string(),
    })?;

    let byte_order = match find("byte order") {
        None => ByteOrder::Little,
        Some(e) => match e.value().as_str() {
            "0" => ByteOrder::Little,
            "1" => ByteOrder::Big,
            other => {
                return Err(Error::Parse {
                    line: e.line,
                    msg: format!("`byte order` must be 0 or 1, got {other:?}"),
                })
            }
        },
    };

    let wavelengths_nm = match find("wavelength") {
        None => None,
        Some(e) => {
            let w = parse_wavelengths(e)?;
            if w.len() != bands {
                return Err(Error::Parse {
                    line: e.line,
                    msg: format!("{} wavelengths listed for {bands} bands", w.len()),
                });
            }
            Some(w)
        }
    };

    Ok(EnviHeader {
        samples,
        lines,
        bands,
        interleave,
        data_type,
        byte_order,
        wavelengths_nm,
    })
}

impl EnviHeader {
    pub fn element_count(&self) -> usize {
        self.samples * self.lines * self.bands
    }

    pub fn payload_bytes(&self) -> usize {
        self.element_count() * self.data_type.size()
    }

    /// Renders the header in ENVI syntax; `parse_envi_header` reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::from("ENVI\n");
        s.push_str(&format!("samples = {}\n", self.samples));
        s.push_str(&format!("lines = {}\n", self.lines));
        s.push_str(&format!("bands = {}\n", self.bands));
        s.push_str("header offset = 0\n");
        s.push_str(&format!("data type = {}\n", self.data_type.code()));
        s.push_str(&format!("interleave = {}\n", self.interleave.as_str()));
        let order = match self.byte_order {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        };
        s.push_str(&format!("byte order = {order}\n"));
        if let Some(w) = &self.wavelengths_nm {
            s.push_str("wavelength units = Nanometers\n");
            let body: Vec<String> = w.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&format!("wavelength = {{\n {}}}\n", body.join(",\n ")));
        }
        s
    }

    /// Band wavelengths, or band indices when the header lists none.
    pub fn band_axis(&self) -> Vec<f64> {
        self.wavelengths_nm
            .clone()
            .unwrap_or_else(|| (0..self.bands).map(|b| b as f64).collect())
    }
}

/// Reflectance array in canonical (line, sample, band) order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    header: EnviHeader,
    data: Vec<f64>,
}

impl SpectralCube {
    /// `data` must already be in (line, sample, band) order.
    pub fn new(header: EnviHeader, data: Vec<f64>) -> Result<Self> {
        if data.len() != header.element_count() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{}x{} cube",
                data.len(),
                header.lines,
                header.samples,
                header.bands
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            let b = header.bands;
            let (pixel, band) = (i / b, i % b);
            return Err(Error::InvalidSpectrum(format!(
                "non-finite value at line {}, sample {}, band {band}",
                pixel / header.samples,
                pixel % header.samples
            )));
        }
        Ok(Self { header, data })
    }

    pub fn header(&self) -> &EnviHeader {
        &self.header
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, line: usize, sample: usize, band: usize) -> f64 {
        self.data[(line * self.header.samples + sample) * self.header.bands + band]
    }

    pub fn pixel(&self, line: usize, sample: usize) -> &[f64] {
        let b = self.header.bands;
        let start = (line * self.header.samples + sample) * b;
        &self.data[start..start + b]
    }

    /// Every pixel spectrum in (line, sample) raster order.
    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.header.bands)
    }

    /// Serializes the cube with the given layout and encoding.
    ///
    /// 16-bit output requires every value to be an integer in range.
    pub fn encode(&self, interleave: Interleave, data_type: DataType, byte_order: ByteOrder) -> Result<Vec<u8>> {
        let h = &self.header;
        let mut ordered = vec![0.0; self.data.len()];
        for line in 0..h.lines {
            for sample in 0..h.samples {
                for band in 0..h.bands {
                    let at = interleave.offset(line, sample, band, h.samples, h.lines, h.bands);
                    ordered[at] = self.get(line, sample, band);
                }
            }
        }
        let mut out = Vec::with_capacity(ordered.len() * data_type.size());
        for v in ordered {
            match data_type {
                DataType::U16 => {
                    if v.fract() != 0.0 || !(0.0..=u16::MAX as f64).contains(&v) {
                        return Err(Error::Unsupported {
                            key: "data type".into(),
                            value: format!("{v} is not representable as u16"),
                        });
                    }
                    let x = v as u16;
                    out.extend_from_slice(&match byte_order {
                        ByteOrder::Little => x.to_le_bytes(),
                        ByteOrder::Big => x.to_be_bytes(),
                    });
                }
                DataType::F32 => {
                    let x = v as f32;
                    out.extend_from_slice(&match byte_order {
                        ByteOrder::Little => x.to_le_bytes(),
                        ByteOrder::Big => x.to_be_bytes(),
                    });
                }
                DataType::F64 => out.extend_from_slice(&match byte_order {
                    ByteOrder::Little => v.to_le_bytes(),
                    ByteOrder::Big => v.to_be_bytes(),
                }),
            }
        }
        Ok(out)
    }

    /// Same geometry and wavelengths with new (line, sample, band) values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        SpectralCube::new(self.header.clone(), data)
    }
}

fn decode_element(bytes: &[u8], data_type: DataType, order: ByteOrder) -> f64 {
    match (data_type, order) {
        (DataType::U16, ByteOrder::Little) => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
        (DataType::U16, ByteOrder::Big) => u16::from_be_bytes([bytes[0], bytes[1]]) as f64,
        (DataType::F32, ByteOrder::Little) => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
        (DataType::F32, ByteOrder::Big) => f32::from_be_bytes(bytes.try_into().unwrap()) as f64,
        (DataType::F64, ByteOrder::Little) => f64::from_le_bytes(bytes.try_into().unwrap()),
        (DataType::F64, ByteOrder::Big) => f64::from_be_bytes(bytes.try_into().unwrap()),
    }
}

/// Decodes a raw payload into the canonical layout.
pub fn read_cube(header: &EnviHeader, raw: &[u8]) -> Result<SpectralCube> {
    let expected = header.payload_bytes();
    if raw.len() != expected {
        return Err(Error::Truncated {
            expected,
            actual: raw.len(),
        });
    }
    let size = header.data_type.size();
    let (s, l, b) = (header.samples, header.lines, header.bands);
    let mut data = vec![0.0; header.element_count()];
    for line in 0..l {
        for sample in 0..s {
            for band in 0..b {
                let at = header.interleave.offset(line, sample, band, s, l, b) * size;
                data[(line * s + sample) * b + band] =
                    decode_element(&raw[at..at + size], header.data_type, header.byte_order);
            }
        }
    }
    SpectralCube::new(header.clone(), data)
}

/// Finds the binary payload next to `header_path`: the same stem with
/// `.img`, `.raw`, `.dat` or no extension.
pub fn locate_payload(header_path: &Path) -> Result<PathBuf> {
    let stem = header_path.with_extension("");
    for ext in ["img", "raw", "dat"] {
        let candidate = stem.with_extension(ext);
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    if stem.is_file() && stem != header_path {
        return Ok(stem);
    }
    Err(Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("no cube payload found next to {}", header_path.display()),
    )))
}

/// Reads a header file and its payload (explicit or located next to it).
pub fn load_cube(header_path: &Path, payload: Option<&Path>) -> Result<SpectralCube> {
    let text = std::fs::read_to_string(header_path)?;
    let header = parse_envi_header(&text)?;
    let data_path = match payload {
        Some(p) => p.to_path_buf(),
        None => locate_payload(header_path)?,
    };
    let raw = std::fs::read(&data_path)?;
    read_cube(&header, &raw)
}

/// Boolean pixel selection over the cube's spatial grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiMask {
    width: usize,
    height: usize,
    selected: Vec<bool>,
}

impl RoiMask {
    /// `selected` is row-major: `height` rows of `width` flags.
    pub fn new(width: usize, height: usize, selected: Vec<bool>) -> Result<Self> {
        if selected.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} flags for a {width}x{height} mask",
                selected.len()
            )));
        }
        if !selected.iter().any(|&s| s) {
            return Err(Error::Empty("ROI mask selects no pixels".into()));
        }
        Ok(Self {
            width,
            height,
            selected,
        })
    }

    /// Parses an ASCII grid: one row per line, `0`/`1` tokens separated by whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let mut width = None;
        let mut selected = Vec::new();
        let mut height = 0;
        for (i, line) in text.lines().enumerate() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            for t in &tokens {
                match *t {
                    "0" => selected.push(false),
                    "1" => selected.push(true),
                    other => {
                        return Err(Error::Parse {
                            line: i + 1,
                            msg: format!("mask cell must be 0 or 1, got {other:?}"),
                        })
                    }
                }
            }
            match width {
                None => width = Some(tokens.len()),
                Some(w) if w != tokens.len() => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("mask row has {} cells, expected {w}", tokens.len()),
                    })
                }
                Some(_) => {}
            }
            height += 1;
        }
        let Some(width) = width else {
            return Err(Error::Empty("ROI mask file has no rows".into()));
        };
        RoiMask::new(width, height, selected)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_selected(&self, line: usize, sample: usize) -> bool {
        self.selected[line * self.width + sample]
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }
}

/// Mean spectrum of an ROI together with its per-band maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiSummary {
    pub mean: Spectrum,
    /// Per-band maximum over the ROI; values near sensor saturation flag highlights.
    pub band_max: Vec<f64>,
    pub pixels: usize,
}

fn check_mask(cube: &SpectralCube, mask: &RoiMask) -> Result<()> {
    let h = cube.header();
    if mask.width != h.samples || mask.height != h.lines {
        return Err(Error::Dimension(format!(
            "mask is {}x{} but cube is {}x{} (samples x lines)",
            mask.width, mask.height, h.samples, h.lines
        )));
    }
    Ok(())
}

pub fn roi_summary(cube: &SpectralCube, mask: &RoiMask) -> Result<RoiSummary> {
    check_mask(cube, mask)?;
    let h = cube.header();
    // Deviations from the first selected pixel are summed so that a
    // constant region averages back to exactly its value.
    let mut origin: Option<&[f64]> = None;
    let mut dev = vec![0.0; h.bands];
    let mut max = vec![f64::NEG_INFINITY; h.bands];
    let mut pixels = 0;
    for line in 0..h.lines {
        for sample in 0..h.samples {
            if !mask.is_selected(line, sample) {
                continue;
            }
            pixels += 1;
            let px = cube.pixel(line, sample);
            let o = *origin.get_or_insert(px);
            for (b, &v) in px.iter().enumerate() {
                dev[b] += v - o[b];
                max[b] = max[b].max(v);
            }
        }
    }
    let o = origin.expect("mask selects at least one pixel");
    let mean = dev.iter().zip(o).map(|(d, v)| v + d / pixels as f64).collect();
    Ok(RoiSummary {
        mean: Spectrum::new(h.band_axis(), mean)?,
        band_max: max,
        pixels,
    })
}

/// Per-band arithmetic mean over the selected pixels.
pub fn roi_mean_spectrum(cube: &SpectralCube, mask: &RoiMask) -> Result<Spectrum> {
    roi_summary(cube, mask).map(|s| s.mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "ENVI\nsamples = 2\nlines = 2\nbands = 3\ninterleave = bsq\ndata type = 4\n";

    #[test]
    fn minimal_header() {
        let h = parse_envi_header(MINIMAL).unwrap();
        assert_eq!((h.samples, h.lines, h.bands), (2, 2, 3));
        assert_eq!(h.interleave, Interleave::Bsq);
        assert_eq!(h.data_type, DataType::F32);
        assert_eq!(h.byte_order, ByteOrder::Little);
        assert_eq!(h.wavelengths_nm, None);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("bands = 3\n", "");
        match parse_envi_header(&text) {
            Err(Error::MissingKey(k)) => assert_eq!(k, "bands"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = MINIMAL.replace("lines = 2", "lines = two");
        match parse_envi_header(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_wavelength_reports_its_line() {
        let text = format!("{MINIMAL}wavelength = {{\n 400.0,\n 4x0,\n 500.0}}\n");
        match parse_envi_header(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn magic_is_required() {
        assert!(matches!(
            parse_envi_header("samples = 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_keys_and_description_blocks_are_ignored() {
        let text = format!("{MINIMAL}description = {{\n a multi-line\n note}}\nsensor type = Unknown\n");
        assert!(parse_envi_header(&text).is_ok());
    }

    #[test]
    fn one_pixel_bsq_decode() {
        let h = parse_envi_header("ENVI\nsamples = 1\nlines = 1\nbands = 3\ninterleave = bsq\ndata type = 5\n").unwrap();
        let raw: Vec<u8> = [0.1f64, 0.2, 0.3].iter().flat_map(|v| v.to_le_bytes()).collect();
        let cube = read_cube(&h, &raw).unwrap();
        assert_eq!(cube.pixel(0, 0), &[0.1, 0.2, 0.3]);
        assert!(matches!(
            read_cube(&h, &raw[..raw.len() - 1]),
            Err(Error::Truncated { expected: 24, actual: 23 })
        ));
    }

    #[test]
    fn big_endian_u16() {
        let h = parse_envi_header(
            "ENVI\nsamples = 2\nlines = 1\nbands = 1\ninterleave = bip\ndata type = 12\nbyte order = 1\n",
        )
        .unwrap();
        let cube = read_cube(&h, &[0x01, 0x02, 0x00, 0x07]).unwrap();
        assert_eq!(cube.data(), &[258.0, 7.0]);
    }

    #[test]
    fn header_text_round_trips() {
        let mut h = parse_envi_header(MINIMAL).unwrap();
        h.wavelengths_nm = Some(vec![400.5, 401.25, 402.0]);
        h.byte_order = ByteOrder::Big;
        assert_eq!(parse_envi_header(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn mask_parsing() {
        let m = RoiMask::parse("0 1\n1 0\n").unwrap();
        assert_eq!((m.width(), m.height(), m.count()), (2, 2, 2));
        assert!(m.is_selected(0, 1));
        assert!(matches!(RoiMask::parse("0 0\n0 0\n"), Err(Error::Empty(_))));
        assert!(matches!(RoiMask::parse("0 1\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(RoiMask::parse("0 2\n"), Err(Error::Parse { line: 1, .. })));
    }
}
