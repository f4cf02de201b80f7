//! File formats (WAV, PGM, CSV, PGBC1 coefficient text) and synthetic test signals.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compression::{Layout, SparseCoefficients};
use crate::error::{Error, Mode, Result};
use crate::image2d::Image;
use crate::lattice::build_config;
use crate::signal::Signal1D;

type C = Complex64;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(e).in_file(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(e).in_file(path))
}

// ---------------------------------------------------------------- WAV

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn bin_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Binary { offset, msg: msg.into() }
}

fn take<'a>(bytes: &'a [u8], at: usize, len: usize, what: &str) -> Result<&'a [u8]> {
    bytes.get(at..at + len).ok_or_else(|| {
        bin_err(at, format!("truncated {what}: need {len} bytes, {} available", bytes.len().saturating_sub(at)))
    })
}

fn u16_at(b: &[u8], at: usize, what: &str) -> Result<u16> {
    let s = take(b, at, 2, what)?;
    Ok(u16::from_le_bytes([s[0], s[1]]))
}

fn u32_at(b: &[u8], at: usize, what: &str) -> Result<u32> {
    let s = take(b, at, 4, what)?;
    Ok(u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
}

/// Decode a mono PCM16 or float32 WAV. PCM16 samples are scaled by `1/32768`.
pub fn parse_wav(bytes: &[u8]) -> Result<Signal1D> {
    if take(bytes, 0, 4, "RIFF header")? != b"RIFF" {
        return Err(bin_err(0, "missing RIFF magic"));
    }
    if take(bytes, 8, 4, "RIFF header")? != b"WAVE" {
        return Err(bin_err(8, "missing WAVE form type"));
    }
    let mut at = 12;
    let mut fmt: Option<(WavEncoding, u32)> = None;
    loop {
        if at >= bytes.len() {
            return Err(bin_err(at, "no data chunk"));
        }
        let id = take(bytes, at, 4, "chunk header")?;
        let size = u32_at(bytes, at + 4, "chunk header")? as usize;
        let body = at + 8;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bin_err(body, format!("fmt chunk of {size} bytes is too short")));
                }
                let mut tag = u16_at(bytes, body, "fmt chunk")?;
                let channels = u16_at(bytes, body + 2, "fmt chunk")?;
                let rate = u32_at(bytes, body + 4, "fmt chunk")?;
                let bits = u16_at(bytes, body + 14, "fmt chunk")?;
                if tag == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(bin_err(body, "extensible fmt chunk is too short"));
                    }
                    tag = u16_at(bytes, body + 24, "fmt chunk")?;
                }
                if channels != 1 {
                    return Err(bin_err(body + 2, format!("{channels} channels; only mono is supported")));
                }
                let enc = match (tag, bits) {
                    (FORMAT_PCM, 16) => WavEncoding::Pcm16,
                    (FORMAT_FLOAT, 32) => WavEncoding::Float32,
                    _ => {
                        return Err(bin_err(
                            body,
                            format!("unsupported encoding (format tag {tag}, {bits} bits)"),
                        ))
                    }
                };
                fmt = Some((enc, rate));
            }
            b"data" => {
                let (enc, rate) = fmt.ok_or_else(|| bin_err(at, "data chunk before fmt chunk"))?;
                let payload = take(bytes, body, size, "data chunk")?;
                let width = if enc == WavEncoding::Pcm16 { 2 } else { 4 };
                if size % width != 0 {
                    return Err(bin_err(body, format!("data size {size} is not a multiple of {width}")));
                }
                if size == 0 {
                    return Err(bin_err(body, "WAV file holds no samples"));
                }
                let values: Vec<f64> = match enc {
                    WavEncoding::Pcm16 => payload
                        .chunks_exact(2)
                        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                        .collect(),
                    WavEncoding::Float32 => payload
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                        .collect(),
                };
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(bin_err(body + i * width, "non-finite sample"));
                }
                return Ok(Signal1D::from_real(&values).with_rate(rate as f64));
            }
            _ => {}
        }
        // chunks are padded to even length
        at = body + size + (size & 1);
    }
}

/// Encode the real part of `x` as mono WAV. PCM16 rounds `v·32768` and clamps.
pub fn wav_bytes(x: &Signal1D, encoding: WavEncoding) -> Result<Vec<u8>> {
    if x.is_empty() {
        return Err(Error::invalid("cannot write an empty signal"));
    }
    x.check_finite()?;
    let rate = x.sample_rate.unwrap_or(8000.0).round() as u32;
    let (tag, bits) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 16u16),
        WavEncoding::Float32 => (FORMAT_FLOAT, 32u16),
    };
    let block = bits / 8;
    let data_len = x.len() * block as usize;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block as u32).to_le_bytes());
    out.extend_from_slice(&block.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in &x.samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s.re * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            WavEncoding::Float32 => out.extend_from_slice(&(s.re as f32).to_le_bytes()),
        }
    }
    Ok(out)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal1D> {
    let path = path.as_ref();
    parse_wav(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_wav(path: impl AsRef<Path>, x: &Signal1D, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let bytes = wav_bytes(x, encoding).map_err(|e| e.in_file(path))?;
    write_file(path, &bytes)
}

// ---------------------------------------------------------------- PGM

/// Decode a binary (P5) PGM with maxval 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some(b"P2") => return Err(bin_err(0, "ASCII PGM (P2) is not supported; convert to P5")),
        _ => return Err(bin_err(0, "missing P5 magic")),
    }
    let mut at = 2;
    let mut fields = [0usize; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        loop {
            match bytes.get(at) {
                Some(b'#') => {
                    while bytes.get(at).is_some_and(|&b| b != b'\n') {
                        at += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => at += 1,
                _ => break,
            }
        }
        let start = at;
        while bytes.get(at).is_some_and(u8::is_ascii_digit) {
            at += 1;
        }
        let name = ["width", "height", "maxval"][i];
        if start == at {
            return Err(bin_err(start, format!("expected {name}")));
        }
        *field = std::str::from_utf8(&bytes[start..at])
            .unwrap()
            .parse()
            .map_err(|_| bin_err(start, format!("{name} out of range")))?;
    }
    let [cols, rows, maxval] = fields;
    if maxval != 255 {
        return Err(bin_err(at, format!("maxval {maxval} is not supported; expected 255")));
    }
    if !bytes.get(at).is_some_and(u8::is_ascii_whitespace) {
        return Err(bin_err(at, "expected a whitespace byte before the raster"));
    }
    at += 1;
    if rows == 0 || cols == 0 {
        return Err(bin_err(at, format!("degenerate image {cols}×{rows}")));
    }
    let need = rows * cols;
    let have = bytes.len() - at;
    if have < need {
        return Err(bin_err(at, format!("raster needs {need} bytes, found {have}")));
    }
    let pixels = bytes[at..at + need].iter().map(|&b| b as f64).collect();
    Image::new(rows, cols, pixels)
}

/// Encode as P5; pixels are rounded and clamped to `[0, 255]`.
pub fn pgm_bytes(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols, img.rows).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    parse_pgm(&read_file(path)?).map_err(|e| e.in_file(path))
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_file(path.as_ref(), &pgm_bytes(img))
}

// ---------------------------------------------------------------- CSV signals

/// One value per row for real signals, `re,im` rows for complex ones.
/// Lines starting with `#` and a non-numeric first row are skipped.
pub fn parse_csv_signal(text: &str) -> Result<Signal1D> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Text {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = match parsed {
            Ok(v) => v,
            Err(_) if samples.is_empty() && width.is_none() => {
                width = Some(0);
                continue;
            }
            Err(e) => return Err(Error::Text { line, msg: format!("bad number: {e}") }),
        };
        if !(1..=2).contains(&vals.len()) {
            return Err(Error::Text { line, msg: format!("expected 1 or 2 columns, found {}", vals.len()) });
        }
        match width {
            Some(w) if w != 0 && w != vals.len() => {
                return Err(Error::Text { line, msg: format!("expected {w} columns, found {}", vals.len()) })
            }
            _ => width = Some(vals.len()),
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Text { line, msg: "non-finite value".into() });
        }
        samples.push(C::new(vals[0], vals.get(1).copied().unwrap_or(0.0)));
    }
    if samples.is_empty() {
        return Err(Error::Text { line: 0, msg: "no samples".into() });
    }
    if width == Some(1) {
        let re: Vec<f64> = samples.iter().map(|c| c.re).collect();
        Ok(Signal1D::from_real(&re))
    } else {
        Ok(Signal1D::from_complex(samples))
    }
}

pub fn csv_signal_string(x: &Signal1D) -> String {
    let mut out = String::new();
    for s in &x.samples {
        if x.real {
            writeln!(out, "{:e}", s.re).unwrap();
        } else {
            writeln!(out, "{:e},{:e}", s.re, s.im).unwrap();
        }
    }
    out
}

pub fn read_csv_signal(path: impl AsRef<Path>) -> Result<Signal1D> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Text { line: 0, msg: "not UTF-8".into() }.in_file(path))?;
    parse_csv_signal(&text).map_err(|e| e.in_file(path))
}

pub fn write_csv_signal(path: impl AsRef<Path>, x: &Signal1D) -> Result<()> {
    write_file(path.as_ref(), csv_signal_string(x).as_bytes())
}

// ---------------------------------------------------------------- PGBC1

pub const COEFF_MAGIC: &str = "PGBC1";

/// Sparse coefficients plus what is needed to write the reconstruction back out.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFile {
    pub sparse: SparseCoefficients,
    /// Whether the source signal was real.
    pub real: bool,
    pub sample_rate: Option<f64>,
}

/// Floats use the shortest representation that parses back to the same bits.
pub fn serialize_coeffs(file: &CoefficientFile) -> Result<String> {
    let s = &file.sparse;
    s.validate()?;
    let mut out = String::new();
    writeln!(out, "{COEFF_MAGIC}").unwrap();
    write!(out, "mode={} dims={}", s.mode, s.layout.dims()).unwrap();
    match s.layout {
        Layout::Lattice1(c) => write!(out, " nt={} nw={}", c.n_time, c.n_freq).unwrap(),
        Layout::Lattice2 { rows, cols } => write!(
            out,
            " nt={} nw={} nt2={} nw2={}",
            rows.n_time, rows.n_freq, cols.n_time, cols.n_freq
        )
        .unwrap(),
        Layout::Dft1 { .. } => {}
        Layout::Dft2 { rows, cols } => write!(out, " rows={rows} cols={cols}").unwrap(),
    }
    write!(out, " n={} porat={} real={}", s.n_total(), u8::from(s.porat), u8::from(file.real)).unwrap();
    if let Some(r) = file.sample_rate {
        write!(out, " rate={r:e}").unwrap();
    }
    out.push('\n');
    for (i, v) in &s.entries {
        writeln!(out, "{i} {:e} {:e}", v.re, v.im).unwrap();
    }
    Ok(out)
}

fn text_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Text { line, msg: msg.into() }
}

pub fn parse_coeffs(text: &str) -> Result<CoefficientFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == COEFF_MAGIC => {}
        Some((n, l)) if l.trim().starts_with("PGBC") => {
            return Err(text_err(n, format!("unsupported version `{}`, expected {COEFF_MAGIC}", l.trim())))
        }
        _ => return Err(text_err(1, format!("missing {COEFF_MAGIC} header"))),
    }
    let (hline, header) = lines.next().ok_or_else(|| text_err(2, "missing header line"))?;
    let mut kv = std::collections::BTreeMap::new();
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| text_err(hline, format!("malformed field `{tok}`")))?;
        if kv.insert(k, v).is_some() {
            return Err(text_err(hline, format!("repeated field `{k}`")));
        }
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| text_err(hline, format!("missing field `{k}`")));
    let num = |k: &str| -> Result<usize> {
        get(k)?.parse().map_err(|_| text_err(hline, format!("field `{k}` is not a non-negative integer")))
    };
    let flag = |k: &str| -> Result<bool> {
        match kv.get(k).copied() {
            None | Some("0") => Ok(false),
            Some("1") => Ok(true),
            Some(v) => Err(text_err(hline, format!("field `{k}` must be 0 or 1, found `{v}`"))),
        }
    };
    let known = ["mode", "dims", "nt", "nw", "nt2", "nw2", "rows", "cols", "n", "porat", "real", "rate"];
    if let Some(k) = kv.keys().find(|k| !known.contains(k)) {
        return Err(text_err(hline, format!("unknown field `{k}`")));
    }
    let mode: Mode = get("mode")?.parse().map_err(|e: Error| text_err(hline, e.to_string()))?;
    let dims = num("dims")?;
    let lattice = |nt: &str, nw: &str| build_config(num(nt)?, num(nw)?).map_err(|e| text_err(hline, e.to_string()));
    let layout = match (mode, dims) {
        (Mode::Dft, 1) => Layout::Dft1 { n: num("n")? },
        (Mode::Dft, 2) => Layout::Dft2 { rows: num("rows")?, cols: num("cols")? },
        (_, 1) => Layout::Lattice1(lattice("nt", "nw")?),
        (_, 2) => Layout::Lattice2 { rows: lattice("nt", "nw")?, cols: lattice("nt2", "nw2")? },
        (_, d) => return Err(text_err(hline, format!("dims must be 1 or 2, found {d}"))),
    };
    let n = num("n")?;
    if n != layout.n_total() {
        return Err(text_err(hline, format!("n={n} does not match the lattice size {}", layout.n_total())));
    }
    let sample_rate = match kv.get("rate") {
        Some(r) => Some(r.parse::<f64>().map_err(|_| text_err(hline, "bad rate"))?),
        None => None,
    };
    let mut entries: Vec<(usize, C)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (ln, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(text_err(ln, format!("expected `index re im`, found {} fields", f.len())));
        }
        let idx: usize = f[0].parse().map_err(|_| text_err(ln, format!("bad index `{}`", f[0])))?;
        if idx >= n {
            return Err(text_err(ln, format!("index {idx} out of range for n={n}")));
        }
        if !seen.insert(idx) {
            return Err(text_err(ln, format!("duplicate index {idx}")));
        }
        let re: f64 = f[1].parse().map_err(|_| text_err(ln, format!("bad value `{}`", f[1])))?;
        let im: f64 = f[2].parse().map_err(|_| text_err(ln, format!("bad value `{}`", f[2])))?;
        entries.push((idx, C::new(re, im)));
    }
    entries.sort_by_key(|e| e.0);
    Ok(CoefficientFile {
        sparse: SparseCoefficients { mode, layout, entries, porat: flag("porat")? },
        real: flag("real")?,
        sample_rate,
    })
}

pub fn read_coeffs(path: impl AsRef<Path>) -> Result<CoefficientFile> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| text_err(0, "not UTF-8").in_file(path))?;
    parse_coeffs(&text).map_err(|e| e.in_file(path))
}

pub fn write_coeffs(path: impl AsRef<Path>, file: &CoefficientFile) -> Result<()> {
    let path = path.as_ref();
    let text = serialize_coeffs(file).map_err(|e| e.in_file(path))?;
    write_file(path, text.as_bytes())
}

// ---------------------------------------------------------------- generators

/// `(2 Re α/π)^¼ exp(−α(t − t0)² + j w0 (t − t0))` at any real `t`.
pub fn chirp_value(alpha: C, t0: f64, w0: f64, t: f64) -> C {
    let norm = (2.0 * alpha.re / std::f64::consts::PI).powf(0.25);
    let u = t - t0;
    norm * (-alpha * u * u + C::new(0.0, w0 * u)).exp()
}

/// `s[k] = (2 Re α/π)^¼ exp(−α(k − t0)² + j w0 (k − t0))`
pub fn chirped_gaussian(n: usize, alpha: C, t0: f64, w0: f64) -> Result<Signal1D> {
    if !(alpha.re > 0.0) {
        return Err(Error::invalid(format!("chirp needs Re(alpha) > 0, got {alpha}")));
    }
    let samples = (0..n).map(|k| chirp_value(alpha, t0, w0, k as f64)).collect();
    let mut s = Signal1D::from_complex(samples);
    s.real = alpha.im == 0.0 && w0 == 0.0;
    Ok(s)
}

/// `amplitude` on `[start, start + width)`, zero elsewhere.
pub fn rect_pulse(n: usize, start: usize, width: usize, amplitude: f64) -> Result<Signal1D> {
    if start.checked_add(width).is_none_or(|end| end > n) {
        return Err(Error::invalid(format!("pulse [{start}, {start}+{width}) does not fit in {n} samples")));
    }
    let values: Vec<f64> = (0..n)
        .map(|k| if (start..start + width).contains(&k) { amplitude } else { 0.0 })
        .collect();
    Ok(Signal1D::from_real(&values))
}

/// Length, start and width of the reference pulse.
pub const DEFAULT_PULSE: (usize, usize, usize) = (64, 16, 32);

/// The reference pulse, scaled to unit energy.
pub fn default_pulse() -> Signal1D {
    let (n, start, width) = DEFAULT_PULSE;
    rect_pulse(n, start, width, 1.0 / (width as f64).sqrt()).unwrap()
}

/// Width, centre and carrier of the reference chirp.
pub const DEFAULT_CHIRP: (C, f64, f64) = (C::new(0.135, 0.135), 31.5, std::f64::consts::FRAC_PI_3);

/// The reference chirp: 64 samples, `α = 0.135(1 + j)`, centred at 31.5, `w0 = π/3`.
pub fn default_chirp() -> Signal1D {
    let (alpha, t0, w0) = DEFAULT_CHIRP;
    chirped_gaussian(64, alpha, t0, w0).unwrap()
}

/// A percussive stand-in for recorded audio: a short attack into a
/// decaying noise burst, plus a descending chirp with a slower decay.
/// Unit L2 norm, deterministic in `(n, seed)`.
pub fn synthetic_splat(n: usize, seed: u64) -> Result<Signal1D> {
    if n < 16 {
        return Err(Error::invalid(format!("splat needs at least 16 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let attack = (nf / 200.0).max(1.0);
    let (f_hi, f_lo) = (0.35 * std::f64::consts::PI, 0.02 * std::f64::consts::PI);
    let mut values: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64;
            let rise = (t / attack).min(1.0);
            let noise = rng.random_range(-1.0..1.0) * (-t / (0.03 * nf)).exp();
            // instantaneous frequency falls linearly from f_hi to f_lo
            let phase = f_hi * t - (f_hi - f_lo) * t * t / (2.0 * nf);
            let chirp = 0.5 * phase.sin() * (-t / (0.12 * nf)).exp();
            rise * (noise + chirp)
        })
        .collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(Signal1D::from_real(&values))
}
