//! Frame ingestion, ring masks, synthetic data and model files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::matrix::Matrix;
use crate::multilinear::ComponentRange;
use crate::pipeline::{FrameMatrix, TrainedModel};
use crate::svm::{Label, SvmModel};
use crate::tensor::DenseTensor;

/// Formats a float with 17 significant digits, enough to re-read it exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// CSV frame matrices
// ---------------------------------------------------------------------------

/// Reads a rectangular numeric CSV, one frame per row.
pub fn load_frames_csv(path: impl AsRef<Path>, label: Label) -> Result<FrameMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, column: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        msg,
    };

    let mut width = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (j, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(lineno, j + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, j + 1, format!("non-finite value {cell:?}")));
            }
            data.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(parse_err(
                    lineno,
                    count.min(w) + 1,
                    format!("row has {count} values, expected {w}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let frames = Matrix::from_vec(rows, width.unwrap_or(0), data)?;
    Ok(FrameMatrix::new(frames, label))
}

/// Writes frames as CSV with 17 significant digits per value.
pub fn save_frames_csv(path: impl AsRef<Path>, frames: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for i in 0..frames.rows() {
        let row: Vec<String> = frames.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Binary PGM
// ---------------------------------------------------------------------------

/// A grayscale image with values in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::shape(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Option<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }
}

/// Decodes a binary (`P5`) PGM held in memory.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (magic P5 expected)".into());
    }
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.number().ok_or("bad width")? as usize;
    let height = rd.number().ok_or("bad height")? as usize;
    let maxval = rd.number().ok_or("bad maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(rd.pos) {
        Some(b) if b.is_ascii_whitespace() => rd.pos += 1,
        _ => return Err("missing whitespace after maxval".into()),
    }
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let needed = width * height * sample_bytes;
    let raster = &bytes[rd.pos..];
    if raster.len() < needed {
        return Err(format!(
            "truncated raster: {} of {needed} bytes",
            raster.len()
        ));
    }
    let scale = maxval as f64;
    let pixels = if sample_bytes == 1 {
        raster[..needed].iter().map(|&b| b as f64 / scale).collect()
    } else {
        raster[..needed]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale)
            .collect()
    };
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|msg| Error::Pgm {
        path: path.to_path_buf(),
        msg,
    })
}

/// Encodes an image as a binary PGM with the given maxval (values clamped to `[0, 1]`).
pub fn encode_pgm(img: &GrayImage, maxval: u16) -> Vec<u8> {
    let maxval = maxval.max(1);
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, maxval).into_bytes();
    for &v in &img.pixels {
        let q = (v.clamp(0.0, 1.0) * maxval as f64).round() as u16;
        if maxval < 256 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    out
}

pub fn save_pgm(path: impl AsRef<Path>, img: &GrayImage, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img, maxval)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Ring masks
// ---------------------------------------------------------------------------

/// Pixels to keep from an aligned face image (true = outer-ring pixel).
#[derive(Clone, Debug, PartialEq)]
pub struct RingMask {
    pub width: usize,
    pub height: usize,
    pub keep: Vec<bool>,
}

impl RingMask {
    pub fn new(width: usize, height: usize, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != width * height {
            return Err(Error::shape(format!(
                "{width}x{height} mask needs {} entries, got {}",
                width * height,
                keep.len()
            )));
        }
        if !keep.iter().any(|&k| k) {
            return Err(Error::Params("mask keeps no pixels".into()));
        }
        Ok(Self {
            width,
            height,
            keep,
        })
    }

    pub fn all(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    /// Pixels whose distance from the image center lies in `[inner, outer]`.
    pub fn annulus(width: usize, height: usize, inner: f64, outer: f64) -> Result<Self> {
        let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        let keep = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| {
                let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                r >= inner && r <= outer
            })
            .collect();
        Self::new(width, height, keep)
    }

    /// Nonzero pixels of the image are kept.
    pub fn from_image(img: &GrayImage) -> Result<Self> {
        Self::new(
            img.width,
            img.height,
            img.pixels.iter().map(|&v| v != 0.0).collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_image(&load_pgm(path)?)
    }

    pub fn kept(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.keep.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Kept pixels in row-major scan order.
pub fn apply_mask(img: &GrayImage, mask: &RingMask) -> Result<Vec<f64>> {
    if (img.width, img.height) != (mask.width, mask.height) {
        return Err(Error::shape(format!(
            "image is {}x{}, mask is {}x{}",
            img.width, img.height, mask.width, mask.height
        )));
    }
    Ok(img
        .pixels
        .iter()
        .zip(&mask.keep)
        .filter(|(_, &k)| k)
        .map(|(&v, _)| v)
        .collect())
}

/// Loads one frame set from a CSV file or a directory of `.pgm` images.
///
/// Directory entries are read in file-name order. With a mask, each frame
/// (a CSV row of `width * height` values, or an image) is reduced to its kept
/// pixels; without one, images are vectorized whole.
pub fn load_frames(path: impl AsRef<Path>, label: Label, mask: Option<&RingMask>) -> Result<FrameMatrix> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
            .collect();
        files.sort();
        let mut rows = Vec::with_capacity(files.len());
        for f in &files {
            let img = load_pgm(f)?;
            let row = match mask {
                Some(m) => apply_mask(&img, m).map_err(|e| Error::Pgm {
                    path: f.clone(),
                    msg: e.to_string(),
                })?,
                None => img.pixels,
            };
            if let Some(first) = rows.first() {
                let first: &Vec<f64> = first;
                if first.len() != row.len() {
                    return Err(Error::Pgm {
                        path: f.clone(),
                        msg: format!("{} values, earlier images gave {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        let width = rows.first().map_or(0, Vec::len);
        let data = rows.into_iter().flatten().collect();
        return Ok(FrameMatrix::new(Matrix::from_vec(files.len(), width, data)?, label));
    }

    let frames = load_frames_csv(path, label)?;
    let Some(m) = mask else { return Ok(frames) };
    if frames.pixels() != m.width * m.height && !frames.is_empty() {
        return Err(Error::shape(format!(
            "{}: rows have {} values, mask is {}x{}",
            path.display(),
            frames.pixels(),
            m.width,
            m.height
        )));
    }
    let mut out = Matrix::zeros(frames.len(), m.kept());
    for (i, row) in frames.frames().enumerate() {
        let img = GrayImage::new(m.width, m.height, row.to_vec())?;
        out.row_mut(i).copy_from_slice(&apply_mask(&img, m)?);
    }
    Ok(FrameMatrix::new(out, label))
}

// ---------------------------------------------------------------------------
// Synthetic planted-artifact data
// ---------------------------------------------------------------------------

/// Generator recorded in synthetic-data metadata.
pub const SYNTH_RNG: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub pixels: usize,
    /// Rank of the shared face subspace.
    pub inner_dim: usize,
    /// Rank of the artifact subspace.
    pub artifact_dim: usize,
    /// Fraction of trailing coordinates forming the "outer ring".
    pub outer_fraction: f64,
    pub artifact_gain: f64,
    pub noise_sigma: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            pixels: 1024,
            inner_dim: 8,
            artifact_dim: 4,
            outer_fraction: 0.25,
            artifact_gain: 2.0,
            noise_sigma: 0.05,
            n_per_class: 120,
            seed: 42,
        }
    }
}

impl SynthParams {
    /// Number of trailing "outer ring" coordinates.
    pub fn outer_len(&self) -> usize {
        (self.outer_fraction * self.pixels as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Params(msg));
        if self.inner_dim == 0 || self.artifact_dim == 0 {
            return bad("inner_dim and artifact_dim must be at least 1".into());
        }
        if self.inner_dim + self.artifact_dim > self.pixels {
            return bad(format!(
                "inner_dim + artifact_dim = {} exceeds {} pixels",
                self.inner_dim + self.artifact_dim,
                self.pixels
            ));
        }
        if !(self.outer_fraction > 0.0 && self.outer_fraction < 1.0) {
            return bad(format!("outer_fraction {} not in (0, 1)", self.outer_fraction));
        }
        if !(self.artifact_gain >= 0.0) || !(self.noise_sigma >= 0.0) {
            return bad("artifact_gain and noise_sigma must be nonnegative".into());
        }
        if self.n_per_class == 0 {
            return bad("n_per_class must be positive".into());
        }
        let outer = self.outer_len();
        if self.artifact_dim > outer {
            return bad(format!(
                "artifact_dim {} exceeds the {outer} outer coordinates",
                self.artifact_dim
            ));
        }
        if self.inner_dim > self.pixels - outer {
            return bad(format!(
                "inner_dim {} exceeds the {} inner coordinates",
                self.inner_dim,
                self.pixels - outer
            ));
        }
        Ok(())
    }
}

/// Per-component standard deviation of face coefficients.
const FACE_SCALE: f64 = 1.2;
const FACE_DECAY: f64 = 0.93;
/// Per-component standard deviation of artifact coefficients (before the gain).
const ARTIFACT_SCALE: f64 = 0.25;
const ARTIFACT_DECAY: f64 = 0.95;

#[derive(Clone, Debug)]
pub struct SynthData {
    pub train_real: FrameMatrix,
    pub train_fake: FrameMatrix,
    pub val_real: FrameMatrix,
    pub val_fake: FrameMatrix,
    pub test_real: FrameMatrix,
    pub test_fake: FrameMatrix,
}

impl SynthData {
    pub fn splits(&self) -> [(&'static str, &FrameMatrix); 6] {
        [
            ("train_real", &self.train_real),
            ("train_fake", &self.train_fake),
            ("val_real", &self.val_real),
            ("val_fake", &self.val_fake),
            ("test_real", &self.test_real),
            ("test_fake", &self.test_fake),
        ]
    }
}

/// Orthonormal `pixels x dim` basis supported on rows `start..start + len`.
fn supported_basis(
    rng: &mut ChaCha8Rng,
    pixels: usize,
    start: usize,
    len: usize,
    dim: usize,
) -> Result<Matrix> {
    let block: Vec<f64> = (0..len * dim).map(|_| rng.sample(StandardNormal)).collect();
    let q = thin_svd(&Matrix::from_vec(len, dim, block)?, None)?.u;
    let mut out = Matrix::zeros(pixels, dim);
    for i in 0..len {
        out.row_mut(start + i).copy_from_slice(q.row(i));
    }
    Ok(out)
}

/// Two-class synthetic frames.
///
/// Both classes are `G x + noise`, with `G` an orthonormal face basis on the
/// inner coordinates and decaying coefficient scales. Fake frames add
/// `artifact_gain * A y`, with `A` orthonormal and supported only on the last
/// `ceil(outer_fraction * pixels)` coordinates.
pub fn synth_generate(p: &SynthParams) -> Result<SynthData> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let outer = p.outer_len();
    let inner = p.pixels - outer;
    let face = supported_basis(&mut rng, p.pixels, 0, inner, p.inner_dim)?;
    let artifact = supported_basis(&mut rng, p.pixels, inner, outer, p.artifact_dim)?;
    let face_scales: Vec<f64> = (0..p.inner_dim)
        .map(|j| FACE_SCALE * FACE_DECAY.powi(j as i32))
        .collect();
    let art_scales: Vec<f64> = (0..p.artifact_dim)
        .map(|j| ARTIFACT_SCALE * ARTIFACT_DECAY.powi(j as i32))
        .collect();

    let mut split = |label: Label| -> Result<FrameMatrix> {
        let mut frames = Matrix::zeros(p.n_per_class, p.pixels);
        for n in 0..p.n_per_class {
            let x: Vec<f64> = face_scales
                .iter()
                .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            // artifact coefficients are drawn for both classes so streams stay aligned
            let y: Vec<f64> = art_scales
                .iter()
                .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut frame = face.matvec(&x)?;
            if label == Label::Fake {
                let a = artifact.matvec(&y)?;
                for (f, v) in frame.iter_mut().zip(a) {
                    *f += p.artifact_gain * v;
                }
            }
            for f in frame.iter_mut() {
                *f += p.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
            frames.row_mut(n).copy_from_slice(&frame);
        }
        Ok(FrameMatrix::new(frames, label))
    };

    Ok(SynthData {
        train_real: split(Label::Real)?,
        train_fake: split(Label::Fake)?,
        val_real: split(Label::Real)?,
        val_fake: split(Label::Fake)?,
        test_real: split(Label::Real)?,
        test_fake: split(Label::Fake)?,
    })
}

/// Key=value description of a generated dataset, including the generator name.
pub fn synth_metadata(p: &SynthParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rng={SYNTH_RNG}");
    let _ = writeln!(out, "seed={}", p.seed);
    let _ = writeln!(out, "pixels={}", p.pixels);
    let _ = writeln!(out, "inner_dim={}", p.inner_dim);
    let _ = writeln!(out, "artifact_dim={}", p.artifact_dim);
    let _ = writeln!(out, "outer_fraction={}", p.outer_fraction);
    let _ = writeln!(out, "outer_coordinates={}", p.outer_len());
    let _ = writeln!(out, "artifact_gain={}", p.artifact_gain);
    let _ = writeln!(out, "noise_sigma={}", p.noise_sigma);
    let _ = writeln!(out, "n_per_class={}", p.n_per_class);
    out
}

// ---------------------------------------------------------------------------
// MLDF v1 model files
// ---------------------------------------------------------------------------

const MLDF_HEADER: &str = "MLDF 1";

fn push_section(out: &mut String, name: &str, lines: &[String]) {
    let _ = writeln!(out, "{name} {}", lines.len());
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
}

fn join_floats(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(fmt_f64)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical MLDF v1 text of a model.
pub fn model_to_string(model: &TrainedModel) -> Result<String> {
    let (p, f, k) = model.dims();
    let mut out = String::new();
    out.push_str(MLDF_HEADER);
    out.push('\n');
    push_section(&mut out, "dims", &[format!("{p} {f} {k}")]);
    push_section(&mut out, "mean", &[join_floats(model.mean_real.iter().copied())]);
    let uclass: Vec<String> = (0..2)
        .map(|i| join_floats(model.u_class.row(i).iter().copied()))
        .collect();
    push_section(&mut out, "uclass", &uclass);
    push_section(
        &mut out,
        "keep",
        &[format!("{} {}", model.keep.lo(), model.keep.hi())],
    );
    let unfolded = model.core.matrixize(1)?;
    let core: Vec<String> = (0..p)
        .map(|i| join_floats(unfolded.row(i).iter().copied()))
        .collect();
    push_section(&mut out, "core", &core);
    let svm = &model.svm;
    push_section(
        &mut out,
        "svm",
        &[format!(
            "{} {} {} {}",
            join_floats(svm.w),
            fmt_f64(svm.b),
            fmt_f64(svm.c_reg),
            u8::from(svm.converged)
        )],
    );
    let crc = crc32fast::hash(out.as_bytes());
    let _ = writeln!(out, "{crc}");
    Ok(out)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)?).map_err(|e| Error::io(path, e))
}

struct SectionReader<'a> {
    lines: std::str::Lines<'a>,
}

impl<'a> SectionReader<'a> {
    fn section(&mut self, name: &str) -> Result<Vec<&'a str>> {
        let header = self
            .lines
            .next()
            .ok_or_else(|| Error::Malformed(format!("missing section {name:?}")))?;
        let (found, count) = header
            .split_once(' ')
            .ok_or_else(|| Error::Malformed(format!("bad section header {header:?}")))?;
        if found != name {
            return Err(Error::Malformed(format!(
                "expected section {name:?}, found {found:?}"
            )));
        }
        let count: usize = count
            .parse()
            .map_err(|_| Error::Malformed(format!("bad length in {header:?}")))?;
        let mut lines = Vec::with_capacity(count);
        for _ in 0..count {
            lines.push(self.lines.next().ok_or_else(|| {
                Error::Malformed(format!("section {name:?} ends early"))
            })?);
        }
        Ok(lines)
    }
}

fn parse_floats(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values = line
        .split_ascii_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Malformed(format!("{what}: bad number {t:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(Error::Malformed(format!(
            "{what}: expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

fn one_line<'a>(lines: &[&'a str], what: &str) -> Result<&'a str> {
    match lines {
        [l] => Ok(l),
        _ => Err(Error::Malformed(format!("{what}: expected one line"))),
    }
}

/// Parses MLDF v1 text and rebuilds the cached pseudo-inverse.
pub fn model_from_str(text: &str) -> Result<TrainedModel> {
    let first = text.lines().next().unwrap_or("");
    if first != MLDF_HEADER {
        return if first.starts_with("MLDF") {
            Err(Error::Version(first.to_string()))
        } else {
            Err(Error::Malformed("missing MLDF header".into()))
        };
    }
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .ok_or_else(|| Error::Malformed("missing checksum line".into()))?
        + 1;
    let (body, crc_line) = text.split_at(body_end);
    let stored: u32 = crc_line
        .trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("bad checksum line {:?}", crc_line.trim())))?;
    let computed = crc32fast::hash(body.as_bytes());
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut rd = SectionReader {
        lines: body.lines(),
    };
    rd.lines.next();
    let dims = rd.section("dims")?;
    let dims: Vec<usize> = one_line(&dims, "dims")?
        .split_ascii_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Malformed(format!("dims: bad value {t:?}"))))
        .collect::<Result<_>>()?;
    let [p, f, k] = dims[..] else {
        return Err(Error::Malformed("dims: expected P F K".into()));
    };
    let mean = parse_floats(one_line(&rd.section("mean")?, "mean")?, p, "mean")?;
    let uclass_lines = rd.section("uclass")?;
    if uclass_lines.len() != 2 {
        return Err(Error::Malformed("uclass: expected two rows".into()));
    }
    let rows: Vec<Vec<f64>> = uclass_lines
        .iter()
        .map(|l| parse_floats(l, 3, "uclass"))
        .collect::<Result<_>>()?;
    let u_class = Matrix::from_rows(&rows)?;
    let keep = rd.section("keep")?;
    let keep: Vec<usize> = one_line(&keep, "keep")?
        .split_ascii_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Malformed(format!("keep: bad value {t:?}"))))
        .collect::<Result<_>>()?;
    let [lo, hi] = keep[..] else {
        return Err(Error::Malformed("keep: expected LO HI".into()));
    };
    let keep = ComponentRange::new(lo, hi)?;
    let core_lines = rd.section("core")?;
    if core_lines.len() != p {
        return Err(Error::Malformed(format!(
            "core: expected {p} rows, found {}",
            core_lines.len()
        )));
    }
    let mut unfolded = Vec::with_capacity(p * 3 * k);
    for l in &core_lines {
        unfolded.extend(parse_floats(l, 3 * k, "core")?);
    }
    let core = DenseTensor::tensorize(&Matrix::from_vec(p, 3 * k, unfolded)?, &[p, k, 3], 1)?;
    let svm_lines = rd.section("svm")?;
    let svm_fields: Vec<&str> = one_line(&svm_lines, "svm")?.split_ascii_whitespace().collect();
    if svm_fields.len() != 6 {
        return Err(Error::Malformed("svm: expected w0 w1 w2 b c converged".into()));
    }
    let nums = parse_floats(&svm_fields[..5].join(" "), 5, "svm")?;
    let converged = match svm_fields[5] {
        "0" => false,
        "1" => true,
        other => return Err(Error::Malformed(format!("svm: bad flag {other:?}"))),
    };
    if rd.lines.next().is_some() {
        return Err(Error::Malformed("trailing content after svm section".into()));
    }
    let svm = SvmModel {
        w: [nums[0], nums[1], nums[2]],
        b: nums[3],
        c_reg: nums[4],
        converged,
    };

    let model = TrainedModel::from_parts(mean, core, u_class, keep, svm, f)?;
    verify_core_pinv(&model)?;
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

/// Largest relative violation of the four Penrose conditions for `pinv(T_[1])`.
pub fn penrose_residual(model: &TrainedModel) -> Result<f64> {
    let a = model.core.matrixize(1)?;
    let p = model.core_pinv1();
    let rel = |x: &Matrix, y: &Matrix| -> Result<f64> {
        Ok(x.sub(y)?.frobenius_norm() / y.frobenius_norm().max(f64::MIN_POSITIVE))
    };
    let ap = a.matmul(p)?;
    let pa = p.matmul(&a)?;
    let errs = [
        rel(&ap.matmul(&a)?, &a)?,
        rel(&pa.matmul(p)?, p)?,
        rel(&ap.transpose(), &ap)?,
        rel(&pa.transpose(), &pa)?,
    ];
    Ok(errs.into_iter().fold(0.0, f64::max))
}

fn verify_core_pinv(model: &TrainedModel) -> Result<()> {
    let r = penrose_residual(model)?;
    if r > 1e-9 {
        return Err(Error::Malformed(format!(
            "recomputed core pseudo-inverse fails the Penrose checks ({r:e})"
        )));
    }
    Ok(())
}
