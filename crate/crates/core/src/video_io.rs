//! Luma-only sequence input: raw I420, Y4M and deterministic synthetic clips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interpolation::{PaddedReference, QuarterPos};

/// 8-bit luma samples of one frame, row-major. Both dimensions are multiples
/// of 16.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        check_aligned(width, height)?;
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Copies a `w`x`h` block whose top-left corner is `(x, y)`.
    pub fn block(&self, x: usize, y: usize, w: usize, h: usize) -> Vec<u8> {
        assert!(x + w <= self.width && y + h <= self.height);
        let mut out = Vec::with_capacity(w * h);
        for j in 0..h {
            let r = (y + j) * self.width + x;
            out.extend_from_slice(&self.samples[r..r + w]);
        }
        out
    }

    pub fn put_block(&mut self, x: usize, y: usize, w: usize, h: usize, data: &[u8]) {
        assert!(x + w <= self.width && y + h <= self.height);
        for j in 0..h {
            let r = (y + j) * self.width + x;
            self.samples[r..r + w].copy_from_slice(&data[j * w..(j + 1) * w]);
        }
    }

    pub fn mb_cols(&self) -> usize {
        self.width / 16
    }

    pub fn mb_rows(&self) -> usize {
        self.height / 16
    }
}

fn check_aligned(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(16) || !height.is_multiple_of(16) {
        return Err(Error::UnalignedDimensions { width, height });
    }
    Ok(())
}

/// Synthetic content generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// One texture, repeated.
    Static,
    /// A texture translated by a fixed quarter-pel vector per frame.
    GlobalShift { dx: i32, dy: i32 },
    /// Drifting background plus independently moving textured objects.
    TexturedDrift,
}

impl SynthKind {
    pub const DEFAULT_SHIFT: (i32, i32) = (3, 1);
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Self::Static),
            "textured-drift" => Ok(Self::TexturedDrift),
            "global-shift" => Ok(Self::GlobalShift {
                dx: Self::DEFAULT_SHIFT.0,
                dy: Self::DEFAULT_SHIFT.1,
            }),
            other => {
                if let Some(v) = other.strip_prefix("global-shift:") {
                    let (a, b) = v.split_once(',').ok_or_else(|| {
                        Error::InvalidConfig(format!("expected global-shift:DX,DY, got `{other}`"))
                    })?;
                    let parse = |t: &str| {
                        t.trim().parse::<i32>().map_err(|_| {
                            Error::InvalidConfig(format!("bad shift component `{t}`"))
                        })
                    };
                    Ok(Self::GlobalShift {
                        dx: parse(a)?,
                        dy: parse(b)?,
                    })
                } else {
                    Err(Error::InvalidConfig(format!("unknown synthetic kind `{other}`")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    File(PathBuf),
    Synthetic(SynthKind),
}

impl FromStr for Source {
    type Err = Error;

    /// `synth:KIND` selects a generator, anything else is a path.
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("synth:") {
            Some(kind) => Ok(Source::Synthetic(kind.parse()?)),
            None => Ok(Source::File(PathBuf::from(s))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequenceConfig {
    pub source: Source,
    pub frame_count: usize,
    /// For Y4M input, 0 means "take from the header".
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl SequenceConfig {
    pub fn synthetic(kind: SynthKind, width: usize, height: usize, frame_count: usize, seed: u64) -> Self {
        Self {
            source: Source::Synthetic(kind),
            frame_count,
            width,
            height,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "frame_count must be at least 2, got {}",
                self.frame_count
            )));
        }
        Ok(())
    }
}

pub fn load_sequence(cfg: &SequenceConfig) -> Result<Vec<LumaPlane>> {
    cfg.validate()?;
    match &cfg.source {
        Source::Synthetic(kind) => synth_sequence(*kind, cfg),
        Source::File(path) => {
            let mut reader = open(path)?;
            let is_y4m = reader
                .fill_buf()
                .map(|b| b.starts_with(b"YUV4MPEG2"))
                .map_err(|e| io_err(path, e))?;
            if is_y4m {
                read_y4m(reader, path, cfg)
            } else {
                read_raw(reader, path, cfg)
            }
        }
    }
}

pub fn is_y4m(path: &Path) -> Result<bool> {
    let mut reader = open(path)?;
    let head = reader.fill_buf().map_err(|e| io_err(path, e))?;
    Ok(head.starts_with(b"YUV4MPEG2"))
}

/// Number of whole frames available in a file, without decoding them.
pub fn probe_frame_count(path: &Path, width: usize, height: usize) -> Result<usize> {
    let mut reader = open(path)?;
    let head = reader.fill_buf().map_err(|e| io_err(path, e))?;
    let len = std::fs::metadata(path).map_err(|e| io_err(path, e))?.len() as usize;
    if head.starts_with(b"YUV4MPEG2") {
        let hdr = read_line(&mut reader, path)?;
        let h = parse_y4m_header(&hdr)?;
        let frame = h.width * h.height * 3 / 2 + "FRAME\n".len();
        Ok(len.saturating_sub(hdr.len() + 1) / frame)
    } else {
        check_aligned(width, height)?;
        Ok(len / (width * height * 3 / 2))
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn read_raw(mut reader: BufReader<File>, path: &Path, cfg: &SequenceConfig) -> Result<Vec<LumaPlane>> {
    check_aligned(cfg.width, cfg.height)?;
    let luma = cfg.width * cfg.height;
    let chroma = luma / 2;
    let expected = ((luma + chroma) * cfg.frame_count) as u64;
    let actual = reader.get_ref().metadata().map_err(|e| io_err(path, e))?.len();
    if actual < expected {
        return Err(Error::Truncated {
            expected,
            actual,
            unit: "bytes",
        });
    }
    let mut planes = Vec::with_capacity(cfg.frame_count);
    for _ in 0..cfg.frame_count {
        let mut samples = vec![0u8; luma];
        reader.read_exact(&mut samples).map_err(|e| io_err(path, e))?;
        reader
            .seek_relative(chroma as i64)
            .map_err(|e| io_err(path, e))?;
        planes.push(LumaPlane::new(cfg.width, cfg.height, samples)?);
    }
    Ok(planes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub frame_rate: Option<(u32, u32)>,
    pub colorspace: String,
}

pub fn parse_y4m_header(line: &str) -> Result<Y4mHeader> {
    let mut tokens = line.split_ascii_whitespace();
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::BadY4m("missing YUV4MPEG2 signature".into()));
    }
    let (mut width, mut height, mut frame_rate) = (None, None, None);
    let mut colorspace = "420jpeg".to_string();
    for tok in tokens {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = val.parse().ok(),
            "H" => height = val.parse().ok(),
            "F" => {
                frame_rate = val
                    .split_once(':')
                    .and_then(|(n, d)| Some((n.parse().ok()?, d.parse().ok()?)))
            }
            "C" => colorspace = val.to_string(),
            _ => {}
        }
    }
    let width = width.ok_or_else(|| Error::BadY4m("missing or bad W token".into()))?;
    let height = height.ok_or_else(|| Error::BadY4m("missing or bad H token".into()))?;
    if !colorspace.starts_with("420") {
        return Err(Error::UnsupportedColorspace(colorspace));
    }
    Ok(Y4mHeader {
        width,
        height,
        frame_rate,
        colorspace,
    })
}

fn read_line(reader: &mut impl BufRead, path: &Path) -> Result<String> {
    let mut buf = Vec::new();
    reader
        .read_until(b'\n', &mut buf)
        .map_err(|e| io_err(path, e))?;
    if buf.last() != Some(&b'\n') {
        return Err(Error::BadY4m("unterminated header line".into()));
    }
    buf.pop();
    String::from_utf8(buf).map_err(|_| Error::BadY4m("header is not ASCII".into()))
}

fn read_y4m(mut reader: BufReader<File>, path: &Path, cfg: &SequenceConfig) -> Result<Vec<LumaPlane>> {
    let header = parse_y4m_header(&read_line(&mut reader, path)?)?;
    if (cfg.width != 0 && cfg.width != header.width) || (cfg.height != 0 && cfg.height != header.height) {
        return Err(Error::DimensionMismatch(format!(
            "configured {}x{} but Y4M header says {}x{}",
            cfg.width, cfg.height, header.width, header.height
        )));
    }
    check_aligned(header.width, header.height)?;
    let luma = header.width * header.height;
    let chroma = luma / 2;
    let mut planes = Vec::with_capacity(cfg.frame_count);
    for i in 0..cfg.frame_count {
        let line = match read_line(&mut reader, path) {
            Ok(l) => l,
            Err(Error::BadY4m(_)) => {
                return Err(Error::Truncated {
                    expected: cfg.frame_count as u64,
                    actual: i as u64,
                    unit: "frames",
                })
            }
            Err(e) => return Err(e),
        };
        if !line.starts_with("FRAME") {
            return Err(Error::BadY4m(format!("expected FRAME marker, got `{line}`")));
        }
        let mut samples = vec![0u8; luma];
        reader.read_exact(&mut samples).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Truncated {
                expected: cfg.frame_count as u64,
                actual: i as u64,
                unit: "frames",
            },
            _ => io_err(path, e),
        })?;
        // chroma must be present even though it is skipped
        let mut skip = (&mut reader).take(chroma as u64);
        let skipped = std::io::copy(&mut skip, &mut std::io::sink()).map_err(|e| io_err(path, e))?;
        if skipped != chroma as u64 {
            return Err(Error::Truncated {
                expected: cfg.frame_count as u64,
                actual: i as u64,
                unit: "frames",
            });
        }
        planes.push(LumaPlane::new(header.width, header.height, samples)?);
    }
    Ok(planes)
}

/// Writes planes as raw I420 with zeroed chroma.
pub fn write_raw_yuv(path: &Path, planes: &[LumaPlane]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for p in planes {
        w.write_all(p.samples()).map_err(|e| io_err(path, e))?;
        w.write_all(&vec![0u8; p.samples().len() / 2])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn synth_sequence(kind: SynthKind, cfg: &SequenceConfig) -> Result<Vec<LumaPlane>> {
    cfg.validate()?;
    check_aligned(cfg.width, cfg.height)?;
    let (w, h, n) = (cfg.width, cfg.height, cfg.frame_count);
    match kind {
        SynthKind::Static => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let tex = texture(w, h, &mut rng);
            Ok(vec![tex; n])
        }
        SynthKind::GlobalShift { dx, dy } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_4946_5400);
            let travel = (n as i64 * dx.unsigned_abs().max(dy.unsigned_abs()) as i64 + 3) / 4;
            let margin = align16(travel as usize + 4);
            let tex = texture(w + 2 * margin, h + 2 * margin, &mut rng);
            let padded = PaddedReference::with_pad(&tex, 8);
            let m = 4 * margin as i32;
            (0..n as i32)
                .map(|t| {
                    let pos = QuarterPos::new(m + t * dx, m + t * dy);
                    LumaPlane::new(w, h, padded.fetch_block(pos, w, h))
                })
                .collect()
        }
        SynthKind::TexturedDrift => textured_drift(cfg),
    }
}

fn align16(v: usize) -> usize {
    v.div_ceil(16) * 16
}

/// Smooth multi-octave value noise with a few hard-edged patches.
fn texture(w: usize, h: usize, rng: &mut ChaCha8Rng) -> LumaPlane {
    let mut acc = vec![128i32; w * h];
    for &(cell, amp) in &[(32usize, 56i32), (16, 36), (8, 22), (4, 12), (2, 6)] {
        let gw = w / cell + 2;
        let gh = h / cell + 2;
        let grid: Vec<i32> = (0..gw * gh).map(|_| rng.random_range(-amp..=amp)).collect();
        let c = cell as i32;
        for y in 0..h {
            let (gy, fy) = (y / cell, (y % cell) as i32);
            for x in 0..w {
                let (gx, fx) = (x / cell, (x % cell) as i32);
                let g00 = grid[gy * gw + gx];
                let g10 = grid[gy * gw + gx + 1];
                let g01 = grid[(gy + 1) * gw + gx];
                let g11 = grid[(gy + 1) * gw + gx + 1];
                let top = g00 * (c - fx) + g10 * fx;
                let bot = g01 * (c - fx) + g11 * fx;
                acc[y * w + x] += (top * (c - fy) + bot * fy) / (c * c);
            }
        }
    }
    let patches = (w * h) / 4096 + 2;
    for _ in 0..patches {
        let pw = rng.random_range(6..=w.min(48));
        let ph = rng.random_range(6..=h.min(48));
        let x0 = rng.random_range(0..=w - pw);
        let y0 = rng.random_range(0..=h - ph);
        let delta = rng.random_range(-48..=48);
        for y in y0..y0 + ph {
            for v in &mut acc[y * w + x0..y * w + x0 + pw] {
                *v += delta;
            }
        }
    }
    let samples = acc.into_iter().map(|v| v.clamp(0, 255) as u8).collect();
    LumaPlane::new(w, h, samples).expect("texture dimensions are aligned")
}

/// Folds a linear quarter-pel trajectory into `[0, span]` (bouncing).
fn bounce(p: i64, span: i64) -> i64 {
    if span <= 0 {
        return 0;
    }
    let m = p.rem_euclid(2 * span);
    if m > span {
        2 * span - m
    } else {
        m
    }
}

struct MovingObject {
    texture: PaddedReference,
    w: usize,
    h: usize,
    start: (i64, i64),
    velocity: (i64, i64),
}

fn textured_drift(cfg: &SequenceConfig) -> Result<Vec<LumaPlane>> {
    let (w, h, n) = (cfg.width, cfg.height, cfg.frame_count);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x4452_4946_5400);

    // Background velocity changes every 8 frames along this cycle.
    const DRIFT: [(i32, i32); 6] = [(2, 1), (3, 1), (3, 0), (2, -1), (1, -2), (2, 0)];
    let mut offsets = Vec::with_capacity(n);
    let (mut ox, mut oy) = (0i32, 0i32);
    for t in 0..n {
        offsets.push((ox, oy));
        let (vx, vy) = DRIFT[(t / 8) % DRIFT.len()];
        ox += vx;
        oy += vy;
    }
    let travel = offsets
        .iter()
        .map(|&(x, y)| x.unsigned_abs().max(y.unsigned_abs()))
        .max()
        .unwrap_or(0) as usize
        / 4;
    let margin = align16(travel + 4);
    let bg = PaddedReference::with_pad(&texture(w + 2 * margin, h + 2 * margin, &mut rng), 8);

    let count = ((w * h) / (176 * 144) + 1) * 3;
    let mut objects = Vec::with_capacity(count);
    for _ in 0..count {
        let ow = 16 * rng.random_range(1..=3usize).min(w / 16);
        let oh = 16 * rng.random_range(1..=2usize).min(h / 16);
        let tex = texture(ow, oh, &mut rng);
        let span_x = 4 * (w - ow) as i64;
        let span_y = 4 * (h - oh) as i64;
        let start = (rng.random_range(0..=span_x), rng.random_range(0..=span_y));
        let mut velocity = (0i64, 0i64);
        while velocity == (0, 0) {
            velocity = (rng.random_range(-7..=7), rng.random_range(-5..=5));
        }
        objects.push(MovingObject {
            texture: PaddedReference::with_pad(&tex, 8),
            w: ow,
            h: oh,
            start,
            velocity,
        });
    }

    let m = 4 * margin as i32;
    let mut frames = Vec::with_capacity(n);
    for (t, &(ox, oy)) in offsets.iter().enumerate() {
        let mut frame = LumaPlane::new(w, h, bg.fetch_block(QuarterPos::new(m + ox, m + oy), w, h))?;
        for obj in &objects {
            let qx = bounce(obj.start.0 + t as i64 * obj.velocity.0, 4 * (w - obj.w) as i64);
            let qy = bounce(obj.start.1 + t as i64 * obj.velocity.1, 4 * (h - obj.h) as i64);
            // first whole pixel covered by the object, and the texture phase there
            let x0 = (qx + 3) / 4;
            let y0 = (qy + 3) / 4;
            let phase = QuarterPos::new((4 * x0 - qx) as i32, (4 * y0 - qy) as i32);
            let bw = (obj.w - 1).min(w - x0 as usize);
            let bh = (obj.h - 1).min(h - y0 as usize);
            let block = obj.texture.fetch_block(phase, bw, bh);
            frame.put_block(x0 as usize, y0 as usize, bw, bh, &block);
        }
        frames.push(frame);
    }
    Ok(frames)
}
