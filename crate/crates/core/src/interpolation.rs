//! Quarter-pel reference sampling.
//!
//! Half-pel samples use the 6-tap kernel `(1, -5, 20, 20, -5, 1)` and are
//! precomputed once per reference into three planes (horizontal, vertical,
//! diagonal). Quarter-pel samples are the rounded average of two neighbouring
//! integer/half samples and are produced on the fly, following the H.264
//! luma sample table.
//!
//! Every plane is stored with `pad` pixels of edge-replicated border on each
//! side so that any motion vector inside the search window can be evaluated
//! without clamping in the SAD loops.

use crate::video_io::LumaPlane;

const TAPS: [i32; 6] = [1, -5, 20, 20, -5, 1];

/// Extra border beyond the search range: cross neighbours (1 px), sub-pel
/// offsets (<1 px), quarter averaging (1 px) and the filter support (3 px).
pub const PAD_MARGIN: usize = 8;

/// Quarter-pel position, origin at the top-left integer sample of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct QuarterPos {
    pub x: i32,
    pub y: i32,
}

impl QuarterPos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub const fn from_pixel(x: i32, y: i32) -> Self {
        Self { x: x * 4, y: y * 4 }
    }

    #[inline]
    pub fn integer_part(self) -> (i32, i32) {
        (self.x >> 2, self.y >> 2)
    }

    #[inline]
    pub fn fraction(self) -> (i32, i32) {
        (self.x & 3, self.y & 3)
    }
}

/// Which precomputed half-pel grid to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfPlane {
    /// `(x + 1/2, y)`
    Horizontal,
    /// `(x, y + 1/2)`
    Vertical,
    /// `(x + 1/2, y + 1/2)`
    Diagonal,
}

#[derive(Clone, Copy)]
enum Src {
    Full,
    H,
    V,
    D,
}

/// One output sample is either a single plane read or the rounded average of
/// two reads, each addressed by (plane, dx, dy) from the integer base.
type Recipe = ((Src, i32, i32), Option<(Src, i32, i32)>);

fn recipe(fx: i32, fy: i32) -> Recipe {
    use Src::*;
    match (fx, fy) {
        (0, 0) => ((Full, 0, 0), None),
        (2, 0) => ((H, 0, 0), None),
        (0, 2) => ((V, 0, 0), None),
        (2, 2) => ((D, 0, 0), None),
        (1, 0) => ((Full, 0, 0), Some((H, 0, 0))),
        (3, 0) => ((Full, 1, 0), Some((H, 0, 0))),
        (0, 1) => ((Full, 0, 0), Some((V, 0, 0))),
        (0, 3) => ((Full, 0, 1), Some((V, 0, 0))),
        (2, 1) => ((H, 0, 0), Some((D, 0, 0))),
        (2, 3) => ((D, 0, 0), Some((H, 0, 1))),
        (1, 2) => ((V, 0, 0), Some((D, 0, 0))),
        (3, 2) => ((D, 0, 0), Some((V, 1, 0))),
        (1, 1) => ((H, 0, 0), Some((V, 0, 0))),
        (3, 1) => ((H, 0, 0), Some((V, 1, 0))),
        (1, 3) => ((V, 0, 0), Some((H, 0, 1))),
        (3, 3) => ((V, 1, 0), Some((H, 0, 1))),
        _ => unreachable!("fraction out of range"),
    }
}

#[inline]
fn clip_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

/// A reference frame prepared for quarter-pel motion compensation.
#[derive(Debug, Clone)]
pub struct PaddedReference {
    base: LumaPlane,
    pad: usize,
    stride: usize,
    rows: usize,
    full: Vec<u8>,
    half_h: Vec<u8>,
    half_v: Vec<u8>,
    half_d: Vec<u8>,
}

/// Pads `base` for a search window of `search_range` pixels and precomputes
/// the half-pel planes.
pub fn build_padded(base: &LumaPlane, search_range: usize) -> PaddedReference {
    PaddedReference::with_pad(base, search_range + PAD_MARGIN)
}

impl PaddedReference {
    pub fn with_pad(base: &LumaPlane, pad: usize) -> Self {
        let (w, h) = (base.width(), base.height());
        let stride = w + 2 * pad;
        let rows = h + 2 * pad;

        // Integer samples with three extra rows/columns for the filter support.
        let m = 3usize;
        let ew = stride + 2 * m;
        let eh = rows + 2 * m;
        let off = (pad + m) as isize;
        let mut ext = vec![0u8; ew * eh];
        for ey in 0..eh {
            let sy = (ey as isize - off).clamp(0, h as isize - 1) as usize;
            let src = &base.samples()[sy * w..(sy + 1) * w];
            for ex in 0..ew {
                let sx = (ex as isize - off).clamp(0, w as isize - 1) as usize;
                ext[ey * ew + ex] = src[sx];
            }
        }

        let mut full = vec![0u8; stride * rows];
        let mut half_h = vec![0u8; stride * rows];
        let mut half_v = vec![0u8; stride * rows];
        let mut half_d = vec![0u8; stride * rows];

        // Unshifted horizontal 6-tap sums for every extended row.
        let mut hsum = vec![0i32; stride * eh];
        for ey in 0..eh {
            let row = &ext[ey * ew..(ey + 1) * ew];
            for x in 0..stride {
                // half between ext column x+m and x+m+1
                let c = x + m;
                let s: i32 = TAPS
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| t * row[c + k - 2] as i32)
                    .sum();
                hsum[ey * stride + x] = s;
            }
        }

        for y in 0..rows {
            let ey = y + m;
            for x in 0..stride {
                let ex = x + m;
                let i = y * stride + x;
                full[i] = ext[ey * ew + ex];
                half_h[i] = clip_u8((hsum[ey * stride + x] + 16) >> 5);
                let v: i32 = TAPS
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| t * ext[(ey + k - 2) * ew + ex] as i32)
                    .sum();
                half_v[i] = clip_u8((v + 16) >> 5);
                let d: i32 = TAPS
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| t * hsum[(ey + k - 2) * stride + x])
                    .sum();
                half_d[i] = clip_u8((d + 512) >> 10);
            }
        }

        Self {
            base: base.clone(),
            pad,
            stride,
            rows,
            full,
            half_h,
            half_v,
            half_d,
        }
    }

    pub fn base(&self) -> &LumaPlane {
        &self.base
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn width(&self) -> usize {
        self.base.width()
    }

    pub fn height(&self) -> usize {
        self.base.height()
    }

    /// Whether a `w`x`h` block at `pos` can be fetched.
    pub fn contains(&self, pos: QuarterPos, w: usize, h: usize) -> bool {
        let (px, py) = pos.integer_part();
        let p = self.pad as i64;
        let (px, py) = (px as i64, py as i64);
        px >= -p
            && py >= -p
            // one extra sample on the right/bottom for fractional offsets
            && px + (w as i64) < self.stride as i64 - p
            && py + (h as i64) < self.rows as i64 - p
    }

    #[inline]
    fn index(&self, x: i32, y: i32) -> usize {
        (y + self.pad as i32) as usize * self.stride + (x + self.pad as i32) as usize
    }

    #[inline]
    fn plane(&self, src: Src) -> &[u8] {
        match src {
            Src::Full => &self.full,
            Src::H => &self.half_h,
            Src::V => &self.half_v,
            Src::D => &self.half_d,
        }
    }

    /// Half-pel sample of the given grid at integer anchor `(x, y)`.
    pub fn half_sample(&self, plane: HalfPlane, x: i32, y: i32) -> u8 {
        let i = self.index(x, y);
        match plane {
            HalfPlane::Horizontal => self.half_h[i],
            HalfPlane::Vertical => self.half_v[i],
            HalfPlane::Diagonal => self.half_d[i],
        }
    }

    /// Integer sample, including the replicated border.
    pub fn integer_sample(&self, x: i32, y: i32) -> u8 {
        self.full[self.index(x, y)]
    }

    /// `len` integer samples of row `y` starting at column `x`.
    #[inline]
    pub fn integer_row(&self, x: i32, y: i32, len: usize) -> &[u8] {
        let i = self.index(x, y);
        &self.full[i..i + len]
    }

    pub fn sample(&self, pos: QuarterPos) -> u8 {
        let mut out = [0u8; 1];
        self.fetch_into(pos, 1, 1, &mut out);
        out[0]
    }

    /// Prediction block for a `w`x`h` region whose top-left sample sits at
    /// `pos`.
    ///
    /// Panics if the block (plus quarter-pel support) leaves the padded area.
    pub fn fetch_block(&self, pos: QuarterPos, w: usize, h: usize) -> Vec<u8> {
        let mut out = vec![0u8; w * h];
        self.fetch_into(pos, w, h, &mut out);
        out
    }

    pub fn fetch_into(&self, pos: QuarterPos, w: usize, h: usize, out: &mut [u8]) {
        assert!(
            self.contains(pos, w, h),
            "quarter position ({}, {}) with block {}x{} is outside the padded reference",
            pos.x,
            pos.y,
            w,
            h
        );
        assert!(out.len() >= w * h);
        let (px, py) = pos.integer_part();
        let (fx, fy) = pos.fraction();
        let ((sa, ax, ay), second) = recipe(fx, fy);
        let pa = self.plane(sa);
        let base_a = self.index(px + ax, py + ay);
        match second {
            None => {
                for j in 0..h {
                    let r = base_a + j * self.stride;
                    out[j * w..(j + 1) * w].copy_from_slice(&pa[r..r + w]);
                }
            }
            Some((sb, bx, by)) => {
                let pb = self.plane(sb);
                let base_b = self.index(px + bx, py + by);
                for j in 0..h {
                    let ra = &pa[base_a + j * self.stride..base_a + j * self.stride + w];
                    let rb = &pb[base_b + j * self.stride..base_b + j * self.stride + w];
                    for ((o, &a), &b) in out[j * w..(j + 1) * w].iter_mut().zip(ra).zip(rb) {
                        *o = ((a as u16 + b as u16 + 1) >> 1) as u8;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> LumaPlane {
        let mut s = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                s.push(f(x, y));
            }
        }
        LumaPlane::new(w, h, s).unwrap()
    }

    #[test]
    fn constant_plane_half_samples() {
        let p = plane_from_fn(32, 16, |_, _| 100);
        let r = build_padded(&p, 4);
        for y in -12..28 {
            for x in -12..44 {
                for kind in [HalfPlane::Horizontal, HalfPlane::Vertical, HalfPlane::Diagonal] {
                    assert_eq!(r.half_sample(kind, x, y), 100);
                }
            }
        }
    }

    #[test]
    fn step_row_half_sample() {
        // columns 0..=2 are 0, 3.. are 32; half between 2 and 3
        let p = plane_from_fn(16, 16, |x, _| if x >= 3 { 32 } else { 0 });
        let r = build_padded(&p, 4);
        assert_eq!(r.half_sample(HalfPlane::Horizontal, 2, 5), 16);
    }

    #[test]
    fn impulse_row_half_samples() {
        let p = plane_from_fn(16, 16, |x, _| if x == 6 { 32 } else { 0 });
        let r = build_padded(&p, 4);
        // half immediately left of the impulse sits between columns 5 and 6
        assert_eq!(r.half_sample(HalfPlane::Horizontal, 5, 0), 20);
        // two-left: between 4 and 5, -5*32 term clipped to 0
        assert_eq!(r.half_sample(HalfPlane::Horizontal, 4, 0), 0);
    }

    #[test]
    fn quarter_rounding_between_integer_and_half() {
        // taps over 0,12,10,20,12,0 sum to 480 -> half-pel 15 between 10 and 20
        let p = plane_from_fn(16, 16, |x, _| [0, 12, 10, 20, 12, 0][x.min(5)]);
        let r = build_padded(&p, 4);
        assert_eq!(r.integer_sample(2, 3), 10);
        assert_eq!(r.half_sample(HalfPlane::Horizontal, 2, 3), 15);
        assert_eq!(r.sample(QuarterPos::new(2 * 4 + 1, 3 * 4)), 13);
    }

    #[test]
    fn border_is_replicated() {
        let p = plane_from_fn(16, 16, |x, y| (x * 7 + y * 3) as u8);
        let r = build_padded(&p, 4);
        assert_eq!(r.integer_sample(-5, -3), p.get(0, 0));
        assert_eq!(r.integer_sample(20, 2), p.get(15, 2));
        assert_eq!(r.integer_sample(3, 18), p.get(3, 15));
    }

    #[test]
    #[should_panic]
    fn out_of_bounds_fetch_panics() {
        let p = plane_from_fn(16, 16, |_, _| 0);
        let r = build_padded(&p, 4);
        let _ = r.fetch_block(QuarterPos::from_pixel(-20, 0), 4, 4);
    }
}
