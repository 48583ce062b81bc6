//! Independent reference implementations used as test oracles. Nothing here
//! calls into the search code; only plain data types are shared.
#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfsme::{CostValue, LumaPlane, MotionVector};

pub fn plane_from_fn(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> u8) -> LumaPlane {
    let mut s = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            s.push(f(x, y));
        }
    }
    LumaPlane::new(w, h, s).unwrap()
}

pub fn random_plane(w: usize, h: usize, seed: u64) -> LumaPlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plane_from_fn(w, h, |_, _| rng_u8(&mut rng))
}

fn rng_u8(rng: &mut ChaCha8Rng) -> u8 {
    rng.random_range(0..=255u32) as u8
}

/// Smooth random plane: a blurred random field, so COST surfaces have real
/// minima instead of white-noise plateaus.
pub fn smooth_plane(w: usize, h: usize, seed: u64) -> LumaPlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nw = w + 8;
    let noise: Vec<u32> = (0..nw * (h + 8)).map(|_| rng_u8(&mut rng) as u32).collect();
    plane_from_fn(w, h, |x, y| {
        let mut s = 0u32;
        for j in 0..8 {
            for i in 0..8 {
                s += noise[(y + j) * nw + x + i];
            }
        }
        // stretch the compressed range back out
        ((s as i32 / 64 - 128) * 4 + 128).clamp(0, 255) as u8
    })
}

/// Moves `plane` by whole pixels: out(x, y) = plane(x - dx, y - dy), edges
/// replicated.
pub fn shifted(plane: &LumaPlane, dx: i32, dy: i32) -> LumaPlane {
    plane_from_fn(plane.width(), plane.height(), |x, y| pixel(plane, x as i32 - dx, y as i32 - dy))
}

pub fn pixel(p: &LumaPlane, x: i32, y: i32) -> u8 {
    let cx = x.clamp(0, p.width() as i32 - 1) as usize;
    let cy = y.clamp(0, p.height() as i32 - 1) as usize;
    p.get(cx, cy)
}

fn clip(v: i32) -> i32 {
    v.clamp(0, 255)
}

fn taps(v: [i32; 6]) -> i32 {
    v[0] - 5 * v[1] + 20 * v[2] + 20 * v[3] - 5 * v[4] + v[5]
}

fn h_raw(p: &LumaPlane, x: i32, y: i32) -> i32 {
    taps(std::array::from_fn(|k| pixel(p, x - 2 + k as i32, y) as i32))
}

/// Half sample right of (x, y).
fn half_b(p: &LumaPlane, x: i32, y: i32) -> i32 {
    clip((h_raw(p, x, y) + 16) >> 5)
}

/// Half sample below (x, y).
fn half_h(p: &LumaPlane, x: i32, y: i32) -> i32 {
    clip((taps(std::array::from_fn(|k| pixel(p, x, y - 2 + k as i32) as i32)) + 16) >> 5)
}

/// Centre half sample right-below (x, y).
fn half_j(p: &LumaPlane, x: i32, y: i32) -> i32 {
    clip((taps(std::array::from_fn(|k| h_raw(p, x, y - 2 + k as i32))) + 512) >> 10)
}

/// Luma sample at quarter-pel position (qx, qy), written out letter by
/// letter after the usual H.264 sample naming.
pub fn quarter_sample(p: &LumaPlane, qx: i32, qy: i32) -> u8 {
    let (x, y) = (qx >> 2, qy >> 2);
    let g = pixel(p, x, y) as i32;
    let hh = pixel(p, x + 1, y) as i32;
    let m_ = pixel(p, x, y + 1) as i32;
    let b = half_b(p, x, y);
    let h = half_h(p, x, y);
    let j = half_j(p, x, y);
    let s = half_b(p, x, y + 1);
    let m = half_h(p, x + 1, y);
    let avg = |a: i32, c: i32| (a + c + 1) >> 1;
    let v = match (qx & 3, qy & 3) {
        (0, 0) => g,
        (1, 0) => avg(g, b),
        (2, 0) => b,
        (3, 0) => avg(b, hh),
        (0, 1) => avg(g, h),
        (0, 2) => h,
        (0, 3) => avg(h, m_),
        (1, 1) => avg(b, h),
        (3, 1) => avg(b, m),
        (1, 3) => avg(h, s),
        (3, 3) => avg(s, m),
        (2, 1) => avg(b, j),
        (2, 3) => avg(j, s),
        (1, 2) => avg(h, j),
        (3, 2) => avg(j, m),
        (2, 2) => j,
        _ => unreachable!(),
    };
    v as u8
}

pub fn quarter_block(p: &LumaPlane, qx: i32, qy: i32, w: usize, h: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(w * h);
    for j in 0..h as i32 {
        for i in 0..w as i32 {
            out.push(quarter_sample(p, qx + 4 * i, qy + 4 * j));
        }
    }
    out
}

/// Signed Exp-Golomb length, by building the codeword size bit by bit.
pub fn se_len(v: i32) -> u32 {
    let code_num: u64 = if v > 0 { 2 * v as u64 - 1 } else { 2 * (-(v as i64)) as u64 };
    let mut len = 1;
    let mut n = code_num + 1;
    while n > 1 {
        n >>= 1;
        len += 2;
    }
    len
}

pub fn lambda(qp: i32) -> f64 {
    (0.85 * 2f64.powf((qp - 12) as f64 / 3.0)).sqrt()
}

pub fn oracle_cost(sad: u32, mv: MotionVector, pred: MotionVector, qp: i32) -> CostValue {
    let bits = se_len(mv.x - pred.x) + se_len(mv.y - pred.y);
    CostValue(sad + (lambda(qp) * bits as f64).round() as u32)
}

pub fn block_sad(cur: &LumaPlane, x: usize, y: usize, pred: &[u8], w: usize, h: usize) -> u32 {
    let mut s = 0;
    for j in 0..h {
        for i in 0..w {
            s += cur.get(x + i, y + j).abs_diff(pred[j * w + i]) as u32;
        }
    }
    s
}

/// COST of the `w`x`h` block at pixel (x, y) of `cur` predicted from `refp`
/// displaced by quarter-pel `mv`.
pub fn cost_at(
    cur: &LumaPlane,
    refp: &LumaPlane,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    mv: MotionVector,
    pred: MotionVector,
    qp: i32,
) -> CostValue {
    let block = quarter_block(refp, 4 * x as i32 + mv.x, 4 * y as i32 + mv.y, w, h);
    oracle_cost(block_sad(cur, x, y, &block, w, h), mv, pred, qp)
}

/// Proptest settings for integration tests (no source-relative regression
/// files).
pub fn prop_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        failure_persistence: None,
        ..proptest::test_runner::Config::with_cases(cases)
    }
}

pub fn tie_order(c: CostValue, mv: MotionVector) -> (u32, i32, i32, i32, i32) {
    (c.0, mv.y.abs(), mv.x.abs(), mv.y, mv.x)
}
