//! Matching cost: SAD plus a rate term for the motion vector difference.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// Displacement in quarter-pel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct MotionVector {
    pub x: i32,
    pub y: i32,
}

impl MotionVector {
    pub const ZERO: Self = Self { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Vector of whole pixels, expressed in quarter-pel units.
    pub const fn from_pixels(x: i32, y: i32) -> Self {
        Self { x: 4 * x, y: 4 * y }
    }

    pub fn is_integer(self) -> bool {
        self.x & 3 == 0 && self.y & 3 == 0
    }

    pub fn manhattan(self, other: Self) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl Add for MotionVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for MotionVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for MotionVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl fmt::Display for MotionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Rate-constrained motion Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaModel {
    qp: i32,
    lambda_motion: f64,
    // round(lambda * bits) for small bit counts
    rate_lut: Vec<u32>,
}

const RATE_LUT_LEN: usize = 96;

impl LambdaModel {
    /// `sqrt(0.85 * 2^((qp - 12) / 3))`.
    pub fn from_qp(qp: i32) -> Self {
        let lambda = (0.85 * 2f64.powf((qp - 12) as f64 / 3.0)).sqrt();
        Self::with_lambda(qp, lambda)
    }

    pub fn with_lambda(qp: i32, lambda_motion: f64) -> Self {
        assert!(lambda_motion >= 0.0 && lambda_motion.is_finite());
        let rate_lut = (0..RATE_LUT_LEN)
            .map(|b| (lambda_motion * b as f64).round() as u32)
            .collect();
        Self {
            qp,
            lambda_motion,
            rate_lut,
        }
    }

    pub fn qp(&self) -> i32 {
        self.qp
    }

    pub fn lambda_motion(&self) -> f64 {
        self.lambda_motion
    }

    /// `round(lambda * bits)`.
    #[inline]
    pub fn rate_cost(&self, bits: u32) -> u32 {
        match self.rate_lut.get(bits as usize) {
            Some(&c) => c,
            None => (self.lambda_motion * bits as f64).round() as u32,
        }
    }

    #[inline]
    pub fn mv_cost(&self, mv: MotionVector, pred_mv: MotionVector) -> u32 {
        self.rate_cost(mv_bits(mv, pred_mv))
    }
}

/// COST in integer units: SAD plus the rounded rate term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CostValue(pub u32);

impl CostValue {
    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A rectangular block of luma samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Block {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} block",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }
}

pub fn sad(cur: &Block, pred: &Block) -> Result<u32> {
    if cur.width != pred.width || cur.height != pred.height {
        return Err(Error::DimensionMismatch(format!(
            "SAD of {}x{} against {}x{}",
            cur.width, cur.height, pred.width, pred.height
        )));
    }
    Ok(sad_slices(&cur.data, &pred.data))
}

#[inline]
pub fn sad_slices(a: &[u8], b: &[u8]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u32).sum()
}

/// Length of the signed Exp-Golomb code for `v`.
#[inline]
pub fn se_bits(v: i32) -> u32 {
    let k = 2 * v.unsigned_abs() as u64 - u64::from(v > 0);
    2 * (63 - (k + 1).leading_zeros()) + 1
}

/// Bits to code `mv` relative to `pred_mv`.
#[inline]
pub fn mv_bits(mv: MotionVector, pred_mv: MotionVector) -> u32 {
    let d = mv - pred_mv;
    se_bits(d.x) + se_bits(d.y)
}

pub fn cost(sad: u32, mv: MotionVector, pred_mv: MotionVector, lambda: &LambdaModel) -> CostValue {
    CostValue(sad + lambda.mv_cost(mv, pred_mv))
}

fn median3(a: i32, b: i32, c: i32) -> i32 {
    a.max(b).min(a.min(b).max(c))
}

/// Median predictor over the left, top and top-right neighbours.
///
/// When only the left neighbour exists it is used directly; otherwise missing
/// neighbours count as zero vectors.
pub fn predict_mv(
    left: Option<MotionVector>,
    top: Option<MotionVector>,
    top_right: Option<MotionVector>,
) -> MotionVector {
    match (left, top, top_right) {
        (Some(l), None, None) => l,
        (None, None, None) => MotionVector::ZERO,
        _ => {
            let a = left.unwrap_or_default();
            let b = top.unwrap_or_default();
            let c = top_right.unwrap_or_default();
            MotionVector::new(median3(a.x, b.x, c.x), median3(a.y, b.y, c.y))
        }
    }
}
