//! Exhaustive integer-pel search and the COST cross around its winner.

use crate::cost::{cost, sad_slices, CostValue, LambdaModel, MotionVector};
use crate::interpolation::PaddedReference;
use crate::video_io::LumaPlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartitionShape {
    P16x16,
    P16x8,
    P8x16,
    P8x8,
    P8x4,
    P4x8,
    P4x4,
}

impl PartitionShape {
    pub const ALL: [PartitionShape; 7] = [
        Self::P16x16,
        Self::P16x8,
        Self::P8x16,
        Self::P8x8,
        Self::P8x4,
        Self::P4x8,
        Self::P4x4,
    ];

    pub fn dims(self) -> (usize, usize) {
        match self {
            Self::P16x16 => (16, 16),
            Self::P16x8 => (16, 8),
            Self::P8x16 => (8, 16),
            Self::P8x8 => (8, 8),
            Self::P8x4 => (8, 4),
            Self::P4x8 => (4, 8),
            Self::P4x4 => (4, 4),
        }
    }

    pub fn width(self) -> usize {
        self.dims().0
    }

    pub fn height(self) -> usize {
        self.dims().1
    }

    pub fn class(self) -> BlockClass {
        match self {
            Self::P16x16 | Self::P16x8 | Self::P8x16 => BlockClass::TypeII,
            _ => BlockClass::TypeI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::P16x16 => "16x16",
            Self::P16x8 => "16x8",
            Self::P8x16 => "8x16",
            Self::P8x8 => "8x8",
            Self::P8x4 => "8x4",
            Self::P4x8 => "4x8",
            Self::P4x4 => "4x4",
        }
    }
}

/// Gate threshold class: small partitions (8x8 and below) are type I, the
/// three large ones type II.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockClass {
    TypeI,
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionJob {
    /// Top-left pixel of the macroblock.
    pub mb_x: usize,
    pub mb_y: usize,
    /// Offset of the partition inside the macroblock, in pixels.
    pub offset_x: usize,
    pub offset_y: usize,
    pub shape: PartitionShape,
    pub ref_index: usize,
    pub pred_mv: MotionVector,
}

impl PartitionJob {
    pub fn origin(&self) -> (usize, usize) {
        (self.mb_x + self.offset_x, self.mb_y + self.offset_y)
    }

    pub fn class(&self) -> BlockClass {
        self.shape.class()
    }

    pub fn width(&self) -> usize {
        self.shape.width()
    }

    pub fn height(&self) -> usize {
        self.shape.height()
    }
}

/// Best integer COST and the COSTs of its four axis neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostCross {
    pub center: MotionVector,
    pub cost_full: CostValue,
    pub cost_left: CostValue,
    pub cost_right: CostValue,
    pub cost_up: CostValue,
    pub cost_down: CostValue,
}

impl CostCross {
    /// `cost_up + cost_down`, i.e. twice the vertical average.
    pub fn sum_vertical(&self) -> u64 {
        self.cost_up.0 as u64 + self.cost_down.0 as u64
    }

    /// `cost_left + cost_right`, i.e. twice the horizontal average.
    pub fn sum_horizontal(&self) -> u64 {
        self.cost_left.0 as u64 + self.cost_right.0 as u64
    }

    pub fn avg_vertical(&self) -> f64 {
        self.sum_vertical() as f64 / 2.0
    }

    pub fn avg_horizontal(&self) -> f64 {
        self.sum_horizontal() as f64 / 2.0
    }

    /// Integer positions of the cross with their costs, centre first.
    pub fn points(&self) -> [(MotionVector, CostValue); 5] {
        let c = self.center;
        [
            (c, self.cost_full),
            (c + MotionVector::new(-4, 0), self.cost_left),
            (c + MotionVector::new(4, 0), self.cost_right),
            (c + MotionVector::new(0, -4), self.cost_up),
            (c + MotionVector::new(0, 4), self.cost_down),
        ]
    }
}

/// Ordering key for integer candidates: cost, then smaller |y|, smaller |x|,
/// smaller y, smaller x.
#[inline]
pub fn tie_key(c: CostValue, mv: MotionVector) -> (u32, u32, u32, i32, i32) {
    (c.0, mv.y.unsigned_abs(), mv.x.unsigned_abs(), mv.y, mv.x)
}

fn integer_sad(
    cur: &LumaPlane,
    reference: &PaddedReference,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    dx: i32,
    dy: i32,
) -> u32 {
    (0..h)
        .map(|j| {
            let c = &cur.row(y + j)[x..x + w];
            let r = reference.integer_row(x as i32 + dx, (y + j) as i32 + dy, w);
            sad_slices(c, r)
        })
        .sum()
}

/// Exhaustive search over `[-range, range]^2` integer pixels.
///
/// The cross neighbours of the winner are always evaluated, even when they
/// fall one pixel outside the window.
pub fn full_search(
    job: &PartitionJob,
    cur: &LumaPlane,
    reference: &PaddedReference,
    range: i32,
    lambda: &LambdaModel,
) -> (MotionVector, CostCross) {
    let (x, y) = job.origin();
    let (w, h) = (job.width(), job.height());
    let eval = |dx: i32, dy: i32| {
        let mv = MotionVector::from_pixels(dx, dy);
        cost(integer_sad(cur, reference, x, y, w, h, dx, dy), mv, job.pred_mv, lambda)
    };
    let mut best = (CostValue(u32::MAX), MotionVector::ZERO);
    for dy in -range..=range {
        for dx in -range..=range {
            let mv = MotionVector::from_pixels(dx, dy);
            let c = eval(dx, dy);
            if tie_key(c, mv) < tie_key(best.0, best.1) {
                best = (c, mv);
            }
        }
    }
    let (bx, by) = (best.1.x / 4, best.1.y / 4);
    let cross = CostCross {
        center: best.1,
        cost_full: best.0,
        cost_left: eval(bx - 1, by),
        cost_right: eval(bx + 1, by),
        cost_up: eval(bx, by - 1),
        cost_down: eval(bx, by + 1),
    };
    (best.1, cross)
}

/// SADs of the sixteen 4x4 blocks of one macroblock for every integer
/// displacement in `[-(range+1), range+1]^2`.
///
/// Any partition's SAD at any displacement is a sum of these, so one table
/// serves all 41 partitions of the macroblock regardless of their predictors.
#[derive(Debug, Clone)]
pub struct MbSadTable {
    range: i32,
    side: usize,
    sads: Vec<[u16; 16]>,
}

impl MbSadTable {
    pub fn compute(cur: &LumaPlane, reference: &PaddedReference, mb_x: usize, mb_y: usize, range: i32) -> Self {
        let ext = range + 1;
        let side = (2 * ext + 1) as usize;
        let mut sads = vec![[0u16; 16]; side * side];
        let cur_rows: Vec<&[u8]> = (0..16).map(|j| &cur.row(mb_y + j)[mb_x..mb_x + 16]).collect();
        for (iy, dy) in (-ext..=ext).enumerate() {
            for (ix, dx) in (-ext..=ext).enumerate() {
                let cell = &mut sads[iy * side + ix];
                for (j, c) in cur_rows.iter().enumerate() {
                    let r = reference.integer_row(mb_x as i32 + dx, (mb_y + j) as i32 + dy, 16);
                    let base = (j / 4) * 4;
                    for b in 0..4 {
                        let s: u16 = c[4 * b..4 * b + 4]
                            .iter()
                            .zip(&r[4 * b..4 * b + 4])
                            .map(|(&p, &q)| p.abs_diff(q) as u16)
                            .sum();
                        cell[base + b] += s;
                    }
                }
            }
        }
        Self { range, side, sads }
    }

    pub fn range(&self) -> i32 {
        self.range
    }

    /// SAD of the partition at integer displacement `(dx, dy)` pixels.
    #[inline]
    pub fn partition_sad(&self, dx: i32, dy: i32, offset_x: usize, offset_y: usize, w: usize, h: usize) -> u32 {
        let ext = self.range + 1;
        debug_assert!(dx.abs() <= ext && dy.abs() <= ext);
        let cell = &self.sads[(dy + ext) as usize * self.side + (dx + ext) as usize];
        let (bx0, by0) = (offset_x / 4, offset_y / 4);
        let mut s = 0u32;
        for by in by0..by0 + h / 4 {
            for bx in bx0..bx0 + w / 4 {
                s += cell[by * 4 + bx] as u32;
            }
        }
        s
    }

    /// Same contract as [`full_search`], served from the table.
    pub fn full_search(&self, job: &PartitionJob, lambda: &LambdaModel) -> (MotionVector, CostCross) {
        let (w, h) = (job.width(), job.height());
        let eval = |dx: i32, dy: i32| {
            let mv = MotionVector::from_pixels(dx, dy);
            cost(
                self.partition_sad(dx, dy, job.offset_x, job.offset_y, w, h),
                mv,
                job.pred_mv,
                lambda,
            )
        };
        let r = self.range;
        let mut best = (CostValue(u32::MAX), MotionVector::ZERO);
        for dy in -r..=r {
            for dx in -r..=r {
                let mv = MotionVector::from_pixels(dx, dy);
                let c = eval(dx, dy);
                if tie_key(c, mv) < tie_key(best.0, best.1) {
                    best = (c, mv);
                }
            }
        }
        let (bx, by) = (best.1.x / 4, best.1.y / 4);
        let cross = CostCross {
            center: best.1,
            cost_full: best.0,
            cost_left: eval(bx - 1, by),
            cost_right: eval(bx + 1, by),
            cost_up: eval(bx, by - 1),
            cost_down: eval(bx, by + 1),
        };
        (best.1, cross)
    }
}
