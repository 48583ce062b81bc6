//! Sub-pel search strategies.
//!
//! All strategies share [`SubpelSearch`], a per-partition evaluator that caches
//! every position it has costed and counts unique sub-pel evaluations. The
//! integer winner and its four cross neighbours are seeded into the cache for
//! free, so the reported point counts only cover fractional positions.
//!
//! The rough/precise strategy works in three gated steps per partition:
//!
//! 1. a flatness test on the integer COST cross, which may skip sub-pel search
//!    entirely;
//! 2. two predicted positions (neighbour-based and quadratic-model) are costed;
//! 3. if the COST dropped a lot, one horizontal and one vertical quarter-pel
//!    neighbour of the step-2 winner are costed, chosen by comparing the
//!    slopes towards the surrounding integer samples.
//!
//! Only the partitions of the winning macroblock mode later get the 8-point
//! quarter-pel refinement ([`rfsme_refine`]).

use std::fmt;
use std::str::FromStr;

use crate::cost::{cost, sad_slices, CostValue, LambdaModel, MotionVector};
use crate::error::Error;
use crate::integer_me::{tie_key, BlockClass, CostCross, PartitionJob};
use crate::interpolation::{PaddedReference, QuarterPos};
use crate::video_io::LumaPlane;

/// Positive rational used for the gate ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidConfig(format!("expected a positive ratio NUM/DEN, got `{s}`"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        if n == 0 || d == 0 {
            return Err(bad());
        }
        Ok(Self::new(n, d))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Thresholds of the flatness and D gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateParams {
    pub th1: u32,
    pub th2: u32,
    pub r_f: Ratio,
    pub r_d: Ratio,
}

impl Default for GateParams {
    fn default() -> Self {
        Self {
            th1: 10,
            th2: 20,
            r_f: Ratio::new(5, 4),
            r_d: Ratio::new(3, 2),
        }
    }
}

impl GateParams {
    fn threshold(&self, class: BlockClass) -> u64 {
        match class {
            BlockClass::TypeI => self.th1 as u64,
            BlockClass::TypeII => self.th2 as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flatness {
    Flat,
    NotFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DSize {
    Small,
    Large,
}

/// How a partition's sub-pel result was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchPath {
    FlatSkip,
    Step2Stop,
    Step3,
    Refined,
    Full,
    IntegerOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubpelOutcome {
    pub mv: MotionVector,
    pub cost: CostValue,
    pub points: u32,
    pub path: SearchPath,
    pub mv_step2: Option<MotionVector>,
}

impl SubpelOutcome {
    pub fn integer(cross: &CostCross) -> Self {
        Self {
            mv: cross.center,
            cost: cross.cost_full,
            points: 0,
            path: SearchPath::IntegerOnly,
            mv_step2: None,
        }
    }
}

/// Strategy identifiers as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Full,
    Cbfps,
    Fpme,
    IeSme,
    Rfsme,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Self::Full, Self::Cbfps, Self::Fpme, Self::IeSme, Self::Rfsme];

    pub fn id(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Cbfps => "cbfps",
            Self::Fpme => "fpme",
            Self::IeSme => "ie_sme",
            Self::Rfsme => "rfsme",
        }
    }

    /// Strategies that finish each partition before mode selection.
    pub fn is_baseline(self) -> bool {
        matches!(self, Self::Full | Self::Cbfps | Self::Fpme)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|m| m.id() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}` (full|cbfps|fpme|ie_sme|rfsme)")))
    }
}

/// Cost evaluator for one partition against one reference.
#[derive(Debug, Clone)]
pub struct SubpelSearch<'a> {
    reference: &'a PaddedReference,
    lambda: &'a LambdaModel,
    origin: (i32, i32),
    w: usize,
    h: usize,
    pred_mv: MotionVector,
    cur_block: Vec<u8>,
    scratch: Vec<u8>,
    evaluated: Vec<(MotionVector, CostValue)>,
    points: u32,
}

impl<'a> SubpelSearch<'a> {
    pub fn new(
        job: &PartitionJob,
        cur: &LumaPlane,
        reference: &'a PaddedReference,
        lambda: &'a LambdaModel,
        cross: &CostCross,
    ) -> Self {
        let (x, y) = job.origin();
        let (w, h) = (job.width(), job.height());
        Self {
            reference,
            lambda,
            origin: (x as i32, y as i32),
            w,
            h,
            pred_mv: job.pred_mv,
            cur_block: cur.block(x, y, w, h),
            scratch: vec![0; w * h],
            evaluated: cross.points().to_vec(),
            points: 0,
        }
    }

    pub fn pred_mv(&self) -> MotionVector {
        self.pred_mv
    }

    /// Unique sub-pel positions costed so far.
    pub fn points(&self) -> u32 {
        self.points
    }

    pub fn known(&self, mv: MotionVector) -> Option<CostValue> {
        self.evaluated.iter().find(|(m, _)| *m == mv).map(|&(_, c)| c)
    }

    fn quarter_pos(&self, mv: MotionVector) -> QuarterPos {
        QuarterPos::new(4 * self.origin.0 + mv.x, 4 * self.origin.1 + mv.y)
    }

    /// COST at `mv` without touching the cache or the point counter.
    pub fn peek_cost(&self, mv: MotionVector) -> CostValue {
        let block = self.reference.fetch_block(self.quarter_pos(mv), self.w, self.h);
        cost(sad_slices(&self.cur_block, &block), mv, self.pred_mv, self.lambda)
    }

    pub fn cost_at(&mut self, mv: MotionVector) -> CostValue {
        if let Some(c) = self.known(mv) {
            return c;
        }
        let pos = self.quarter_pos(mv);
        self.reference.fetch_into(pos, self.w, self.h, &mut self.scratch);
        let c = cost(sad_slices(&self.cur_block, &self.scratch), mv, self.pred_mv, self.lambda);
        self.evaluated.push((mv, c));
        if !mv.is_integer() {
            self.points += 1;
        }
        c
    }
}

/// Truncated remainder of `a` by 4 (sign follows the dividend).
#[inline]
fn trunc_rem4(a: i32) -> i32 {
    a % 4
}

/// Neighbour-based sub-pel prediction: `(pred_mv - best_int) % 4` per
/// component, an offset in `[-3, 3]` from the integer winner.
pub fn cbfps_predict(pred_mv: MotionVector, best_int: MotionVector) -> MotionVector {
    let d = pred_mv - best_int;
    MotionVector::new(trunc_rem4(d.x), trunc_rem4(d.y))
}

/// Separable second-order fit of the COST cross, kept at twice the scale so
/// every coefficient is an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticFit {
    pub i: i64,
    pub j: i64,
    pub k: i64,
    pub l: i64,
    /// `2A = I + J`
    pub a2: i64,
    /// `2B = I - J`
    pub b2: i64,
    /// `2C = K + L`
    pub c2: i64,
    /// `2D = K - L`
    pub d2: i64,
}

impl QuadraticFit {
    pub fn from_cross(cross: &CostCross) -> Self {
        let f0 = cross.cost_full.0 as i64;
        let i = cross.cost_right.0 as i64 - f0;
        let j = cross.cost_left.0 as i64 - f0;
        let k = cross.cost_down.0 as i64 - f0;
        let l = cross.cost_up.0 as i64 - f0;
        Self {
            i,
            j,
            k,
            l,
            a2: i + j,
            b2: i - j,
            c2: k + l,
            d2: k - l,
        }
    }

    /// Minimiser `(-B/2A, -D/2C)` in quarter-pel units.
    pub fn offset(&self) -> MotionVector {
        MotionVector::new(quantize_axis(self.b2, self.a2), quantize_axis(self.d2, self.c2))
    }
}

/// `4 * (-B / 2A)` with `B = b2/2`, `A = a2/2`, i.e. `-2*b2/a2`, rounded half
/// away from zero and clamped to `[-3, 3]`; 0 when `a2 == 0`.
fn quantize_axis(b2: i64, a2: i64) -> i32 {
    if a2 == 0 {
        return 0;
    }
    let (mut num, mut den) = (-2 * b2, a2);
    if den < 0 {
        num = -num;
        den = -den;
    }
    let mag = (2 * num.abs() + den) / (2 * den);
    (num.signum() * mag).clamp(-3, 3) as i32
}

pub fn quad_predict(cross: &CostCross) -> MotionVector {
    QuadraticFit::from_cross(cross).offset()
}

/// `|a - b|` on the 2x-scaled axis averages: `|2*cost_full - sum|`.
fn diff2(full: u64, sum: u64) -> u64 {
    (2 * full).abs_diff(sum)
}

/// `sum / 2 > r * base`, exactly.
fn avg_exceeds(sum: u64, r: Ratio, base: u64) -> bool {
    sum * r.den > 2 * r.num * base
}

pub fn flatness_gate(cross: &CostCross, class: BlockClass, p: &GateParams) -> Flatness {
    let full = cross.cost_full.0 as u64;
    let (sv, sh) = (cross.sum_vertical(), cross.sum_horizontal());
    let ratio = avg_exceeds(sv, p.r_f, full) || avg_exceeds(sh, p.r_f, full);
    let closeness = diff2(full, sv).min(diff2(full, sh)) > 2 * p.threshold(class);
    if ratio || closeness {
        Flatness::NotFlat
    } else {
        Flatness::Flat
    }
}

pub fn d_gate(
    cost_step2: CostValue,
    cost_best_full: CostValue,
    cross: &CostCross,
    class: BlockClass,
    p: &GateParams,
) -> DSize {
    let min_step2 = cost_step2.min(cost_best_full).0 as u64;
    let d = cost_step2.0.abs_diff(cost_best_full.0) as u64;
    let ratio = avg_exceeds(cross.sum_vertical(), p.r_d, min_step2)
        || avg_exceeds(cross.sum_horizontal(), p.r_d, min_step2);
    if ratio || 2 * d > p.threshold(class) {
        DSize::Large
    } else {
        DSize::Small
    }
}

fn cross_cost_at(cross: &CostCross, mv: MotionVector) -> CostValue {
    cross
        .points()
        .into_iter()
        .find(|(m, _)| *m == mv)
        .map(|(_, c)| c)
        .unwrap_or_else(|| panic!("integer point {mv} is not on the COST cross around {}", cross.center))
}

/// Chooses the quarter-pel neighbour of `pos` along one axis.
///
/// `pos` and `center` are coordinates on that axis; `int_cost(c)` is the COST
/// of the integer sample at axis coordinate `c`. Returns -1 or +1.
fn select_axis(pos: i32, center: i32, cost_min: u64, int_cost: impl Fn(i32) -> u64) -> i32 {
    let (lo, hi) = if pos & 3 == 0 {
        (pos - 4, pos + 4)
    } else {
        (pos & !3, (pos & !3) + 4)
    };
    // slope_lo = |C_lo - cmin| / (pos - lo), slope_hi = |C_hi - cmin| / (hi - pos)
    let lhs = int_cost(lo).abs_diff(cost_min) * (hi - pos) as u64;
    let rhs = int_cost(hi).abs_diff(cost_min) * (pos - lo) as u64;
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Equal => {
            if pos < center {
                1
            } else {
                -1
            }
        }
    }
}

/// Step-3 picks around `mv_step2`: one of the horizontal quarter neighbours
/// and one of the vertical ones, each on the side of the smaller slope
/// towards the enclosing integer samples of the COST cross.
///
/// `mv_step2` must lie within 3 quarter-pel of `cross.center` on each axis.
pub fn bilinear_select(
    mv_step2: MotionVector,
    cost_min_step2: CostValue,
    cross: &CostCross,
) -> (MotionVector, MotionVector) {
    let c = cross.center;
    let cmin = cost_min_step2.0 as u64;
    let hx = select_axis(mv_step2.x, c.x, cmin, |x| {
        cross_cost_at(cross, MotionVector::new(x, c.y)).0 as u64
    });
    let vy = select_axis(mv_step2.y, c.y, cmin, |y| {
        cross_cost_at(cross, MotionVector::new(c.x, y)).0 as u64
    });
    (
        mv_step2 + MotionVector::new(hx, 0),
        mv_step2 + MotionVector::new(0, vy),
    )
}

/// Keeps the first-seen minimum; later candidates must be strictly cheaper.
fn better(best: &mut (CostValue, MotionVector), c: CostValue, mv: MotionVector) {
    if c < best.0 {
        *best = (c, mv);
    }
}

/// Steps 1-3 of the rough search.
pub fn rfsme_rough(
    search: &mut SubpelSearch<'_>,
    class: BlockClass,
    cross: &CostCross,
    params: &GateParams,
) -> SubpelOutcome {
    let start = search.points();
    let int_mv = cross.center;
    if flatness_gate(cross, class, params) == Flatness::Flat {
        return SubpelOutcome {
            mv: int_mv,
            cost: cross.cost_full,
            points: 0,
            path: SearchPath::FlatSkip,
            mv_step2: None,
        };
    }

    // Step 2: both predictors, deduplicated by the position cache.
    let c1 = int_mv + cbfps_predict(search.pred_mv(), int_mv);
    let c2 = int_mv + quad_predict(cross);
    let mut step2 = (search.cost_at(c1), c1);
    if c2 != c1 {
        better(&mut step2, search.cost_at(c2), c2);
    }
    let (cost_step2, mv_step2) = step2;

    let mut best = (cross.cost_full, int_mv);
    better(&mut best, cost_step2, mv_step2);

    let path = match d_gate(cost_step2, cross.cost_full, cross, class, params) {
        DSize::Small => SearchPath::Step2Stop,
        DSize::Large => {
            let (h, v) = bilinear_select(mv_step2, cost_step2.min(cross.cost_full), cross);
            better(&mut best, search.cost_at(h), h);
            better(&mut best, search.cost_at(v), v);
            SearchPath::Step3
        }
    };
    SubpelOutcome {
        mv: best.1,
        cost: best.0,
        points: search.points() - start,
        path,
        mv_step2: Some(mv_step2),
    }
}

const RING: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Step 5: the eight quarter-pel neighbours of the rough result.
pub fn rfsme_refine(search: &mut SubpelSearch<'_>, rough: &SubpelOutcome) -> SubpelOutcome {
    let start = search.points();
    let mut best = (rough.cost, rough.mv);
    for (dx, dy) in RING {
        let mv = rough.mv + MotionVector::new(dx, dy);
        better(&mut best, search.cost_at(mv), mv);
    }
    SubpelOutcome {
        mv: best.1,
        cost: best.0,
        points: rough.points + (search.points() - start),
        path: SearchPath::Refined,
        mv_step2: rough.mv_step2,
    }
}

/// Reference 16-point search: eight half-pel neighbours of the integer
/// winner, then eight quarter-pel neighbours of the best half-pel position.
pub fn full_sub(search: &mut SubpelSearch<'_>, cross: &CostCross) -> SubpelOutcome {
    let start = search.points();
    let mut best = (cross.cost_full, cross.center);
    for (dx, dy) in RING {
        let mv = cross.center + MotionVector::new(2 * dx, 2 * dy);
        better(&mut best, search.cost_at(mv), mv);
    }
    let half = best.1;
    for (dx, dy) in RING {
        let mv = half + MotionVector::new(dx, dy);
        better(&mut best, search.cost_at(mv), mv);
    }
    SubpelOutcome {
        mv: best.1,
        cost: best.0,
        points: search.points() - start,
        path: SearchPath::Full,
        mv_step2: None,
    }
}

const DIAMOND: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// Maximum number of diamond rounds in the descent baselines.
pub const DIAMOND_ROUNDS: usize = 3;

/// Quarter-pel small-diamond descent from `start`. The integer winner is kept
/// when the descent does not beat it.
pub fn diamond_descent(search: &mut SubpelSearch<'_>, cross: &CostCross, start: MotionVector) -> SubpelOutcome {
    let first = search.points();
    let mut center = (search.cost_at(start), start);
    for _ in 0..DIAMOND_ROUNDS {
        let mut round = center;
        for (dx, dy) in DIAMOND {
            let mv = center.1 + MotionVector::new(dx, dy);
            better(&mut round, search.cost_at(mv), mv);
        }
        if round.1 == center.1 {
            break;
        }
        center = round;
    }
    let mut best = (cross.cost_full, cross.center);
    better(&mut best, center.0, center.1);
    SubpelOutcome {
        mv: best.1,
        cost: best.0,
        points: search.points() - first,
        path: SearchPath::Full,
        mv_step2: None,
    }
}

/// Centre-biased baseline: descent from the neighbour-based prediction.
pub fn cbfps_search(search: &mut SubpelSearch<'_>, cross: &CostCross) -> SubpelOutcome {
    let start = cross.center + cbfps_predict(search.pred_mv(), cross.center);
    diamond_descent(search, cross, start)
}

/// Quadratic-prediction baseline: descent from the surface-model minimiser.
pub fn fpme_search(search: &mut SubpelSearch<'_>, cross: &CostCross) -> SubpelOutcome {
    let start = cross.center + quad_predict(cross);
    diamond_descent(search, cross, start)
}

/// Best position in the 7x7 quarter-pel box around the integer winner (the
/// winner itself included), tie-broken like the integer search. Does not
/// count points.
pub fn exhaustive_best(search: &SubpelSearch<'_>, cross: &CostCross) -> MotionVector {
    let mut best = (CostValue(u32::MAX), cross.center);
    for dy in -3..=3 {
        for dx in -3..=3 {
            let mv = cross.center + MotionVector::new(dx, dy);
            let c = search.known(mv).unwrap_or_else(|| search.peek_cost(mv));
            if tie_key(c, mv) < tie_key(best.0, best.1) {
                best = (c, mv);
            }
        }
    }
    best.1
}
