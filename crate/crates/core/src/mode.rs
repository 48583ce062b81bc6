//! Macroblock partition selection and the frame-level scan.
//!
//! Baseline strategies finish every partition's sub-pel search before the
//! mode is chosen. `rfsme` chooses the mode on rough COSTs and refines only
//! the winning partitions; `ie_sme` chooses on integer COSTs and runs the
//! 16-point search on the winners only.

use rayon::prelude::*;

use crate::cost::{predict_mv, CostValue, LambdaModel, MotionVector};
use crate::integer_me::{CostCross, MbSadTable, PartitionJob, PartitionShape};
use crate::interpolation::{PaddedReference, QuarterPos};
use crate::subpel::{
    cbfps_search, exhaustive_best, fpme_search, full_sub, rfsme_refine, rfsme_rough, GateParams, SearchPath,
    Strategy, SubpelOutcome, SubpelSearch,
};
use crate::video_io::LumaPlane;

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub lambda: LambdaModel,
    /// Integer search range in pixels.
    pub range: i32,
    pub params: GateParams,
    /// Run the exhaustive 7x7 sub-pel oracle for every step-2 prediction.
    pub audit: bool,
}

impl SearchConfig {
    pub fn new(qp: i32, range: i32) -> Self {
        Self {
            lambda: LambdaModel::from_qp(qp),
            range,
            params: GateParams::default(),
            audit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubMode {
    S8x8,
    S8x4,
    S4x8,
    S4x4,
}

impl SubMode {
    pub const ALL: [SubMode; 4] = [Self::S8x8, Self::S8x4, Self::S4x8, Self::S4x4];

    pub fn shape(self) -> PartitionShape {
        match self {
            Self::S8x8 => PartitionShape::P8x8,
            Self::S8x4 => PartitionShape::P8x4,
            Self::S4x8 => PartitionShape::P4x8,
            Self::S4x4 => PartitionShape::P4x4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MbMode {
    M16x16,
    M16x8,
    M8x16,
    P8x8([SubMode; 4]),
}

impl MbMode {
    pub fn name(&self) -> String {
        match self {
            Self::M16x16 => "16x16".into(),
            Self::M16x8 => "16x8".into(),
            Self::M8x16 => "8x16".into(),
            Self::P8x8(s) => format!(
                "P8x8[{}]",
                s.iter().map(|m| m.shape().name()).collect::<Vec<_>>().join(",")
            ),
        }
    }

    pub fn partition_count(&self) -> usize {
        match self {
            Self::M16x16 => 1,
            Self::M16x8 | Self::M8x16 => 2,
            Self::P8x8(s) => s
                .iter()
                .map(|m| match m {
                    SubMode::S8x8 => 1,
                    SubMode::S8x4 | SubMode::S4x8 => 2,
                    SubMode::S4x4 => 4,
                })
                .sum(),
        }
    }
}

/// Offsets (inside the MB) of the partitions of one shape within a region.
fn tiles(shape: PartitionShape, region_x: usize, region_y: usize, region: usize) -> Vec<(usize, usize)> {
    let (w, h) = shape.dims();
    let mut v = Vec::new();
    for y in (0..region).step_by(h) {
        for x in (0..region).step_by(w) {
            v.push((region_x + x, region_y + y));
        }
    }
    v
}

const BLOCKS_8X8: [(usize, usize); 4] = [(0, 0), (8, 0), (0, 8), (8, 8)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionDecision {
    pub offset_x: usize,
    pub offset_y: usize,
    pub shape: PartitionShape,
    pub ref_index: usize,
    pub pred_mv: MotionVector,
    pub integer_mv: MotionVector,
    pub mv: MotionVector,
    /// COST used for mode selection.
    pub rough_cost: CostValue,
    pub cost: CostValue,
    pub path: SearchPath,
}

/// One (partition, reference) estimate made during mode selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimateRecord {
    pub shape: PartitionShape,
    pub offset_x: usize,
    pub offset_y: usize,
    pub ref_index: usize,
    pub outcome: SubpelOutcome,
    /// Exhaustive-search best MV, only in audit mode and only when a step-2
    /// prediction exists.
    pub oracle_best: Option<MotionVector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MbModeResult {
    pub mb_x: usize,
    pub mb_y: usize,
    pub mode: MbMode,
    pub partitions: Vec<PartitionDecision>,
    pub total_rough_cost: u64,
    pub total_final_cost: u64,
    pub estimates: Vec<EstimateRecord>,
    /// New sub-pel points spent on each winning partition after selection.
    pub refinements: Vec<u32>,
    /// Number of modes whose partitions went through the precise phase.
    pub refined_modes: u32,
}

impl MbModeResult {
    pub fn points(&self) -> u64 {
        self.estimates.iter().map(|e| e.outcome.points as u64).sum::<u64>()
            + self.refinements.iter().map(|&p| p as u64).sum::<u64>()
    }
}

/// Decided motion vectors of the current frame at 4x4 granularity.
#[derive(Debug, Clone)]
pub struct MvField {
    cols: usize,
    rows: usize,
    mvs: Vec<Option<MotionVector>>,
}

impl MvField {
    pub fn new(width: usize, height: usize) -> Self {
        let (cols, rows) = (width / 4, height / 4);
        Self {
            cols,
            rows,
            mvs: vec![None; cols * rows],
        }
    }

    pub fn get(&self, bx: isize, by: isize) -> Option<MotionVector> {
        if bx < 0 || by < 0 || bx as usize >= self.cols || by as usize >= self.rows {
            return None;
        }
        self.mvs[by as usize * self.cols + bx as usize]
    }

    pub fn store(&mut self, result: &MbModeResult) {
        for p in &result.partitions {
            let (bx0, by0) = ((result.mb_x + p.offset_x) / 4, (result.mb_y + p.offset_y) / 4);
            for by in by0..by0 + p.shape.height() / 4 {
                for bx in bx0..bx0 + p.shape.width() / 4 {
                    self.mvs[by * self.cols + bx] = Some(p.mv);
                }
            }
        }
    }
}

type LocalGrid = [[Option<MotionVector>; 4]; 4];

struct Candidate<'a> {
    decision: PartitionDecision,
    cross: CostCross,
    outcome: SubpelOutcome,
    search: SubpelSearch<'a>,
}

struct MbEstimator<'a> {
    cur: &'a LumaPlane,
    refs: &'a [PaddedReference],
    tables: &'a [MbSadTable],
    field: &'a MvField,
    cfg: &'a SearchConfig,
    strategy: Strategy,
    mb_x: usize,
    mb_y: usize,
    estimates: Vec<EstimateRecord>,
}

impl<'a> MbEstimator<'a> {
    fn neighbor(&self, grid: &LocalGrid, bx: isize, by: isize) -> Option<MotionVector> {
        let (mbx, mby) = ((self.mb_x / 4) as isize, (self.mb_y / 4) as isize);
        if (mbx..mbx + 4).contains(&bx) && (mby..mby + 4).contains(&by) {
            grid[(by - mby) as usize][(bx - mbx) as usize]
        } else {
            self.field.get(bx, by)
        }
    }

    /// Median predictor from causal neighbours; an unavailable top-right
    /// neighbour is replaced by the top-left one.
    fn pred_mv(&self, grid: &LocalGrid, ox: usize, oy: usize, shape: PartitionShape) -> MotionVector {
        let bx = ((self.mb_x + ox) / 4) as isize;
        let by = ((self.mb_y + oy) / 4) as isize;
        let w4 = (shape.width() / 4) as isize;
        let left = self.neighbor(grid, bx - 1, by);
        let top = self.neighbor(grid, bx, by - 1);
        let top_right = self
            .neighbor(grid, bx + w4, by - 1)
            .or_else(|| self.neighbor(grid, bx - 1, by - 1));
        predict_mv(left, top, top_right)
    }

    /// Integer search and the strategy's per-partition sub-pel phase on every
    /// reference; keeps the cheapest reference (lowest index on ties).
    fn search_partition(&mut self, ox: usize, oy: usize, shape: PartitionShape, pred_mv: MotionVector) -> Candidate<'a> {
        let mut best: Option<Candidate<'a>> = None;
        for (r, reference) in self.refs.iter().enumerate() {
            let job = PartitionJob {
                mb_x: self.mb_x,
                mb_y: self.mb_y,
                offset_x: ox,
                offset_y: oy,
                shape,
                ref_index: r,
                pred_mv,
            };
            let (integer_mv, cross) = self.tables[r].full_search(&job, &self.cfg.lambda);
            let mut search = SubpelSearch::new(&job, self.cur, reference, &self.cfg.lambda, &cross);
            let outcome = match self.strategy {
                Strategy::Full => full_sub(&mut search, &cross),
                Strategy::Cbfps => cbfps_search(&mut search, &cross),
                Strategy::Fpme => fpme_search(&mut search, &cross),
                Strategy::IeSme => SubpelOutcome::integer(&cross),
                Strategy::Rfsme => rfsme_rough(&mut search, shape.class(), &cross, &self.cfg.params),
            };
            let oracle_best = match (self.cfg.audit, outcome.mv_step2) {
                (true, Some(_)) => Some(exhaustive_best(&search, &cross)),
                _ => None,
            };
            self.estimates.push(EstimateRecord {
                shape,
                offset_x: ox,
                offset_y: oy,
                ref_index: r,
                outcome,
                oracle_best,
            });
            let cand = Candidate {
                decision: PartitionDecision {
                    offset_x: ox,
                    offset_y: oy,
                    shape,
                    ref_index: r,
                    pred_mv,
                    integer_mv,
                    mv: outcome.mv,
                    rough_cost: outcome.cost,
                    cost: outcome.cost,
                    path: outcome.path,
                },
                cross,
                outcome,
                search,
            };
            if best.as_ref().is_none_or(|b| cand.outcome.cost < b.outcome.cost) {
                best = Some(cand);
            }
        }
        best.expect("at least one reference")
    }

    /// Evaluates the partitions in scan order, filling `grid` as it goes.
    fn run_partitions(
        &mut self,
        grid: &mut LocalGrid,
        parts: &[(usize, usize, PartitionShape)],
    ) -> (u64, Vec<Candidate<'a>>) {
        let mut total = 0u64;
        let mut cands = Vec::with_capacity(parts.len());
        for &(ox, oy, shape) in parts {
            let pred = self.pred_mv(grid, ox, oy, shape);
            let cand = self.search_partition(ox, oy, shape, pred);
            for row in grid.iter_mut().skip(oy / 4).take(shape.height() / 4) {
                for cell in row.iter_mut().skip(ox / 4).take(shape.width() / 4) {
                    *cell = Some(cand.outcome.mv);
                }
            }
            total += cand.outcome.cost.0 as u64;
            cands.push(cand);
        }
        (total, cands)
    }

    fn whole_mode(&mut self, shape: PartitionShape) -> (u64, Vec<Candidate<'a>>) {
        let parts: Vec<_> = tiles(shape, 0, 0, 16).into_iter().map(|(x, y)| (x, y, shape)).collect();
        let mut grid = LocalGrid::default();
        self.run_partitions(&mut grid, &parts)
    }

    fn p8x8_mode(&mut self) -> (u64, [SubMode; 4], Vec<Candidate<'a>>) {
        let mut grid = LocalGrid::default();
        let mut total = 0u64;
        let mut modes = [SubMode::S8x8; 4];
        let mut chosen = Vec::new();
        for (k, &(bx, by)) in BLOCKS_8X8.iter().enumerate() {
            let mut best: Option<(u64, SubMode, LocalGrid, Vec<Candidate<'a>>)> = None;
            for sub in SubMode::ALL {
                let shape = sub.shape();
                let parts: Vec<_> = tiles(shape, bx, by, 8).into_iter().map(|(x, y)| (x, y, shape)).collect();
                let mut g = grid;
                let (cost, cands) = self.run_partitions(&mut g, &parts);
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, sub, g, cands));
                }
            }
            let (cost, sub, g, cands) = best.expect("four sub-modes");
            total += cost;
            modes[k] = sub;
            grid = g;
            chosen.extend(cands);
        }
        (total, modes, chosen)
    }

    fn estimate(mut self) -> MbModeResult {
        let mut best: (u64, MbMode, Vec<Candidate<'a>>);
        let (c, v) = self.whole_mode(PartitionShape::P16x16);
        best = (c, MbMode::M16x16, v);
        for (shape, mode) in [(PartitionShape::P16x8, MbMode::M16x8), (PartitionShape::P8x16, MbMode::M8x16)] {
            let (c, v) = self.whole_mode(shape);
            if c < best.0 {
                best = (c, mode, v);
            }
        }
        let (c, subs, v) = self.p8x8_mode();
        if c < best.0 {
            best = (c, MbMode::P8x8(subs), v);
        }
        let (total_rough_cost, mode, winners) = best;

        let mut refinements = Vec::new();
        let mut refined_modes = 0;
        let mut partitions = Vec::with_capacity(winners.len());
        for mut cand in winners {
            let precise = match self.strategy {
                Strategy::Rfsme => Some(rfsme_refine(&mut cand.search, &cand.outcome)),
                Strategy::IeSme => Some(full_sub(&mut cand.search, &cand.cross)),
                _ => None,
            };
            if let Some(out) = precise {
                refinements.push(out.points - cand.outcome.points);
                cand.decision.mv = out.mv;
                cand.decision.cost = out.cost;
                cand.decision.path = match self.strategy {
                    Strategy::Rfsme => SearchPath::Refined,
                    _ => out.path,
                };
            }
            partitions.push(cand.decision);
        }
        if !self.strategy.is_baseline() {
            refined_modes = 1;
        }
        let total_final_cost = partitions.iter().map(|p| p.cost.0 as u64).sum();
        MbModeResult {
            mb_x: self.mb_x,
            mb_y: self.mb_y,
            mode,
            partitions,
            total_rough_cost,
            total_final_cost,
            estimates: self.estimates,
            refinements,
            refined_modes,
        }
    }
}

/// Mode decision for the macroblock at `(mb_x, mb_y)` pixels.
///
/// `tables[r]` must be the SAD table of this macroblock against `refs[r]`,
/// and `field` must hold the decisions of every earlier macroblock of the
/// frame in raster order.
pub fn estimate_mb(
    cur: &LumaPlane,
    mb_x: usize,
    mb_y: usize,
    strategy: Strategy,
    refs: &[PaddedReference],
    tables: &[MbSadTable],
    field: &MvField,
    cfg: &SearchConfig,
) -> MbModeResult {
    assert!(!refs.is_empty() && refs.len() == tables.len());
    MbEstimator {
        cur,
        refs,
        tables,
        field,
        cfg,
        strategy,
        mb_x,
        mb_y,
        estimates: Vec::new(),
    }
    .estimate()
}

/// Baseline entry point: every partition is completed before selection.
pub fn baseline_estimate_mb(
    cur: &LumaPlane,
    mb_x: usize,
    mb_y: usize,
    strategy: Strategy,
    refs: &[PaddedReference],
    tables: &[MbSadTable],
    field: &MvField,
    cfg: &SearchConfig,
) -> MbModeResult {
    assert!(strategy.is_baseline(), "{strategy} is not a baseline strategy");
    estimate_mb(cur, mb_x, mb_y, strategy, refs, tables, field, cfg)
}

/// Decisions for one frame under one strategy.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub strategy: Strategy,
    pub mbs: Vec<MbModeResult>,
    pub prediction: LumaPlane,
}

/// Motion-compensated prediction assembled from the chosen partitions.
pub fn assemble_prediction(width: usize, height: usize, mbs: &[MbModeResult], refs: &[PaddedReference]) -> LumaPlane {
    let mut out = LumaPlane::filled(width, height, 0).expect("aligned frame");
    for mb in mbs {
        for p in &mb.partitions {
            let (x, y) = (mb.mb_x + p.offset_x, mb.mb_y + p.offset_y);
            let (w, h) = p.shape.dims();
            let pos = QuarterPos::new(4 * x as i32 + p.mv.x, 4 * y as i32 + p.mv.y);
            let block = refs[p.ref_index].fetch_block(pos, w, h);
            out.put_block(x, y, w, h, &block);
        }
    }
    out
}

/// Runs every strategy over one frame. SAD tables are computed once per
/// macroblock row and shared; each strategy scans the row in raster order
/// with its own MV field. Output does not depend on the thread count.
pub fn estimate_frame_strategies(
    cur: &LumaPlane,
    refs: &[PaddedReference],
    strategies: &[Strategy],
    cfg: &SearchConfig,
) -> Vec<FrameResult> {
    let (cols, rows) = (cur.mb_cols(), cur.mb_rows());
    let mut fields: Vec<MvField> = strategies.iter().map(|_| MvField::new(cur.width(), cur.height())).collect();
    let mut mbs: Vec<Vec<MbModeResult>> = strategies.iter().map(|_| Vec::with_capacity(cols * rows)).collect();
    for row in 0..rows {
        let tables: Vec<Vec<MbSadTable>> = (0..cols)
            .into_par_iter()
            .map(|col| {
                refs.iter()
                    .map(|r| MbSadTable::compute(cur, r, 16 * col, 16 * row, cfg.range))
                    .collect()
            })
            .collect();
        strategies
            .par_iter()
            .zip(fields.par_iter_mut())
            .zip(mbs.par_iter_mut())
            .for_each(|((&strategy, field), out)| {
                for (col, t) in tables.iter().enumerate() {
                    let res = estimate_mb(cur, 16 * col, 16 * row, strategy, refs, t, field, cfg);
                    field.store(&res);
                    out.push(res);
                }
            });
    }
    strategies
        .iter()
        .zip(mbs)
        .map(|(&strategy, mbs)| FrameResult {
            strategy,
            prediction: assemble_prediction(cur.width(), cur.height(), &mbs, refs),
            mbs,
        })
        .collect()
}

pub fn estimate_frame(cur: &LumaPlane, refs: &[PaddedReference], strategy: Strategy, cfg: &SearchConfig) -> FrameResult {
    estimate_frame_strategies(cur, refs, &[strategy], cfg)
        .pop()
        .expect("one strategy in, one result out")
}
