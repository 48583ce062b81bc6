//! Sequence-level comparison runs and their CSV / markdown reports.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::interpolation::{build_padded, PaddedReference};
use crate::mode::{estimate_frame_strategies, FrameResult, SearchConfig};
use crate::stats::SearchStats;
use crate::subpel::{GateParams, Strategy};
use crate::video_io::LumaPlane;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub qp: i32,
    /// Integer search range; `None` picks 16 up to QCIF width, else 32.
    pub range: Option<i32>,
    pub refs: usize,
    pub params: GateParams,
    pub audit: bool,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            qp: 28,
            range: None,
            refs: 1,
            params: GateParams::default(),
            audit: false,
            jobs: 0,
        }
    }
}

pub fn default_range(width: usize) -> i32 {
    if width <= 176 {
        16
    } else {
        32
    }
}

#[derive(Debug, Clone)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub stats: SearchStats,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub qp: i32,
    pub range: i32,
    pub refs: usize,
    pub audit: bool,
    pub rows: Vec<StrategyReport>,
}

/// Per-frame callback with the results of every strategy, in request order.
pub type FrameObserver<'a> = dyn FnMut(usize, &LumaPlane, &[FrameResult]) + 'a;

/// Runs each strategy over an IPPP sequence where the references of frame `t`
/// are the original frames `t-1, t-2, ...` (at most `cfg.refs`).
pub fn run_benchmark(frames: &[LumaPlane], strategies: &[Strategy], cfg: &RunConfig) -> Result<Report> {
    run_benchmark_observed(frames, strategies, cfg, &mut |_, _, _| {})
}

pub fn run_benchmark_observed(
    frames: &[LumaPlane],
    strategies: &[Strategy],
    cfg: &RunConfig,
    observer: &mut FrameObserver<'_>,
) -> Result<Report> {
    if frames.len() < 2 {
        return Err(Error::InvalidConfig("need at least two frames".into()));
    }
    if strategies.is_empty() {
        return Err(Error::InvalidConfig("no strategies requested".into()));
    }
    if cfg.refs == 0 {
        return Err(Error::InvalidConfig("refs must be at least 1".into()));
    }
    let (width, height) = (frames[0].width(), frames[0].height());
    if let Some(f) = frames.iter().find(|f| f.width() != width || f.height() != height) {
        return Err(Error::DimensionMismatch(format!(
            "frame of {}x{} in a {width}x{height} sequence",
            f.width(),
            f.height()
        )));
    }
    let range = cfg.range.unwrap_or_else(|| default_range(width));
    if range <= 0 {
        return Err(Error::InvalidConfig(format!("search range must be positive, got {range}")));
    }
    let search = SearchConfig {
        lambda: crate::cost::LambdaModel::from_qp(cfg.qp),
        range,
        params: cfg.params,
        audit: cfg.audit,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let mut stats: Vec<SearchStats> = strategies.iter().map(|_| SearchStats::default()).collect();
    // most recent reference first
    let mut window: VecDeque<PaddedReference> = VecDeque::with_capacity(cfg.refs);
    for t in 1..frames.len() {
        window.push_front(pool.install(|| build_padded(&frames[t - 1], range as usize)));
        window.truncate(cfg.refs);
        let refs = window.make_contiguous();
        let results = pool.install(|| estimate_frame_strategies(&frames[t], refs, strategies, &search));
        for (s, r) in stats.iter_mut().zip(&results) {
            s.record_frame(&frames[t], r)?;
        }
        observer(t, &frames[t], &results);
    }

    Ok(Report {
        width,
        height,
        frames: frames.len(),
        qp: cfg.qp,
        range,
        refs: cfg.refs,
        audit: cfg.audit,
        rows: strategies
            .iter()
            .zip(stats)
            .map(|(&strategy, stats)| StrategyReport { strategy, stats })
            .collect(),
    })
}

fn fmt_psnr(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.3}")
    }
}

impl Report {
    pub fn row(&self, strategy: Strategy) -> Option<&SearchStats> {
        self.rows.iter().find(|r| r.strategy == strategy).map(|r| &r.stats)
    }

    fn header(&self) -> Vec<&'static str> {
        let mut h = vec!["strategy"];
        if self.refs > 1 {
            h.push("refs");
        }
        h.extend(["frames", "partitions", "points", "sp_per_pt", "refinements", "total_cost", "mc_psnr_db"]);
        if self.audit {
            h.extend(["d0", "d1", "d2", "d_gt2", "share_le0", "share_le1", "share_le2"]);
        }
        h
    }

    fn cells(&self, row: &StrategyReport) -> Vec<String> {
        let s = &row.stats;
        let mut c = vec![row.strategy.id().to_string()];
        if self.refs > 1 {
            c.push(self.refs.to_string());
        }
        c.extend([
            self.frames.to_string(),
            s.total_partitions.to_string(),
            s.total_points.to_string(),
            format!("{:.2}", s.sp_per_pt()),
            s.refinements.to_string(),
            s.total_cost.to_string(),
            fmt_psnr(s.mc_pred_psnr()),
        ]);
        if self.audit {
            let h = &s.histogram;
            c.extend(h.counts.iter().map(|n| n.to_string()));
            c.extend((0..3).map(|l| format!("{:.2}", 100.0 * h.share(l))));
        }
        c
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&self.cells(r).join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Sequence {}x{}, {} frames, QP {}, range {}, refs {}\n",
            self.width, self.height, self.frames, self.qp, self.range, self.refs
        );
        let header = self.header();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(
            out,
            "|{}",
            header
                .iter()
                .enumerate()
                .map(|(i, _)| if i == 0 { "---|" } else { "---:|" })
                .collect::<String>()
        );
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", self.cells(r).join(" | "));
        }
        out
    }
}
