//! Search-point accounting, the step-2 distance histogram and prediction
//! PSNR.

use crate::cost::MotionVector;
use crate::error::{Error, Result};
use crate::mode::FrameResult;
use crate::subpel::SubpelOutcome;
use crate::video_io::LumaPlane;

/// Distance buckets `d = 0, 1, 2, > 2` in quarter-pel (Manhattan).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistanceHistogram {
    pub counts: [u64; 4],
}

impl DistanceHistogram {
    pub fn add(&mut self, d: u32) {
        self.counts[(d as usize).min(3)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Number of samples with `d <= limit` (limit 0..=2).
    pub fn cumulative(&self, limit: usize) -> u64 {
        self.counts[..=limit.min(2)].iter().sum()
    }

    pub fn share(&self, limit: usize) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.cumulative(limit) as f64 / t as f64,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameStats {
    pub points: u64,
    pub partitions: u64,
    pub total_cost: u64,
    pub sse: u64,
    pub samples: u64,
}

impl FrameStats {
    pub fn psnr(&self) -> f64 {
        psnr_from_sse(self.sse, self.samples)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub total_points: u64,
    /// (partition, reference) estimates made during mode selection.
    pub total_partitions: u64,
    pub histogram: DistanceHistogram,
    pub total_cost: u64,
    pub refinements: u64,
    pub refined_modes: u64,
    pub macroblocks: u64,
    pub sse: u64,
    pub samples: u64,
    pub frames: Vec<FrameStats>,
}

impl SearchStats {
    pub fn sp_per_pt(&self) -> f64 {
        if self.total_partitions == 0 {
            0.0
        } else {
            self.total_points as f64 / self.total_partitions as f64
        }
    }

    /// Prediction PSNR over all recorded samples; `+inf` when exact.
    pub fn mc_pred_psnr(&self) -> f64 {
        psnr_from_sse(self.sse, self.samples)
    }

    pub fn record_partition(&mut self, outcome: &SubpelOutcome, oracle_best: Option<MotionVector>) {
        self.total_points += outcome.points as u64;
        self.total_partitions += 1;
        if let (Some(step2), Some(best)) = (outcome.mv_step2, oracle_best) {
            self.histogram.add(step2.manhattan(best));
        }
    }

    pub fn record_refinement(&mut self, new_points: u32) {
        self.total_points += new_points as u64;
        self.refinements += 1;
    }

    /// Folds a whole frame in: every estimate, every refinement, final COSTs
    /// and the prediction error against `cur`.
    pub fn record_frame(&mut self, cur: &LumaPlane, frame: &FrameResult) -> Result<()> {
        let before = (self.total_points, self.total_partitions, self.total_cost);
        for mb in &frame.mbs {
            for e in &mb.estimates {
                self.record_partition(&e.outcome, e.oracle_best);
            }
            for &p in &mb.refinements {
                self.record_refinement(p);
            }
            self.total_cost += mb.total_final_cost;
            self.refined_modes += mb.refined_modes as u64;
            self.macroblocks += 1;
        }
        let sse = sse(cur, &frame.prediction)?;
        let samples = cur.samples().len() as u64;
        self.sse += sse;
        self.samples += samples;
        self.frames.push(FrameStats {
            points: self.total_points - before.0,
            partitions: self.total_partitions - before.1,
            total_cost: self.total_cost - before.2,
            sse,
            samples,
        });
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        self.total_points += other.total_points;
        self.total_partitions += other.total_partitions;
        self.histogram.merge(&other.histogram);
        self.total_cost += other.total_cost;
        self.refinements += other.refinements;
        self.refined_modes += other.refined_modes;
        self.macroblocks += other.macroblocks;
        self.sse += other.sse;
        self.samples += other.samples;
        self.frames.extend_from_slice(&other.frames);
    }
}

fn sse(cur: &LumaPlane, predicted: &LumaPlane) -> Result<u64> {
    if cur.width() != predicted.width() || cur.height() != predicted.height() {
        return Err(Error::DimensionMismatch(format!(
            "prediction {}x{} for a {}x{} frame",
            predicted.width(),
            predicted.height(),
            cur.width(),
            cur.height()
        )));
    }
    Ok(cur
        .samples()
        .iter()
        .zip(predicted.samples())
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as u64;
            d * d
        })
        .sum())
}

fn psnr_from_sse(sse: u64, samples: u64) -> f64 {
    if sse == 0 || samples == 0 {
        return f64::INFINITY;
    }
    let mse = sse as f64 / samples as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

/// `10 log10(255^2 / MSE)`; `+inf` for identical planes.
pub fn mc_prediction_psnr(cur: &LumaPlane, predicted: &LumaPlane) -> Result<f64> {
    Ok(psnr_from_sse(sse(cur, predicted)?, cur.samples().len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostValue;
    use crate::subpel::SearchPath;

    fn outcome(step2: Option<MotionVector>, points: u32) -> SubpelOutcome {
        SubpelOutcome {
            mv: MotionVector::ZERO,
            cost: CostValue(0),
            points,
            path: SearchPath::Step2Stop,
            mv_step2: step2,
        }
    }

    #[test]
    fn histogram_buckets() {
        let mut s = SearchStats::default();
        let a = MotionVector::new(1, 0);
        s.record_partition(&outcome(Some(a), 1), Some(a));
        s.record_partition(&outcome(Some(a), 2), Some(MotionVector::new(-1, 0)));
        s.record_partition(&outcome(Some(a), 2), Some(MotionVector::new(3, 3)));
        s.record_partition(&outcome(None, 0), Some(a));
        assert_eq!(s.histogram.counts, [1, 0, 1, 1]);
        assert_eq!(s.total_partitions, 4);
        assert_eq!(s.total_points, 5);
        assert!(s.histogram.cumulative(0) <= s.histogram.cumulative(1));
        assert!(s.histogram.cumulative(1) <= s.histogram.cumulative(2));
    }

    #[test]
    fn psnr_examples() {
        let a = LumaPlane::filled(16, 16, 7).unwrap();
        assert_eq!(mc_prediction_psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = LumaPlane::filled(16, 16, 8).unwrap();
        assert!((mc_prediction_psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-3);
        let z = LumaPlane::filled(16, 16, 0).unwrap();
        let f = LumaPlane::filled(16, 16, 255).unwrap();
        assert_eq!(mc_prediction_psnr(&z, &f).unwrap(), 0.0);
        let small = LumaPlane::filled(16, 32, 0).unwrap();
        assert!(mc_prediction_psnr(&z, &small).is_err());
    }

    #[test]
    fn merge_is_additive() {
        let mut a = SearchStats::default();
        a.record_partition(&outcome(None, 3), None);
        let mut b = SearchStats::default();
        b.record_partition(&outcome(None, 5), None);
        b.record_refinement(8);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab.total_points, 16);
        assert_eq!(ab.total_points, ba.total_points);
        assert_eq!(ab.total_partitions, 2);
    }
}
