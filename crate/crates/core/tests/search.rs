mod common;

use std::collections::HashSet;

use common::{cost_at, random_plane, shifted, smooth_plane, tie_order};
use proptest::prelude::*;
use rfsme::integer_me::{full_search, MbSadTable};
use rfsme::subpel::{
    cbfps_predict, cbfps_search, exhaustive_best, fpme_search, full_sub, quad_predict, rfsme_refine, rfsme_rough,
    GateParams, SearchPath, SubpelSearch, DIAMOND_ROUNDS,
};
use rfsme::{build_padded, CostCross, CostValue, LambdaModel, LumaPlane, MotionVector, PaddedReference, PartitionJob, PartitionShape};

const QP: i32 = 28;

struct Fixture {
    cur: LumaPlane,
    refp: LumaPlane,
    padded: PaddedReference,
    lambda: LambdaModel,
    range: i32,
}

impl Fixture {
    fn new(cur: LumaPlane, refp: LumaPlane, range: i32) -> Self {
        let padded = build_padded(&refp, range as usize);
        Self {
            cur,
            refp,
            padded,
            lambda: LambdaModel::from_qp(QP),
            range,
        }
    }

    /// Smooth content moved by a whole-pixel vector, so minima are sharp but
    /// sub-pel surfaces are still interesting.
    fn moving(seed: u64, dx: i32, dy: i32) -> Self {
        let refp = smooth_plane(48, 48, seed);
        let cur = shifted(&refp, dx, dy);
        Self::new(cur, refp, 8)
    }

    fn cost(&self, job: &PartitionJob, mv: MotionVector) -> CostValue {
        let (x, y) = job.origin();
        cost_at(&self.cur, &self.refp, x, y, job.width(), job.height(), mv, job.pred_mv, QP)
    }

    fn cross(&self, job: &PartitionJob) -> CostCross {
        full_search(job, &self.cur, &self.padded, self.range, &self.lambda).1
    }

    fn search(&self, job: &PartitionJob, cross: &CostCross) -> SubpelSearch<'_> {
        SubpelSearch::new(job, &self.cur, &self.padded, &self.lambda, cross)
    }
}

fn job(mb_x: usize, mb_y: usize, ox: usize, oy: usize, shape: PartitionShape, pred: MotionVector) -> PartitionJob {
    PartitionJob {
        mb_x,
        mb_y,
        offset_x: ox,
        offset_y: oy,
        shape,
        ref_index: 0,
        pred_mv: pred,
    }
}

fn jobs_for(seed: u64) -> Vec<PartitionJob> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::new();
    for shape in PartitionShape::ALL {
        let (w, h) = shape.dims();
        for _ in 0..3 {
            let ox = w * rng.random_range(0..16 / w);
            let oy = h * rng.random_range(0..16 / h);
            let pred = MotionVector::new(rng.random_range(-40..=40), rng.random_range(-40..=40));
            v.push(job(16 * rng.random_range(0..3usize), 16 * rng.random_range(0..3usize), ox, oy, shape, pred));
        }
    }
    v
}

/// Plain triple loop over the window with the documented tie order.
fn naive_integer(f: &Fixture, job: &PartitionJob) -> (MotionVector, CostValue) {
    let mut best: Option<(CostValue, MotionVector)> = None;
    for dy in -f.range..=f.range {
        for dx in -f.range..=f.range {
            let mv = MotionVector::new(4 * dx, 4 * dy);
            let c = f.cost(job, mv);
            if best.is_none_or(|(bc, bm)| tie_order(c, mv) < tie_order(bc, bm)) {
                best = Some((c, mv));
            }
        }
    }
    let (c, mv) = best.unwrap();
    (mv, c)
}

#[test]
fn integer_search_matches_triple_loop() {
    for seed in 0..4 {
        let f = Fixture::new(random_plane(48, 48, seed), random_plane(48, 48, seed + 100), 6);
        let g = Fixture::moving(seed, 3, -2);
        for fx in [&f, &g] {
            for j in jobs_for(seed) {
                let (mv, cross) = full_search(&j, &fx.cur, &fx.padded, fx.range, &fx.lambda);
                let (omv, oc) = naive_integer(fx, &j);
                assert_eq!((mv, cross.cost_full), (omv, oc), "{j:?}");
                let e = |dx: i32, dy: i32| fx.cost(&j, mv + MotionVector::new(4 * dx, 4 * dy));
                assert_eq!(cross.cost_left, e(-1, 0));
                assert_eq!(cross.cost_right, e(1, 0));
                assert_eq!(cross.cost_up, e(0, -1));
                assert_eq!(cross.cost_down, e(0, 1));

                let table = MbSadTable::compute(&fx.cur, &fx.padded, j.mb_x, j.mb_y, fx.range);
                assert_eq!(table.full_search(&j, &fx.lambda), (mv, cross));
            }
        }
    }
}

#[test]
fn integer_search_finds_true_shift() {
    let f = Fixture::moving(9, 3, -2);
    let j = job(16, 16, 0, 0, PartitionShape::P16x16, MotionVector::ZERO);
    let (mv, cross) = full_search(&j, &f.cur, &f.padded, f.range, &f.lambda);
    // cur(x) = ref(x - d): the block is found at displacement -d
    assert_eq!(mv, MotionVector::new(-12, 8));
    assert_eq!(cross.cost_full.0, f.lambda.mv_cost(mv, MotionVector::ZERO));
}

#[test]
fn cross_extends_past_window_edge() {
    // best match sits on the window corner
    let f = Fixture::moving(4, 6, 6);
    let j = job(16, 16, 0, 0, PartitionShape::P16x16, MotionVector::new(-24, -24));
    let (mv, cross) = full_search(&j, &f.cur, &f.padded, 6, &f.lambda);
    assert_eq!(mv, MotionVector::new(-24, -24));
    assert_eq!(cross.cost_left, f.cost(&j, MotionVector::new(-28, -24)));
    assert_eq!(cross.cost_up, f.cost(&j, MotionVector::new(-24, -28)));
}

const RING: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Two-stage half/quarter search written against the oracle cost; candidates
/// in raster order, the current best kept on ties.
fn naive_full_sub(f: &Fixture, j: &PartitionJob, cross: &CostCross) -> (MotionVector, CostValue) {
    let mut best = (cross.cost_full, cross.center);
    for step in [2, 1] {
        let c = best.1;
        for (dx, dy) in RING {
            let mv = c + MotionVector::new(step * dx, step * dy);
            let cost = f.cost(j, mv);
            if cost < best.0 {
                best = (cost, mv);
            }
        }
    }
    (best.1, best.0)
}

#[test]
fn full_sub_matches_enumeration() {
    for seed in 0..3 {
        let f = Fixture::moving(seed, 1, 2);
        let n = Fixture::new(random_plane(48, 48, seed), random_plane(48, 48, seed + 7), 6);
        for fx in [&f, &n] {
            for j in jobs_for(seed + 10) {
                let cross = fx.cross(&j);
                let mut s = fx.search(&j, &cross);
                let out = full_sub(&mut s, &cross);
                assert_eq!(out.points, 16);
                assert_eq!(out.path, SearchPath::Full);
                assert_eq!((out.mv, out.cost), naive_full_sub(fx, &j, &cross), "{j:?}");
            }
        }
    }
}

#[test]
fn full_sub_static_content_stays_put() {
    let p = smooth_plane(48, 48, 3);
    let f = Fixture::new(p.clone(), p, 8);
    for j in jobs_for(3) {
        let j = PartitionJob {
            pred_mv: MotionVector::ZERO,
            ..j
        };
        let cross = f.cross(&j);
        let out = full_sub(&mut f.search(&j, &cross), &cross);
        assert_eq!(out.mv, MotionVector::ZERO);
    }
}

const DIAMOND: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// Greedy small-diamond walker: visits are tracked in a set seeded with the
/// five integer cross positions; only unseen fractional positions count.
fn naive_walker(f: &Fixture, j: &PartitionJob, cross: &CostCross, start: MotionVector) -> (MotionVector, CostValue, u32) {
    let mut seen: HashSet<MotionVector> = cross.points().iter().map(|p| p.0).collect();
    let mut points = 0;
    let mut visit = |mv: MotionVector| {
        if seen.insert(mv) && !mv.is_integer() {
            points += 1;
        }
        f.cost(j, mv)
    };
    let mut center = (visit(start), start);
    for _ in 0..DIAMOND_ROUNDS {
        let mut next = center;
        for (dx, dy) in DIAMOND {
            let mv = center.1 + MotionVector::new(dx, dy);
            let c = visit(mv);
            if c < next.0 {
                next = (c, mv);
            }
        }
        if next.1 == center.1 {
            break;
        }
        center = next;
    }
    if center.0 < cross.cost_full {
        (center.1, center.0, points)
    } else {
        (cross.center, cross.cost_full, points)
    }
}

#[test]
fn diamond_baselines_match_walker() {
    for seed in 0..3 {
        let f = Fixture::moving(seed, -2, 1);
        let n = Fixture::new(random_plane(48, 48, seed + 3), random_plane(48, 48, seed + 5), 6);
        for fx in [&f, &n] {
            for j in jobs_for(seed + 20) {
                let cross = fx.cross(&j);
                let c = cbfps_search(&mut fx.search(&j, &cross), &cross);
                let start = cross.center + cbfps_predict(j.pred_mv, cross.center);
                assert_eq!((c.mv, c.cost, c.points), naive_walker(fx, &j, &cross, start), "cbfps {j:?}");

                let q = fpme_search(&mut fx.search(&j, &cross), &cross);
                let start = cross.center + quad_predict(&cross);
                assert_eq!((q.mv, q.cost, q.points), naive_walker(fx, &j, &cross, start), "fpme {j:?}");
                assert!(c.points <= 1 + 4 * DIAMOND_ROUNDS as u32);
            }
        }
    }
}

#[test]
fn diamond_on_static_content_returns_zero() {
    let p = smooth_plane(48, 48, 8);
    let f = Fixture::new(p.clone(), p, 8);
    let j = job(16, 16, 0, 0, PartitionShape::P8x8, MotionVector::ZERO);
    let cross = f.cross(&j);
    let c = cbfps_search(&mut f.search(&j, &cross), &cross);
    assert_eq!(c.mv, MotionVector::ZERO);
    // start is the integer winner: only the four quarter neighbours are new
    assert_eq!(c.points, 4);
    let q = fpme_search(&mut f.search(&j, &cross), &cross);
    assert_eq!(q.mv, MotionVector::ZERO);
}

#[test]
fn refinement_finds_best_of_three_by_three() {
    for seed in 0..3 {
        let f = Fixture::moving(seed, 1, 1);
        for j in jobs_for(seed + 30) {
            let cross = f.cross(&j);
            let mut s = f.search(&j, &cross);
            let rough = rfsme_rough(&mut s, j.class(), &cross, &GateParams::default());
            let refined = rfsme_refine(&mut s, &rough);
            let mut best = rough.cost;
            for (dx, dy) in RING {
                best = best.min(f.cost(&j, rough.mv + MotionVector::new(dx, dy)));
            }
            assert_eq!(refined.cost, best, "{j:?}");
            assert_eq!(refined.cost, f.cost(&j, refined.mv));
            assert!(refined.points >= rough.points && refined.points <= rough.points + 8);
            assert_eq!(refined.path, SearchPath::Refined);

            // a second refinement around an already visited neighbourhood is free
            let again = rfsme_refine(&mut s, &rough);
            assert_eq!(again.points, rough.points);
        }
    }
}

#[test]
fn refinement_recovers_one_quarter_error() {
    // exact quarter-pel content motion; start the refinement one quarter off
    let base = smooth_plane(64, 64, 5);
    let base_ref = build_padded(&base, 8);
    let cur = LumaPlane::new(48, 48, base_ref.fetch_block(rfsme::QuarterPos::new(4 * 8 + 3, 4 * 8 + 1), 48, 48)).unwrap();
    let refp = LumaPlane::new(48, 48, base.block(8, 8, 48, 48)).unwrap();
    let f = Fixture::new(cur, refp, 8);
    let j = job(16, 16, 0, 0, PartitionShape::P16x16, MotionVector::new(3, 1));
    let cross = f.cross(&j);
    let truth = MotionVector::new(3, 1);
    let mut s = f.search(&j, &cross);
    let mut rough = rfsme_rough(&mut s, j.class(), &cross, &GateParams::default());
    rough.mv = truth + MotionVector::new(-1, 0);
    rough.cost = s.cost_at(rough.mv);
    let refined = rfsme_refine(&mut s, &rough);
    assert_eq!(refined.mv, truth);
    assert_eq!(refined.mv, exhaustive_best(&s, &cross));
}

#[test]
fn exhaustive_best_is_box_minimum() {
    let f = Fixture::moving(2, -1, 2);
    for j in jobs_for(40) {
        let cross = f.cross(&j);
        let s = f.search(&j, &cross);
        let mut best: Option<(CostValue, MotionVector)> = None;
        for dy in -3..=3 {
            for dx in -3..=3 {
                let mv = cross.center + MotionVector::new(dx, dy);
                let c = f.cost(&j, mv);
                if best.is_none_or(|(bc, bm)| tie_order(c, mv) < tie_order(bc, bm)) {
                    best = Some((c, mv));
                }
            }
        }
        assert_eq!(exhaustive_best(&s, &cross), best.unwrap().1);
        assert_eq!(s.points(), 0, "the oracle must not be charged");
    }
}

fn exact_cross(f0: u32, i: u32, j: u32, k: u32, l: u32) -> CostCross {
    CostCross {
        center: MotionVector::ZERO,
        cost_full: CostValue(f0),
        cost_right: CostValue(f0 + i),
        cost_left: CostValue(f0 + j),
        cost_down: CostValue(f0 + k),
        cost_up: CostValue(f0 + l),
    }
}

#[test]
fn quadratic_prediction_on_exact_surfaces() {
    // f(x, y) = a (x - x0)^2 + b (y - y0)^2 + c with x0 = p/16, a = 256 m:
    // every sample of the cross is an integer.
    for m in [1u32, 2, 5] {
        for nb in [1u32, 3] {
            for p in -12i32..=12 {
                for q in -12i32..=12 {
                    let (a, b) = (m as i64 * 256, nb as i64 * 256);
                    let fx = |x: i64| a * (16 * x - p as i64).pow(2) / 256;
                    let fy = |y: i64| b * (16 * y - q as i64).pow(2) / 256;
                    let c = 10_000i64;
                    let f = |x: i64, y: i64| (fx(x) + fy(y) + c) as u32;
                    let cross = CostCross {
                        center: MotionVector::ZERO,
                        cost_full: CostValue(f(0, 0)),
                        cost_right: CostValue(f(1, 0)),
                        cost_left: CostValue(f(-1, 0)),
                        cost_down: CostValue(f(0, 1)),
                        cost_up: CostValue(f(0, -1)),
                    };
                    let got = quad_predict(&cross);
                    // analytic minimum in quarter-pel: 4 * p / 16
                    let (tx, ty) = (p as f64 / 4.0, q as f64 / 4.0);
                    assert!((got.x as f64 - tx).abs() <= 0.5, "p={p} got {got}");
                    assert!((got.y as f64 - ty).abs() <= 0.5, "q={q} got {got}");
                }
            }
        }
    }
}

#[test]
fn quadratic_prediction_hand_example() {
    // f(0,0)=100, right 120, left 110, down 130, up 105
    assert_eq!(quad_predict(&exact_cross(100, 20, 10, 30, 5)), MotionVector::new(-1, -1));
    assert_eq!(quad_predict(&exact_cross(100, 7, 7, 0, 0)), MotionVector::ZERO);
}

fn outcome_invariants(f: &Fixture, j: &PartitionJob) -> Result<(), TestCaseError> {
    let cross = f.cross(j);
    let mut s = f.search(j, &cross);
    let out = rfsme_rough(&mut s, j.class(), &cross, &GateParams::default());
    prop_assert!(out.points <= 4);
    prop_assert_eq!(out.cost, f.cost(j, out.mv));
    prop_assert!(out.cost <= cross.cost_full);
    match out.path {
        SearchPath::FlatSkip => {
            prop_assert_eq!(out.points, 0);
            prop_assert_eq!(out.mv, cross.center);
            prop_assert_eq!(out.mv_step2, None);
        }
        SearchPath::Step2Stop => prop_assert!(out.points <= 2),
        SearchPath::Step3 => {}
        other => prop_assert!(false, "unexpected rough path {:?}", other),
    }
    if out.path != SearchPath::FlatSkip {
        prop_assert!(out.mv_step2.is_some());
    }
    Ok(())
}

proptest! {
    #![proptest_config(common::prop_config(48))]

    #[test]
    fn rough_search_invariants(seed in any::<u64>(), dx in -3i32..=3, dy in -3i32..=3, smooth in any::<bool>(), pick in 0usize..21) {
        let f = if smooth {
            Fixture::moving(seed, dx, dy)
        } else {
            Fixture::new(random_plane(48, 48, seed), random_plane(48, 48, seed ^ 1), 6)
        };
        let j = jobs_for(seed)[pick];
        outcome_invariants(&f, &j)?;
    }

    #[test]
    fn every_strategy_reports_true_cost(seed in any::<u64>(), pick in 0usize..21) {
        let f = Fixture::moving(seed, 2, -1);
        let j = jobs_for(seed)[pick];
        let cross = f.cross(&j);
        for run in [full_sub, cbfps_search, fpme_search] {
            let out = run(&mut f.search(&j, &cross), &cross);
            prop_assert_eq!(out.cost, f.cost(&j, out.mv));
            prop_assert!(out.cost <= cross.cost_full);
        }
    }
}
