//! C ABI over the `rfsme` library.
//!
//! Sequences and reports are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`RfsmeStatus`]; the message of the most recent failure on the calling
//! thread is available from [`rfsme_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rfsme::bench::{run_benchmark, Report, RunConfig};
use rfsme::cost::{mv_bits, LambdaModel};
use rfsme::video_io::{is_y4m, load_sequence, probe_frame_count, SequenceConfig, Source, SynthKind};
use rfsme::{Error, GateParams, LumaPlane, MotionVector, Ratio, Strategy};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfsmeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Truncated = 4,
    Unaligned = 5,
    UnsupportedColorspace = 6,
    BadFormat = 7,
    DimensionMismatch = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Strategy identifiers accepted by [`rfsme_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfsmeStrategy {
    Full = 0,
    Cbfps = 1,
    Fpme = 2,
    IeSme = 3,
    Rfsme = 4,
}

const STRATEGIES: [Strategy; 5] = [Strategy::Full, Strategy::Cbfps, Strategy::Fpme, Strategy::IeSme, Strategy::Rfsme];

/// Run parameters. Start from [`rfsme_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RfsmeConfig {
    pub qp: i32,
    /// Integer search range in pixels; 0 picks 16 up to 176 wide, else 32.
    pub range: i32,
    pub refs: u32,
    pub th1: u32,
    pub th2: u32,
    pub rf_num: u32,
    pub rf_den: u32,
    pub rd_num: u32,
    pub rd_den: u32,
    /// Non-zero: also build the step-2 distance histogram.
    pub audit: u8,
    /// Worker threads; 0 uses every core.
    pub jobs: u32,
}

/// One strategy's totals over a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RfsmeStrategyStats {
    /// An [`RfsmeStrategy`] value.
    pub strategy: i32,
    pub partitions: u64,
    pub points: u64,
    pub sp_per_pt: f64,
    pub refinements: u64,
    pub total_cost: u64,
    /// Prediction PSNR in dB; +infinity for an exact prediction.
    pub mc_psnr_db: f64,
    /// Step-2 distance counts for d = 0, 1, 2 and > 2 (audit runs only).
    pub histogram: [u64; 4],
}

/// Opaque sequence of luma frames.
pub struct RfsmeSequence {
    frames: Vec<LumaPlane>,
}

/// Opaque run result.
pub struct RfsmeReport {
    report: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

fn status_of(e: &Error) -> RfsmeStatus {
    match e {
        Error::Io { .. } => RfsmeStatus::Io,
        Error::Truncated { .. } => RfsmeStatus::Truncated,
        Error::UnalignedDimensions { .. } => RfsmeStatus::Unaligned,
        Error::UnsupportedColorspace(_) => RfsmeStatus::UnsupportedColorspace,
        Error::BadY4m(_) => RfsmeStatus::BadFormat,
        Error::DimensionMismatch(_) => RfsmeStatus::DimensionMismatch,
        Error::InvalidConfig(_) => RfsmeStatus::InvalidArgument,
    }
}

struct Failure(RfsmeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RfsmeStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(RfsmeStatus::NullArgument, format!("{what} is NULL"))
}

/// Runs `f`, records any failure for [`rfsme_last_error_message`] and turns
/// panics into [`RfsmeStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RfsmeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RfsmeStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            RfsmeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn publish_sequence(frames: Vec<LumaPlane>, out: &mut *mut RfsmeSequence) {
    *out = Box::into_raw(Box::new(RfsmeSequence { frames }));
}

/// Loads a raw I420 or Y4M file.
///
/// `width`/`height` may be 0 for Y4M input (taken from the header).
/// `frames` = 0 loads every whole frame in the file; at least two are
/// needed.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsme_sequence_load(
    path: *const c_char,
    width: u32,
    height: u32,
    frames: u32,
    out: *mut *mut RfsmeSequence,
) -> RfsmeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = PathBuf::from(str_arg(path, "path")?);
        let (w, h) = (width as usize, height as usize);
        let frame_count = match frames {
            0 if is_y4m(&path)? => probe_frame_count(&path, 0, 0)?,
            0 => probe_frame_count(&path, w, h)?,
            n => n as usize,
        };
        let seq = load_sequence(&SequenceConfig {
            source: Source::File(path),
            frame_count,
            width: w,
            height: h,
            seed: 0,
        })?;
        publish_sequence(seq, out);
        Ok(())
    })
}

/// Generates a synthetic sequence: `kind` is `static`, `global-shift`,
/// `global-shift:DX,DY` or `textured-drift`.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsme_sequence_synth(
    kind: *const c_char,
    width: u32,
    height: u32,
    frames: u32,
    seed: u64,
    out: *mut *mut RfsmeSequence,
) -> RfsmeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let kind: SynthKind = str_arg(kind, "kind")?.parse()?;
        let cfg = SequenceConfig::synthetic(kind, width as usize, height as usize, frames as usize, seed);
        publish_sequence(load_sequence(&cfg)?, out);
        Ok(())
    })
}

/// Wraps caller-owned luma samples (`frames` planes of `width * height`
/// bytes, back to back). The data is copied.
///
/// # Safety
/// `samples` must point to `width * height * frames` readable bytes and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsme_sequence_from_luma(
    samples: *const u8,
    width: u32,
    height: u32,
    frames: u32,
    out: *mut *mut RfsmeSequence,
) -> RfsmeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if samples.is_null() {
            return Err(null("samples"));
        }
        let (w, h) = (width as usize, height as usize);
        let plane = w
            .checked_mul(h)
            .filter(|&p| p > 0)
            .ok_or_else(|| invalid("empty frame size"))?;
        let all = std::slice::from_raw_parts(samples, plane * frames as usize);
        let seq = all
            .chunks_exact(plane)
            .map(|c| LumaPlane::new(w, h, c.to_vec()))
            .collect::<rfsme::Result<Vec<_>>>()?;
        publish_sequence(seq, out);
        Ok(())
    })
}

/// Number of frames held; 0 for NULL.
///
/// # Safety
/// `seq` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfsme_sequence_frame_count(seq: *const RfsmeSequence) -> u32 {
    seq.as_ref().map_or(0, |s| s.frames.len() as u32)
}

/// # Safety
/// `seq` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfsme_sequence_free(seq: *mut RfsmeSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Defaults: QP 28, automatic range, one reference, thresholds 10/20,
/// ratios 5/4 and 3/2, no audit, all cores.
#[no_mangle]
pub extern "C" fn rfsme_config_default() -> RfsmeConfig {
    let p = GateParams::default();
    let r = RunConfig::default();
    RfsmeConfig {
        qp: r.qp,
        range: 0,
        refs: r.refs as u32,
        th1: p.th1,
        th2: p.th2,
        rf_num: p.r_f.num as u32,
        rf_den: p.r_f.den as u32,
        rd_num: p.r_d.num as u32,
        rd_den: p.r_d.den as u32,
        audit: 0,
        jobs: 0,
    }
}

fn ratio(num: u32, den: u32, what: &str) -> Result<Ratio, Failure> {
    if num == 0 || den == 0 {
        return Err(invalid(format!("{what} must be a positive ratio, got {num}/{den}")));
    }
    Ok(Ratio::new(num as u64, den as u64))
}

fn run_config(c: &RfsmeConfig) -> Result<RunConfig, Failure> {
    if c.range < 0 {
        return Err(invalid(format!("negative search range {}", c.range)));
    }
    Ok(RunConfig {
        qp: c.qp,
        range: (c.range > 0).then_some(c.range),
        refs: c.refs as usize,
        params: GateParams {
            th1: c.th1,
            th2: c.th2,
            r_f: ratio(c.rf_num, c.rf_den, "rf")?,
            r_d: ratio(c.rd_num, c.rd_den, "rd")?,
        },
        audit: c.audit != 0,
        jobs: c.jobs as usize,
    })
}

/// Runs the listed strategies (values of [`RfsmeStrategy`]) over `seq`.
/// `config` may be NULL for the defaults.
///
/// # Safety
/// `seq` must be a live handle, `strategies` must point to `count` values,
/// `config` must be NULL or valid, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsme_run(
    seq: *const RfsmeSequence,
    config: *const RfsmeConfig,
    strategies: *const i32,
    count: usize,
    out: *mut *mut RfsmeReport,
) -> RfsmeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let seq = seq.as_ref().ok_or_else(|| null("seq"))?;
        if strategies.is_null() {
            return Err(null("strategies"));
        }
        let ids = std::slice::from_raw_parts(strategies, count);
        let list = ids
            .iter()
            .map(|&id| {
                usize::try_from(id)
                    .ok()
                    .and_then(|i| STRATEGIES.get(i).copied())
                    .ok_or_else(|| invalid(format!("unknown strategy id {id}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = match config.as_ref() {
            Some(c) => run_config(c)?,
            None => run_config(&rfsme_config_default())?,
        };
        let report = run_benchmark(&seq.frames, &list, &cfg)?;
        *out = Box::into_raw(Box::new(RfsmeReport { report }));
        Ok(())
    })
}

/// Number of strategy rows; 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfsme_report_len(report: *const RfsmeReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.rows.len())
}

/// Copies row `index` (in request order) into `out`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsme_report_row(
    report: *const RfsmeReport,
    index: usize,
    out: *mut RfsmeStrategyStats,
) -> RfsmeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let row = report
            .report
            .rows
            .get(index)
            .ok_or_else(|| invalid(format!("row {index} out of range")))?;
        let s = &row.stats;
        *out = RfsmeStrategyStats {
            strategy: STRATEGIES.iter().position(|&x| x == row.strategy).unwrap_or(0) as i32,
            partitions: s.total_partitions,
            points: s.total_points,
            sp_per_pt: s.sp_per_pt(),
            refinements: s.refinements,
            total_cost: s.total_cost,
            mc_psnr_db: s.mc_pred_psnr(),
            histogram: s.histogram.counts,
        };
        Ok(())
    })
}

fn copy_text(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Failure> {
    let bytes = text.as_bytes();
    // SAFETY: checked for NULL; the caller guarantees validity otherwise
    if let Some(n) = unsafe { needed.as_mut() } {
        *n = bytes.len() + 1;
    }
    if buf.is_null() || cap < bytes.len() + 1 {
        return Err(Failure(
            RfsmeStatus::BufferTooSmall,
            format!("need {} bytes, buffer holds {cap}", bytes.len() + 1),
        ));
    }
    // SAFETY: `buf` has room for the text and its terminator
    unsafe {
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    Ok(())
}

/// Writes the CSV report, NUL-terminated, into `buf`. `needed` (may be NULL)
/// receives the required size including the terminator; call with a NULL
/// `buf` to query it.
///
/// # Safety
/// `report` must be a live handle, `buf` NULL or `cap` writable bytes, and
/// `needed` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn rfsme_report_csv(
    report: *const RfsmeReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> RfsmeStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        copy_text(&report.report.to_csv(), buf, cap, needed)
    })
}

/// Same as [`rfsme_report_csv`] for the markdown table.
///
/// # Safety
/// As for [`rfsme_report_csv`].
#[no_mangle]
pub unsafe extern "C" fn rfsme_report_markdown(
    report: *const RfsmeReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> RfsmeStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        copy_text(&report.report.to_markdown(), buf, cap, needed)
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfsme_report_free(report: *mut RfsmeReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Exp-Golomb bits to code `mv` against `pred`, both in quarter-pel.
#[no_mangle]
pub extern "C" fn rfsme_mv_bits(mv_x: i32, mv_y: i32, pred_x: i32, pred_y: i32) -> u32 {
    mv_bits(MotionVector::new(mv_x, mv_y), MotionVector::new(pred_x, pred_y))
}

/// Motion Lagrange multiplier for `qp`.
#[no_mangle]
pub extern "C" fn rfsme_lambda_motion(qp: i32) -> f64 {
    LambdaModel::from_qp(qp).lambda_motion()
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rfsme_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, e.g. "0.1.0".
#[no_mangle]
pub extern "C" fn rfsme_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
