//! C ABI for the hardball library.
//!
//! Systems and traces are opaque handles. Create them with
//! `hb_system_new`, `hb_system_from_json` or `hb_simulate`, and release them
//! with the matching `*_free` function. Every fallible function returns an
//! [`HbStatus`]. After a failure, `hb_last_error_message` describes it on the
//! calling thread. Status values 0 to 6 match the command-line exit codes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hardball::analysis::{check_conditions_slice, cross_validate};
use hardball::cli::SystemSpec;
use hardball::game::{default_max_moves, BuiltinStrategy, StrategyKind};
use hardball::scalar::rational_from_f64;
use hardball::{
    play_negative_game, simulate, CollisionTrace, Exact, GamePosition, MassProfile, Scalar, SimConfig,
    SimultaneityPolicy, SystemState, Termination, Tolerance, WeightMatrix,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    InvalidInput = 1,
    MultipleCollision = 2,
    EventCap = 3,
    ConditionFailed = 4,
    AuditFailed = 5,
    Critical = 6,
    NullPointer = 10,
    BufferTooSmall = 11,
    OutOfRange = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbPolicy {
    ErrorOnAdjacent = 0,
    Forbidden = 1,
    ResolveLeftFirst = 2,
    ResolveRightFirst = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbTermination {
    Sorted = 0,
    EventCapReached = 1,
    MultipleCollision = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStrategy {
    Leftmost = 0,
    Rightmost = 1,
    Random = 2,
    MostNegative = 3,
}

/// Simulation settings. `max_events = 0` selects the default cap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbSimOptions {
    pub exact: bool,
    pub tol: f64,
    pub max_events: u64,
    pub policy: HbPolicy,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HbConditions {
    pub geometric_ok: bool,
    pub arithmetic_ok: bool,
    pub weights_ok: bool,
}

/// Masses, positions and velocities held as exact rationals.
pub struct HbSystem {
    masses: Vec<Exact>,
    positions: Vec<Exact>,
    velocities: Vec<Exact>,
}

enum TraceData {
    Exact(MassProfile<Exact>, CollisionTrace<Exact>),
    Float(MassProfile<f64>, CollisionTrace<f64>),
}

pub struct HbTrace {
    data: TraceData,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HbStatus, String);

fn fail<T>(status: HbStatus, message: impl Display) -> Result<T, Failure> {
    Err(Failure(status, message.to_string()))
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<HbStatus, Failure>) -> HbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error (panic caught at the C boundary)".into());
            HbStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    match p.as_ref() {
        Some(r) => Ok(r),
        None => fail(HbStatus::NullPointer, format!("`{name}` is NULL")),
    }
}

unsafe fn input_slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        fail(HbStatus::NullPointer, format!("`{name}` is NULL"))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn write_out<T>(p: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return fail(HbStatus::NullPointer, format!("`{name}` is NULL"));
    }
    p.write(value);
    Ok(())
}

/// Copies `values` into `buf` when it fits; always reports the full length.
unsafe fn write_buffer<T: Copy>(values: &[T], buf: *mut T, cap: usize, out_len: *mut usize) -> Result<HbStatus, Failure> {
    write_out(out_len, values.len(), "out_len")?;
    if values.len() > cap {
        return fail(
            HbStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", values.len()),
        );
    }
    if !values.is_empty() {
        if buf.is_null() {
            return fail(HbStatus::NullPointer, "`buf` is NULL");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    Ok(HbStatus::Ok)
}

fn tolerance(tol: f64) -> Result<Tolerance, Failure> {
    Tolerance::new(tol).or_else(|e| fail(HbStatus::InvalidInput, e))
}

fn exact_values(values: &[f64], field: &str) -> Result<Vec<Exact>, Failure> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| rational_from_f64(v).or_else(|e| fail(HbStatus::InvalidInput, format!("{field}[{i}]: {e}"))))
        .collect()
}

fn validated(masses: Vec<Exact>, positions: Vec<Exact>, velocities: Vec<Exact>) -> Result<Box<HbSystem>, Failure> {
    let profile = MassProfile::new(masses.clone()).or_else(|e| fail(HbStatus::InvalidInput, e))?;
    SystemState::new(positions.clone(), velocities.clone(), &profile).or_else(|e| fail(HbStatus::InvalidInput, e))?;
    Ok(Box::new(HbSystem {
        masses,
        positions,
        velocities,
    }))
}

/// Creates a system of `balls` balls from three arrays of that length.
///
/// # Safety
/// Each array must hold `balls` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hb_system_new(
    balls: usize,
    masses: *const f64,
    positions: *const f64,
    velocities: *const f64,
    out: *mut *mut HbSystem,
) -> HbStatus {
    guard(|| {
        let m = exact_values(input_slice(masses, balls, "masses")?, "masses")?;
        let x = exact_values(input_slice(positions, balls, "positions")?, "positions")?;
        let v = exact_values(input_slice(velocities, balls, "velocities")?, "velocities")?;
        let system = validated(m, x, v)?;
        write_out(out, Box::into_raw(system), "out")?;
        Ok(HbStatus::Ok)
    })
}

/// Creates a system from a JSON document with `masses`, `positions` and
/// `velocities`, each entry a number or a string such as `"1/100"`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hb_system_from_json(json: *const c_char, out: *mut *mut HbSystem) -> HbStatus {
    guard(|| {
        if json.is_null() {
            return fail(HbStatus::NullPointer, "`json` is NULL");
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .or_else(|e| fail(HbStatus::InvalidInput, e))?;
        let spec = SystemSpec::from_json(text).or_else(|e| fail(HbStatus::InvalidInput, e))?;
        let take = |v: Option<Vec<Exact>>, field: &str| match v {
            Some(v) => Ok(v),
            None => fail(HbStatus::InvalidInput, format!("missing field `{field}`")),
        };
        let system = validated(
            take(spec.masses, "masses")?,
            take(spec.positions, "positions")?,
            take(spec.velocities, "velocities")?,
        )?;
        write_out(out, Box::into_raw(system), "out")?;
        Ok(HbStatus::Ok)
    })
}

/// Number of balls, or 0 for NULL.
///
/// # Safety
/// `system` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hb_system_ball_count(system: *const HbSystem) -> usize {
    system.as_ref().map_or(0, |s| s.masses.len())
}

/// # Safety
/// `system` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hb_system_free(system: *mut HbSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Exact arithmetic, default tolerance and cap, abort on adjacent simultaneous contacts.
#[no_mangle]
pub extern "C" fn hb_sim_options_default() -> HbSimOptions {
    HbSimOptions {
        exact: true,
        tol: Tolerance::DEFAULT_TAU,
        max_events: 0,
        policy: HbPolicy::ErrorOnAdjacent,
    }
}

fn run<S: Scalar>(system: &HbSystem, config: &SimConfig) -> Result<(MassProfile<S>, CollisionTrace<S>), Failure> {
    let conv = |v: &[Exact]| v.iter().map(S::from_rational).collect::<Vec<S>>();
    let masses = MassProfile::new(conv(&system.masses)).or_else(|e| fail(HbStatus::InvalidInput, e))?;
    let state = SystemState::new(conv(&system.positions), conv(&system.velocities), &masses)
        .or_else(|e| fail(HbStatus::InvalidInput, e))?;
    let trace = simulate(&state, &masses, config).or_else(|e| fail(HbStatus::InvalidInput, e))?;
    Ok((masses, trace))
}

fn termination_status<S>(t: &Termination<S>) -> HbStatus {
    match t {
        Termination::Sorted => HbStatus::Ok,
        Termination::EventCapReached => HbStatus::EventCap,
        Termination::MultipleCollision { .. } => HbStatus::MultipleCollision,
    }
}

/// Simulates `system`. A trace is produced for `HB_STATUS_OK`,
/// `HB_STATUS_MULTIPLE_COLLISION` and `HB_STATUS_EVENT_CAP`; the latter two
/// report how the run stopped. `options` may be NULL for defaults.
///
/// # Safety
/// `system` must be a live handle, `options` NULL or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_simulate(
    system: *const HbSystem,
    options: *const HbSimOptions,
    out: *mut *mut HbTrace,
) -> HbStatus {
    guard(|| {
        let system = reference(system, "system")?;
        let options = options.as_ref().copied().unwrap_or_else(|| hb_sim_options_default());
        let policy = match options.policy {
            HbPolicy::ErrorOnAdjacent => SimultaneityPolicy::ErrorOnAdjacent,
            HbPolicy::Forbidden => SimultaneityPolicy::Forbidden,
            HbPolicy::ResolveLeftFirst => SimultaneityPolicy::ResolveLeftFirst,
            HbPolicy::ResolveRightFirst => SimultaneityPolicy::ResolveRightFirst,
        };
        let mut config = SimConfig::for_balls(system.masses.len()).with_policy(policy);
        if options.max_events > 0 {
            config = config.with_max_events(usize::try_from(options.max_events).unwrap_or(usize::MAX));
        }
        let data = if options.exact {
            let (m, t) = run::<Exact>(system, &config)?;
            TraceData::Exact(m, t)
        } else {
            let (m, t) = run::<f64>(system, &config.with_tolerance(tolerance(options.tol)?))?;
            TraceData::Float(m, t)
        };
        let status = match &data {
            TraceData::Exact(_, t) => termination_status(&t.termination),
            TraceData::Float(_, t) => termination_status(&t.termination),
        };
        write_out(out, Box::into_raw(Box::new(HbTrace { data })), "out")?;
        Ok(status)
    })
}

struct TraceView {
    collisions: u64,
    termination: HbTermination,
    times: Vec<f64>,
    pairs: Vec<Vec<usize>>,
    final_velocities: Vec<f64>,
}

fn view<S: Scalar>(t: &CollisionTrace<S>) -> TraceView {
    TraceView {
        collisions: t.total_collisions(),
        termination: match t.termination {
            Termination::Sorted => HbTermination::Sorted,
            Termination::EventCapReached => HbTermination::EventCapReached,
            Termination::MultipleCollision { .. } => HbTermination::MultipleCollision,
        },
        times: t.events.iter().map(|e| e.time.to_f64()).collect(),
        pairs: t.events.iter().map(|e| e.pairs.clone()).collect(),
        final_velocities: t.final_state.velocities.iter().map(Scalar::to_f64).collect(),
    }
}

impl HbTrace {
    fn view(&self) -> TraceView {
        match &self.data {
            TraceData::Exact(_, t) => view(t),
            TraceData::Float(_, t) => view(t),
        }
    }
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_collision_count(trace: *const HbTrace, out: *mut u64) -> HbStatus {
    guard(|| {
        write_out(out, reference(trace, "trace")?.view().collisions, "out")?;
        Ok(HbStatus::Ok)
    })
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_event_count(trace: *const HbTrace, out: *mut usize) -> HbStatus {
    guard(|| {
        write_out(out, reference(trace, "trace")?.view().times.len(), "out")?;
        Ok(HbStatus::Ok)
    })
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_termination(trace: *const HbTrace, out: *mut HbTermination) -> HbStatus {
    guard(|| {
        write_out(out, reference(trace, "trace")?.view().termination, "out")?;
        Ok(HbStatus::Ok)
    })
}

/// Time of event `index` (0-based), rounded to double in exact mode.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_event_time(trace: *const HbTrace, index: usize, out: *mut f64) -> HbStatus {
    guard(|| {
        let view = reference(trace, "trace")?.view();
        match view.times.get(index) {
            Some(&t) => write_out(out, t, "out").map(|_| HbStatus::Ok),
            None => fail(HbStatus::OutOfRange, format!("event {index} of {}", view.times.len())),
        }
    })
}

/// Pair indices (1-based) of event `index`. `out_len` receives the count
/// even when `cap` is too small.
///
/// # Safety
/// `trace` must be a live handle, `buf` writable for `cap` values, `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_event_pairs(
    trace: *const HbTrace,
    index: usize,
    buf: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> HbStatus {
    guard(|| {
        let view = reference(trace, "trace")?.view();
        match view.pairs.get(index) {
            Some(pairs) => write_buffer(pairs, buf, cap, out_len),
            None => fail(HbStatus::OutOfRange, format!("event {index} of {}", view.pairs.len())),
        }
    })
}

/// # Safety
/// `trace` must be a live handle, `buf` writable for `cap` values, `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_final_velocities(
    trace: *const HbTrace,
    buf: *mut f64,
    cap: usize,
    out_len: *mut usize,
) -> HbStatus {
    guard(|| write_buffer(&reference(trace, "trace")?.view().final_velocities, buf, cap, out_len))
}

/// The event log as JSON lines. Release the string with `hb_string_free`.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_to_jsonl(trace: *const HbTrace, out: *mut *mut c_char) -> HbStatus {
    guard(|| {
        let text = match &reference(trace, "trace")?.data {
            TraceData::Exact(_, t) => t.to_jsonl(),
            TraceData::Float(_, t) => t.to_jsonl(),
        };
        let c = CString::new(text).expect("JSON has no NUL bytes");
        write_out(out, c.into_raw(), "out")?;
        Ok(HbStatus::Ok)
    })
}

/// Replays the trace as numbers-game firings and audits every event.
/// Writes the inversion-number sequence (start, then after each event).
/// Returns `HB_STATUS_AUDIT_FAILED` with the event index in the error message.
///
/// # Safety
/// `trace` must be a live handle, `buf` writable for `cap` values, `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_certify(
    trace: *const HbTrace,
    tol: f64,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> HbStatus {
    guard(|| {
        let tol = tolerance(tol)?;
        let audit = match &reference(trace, "trace")?.data {
            TraceData::Exact(m, t) => cross_validate(t, m, tol),
            TraceData::Float(m, t) => cross_validate(t, m, tol),
        };
        match audit {
            Ok(cv) => write_buffer(&cv.inversion_sequence, buf, cap, out_len),
            Err(e) => fail(HbStatus::AuditFailed, e),
        }
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hb_trace_free(trace: *mut HbTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Evaluates the mass conditions. Returns `HB_STATUS_CONDITION_FAILED` when
/// the geometric-mean condition fails (the report is still written).
///
/// # Safety
/// `masses` must hold `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn hb_check_conditions(
    masses: *const f64,
    len: usize,
    tol: f64,
    out: *mut HbConditions,
) -> HbStatus {
    guard(|| {
        let m = input_slice(masses, len, "masses")?;
        let report = check_conditions_slice(m, tolerance(tol)?).or_else(|e| fail(HbStatus::InvalidInput, e))?;
        write_out(
            out,
            HbConditions {
                geometric_ok: report.geometric_ok,
                arithmetic_ok: report.arithmetic_ok,
                weights_ok: report.weights_ok,
            },
            "out",
        )?;
        Ok(if report.geometric_ok {
            HbStatus::Ok
        } else {
            HbStatus::ConditionFailed
        })
    })
}

/// Plays a negative numbers game on a path with neighbour weights
/// `k_{i,i+1}` (`n - 1` values) from `start` (`n` values). `max_moves = 0`
/// selects the default. Returns `HB_STATUS_EVENT_CAP` if the play did not
/// terminate within `max_moves`.
///
/// # Safety
/// Arrays must be readable for their lengths; `out_moves` and `out_terminated` writable.
#[no_mangle]
pub unsafe extern "C" fn hb_game_play(
    n: usize,
    neighbor_weights: *const f64,
    start: *const f64,
    strategy: HbStrategy,
    seed: u64,
    max_moves: usize,
    tol: f64,
    out_moves: *mut usize,
    out_terminated: *mut bool,
) -> HbStatus {
    guard(|| {
        let tol = tolerance(tol)?;
        let k = input_slice(neighbor_weights, n.saturating_sub(1), "neighbor_weights")?;
        let p = input_slice(start, n, "start")?;
        let k = WeightMatrix::from_neighbors(n, k.to_vec()).or_else(|e| fail(HbStatus::InvalidInput, e))?;
        let p = GamePosition::new(p.to_vec()).or_else(|e| fail(HbStatus::InvalidInput, e))?;
        let kind = match strategy {
            HbStrategy::Leftmost => StrategyKind::Leftmost,
            HbStrategy::Rightmost => StrategyKind::Rightmost,
            HbStrategy::Random => StrategyKind::Random,
            HbStrategy::MostNegative => StrategyKind::MostNegative,
        };
        let cap = if max_moves == 0 { default_max_moves(&k, tol) } else { max_moves };
        let play = play_negative_game(&p, &k, &mut BuiltinStrategy::new(kind, seed), cap, tol)
            .or_else(|e| fail(HbStatus::InvalidInput, e))?;
        write_out(out_moves, play.len(), "out_moves")?;
        write_out(out_terminated, play.terminated, "out_terminated")?;
        Ok(if play.terminated { HbStatus::Ok } else { HbStatus::EventCap })
    })
}

/// Message for the last failure on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn hb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
