//! C ABI for the fastckpt engine: opaque stream handles, status codes, and
//! flat wrappers around the analytical models, the sharded save/load path,
//! and the schedule simulator.
//!
//! Conventions: every fallible call returns [`FcStatus`]; `FC_STATUS_OK` is
//! zero. On failure, [`fc_last_error`] returns a thread-local message that
//! stays valid until the next fastckpt call on the same thread. Pointers
//! are never retained past the call; `NULL` inputs yield
//! `FC_STATUS_INVALID_ARGUMENT`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use fastckpt::checkpoint::save_sharded;
use fastckpt::ckpt_format::{load_parallel, serialize, DType, TensorRecord};
use fastckpt::error::Error;
use fastckpt::partition_planner::{plan, Topology, WriterStrategy};
use fastckpt::perf_model::{
    estimate_checkpoint_bytes, recovery_overhead, required_bandwidth, IterationTiming,
    RecoverySpec,
};
use fastckpt::pipeline_sim::{simulate, CkptTask, SimMode, TrainConfig};
use fastckpt::write_engine::{StagingBuffer, WriteMode};

/// Result of every fallible fastckpt call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcStatus {
    Ok = 0,
    /// Bad arguments or configuration.
    InvalidArgument = 1,
    /// Storage or filesystem failure.
    IoError = 2,
    /// Checksum mismatch or malformed checkpoint data.
    Corrupt = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> FcStatus {
    match err.exit_code() {
        3 => FcStatus::IoError,
        4 => FcStatus::Corrupt,
        _ => FcStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> FcStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn invalid(msg: &str) -> FcStatus {
    set_error(msg);
    FcStatus::InvalidArgument
}

/// Message for the most recent failure on this thread. Never `NULL`;
/// empty string when no error occurred yet.
#[no_mangle]
pub extern "C" fn fc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

unsafe fn cstr<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, FcStatus> {
    if ptr.is_null() {
        return Err(invalid(&format!("{what} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

/// Checkpoint state bytes for a parameter count (14 bytes/param covers
/// mixed-precision Adam training).
///
/// # Safety
/// `out_bytes` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_estimate_checkpoint_bytes(
    param_count: u64,
    bytes_per_param: u64,
    out_bytes: *mut u64,
) -> FcStatus {
    if out_bytes.is_null() {
        return invalid("out_bytes is NULL");
    }
    match estimate_checkpoint_bytes(param_count, bytes_per_param) {
        Ok(v) => {
            unsafe { *out_bytes = v };
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Write bandwidth (bytes/second) needed to hide a checkpoint behind one
/// iteration's forward+backward compute.
///
/// # Safety
/// `out_bps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_required_bandwidth(
    checkpoint_bytes: u64,
    t_forward: f64,
    t_backward: f64,
    gas: u32,
    out_bps: *mut f64,
) -> FcStatus {
    if out_bps.is_null() {
        return invalid("out_bps is NULL");
    }
    let result = IterationTiming::new(t_forward, t_backward, 0.0, gas)
        .and_then(|timing| required_bandwidth(checkpoint_bytes, &timing));
    match result {
        Ok(v) => {
            unsafe { *out_bps = v };
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Expected GPU-seconds lost to one interruption when checkpointing every
/// `interval_n` iterations on `gpu_count_m` GPUs.
///
/// # Safety
/// `out_gpu_seconds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_recovery_overhead(
    interval_n: u64,
    gpu_count_m: u64,
    iter_time_t: f64,
    out_gpu_seconds: *mut f64,
) -> FcStatus {
    if out_gpu_seconds.is_null() {
        return invalid("out_gpu_seconds is NULL");
    }
    match RecoverySpec::new(interval_n, gpu_count_m, iter_time_t) {
        Ok(spec) => {
            unsafe { *out_gpu_seconds = recovery_overhead(&spec) };
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Opaque checkpoint content: tensor records to be saved, or records
/// produced by a load.
pub struct FcStream {
    records: Vec<TensorRecord>,
}

/// New empty stream handle. Free with [`fc_stream_free`].
#[no_mangle]
pub extern "C" fn fc_stream_new() -> *mut FcStream {
    Box::into_raw(Box::new(FcStream {
        records: Vec::new(),
    }))
}

/// Release a stream handle. `NULL` is a no-op.
///
/// # Safety
/// `stream` must have come from [`fc_stream_new`] or [`fc_load`] and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_free(stream: *mut FcStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Append one tensor record. `dtype` codes: f16=0, f32=1, f64=2, i8=3,
/// i32=4, i64=5. `payload_len` must equal the element count times the
/// element size.
///
/// # Safety
/// `dims` must point to `ndim` u64 values and `payload` to `payload_len`
/// bytes (either may be `NULL` when its length is zero).
#[no_mangle]
pub unsafe extern "C" fn fc_stream_add_tensor(
    stream: *mut FcStream,
    name: *const c_char,
    dtype: u8,
    dims: *const u64,
    ndim: usize,
    payload: *const u8,
    payload_len: usize,
) -> FcStatus {
    let Some(stream) = stream.as_mut() else {
        return invalid("stream is NULL");
    };
    let name = match cstr(name, "tensor name") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let dtype = match DType::from_code(dtype) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    if ndim > 0 && dims.is_null() {
        return invalid("dims is NULL with ndim > 0");
    }
    if payload_len > 0 && payload.is_null() {
        return invalid("payload is NULL with payload_len > 0");
    }
    let shape = if ndim == 0 {
        Vec::new()
    } else {
        std::slice::from_raw_parts(dims, ndim).to_vec()
    };
    let payload = if payload_len == 0 {
        Vec::new()
    } else {
        std::slice::from_raw_parts(payload, payload_len).to_vec()
    };
    match TensorRecord::new(name, dtype, shape, payload) {
        Ok(rec) => {
            stream.records.push(rec);
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of tensor records in the stream.
///
/// # Safety
/// `stream` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_record_count(stream: *const FcStream) -> usize {
    stream.as_ref().map_or(0, |s| s.records.len())
}

/// Size in bytes of the serialized container for this stream.
///
/// # Safety
/// `stream` must be a live handle; `out_bytes` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_serialized_bytes(
    stream: *const FcStream,
    out_bytes: *mut u64,
) -> FcStatus {
    let Some(stream) = stream.as_ref() else {
        return invalid("stream is NULL");
    };
    if out_bytes.is_null() {
        return invalid("out_bytes is NULL");
    }
    match serialize(&stream.records) {
        Ok(s) => {
            *out_bytes = s.len();
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Shape metadata of one record.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcTensorInfo {
    pub dtype: u8,
    pub ndim: u8,
    /// Bytes of the tensor name (UTF-8, no terminator).
    pub name_len: u64,
    pub payload_len: u64,
}

/// Metadata of record `index`.
///
/// # Safety
/// `stream` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_record_info(
    stream: *const FcStream,
    index: usize,
    out: *mut FcTensorInfo,
) -> FcStatus {
    let Some(stream) = stream.as_ref() else {
        return invalid("stream is NULL");
    };
    if out.is_null() {
        return invalid("out is NULL");
    }
    let Some(rec) = stream.records.get(index) else {
        return invalid(&format!("record index {index} out of range"));
    };
    *out = FcTensorInfo {
        dtype: rec.dtype as u8,
        ndim: rec.shape.len() as u8,
        name_len: rec.name.len() as u64,
        payload_len: rec.payload.len() as u64,
    };
    FcStatus::Ok
}

unsafe fn copy_out(src: &[u8], buf: *mut u8, cap: usize, what: &str) -> FcStatus {
    if src.len() > cap {
        return invalid(&format!("{what} needs {} bytes, buffer has {cap}", src.len()));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return invalid(&format!("{what} buffer is NULL"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    FcStatus::Ok
}

/// Copy the record's name (not NUL-terminated) into `buf`.
///
/// # Safety
/// `buf` must have room for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_record_name(
    stream: *const FcStream,
    index: usize,
    buf: *mut u8,
    cap: usize,
) -> FcStatus {
    let Some(stream) = stream.as_ref() else {
        return invalid("stream is NULL");
    };
    let Some(rec) = stream.records.get(index) else {
        return invalid(&format!("record index {index} out of range"));
    };
    copy_out(rec.name.as_bytes(), buf, cap, "name")
}

/// Copy the record's dims into `buf` (`cap` counts u64 slots).
///
/// # Safety
/// `buf` must have room for `cap` u64 values.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_record_dims(
    stream: *const FcStream,
    index: usize,
    buf: *mut u64,
    cap: usize,
) -> FcStatus {
    let Some(stream) = stream.as_ref() else {
        return invalid("stream is NULL");
    };
    let Some(rec) = stream.records.get(index) else {
        return invalid(&format!("record index {index} out of range"));
    };
    if rec.shape.len() > cap {
        return invalid(&format!(
            "dims needs {} slots, buffer has {cap}",
            rec.shape.len()
        ));
    }
    if !rec.shape.is_empty() {
        if buf.is_null() {
            return invalid("dims buffer is NULL");
        }
        ptr::copy_nonoverlapping(rec.shape.as_ptr(), buf, rec.shape.len());
    }
    FcStatus::Ok
}

/// Copy the record's payload bytes into `buf`.
///
/// # Safety
/// `buf` must have room for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn fc_stream_record_payload(
    stream: *const FcStream,
    index: usize,
    buf: *mut u8,
    cap: usize,
) -> FcStatus {
    let Some(stream) = stream.as_ref() else {
        return invalid("stream is NULL");
    };
    let Some(rec) = stream.records.get(index) else {
        return invalid(&format!("record index {index} out of range"));
    };
    copy_out(&rec.payload, buf, cap, "payload")
}

/// Serialize the stream and persist it as `writer_count` balanced shards
/// plus a JSON manifest at `<stem>.manifest.json`. `double_buffer`
/// non-zero selects the overlapped two-buffer write pipeline.
///
/// # Safety
/// `stem` must be a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn fc_save(
    stream: *const FcStream,
    stem: *const c_char,
    writer_count: u32,
    double_buffer: u8,
    buffer_bytes: u64,
    alignment: u64,
    lock_memory: u8,
) -> FcStatus {
    let Some(stream) = stream.as_ref() else {
        return invalid("stream is NULL");
    };
    let stem = match cstr(stem, "stem") {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    if writer_count < 1 {
        return invalid("writer_count must be >= 1");
    }
    let mode = if double_buffer != 0 {
        WriteMode::DoubleBuffer
    } else {
        WriteMode::SingleBuffer
    };
    let result = (|| -> fastckpt::Result<()> {
        let staging =
            StagingBuffer::new(buffer_bytes, alignment)?.with_locking(lock_memory != 0);
        let serialized = serialize(&stream.records)?;
        let topo = Topology::new(1, 1, writer_count)?;
        let ranks: Vec<u32> = (0..writer_count).collect();
        let partition = plan(serialized.len(), &ranks, WriterStrategy::Replica, &topo)?;
        save_sharded(&serialized, &partition, &stem, mode, &staging)?;
        Ok(())
    })();
    match result {
        Ok(()) => FcStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Load a sharded checkpoint; returns a stream handle of its records, or
/// `NULL` (see [`fc_last_error`]) on failure.
///
/// # Safety
/// `manifest_path` must be a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn fc_load(
    manifest_path: *const c_char,
    reader_count: u32,
) -> *mut FcStream {
    let path = match cstr(manifest_path, "manifest_path") {
        Ok(s) => PathBuf::from(s),
        Err(_) => return ptr::null_mut(),
    };
    match load_parallel(Path::new(&path), reader_count.max(1) as usize) {
        Ok(records) => Box::into_raw(Box::new(FcStream { records })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Steady-state metrics of one simulated schedule.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FcSimSummary {
    pub steady_state_iter_time_s: f64,
    pub slowdown: f64,
    pub stall_seconds: f64,
    pub total_wall_s: f64,
}

/// Evaluate the checkpoint schedule analytically. `mode`: 0 no-checkpoint,
/// 1 sequential, 2 pipelined.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_simulate(
    gas: u32,
    t_forward: f64,
    t_backward: f64,
    t_optimizer: f64,
    iterations: u32,
    mode: u8,
    checkpoint_bytes: u64,
    bandwidth_bps: f64,
    out: *mut FcSimSummary,
) -> FcStatus {
    if out.is_null() {
        return invalid("out is NULL");
    }
    let mode = match mode {
        0 => SimMode::NoCheckpoint,
        1 => SimMode::Sequential,
        2 => SimMode::Pipelined,
        other => return invalid(&format!("unknown mode {other}")),
    };
    let result = TrainConfig::new(gas, t_forward, t_backward, t_optimizer, iterations, mode)
        .and_then(|train| {
            simulate(&train, &CkptTask::synthetic(checkpoint_bytes, bandwidth_bps))
        });
    match result {
        Ok(r) => {
            unsafe {
                *out = FcSimSummary {
                    steady_state_iter_time_s: r.steady_state_iter_time,
                    slowdown: r.slowdown,
                    stall_seconds: r.stall_seconds,
                    total_wall_s: r.total_wall,
                };
            }
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Build a byte-range partition plan and return it as a JSON string
/// (free with [`fc_string_free`]). `strategy` is "replica", "socket", or
/// "fixed:K"; ranks 0..dp form the replica group.
///
/// # Safety
/// `strategy` must be NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fc_plan_json(
    total_bytes: u64,
    node_count: u32,
    sockets_per_node: u32,
    ranks_per_node: u32,
    dp: u32,
    strategy: *const c_char,
    out_json: *mut *mut c_char,
) -> FcStatus {
    if out_json.is_null() {
        return invalid("out_json is NULL");
    }
    let strategy = match cstr(strategy, "strategy") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let result = (|| -> fastckpt::Result<String> {
        let strategy: WriterStrategy = strategy.parse()?;
        let topo = Topology::new(node_count, sockets_per_node, ranks_per_node)?;
        let ranks: Vec<u32> = (0..dp).collect();
        let p = plan(total_bytes, &ranks, strategy, &topo)?;
        serde_json_string(&p)
    })();
    match result {
        Ok(json) => {
            let c = CString::new(json).unwrap_or_default();
            *out_json = c.into_raw();
            FcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

fn serde_json_string<T: serde::Serialize>(value: &T) -> fastckpt::Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Config(format!("encode: {e}")))
}

/// Free a string returned by this library. `NULL` is a no-op.
///
/// # Safety
/// `s` must have been returned by a fastckpt function.
#[no_mangle]
pub unsafe extern "C" fn fc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
