//! Staged, aligned writes of checkpoint bytes to storage.
//!
//! Bytes flow through page-locked, alignment-allocated staging buffers in
//! two transfers: a copy from process memory into staging (standing in for
//! the accelerator-to-host leg) and a positioned write from staging to the
//! destination file. The alignment-multiple prefix of the stream goes
//! through an `O_DIRECT` handle; the sub-alignment suffix goes through the
//! ordinary buffered path into the same file. `DoubleBuffer` mode overlaps
//! the two transfers with a second staging buffer; `SingleBuffer` serializes
//! them.
//!
//! Filesystems that reject `O_DIRECT` are handled by falling back to
//! buffered writes for the whole file, recorded in [`EngineStats::fallback`].

use std::alloc::{self, Layout};
use std::fs::{File, OpenOptions};
use std::io;
use std::os::unix::fs::{FileExt, OpenOptionsExt};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use crate::ckpt_format::{split_aligned, validate_alignment, SerializedStream, DEFAULT_ALIGNMENT};
use crate::error::{Error, Result};

/// Staging pipeline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteMode {
    /// One staging buffer: copy and device write alternate.
    SingleBuffer,
    /// Two staging buffers: copy of chunk i+1 overlaps the write of chunk i.
    DoubleBuffer,
}

impl WriteMode {
    pub fn staging_buffer_count(self) -> usize {
        match self {
            WriteMode::SingleBuffer => 1,
            WriteMode::DoubleBuffer => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WriteMode::SingleBuffer => "single",
            WriteMode::DoubleBuffer => "double",
        }
    }
}

impl FromStr for WriteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(WriteMode::SingleBuffer),
            "double" => Ok(WriteMode::DoubleBuffer),
            other => Err(Error::Config(format!(
                "unknown write mode {other:?} (single, double)"
            ))),
        }
    }
}

impl std::fmt::Display for WriteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape of one staging buffer: the IO-buffer capacity swept by the
/// micro-benchmarks, its alignment, and whether to page-lock it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StagingBuffer {
    pub capacity: u64,
    pub alignment: u64,
    pub lock_memory: bool,
}

impl StagingBuffer {
    pub fn new(capacity: u64, alignment: u64) -> Result<Self> {
        validate_alignment(alignment)?;
        if capacity < alignment || !capacity.is_multiple_of(alignment) {
            return Err(Error::Config(format!(
                "staging capacity {capacity} must be a multiple of alignment {alignment} and \
                 at least one alignment unit"
            )));
        }
        Ok(StagingBuffer {
            capacity,
            alignment,
            lock_memory: true,
        })
    }

    pub fn with_locking(mut self, lock: bool) -> Self {
        self.lock_memory = lock;
        self
    }
}

impl Default for StagingBuffer {
    fn default() -> Self {
        StagingBuffer {
            capacity: 8 << 20,
            alignment: DEFAULT_ALIGNMENT,
            lock_memory: true,
        }
    }
}

/// Heap allocation aligned for direct I/O, page-locked when possible.
struct AlignedBuf {
    ptr: *mut u8,
    layout: Layout,
    locked: bool,
}

// The buffer is exclusively owned wherever it travels.
unsafe impl Send for AlignedBuf {}

impl AlignedBuf {
    fn alloc(spec: &StagingBuffer) -> Result<Self> {
        let size = spec.capacity as usize;
        // Direct I/O wants the buffer aligned to the device block size;
        // a page covers every common case regardless of `spec.alignment`.
        let align = (spec.alignment as usize).max(4096);
        let layout = Layout::from_size_align(size, align)
            .map_err(|e| Error::Config(format!("bad staging layout: {e}")))?;
        let ptr = unsafe { alloc::alloc_zeroed(layout) };
        if ptr.is_null() {
            return Err(Error::Config(format!(
                "failed to allocate {size}-byte staging buffer"
            )));
        }
        let locked = spec.lock_memory
            && unsafe { libc::mlock(ptr as *const libc::c_void, size) } == 0;
        Ok(AlignedBuf { ptr, layout, locked })
    }

    fn as_mut_slice(&mut self) -> &mut [u8] {
        unsafe { std::slice::from_raw_parts_mut(self.ptr, self.layout.size()) }
    }

    fn as_slice(&self) -> &[u8] {
        unsafe { std::slice::from_raw_parts(self.ptr, self.layout.size()) }
    }
}

impl Drop for AlignedBuf {
    fn drop(&mut self) {
        unsafe {
            if self.locked {
                libc::munlock(self.ptr as *const libc::c_void, self.layout.size());
            }
            alloc::dealloc(self.ptr, self.layout);
        }
    }
}

/// FIFO byte queue drained in exact `flush_threshold` chunks.
///
/// Bytes of one tensor may span flushes and bytes of different tensors may
/// share one; the drain order always equals the append order.
#[derive(Debug)]
pub struct PendingQueue {
    buf: Vec<u8>,
    threshold: usize,
}

impl PendingQueue {
    /// `flush_threshold` must be a positive multiple of `alignment`.
    pub fn new(flush_threshold: u64, alignment: u64) -> Result<Self> {
        validate_alignment(alignment)?;
        if flush_threshold == 0 || !flush_threshold.is_multiple_of(alignment) {
            return Err(Error::Config(format!(
                "flush threshold {flush_threshold} must be a positive multiple of {alignment}"
            )));
        }
        Ok(PendingQueue {
            buf: Vec::new(),
            threshold: flush_threshold as usize,
        })
    }

    pub fn flush_threshold(&self) -> u64 {
        self.threshold as u64
    }

    /// Bytes queued and not yet flushed.
    pub fn queued_len(&self) -> u64 {
        self.buf.len() as u64
    }

    /// Queue `bytes`; return the flush chunks that became ready, each
    /// exactly `flush_threshold` bytes, in FIFO order.
    pub fn append(&mut self, bytes: &[u8]) -> Vec<Vec<u8>> {
        let thr = self.threshold;
        let mut out = Vec::new();
        let mut input = bytes;

        if !self.buf.is_empty() {
            let need = thr - self.buf.len();
            let take = need.min(input.len());
            self.buf.extend_from_slice(&input[..take]);
            input = &input[take..];
            if self.buf.len() == thr {
                out.push(std::mem::take(&mut self.buf));
            }
        }
        let whole = input.len() / thr;
        for i in 0..whole {
            out.push(input[i * thr..(i + 1) * thr].to_vec());
        }
        self.buf.extend_from_slice(&input[whole * thr..]);
        out
    }

    /// Remove and return the sub-threshold tail.
    pub fn drain_remainder(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

/// One flush issued to the destination file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlushRecord {
    pub offset: u64,
    pub len: u64,
    /// True when issued on the `O_DIRECT` handle.
    pub direct_path: bool,
}

/// Outcome of one engine run.
#[derive(Debug, Clone)]
pub struct EngineStats {
    pub bytes_written: u64,
    pub wall_seconds: f64,
    /// `bytes_written / wall_seconds`.
    pub throughput_bps: f64,
    pub direct_write_count: u64,
    pub buffered_write_count: u64,
    /// Direct I/O was unavailable and writes went through the page cache.
    pub fallback: bool,
    /// Peak number of chunks in flight (copied but not yet written).
    pub max_in_flight: u64,
    /// Every flush in issue order; offsets are strictly increasing.
    pub flushes: Vec<FlushRecord>,
}

fn direct_unsupported(e: &io::Error) -> bool {
    matches!(
        e.raw_os_error(),
        Some(libc::EINVAL) | Some(libc::ENOTSUP) | Some(libc::EPERM)
    )
}

/// Destination file with a direct handle that degrades to buffered I/O when
/// the filesystem refuses `O_DIRECT`.
struct DevFile {
    path: PathBuf,
    file: File,
    direct: bool,
    fallback: bool,
}

impl DevFile {
    fn create(path: &Path) -> Result<Self> {
        let direct_attempt = OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(true)
            .custom_flags(libc::O_DIRECT)
            .open(path);
        match direct_attempt {
            Ok(file) => Ok(DevFile {
                path: path.to_path_buf(),
                file,
                direct: true,
                fallback: false,
            }),
            Err(e) if direct_unsupported(&e) => {
                let file = OpenOptions::new()
                    .write(true)
                    .create(true)
                    .truncate(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                Ok(DevFile {
                    path: path.to_path_buf(),
                    file,
                    direct: false,
                    fallback: true,
                })
            }
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn reopen_buffered(&mut self) -> Result<()> {
        self.file = OpenOptions::new()
            .write(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        self.direct = false;
        self.fallback = true;
        Ok(())
    }

    fn write_all_at(&mut self, mut buf: &[u8], mut offset: u64) -> Result<()> {
        while !buf.is_empty() {
            match self.file.write_at(buf, offset) {
                Ok(0) => {
                    return Err(Error::WriteFailed {
                        path: self.path.clone(),
                        offset,
                        source: io::Error::new(io::ErrorKind::WriteZero, "wrote 0 bytes"),
                    })
                }
                Ok(n) => {
                    buf = &buf[n..];
                    offset += n as u64;
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) if self.direct && direct_unsupported(&e) => self.reopen_buffered()?,
                Err(e) => {
                    return Err(Error::WriteFailed {
                        path: self.path.clone(),
                        offset,
                        source: e,
                    })
                }
            }
        }
        Ok(())
    }

    fn sync(&self) -> Result<()> {
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}

struct WorkItem {
    buf: AlignedBuf,
    len: usize,
    offset: u64,
}

struct WriterOutcome {
    dev: DevFile,
    direct_write_count: u64,
    flushes: Vec<FlushRecord>,
    error: Option<Error>,
}

/// Incremental engine: append serialized bytes, flush aligned chunks
/// through staging, finish with the buffered suffix and a data sync.
pub struct CheckpointWriter {
    dest: PathBuf,
    staging: StagingBuffer,
    queue: PendingQueue,
    work_tx: Option<mpsc::SyncSender<WorkItem>>,
    free_rx: mpsc::Receiver<AlignedBuf>,
    writer: Option<thread::JoinHandle<WriterOutcome>>,
    next_offset: u64,
    total_appended: u64,
    unseen_seed_buffers: u64,
    in_flight: u64,
    max_in_flight: u64,
    started: Instant,
}

impl CheckpointWriter {
    pub fn create(dest: &Path, mode: WriteMode, staging: &StagingBuffer) -> Result<Self> {
        // Re-validate so hand-built configs fail here rather than at flush.
        let staging = StagingBuffer::new(staging.capacity, staging.alignment)?
            .with_locking(staging.lock_memory);
        let started = Instant::now();
        let dev = DevFile::create(dest)?;

        let buffer_count = mode.staging_buffer_count();
        let (work_tx, work_rx) = mpsc::sync_channel::<WorkItem>(buffer_count);
        let (free_tx, free_rx) = mpsc::channel::<AlignedBuf>();
        for _ in 0..buffer_count {
            free_tx.send(AlignedBuf::alloc(&staging)?).unwrap();
        }

        let writer = thread::Builder::new()
            .name("fastckpt-writer".into())
            .spawn(move || {
                let mut dev = dev;
                let mut outcome_error: Option<Error> = None;
                let mut direct_write_count = 0u64;
                let mut flushes = Vec::new();
                while let Ok(item) = work_rx.recv() {
                    if outcome_error.is_none() {
                        let was_direct = dev.direct;
                        match dev.write_all_at(&item.buf.as_slice()[..item.len], item.offset) {
                            Ok(()) => {
                                let direct_path = was_direct && dev.direct;
                                if direct_path {
                                    direct_write_count += 1;
                                }
                                flushes.push(FlushRecord {
                                    offset: item.offset,
                                    len: item.len as u64,
                                    direct_path,
                                });
                            }
                            Err(e) => outcome_error = Some(e),
                        }
                    }
                    // Return the buffer even after an error so the producer
                    // never blocks; remaining chunks are discarded.
                    let _ = free_tx.send(item.buf);
                }
                WriterOutcome {
                    dev,
                    direct_write_count,
                    flushes,
                    error: outcome_error,
                }
            })
            .map_err(|e| Error::io(dest, e))?;

        Ok(CheckpointWriter {
            dest: dest.to_path_buf(),
            queue: PendingQueue::new(staging.capacity, staging.alignment)?,
            staging,
            work_tx: Some(work_tx),
            free_rx,
            writer: Some(writer),
            next_offset: 0,
            total_appended: 0,
            unseen_seed_buffers: buffer_count as u64,
            in_flight: 0,
            max_in_flight: 0,
            started,
        })
    }

    /// Queue bytes for persistence, flushing every full staging chunk.
    pub fn append(&mut self, bytes: &[u8]) -> Result<()> {
        self.total_appended += bytes.len() as u64;
        // Feed the queue in staging-sized windows so at most one chunk
        // materializes at a time regardless of the append size.
        for window in bytes.chunks(self.staging.capacity as usize) {
            for chunk in self.queue.append(window) {
                self.stage_and_write(&chunk)?;
            }
        }
        Ok(())
    }

    fn stage_and_write(&mut self, chunk: &[u8]) -> Result<()> {
        let mut buf = self
            .free_rx
            .recv()
            .map_err(|_| self.writer_vanished())?;
        // A buffer past the initial seeds means one earlier chunk retired.
        if self.unseen_seed_buffers > 0 {
            self.unseen_seed_buffers -= 1;
        } else {
            self.in_flight -= 1;
        }
        buf.as_mut_slice()[..chunk.len()].copy_from_slice(chunk);
        let item = WorkItem {
            buf,
            len: chunk.len(),
            offset: self.next_offset,
        };
        self.next_offset += chunk.len() as u64;
        self.work_tx
            .as_ref()
            .expect("writer still open")
            .send(item)
            .map_err(|_| self.writer_vanished())?;
        self.in_flight += 1;
        self.max_in_flight = self.max_in_flight.max(self.in_flight);
        Ok(())
    }

    fn writer_vanished(&self) -> Error {
        Error::WriteFailed {
            path: self.dest.clone(),
            offset: self.next_offset,
            source: io::Error::other("writer thread exited"),
        }
    }

    /// Flush the tail (aligned head direct, sub-alignment suffix buffered),
    /// sync, and report stats. The destination file is byte-identical to
    /// the appended stream.
    pub fn finish(mut self) -> Result<EngineStats> {
        let remainder = self.queue.drain_remainder();
        let split = split_aligned(remainder.len() as u64, self.staging.alignment)?;
        if split.prefix_len > 0 {
            self.stage_and_write(&remainder[..split.prefix_len as usize])?;
        }

        drop(self.work_tx.take());
        let mut outcome = self
            .writer
            .take()
            .expect("writer not yet joined")
            .join()
            .map_err(|_| Error::WriteFailed {
                path: self.dest.clone(),
                offset: self.next_offset,
                source: io::Error::other("writer thread panicked"),
            })?;
        self.in_flight = 0;
        if let Some(err) = outcome.error {
            return Err(err);
        }
        outcome.dev.sync()?;

        if split.suffix_len > 0 {
            let suffix = &remainder[split.prefix_len as usize..];
            let tail = OpenOptions::new()
                .write(true)
                .open(&self.dest)
                .map_err(|e| Error::io(&self.dest, e))?;
            write_full_at(&tail, suffix, self.next_offset).map_err(|e| Error::WriteFailed {
                path: self.dest.clone(),
                offset: self.next_offset,
                source: e,
            })?;
            tail.sync_data().map_err(|e| Error::io(&self.dest, e))?;
            outcome.flushes.push(FlushRecord {
                offset: self.next_offset,
                len: split.suffix_len,
                direct_path: false,
            });
            self.next_offset += split.suffix_len;
        }
        debug_assert_eq!(self.next_offset, self.total_appended);

        let wall_seconds = self.started.elapsed().as_secs_f64();
        let fallback = outcome.dev.fallback;
        let direct_write_count = outcome.direct_write_count;
        // Fallback chunks count as buffered, so classify from the trace.
        let buffered_write_count = outcome
            .flushes
            .iter()
            .filter(|f| !f.direct_path)
            .count() as u64;

        Ok(EngineStats {
            bytes_written: self.total_appended,
            wall_seconds,
            throughput_bps: if wall_seconds > 0.0 {
                self.total_appended as f64 / wall_seconds
            } else {
                0.0
            },
            direct_write_count,
            buffered_write_count,
            fallback,
            max_in_flight: self.max_in_flight,
            flushes: outcome.flushes,
        })
    }
}

fn write_full_at(file: &File, mut buf: &[u8], mut offset: u64) -> io::Result<()> {
    while !buf.is_empty() {
        match file.write_at(buf, offset) {
            Ok(0) => return Err(io::Error::new(io::ErrorKind::WriteZero, "wrote 0 bytes")),
            Ok(n) => {
                buf = &buf[n..];
                offset += n as u64;
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Write raw bytes to `dest` through the staged pipeline.
pub fn write_bytes(
    data: &[u8],
    dest: &Path,
    mode: WriteMode,
    staging: &StagingBuffer,
) -> Result<EngineStats> {
    let mut writer = CheckpointWriter::create(dest, mode, staging)?;
    writer.append(data)?;
    writer.finish()
}

/// Persist a serialized checkpoint stream; the file is byte-identical to
/// the stream in either mode.
pub fn write_checkpoint(
    stream: &SerializedStream,
    dest: &Path,
    mode: WriteMode,
    staging: &StagingBuffer,
) -> Result<EngineStats> {
    write_bytes(stream.bytes(), dest, mode, staging)
}

/// One micro-benchmark configuration sweep.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub sizes: Vec<u64>,
    pub buffer_sizes: Vec<u64>,
    pub modes: Vec<WriteMode>,
    pub repeats: u32,
    pub alignment: u64,
    pub lock_memory: bool,
    pub seed: u64,
}

/// One measured row of the sweep.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub size_bytes: u64,
    pub buffer_bytes: u64,
    pub mode: WriteMode,
    pub repeat: u32,
    pub stats: EngineStats,
}

pub const BENCH_CSV_HEADER: &str = "size_bytes,buffer_bytes,mode,repeat,wall_seconds,\
throughput_bps,direct_writes,buffered_writes,fallback";

impl BenchRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{:.9},{:.3},{},{},{}",
            self.size_bytes,
            self.buffer_bytes,
            self.mode,
            self.repeat,
            self.stats.wall_seconds,
            self.stats.throughput_bps,
            self.stats.direct_write_count,
            self.stats.buffered_write_count,
            self.stats.fallback as u8,
        )
    }
}

fn available_bytes(path: &Path) -> Option<u64> {
    use std::os::unix::ffi::OsStrExt;
    let c = std::ffi::CString::new(path.as_os_str().as_bytes()).ok()?;
    let mut stat: libc::statvfs = unsafe { std::mem::zeroed() };
    if unsafe { libc::statvfs(c.as_ptr(), &mut stat) } != 0 {
        return None;
    }
    Some(stat.f_bavail as u64 * stat.f_frsize as u64)
}

/// Sweep write throughput over (size, buffer, mode, repeat). Each run
/// writes a fresh seeded-random file, syncs before the clock stops, and
/// deletes the file afterwards so the page cache cannot flatter later runs.
pub fn bench_write(plan: &BenchPlan, scratch: &Path) -> Result<Vec<BenchRow>> {
    use rand::{RngCore, SeedableRng};

    if !scratch.is_dir() {
        return Err(Error::io(
            scratch,
            io::Error::new(io::ErrorKind::NotFound, "scratch directory does not exist"),
        ));
    }
    let mut rows = Vec::new();
    if plan.repeats == 0 || plan.sizes.is_empty() {
        return Ok(rows);
    }
    let max_size = plan.sizes.iter().copied().max().unwrap_or(0);
    if let Some(avail) = available_bytes(scratch) {
        if avail < max_size + (64 << 20) {
            return Err(Error::io(
                scratch,
                io::Error::other(
                    format!("insufficient space: need {max_size} bytes plus slack, have {avail}"),
                ),
            ));
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(plan.seed);
    for &size in &plan.sizes {
        let mut payload = vec![0u8; size as usize];
        rng.fill_bytes(&mut payload);
        for &buffer_bytes in &plan.buffer_sizes {
            let staging =
                StagingBuffer::new(buffer_bytes, plan.alignment)?.with_locking(plan.lock_memory);
            for &mode in &plan.modes {
                for repeat in 0..plan.repeats {
                    let dest = scratch.join(format!(
                        "fastckpt-bench-{size}b-{buffer_bytes}buf-{mode}-r{repeat}.bin"
                    ));
                    let result = write_bytes(&payload, &dest, mode, &staging);
                    let _ = std::fs::remove_file(&dest);
                    rows.push(BenchRow {
                        size_bytes: size,
                        buffer_bytes,
                        mode,
                        repeat,
                        stats: result?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};

    fn staging(capacity: u64) -> StagingBuffer {
        StagingBuffer::new(capacity, 512).unwrap().with_locking(false)
    }

    fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
        let mut v = vec![0u8; len];
        rand_chacha::ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut v);
        v
    }

    #[test]
    fn staging_buffer_validation() {
        assert!(StagingBuffer::new(512, 512).is_ok());
        assert!(StagingBuffer::new(0, 512).is_err());
        assert!(StagingBuffer::new(700, 512).is_err());
        assert!(StagingBuffer::new(1024, 100).is_err());
    }

    #[test]
    fn queue_flushes_at_threshold() {
        let mut q = PendingQueue::new(512, 512).unwrap();
        assert!(q.append(&[7u8; 300]).is_empty());
        let flushes = q.append(&[9u8; 300]);
        assert_eq!(flushes.len(), 1);
        assert_eq!(flushes[0].len(), 512);
        assert_eq!(q.queued_len(), 88);
        // FIFO: first 300 sevens, then 212 nines.
        assert!(flushes[0][..300].iter().all(|&b| b == 7));
        assert!(flushes[0][300..].iter().all(|&b| b == 9));
        assert!(q.drain_remainder().iter().all(|&b| b == 9));
    }

    #[test]
    fn queue_exact_threshold_and_empty_append() {
        let mut q = PendingQueue::new(512, 512).unwrap();
        let flushes = q.append(&[1u8; 512]);
        assert_eq!(flushes.len(), 1);
        assert_eq!(q.queued_len(), 0);
        assert!(q.append(&[]).is_empty());
        assert_eq!(q.queued_len(), 0);
    }

    #[test]
    fn queue_multi_chunk_append_preserves_order() {
        let mut q = PendingQueue::new(512, 512).unwrap();
        let data: Vec<u8> = (0..1300u32).map(|i| (i % 251) as u8).collect();
        let flushes = q.append(&data);
        assert_eq!(flushes.len(), 2);
        let mut joined: Vec<u8> = flushes.concat();
        joined.extend(q.drain_remainder());
        assert_eq!(joined, data);
    }

    #[test]
    fn queue_rejects_bad_threshold() {
        assert!(PendingQueue::new(0, 512).is_err());
        assert!(PendingQueue::new(700, 512).is_err());
    }

    #[test]
    fn sixteen_mib_with_two_mib_buffer_is_eight_direct_flushes() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("out.bin");
        let data = random_bytes(16 << 20, 1);
        let stats =
            write_bytes(&data, &dest, WriteMode::SingleBuffer, &staging(2 << 20)).unwrap();
        assert_eq!(stats.direct_write_count + stats.buffered_write_count, 8);
        if !stats.fallback {
            assert_eq!(stats.direct_write_count, 8);
        }
        assert_eq!(std::fs::read(&dest).unwrap(), data);
        assert_eq!(stats.bytes_written, 16 << 20);
        assert_eq!(stats.max_in_flight, 1);
    }

    #[test]
    fn empty_stream_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("empty.bin");
        let stats = write_bytes(&[], &dest, WriteMode::DoubleBuffer, &staging(2048)).unwrap();
        assert_eq!(stats.direct_write_count, 0);
        assert_eq!(stats.buffered_write_count, 0);
        assert_eq!(stats.bytes_written, 0);
        assert_eq!(std::fs::metadata(&dest).unwrap().len(), 0);
    }

    #[test]
    fn unaligned_tail_split_between_paths() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("tail.bin");
        let data = random_bytes(1030, 2);
        let stats = write_bytes(&data, &dest, WriteMode::SingleBuffer, &staging(2048)).unwrap();
        let direct_bytes: u64 = stats
            .flushes
            .iter()
            .filter(|f| f.direct_path)
            .map(|f| f.len)
            .sum();
        if !stats.fallback {
            assert_eq!(direct_bytes, 1024);
        }
        let last = stats.flushes.last().unwrap();
        assert_eq!((last.offset, last.len), (1024, 6));
        assert!(!last.direct_path);
        assert_eq!(std::fs::read(&dest).unwrap(), data);
    }

    #[test]
    fn modes_produce_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        for len in [0usize, 1, 511, 512, 513, 4096, 100_000, 1 << 20] {
            let data = random_bytes(len, len as u64);
            let a = dir.path().join("single.bin");
            let b = dir.path().join("double.bin");
            write_bytes(&data, &a, WriteMode::SingleBuffer, &staging(4096)).unwrap();
            write_bytes(&data, &b, WriteMode::DoubleBuffer, &staging(4096)).unwrap();
            assert_eq!(std::fs::read(&a).unwrap(), data, "len {len}");
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        }
    }

    #[test]
    fn flush_offsets_strictly_increase_and_stay_aligned() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("mono.bin");
        let data = random_bytes(300_000, 3);
        let stats = write_bytes(&data, &dest, WriteMode::DoubleBuffer, &staging(8192)).unwrap();
        let mut prev_end = 0;
        for f in &stats.flushes {
            assert!(f.offset >= prev_end);
            assert!(f.offset == prev_end, "flushes must tile the stream");
            prev_end = f.offset + f.len;
            if f.direct_path {
                assert_eq!(f.offset % 512, 0);
                assert_eq!(f.len % 512, 0);
            }
        }
        assert_eq!(prev_end, 300_000);
        assert!(stats.max_in_flight <= 2);
    }

    #[test]
    fn incremental_appends_equal_one_shot() {
        let dir = tempfile::tempdir().unwrap();
        let data = random_bytes(50_000, 4);
        let a = dir.path().join("inc.bin");
        let mut w = CheckpointWriter::create(&a, WriteMode::DoubleBuffer, &staging(1024)).unwrap();
        // Tensor-like ragged appends spanning flush boundaries.
        let mut pos = 0;
        for step in [1usize, 510, 513, 2048, 9999, 37_000] {
            let end = (pos + step).min(data.len());
            w.append(&data[pos..end]).unwrap();
            pos = end;
        }
        w.append(&data[pos..]).unwrap();
        w.finish().unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), data);
    }

    #[test]
    fn bench_repeats_zero_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let plan = BenchPlan {
            sizes: vec![1 << 20],
            buffer_sizes: vec![1 << 16],
            modes: vec![WriteMode::SingleBuffer],
            repeats: 0,
            alignment: 512,
            lock_memory: false,
            seed: 7,
        };
        let rows = bench_write(&plan, dir.path()).unwrap();
        assert!(rows.is_empty());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn bench_sweep_shape_and_cleanup() {
        let dir = tempfile::tempdir().unwrap();
        let plan = BenchPlan {
            sizes: vec![64 << 10, 128 << 10],
            buffer_sizes: vec![4 << 10, 16 << 10],
            modes: vec![WriteMode::SingleBuffer, WriteMode::DoubleBuffer],
            repeats: 2,
            alignment: 512,
            lock_memory: false,
            seed: 7,
        };
        let rows = bench_write(&plan, dir.path()).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2 * 2);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        for row in &rows {
            assert_eq!(row.stats.bytes_written, row.size_bytes);
            assert!(row.stats.wall_seconds > 0.0);
            let recomputed = row.stats.bytes_written as f64 / row.stats.wall_seconds;
            assert_eq!(row.stats.throughput_bps, recomputed);
        }
    }

    #[test]
    fn bench_missing_scratch_fails() {
        let err = bench_write(
            &BenchPlan {
                sizes: vec![1024],
                buffer_sizes: vec![1024],
                modes: vec![WriteMode::SingleBuffer],
                repeats: 1,
                alignment: 512,
                lock_memory: false,
                seed: 0,
            },
            Path::new("/nonexistent-fastckpt-scratch"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn csv_row_schema() {
        let dir = tempfile::tempdir().unwrap();
        let plan = BenchPlan {
            sizes: vec![8 << 10],
            buffer_sizes: vec![4 << 10],
            modes: vec![WriteMode::DoubleBuffer],
            repeats: 1,
            alignment: 512,
            lock_memory: false,
            seed: 7,
        };
        let rows = bench_write(&plan, dir.path()).unwrap();
        let line = rows[0].to_csv();
        assert_eq!(line.split(',').count(), BENCH_CSV_HEADER.split(',').count());
        assert!(line.starts_with("8192,4096,double,0,"));
    }
}
