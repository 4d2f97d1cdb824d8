//! Decoupled checkpoint scheduling: a trainer and a persister cooperating
//! through a request/completion mailbox, synchronized around the optimizer
//! step.
//!
//! The trainer runs `gas` forward/backward micro-steps, blocks until the
//! previous checkpoint is confirmed durable, runs the optimizer, then
//! requests the next checkpoint. Synthetic mode evaluates this schedule as
//! exact arithmetic over f64 durations; live mode replays it with real
//! waits and real sharded disk I/O through the write engine.
//!
//! Steady-state iteration times:
//!   pipelined     max(gas*(t_f+t_b), t_ckpt) + t_o
//!   sequential    gas*(t_f+t_b) + t_o + t_ckpt
//!   no-checkpoint gas*(t_f+t_b) + t_o

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use crate::checkpoint::save_sharded;
use crate::ckpt_format::{serialize, DType, SerializedStream, TensorRecord};
use crate::error::{Error, Result};
use crate::partition_planner::{plan, PartitionPlan, Topology, WriterStrategy};
use crate::write_engine::{StagingBuffer, WriteMode};

/// Checkpointing discipline of the training loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Persist synchronously after every optimizer step.
    Sequential,
    /// Overlap persistence with the next iteration's forward/backward.
    Pipelined,
    /// Train without checkpointing (baseline for slowdown).
    NoCheckpoint,
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(SimMode::Sequential),
            "pipelined" => Ok(SimMode::Pipelined),
            "none" => Ok(SimMode::NoCheckpoint),
            other => Err(Error::Config(format!(
                "unknown simulation mode {other:?} (sequential, pipelined, none)"
            ))),
        }
    }
}

impl std::fmt::Display for SimMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimMode::Sequential => "sequential",
            SimMode::Pipelined => "pipelined",
            SimMode::NoCheckpoint => "none",
        })
    }
}

/// Compute profile of the simulated training loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub gas: u32,
    pub t_forward: f64,
    pub t_backward: f64,
    pub t_optimizer: f64,
    pub iterations: u32,
    pub mode: SimMode,
}

impl TrainConfig {
    pub fn new(
        gas: u32,
        t_forward: f64,
        t_backward: f64,
        t_optimizer: f64,
        iterations: u32,
        mode: SimMode,
    ) -> Result<Self> {
        if gas < 1 {
            return Err(Error::Domain("gas must be >= 1".into()));
        }
        if iterations < 1 {
            return Err(Error::Domain("iterations must be >= 1".into()));
        }
        if [t_forward, t_backward, t_optimizer]
            .iter()
            .any(|t| t.is_nan() || *t < 0.0)
        {
            return Err(Error::Domain("phase times must be finite and >= 0".into()));
        }
        Ok(TrainConfig {
            gas,
            t_forward,
            t_backward,
            t_optimizer,
            iterations,
            mode,
        })
    }

    /// Build from measured per-iteration timings.
    pub fn from_timing(
        timing: &crate::perf_model::IterationTiming,
        iterations: u32,
        mode: SimMode,
    ) -> Result<Self> {
        TrainConfig::new(
            timing.gas,
            timing.t_forward,
            timing.t_backward,
            timing.t_optimizer,
            iterations,
            mode,
        )
    }

    /// Overlappable compute per iteration: `gas * (t_forward + t_backward)`.
    pub fn compute_window(&self) -> f64 {
        self.gas as f64 * (self.t_forward + self.t_backward)
    }
}

/// Where checkpoint bytes go.
#[derive(Debug, Clone)]
pub enum CkptSink {
    /// Persistence modeled as `bytes / bandwidth_bps` seconds.
    Synthetic { bandwidth_bps: f64 },
    /// Real sharded writes through the engine.
    Live(LiveSink),
}

#[derive(Debug, Clone)]
pub struct LiveSink {
    pub scratch: PathBuf,
    pub write_mode: WriteMode,
    pub staging: StagingBuffer,
}

/// One checkpoint workload: its size and its sink.
#[derive(Debug, Clone)]
pub struct CkptTask {
    pub bytes: u64,
    pub sink: CkptSink,
}

impl CkptTask {
    pub fn synthetic(bytes: u64, bandwidth_bps: f64) -> Self {
        CkptTask {
            bytes,
            sink: CkptSink::Synthetic { bandwidth_bps },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Forward,
    Backward,
    Optimizer,
    CkptReq,
    CkptDone,
    Stall,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Forward => "F",
            Phase::Backward => "B",
            Phase::Optimizer => "O",
            Phase::CkptReq => "CKPT_REQ",
            Phase::CkptDone => "CKPT_DONE",
            Phase::Stall => "STALL",
        }
    }
}

/// One scheduled interval. Request/completion markers are instants
/// (`start_s == end_s`). `iter` is the iteration whose state is involved:
/// a `CkptDone` carries the iteration whose checkpoint finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub iter: u32,
    pub phase: Phase,
    pub start_s: f64,
    pub end_s: f64,
}

pub const EVENT_CSV_HEADER: &str = "iter,phase,start_s,end_s";

impl Event {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.9},{:.9}",
            self.iter,
            self.phase.name(),
            self.start_s,
            self.end_s
        )
    }
}

/// Instrumentation proving the persister stays off the trainer's critical
/// resources: it allocates no accelerator-side buffers and performs no
/// inter-rank communication.
#[derive(Debug, Default)]
pub struct PersisterCounters {
    pub accel_allocs: AtomicU64,
    pub comm_ops: AtomicU64,
}

/// Outcome of a simulated or live run.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub mode: SimMode,
    /// Wall time of each iteration (stall included).
    pub iter_wall: Vec<f64>,
    /// Iteration time once the pipeline is warm (iteration 0 excluded).
    pub steady_state_iter_time: f64,
    /// Steady-state time relative to the no-checkpoint loop.
    pub slowdown: f64,
    /// Total time the trainer spent blocked on checkpoint persistence
    /// before an optimizer step (the end-of-run drain is not a stall).
    pub stall_seconds: f64,
    pub total_wall: f64,
    pub events: Vec<Event>,
    pub persister_accel_allocs: u64,
    pub persister_comm_ops: u64,
    /// Stems of the checkpoints persisted by a live run.
    pub checkpoint_stems: Vec<PathBuf>,
}

pub const SUMMARY_CSV_HEADER: &str =
    "mode,iterations,gas,steady_state_iter_time_s,slowdown,stall_seconds,total_wall_s";

impl SimResult {
    pub fn summary_csv(&self, train: &TrainConfig) -> String {
        format!(
            "{},{},{},{:.9},{:.9},{:.9},{:.9}",
            self.mode,
            train.iterations,
            train.gas,
            self.steady_state_iter_time,
            self.slowdown,
            self.stall_seconds,
            self.total_wall
        )
    }
}

fn slowdown_vs(steady: f64, baseline: f64) -> f64 {
    if baseline > 0.0 {
        steady / baseline
    } else if steady == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

fn synthetic_ckpt_seconds(task: &CkptTask) -> Result<f64> {
    let CkptSink::Synthetic { bandwidth_bps } = task.sink else {
        return Err(Error::Config("simulate requires a synthetic sink".into()));
    };
    if task.bytes == 0 {
        return Ok(0.0);
    }
    if bandwidth_bps <= 0.0 || !bandwidth_bps.is_finite() {
        return Err(Error::Domain(format!(
            "bandwidth must be finite and > 0 for a {}-byte checkpoint",
            task.bytes
        )));
    }
    Ok(task.bytes as f64 / bandwidth_bps)
}

/// Evaluate the schedule with exact arithmetic (no real waits, no I/O).
pub fn simulate(train: &TrainConfig, ckpt: &CkptTask) -> Result<SimResult> {
    let t_ckpt = synthetic_ckpt_seconds(ckpt)?;
    let fb = train.compute_window();
    let g = train.gas as f64;
    let gtf = g * train.t_forward;
    let t_o = train.t_optimizer;
    let n = train.iterations;

    let mut events = Vec::new();
    let mut iter_wall = Vec::with_capacity(n as usize);
    let mut stall_seconds = 0.0f64;
    let mut clock = 0.0f64;

    for i in 0..n {
        let s = clock;
        events.push(Event {
            iter: i,
            phase: Phase::Forward,
            start_s: s,
            end_s: s + gtf,
        });
        events.push(Event {
            iter: i,
            phase: Phase::Backward,
            start_s: s + gtf,
            end_s: s + fb,
        });

        let duration = match train.mode {
            SimMode::NoCheckpoint => {
                events.push(Event {
                    iter: i,
                    phase: Phase::Optimizer,
                    start_s: s + fb,
                    end_s: s + (fb + t_o),
                });
                fb + t_o
            }
            SimMode::Sequential => {
                events.push(Event {
                    iter: i,
                    phase: Phase::Optimizer,
                    start_s: s + fb,
                    end_s: s + (fb + t_o),
                });
                let req = s + (fb + t_o);
                let done = s + (fb + t_o + t_ckpt);
                events.push(Event {
                    iter: i,
                    phase: Phase::CkptReq,
                    start_s: req,
                    end_s: req,
                });
                events.push(Event {
                    iter: i,
                    phase: Phase::CkptDone,
                    start_s: done,
                    end_s: done,
                });
                stall_seconds += t_ckpt;
                fb + t_o + t_ckpt
            }
            SimMode::Pipelined => {
                // checkpoint(i-1) was requested at this iteration's start
                // and completes t_ckpt into it.
                let compute_end = if i > 0 {
                    let done = s + t_ckpt;
                    if t_ckpt > fb {
                        events.push(Event {
                            iter: i,
                            phase: Phase::Stall,
                            start_s: s + fb,
                            end_s: done,
                        });
                        stall_seconds += t_ckpt - fb;
                    }
                    events.push(Event {
                        iter: i - 1,
                        phase: Phase::CkptDone,
                        start_s: done,
                        end_s: done,
                    });
                    fb.max(t_ckpt)
                } else {
                    fb
                };
                let duration = compute_end + t_o;
                events.push(Event {
                    iter: i,
                    phase: Phase::Optimizer,
                    start_s: s + compute_end,
                    end_s: s + duration,
                });
                events.push(Event {
                    iter: i,
                    phase: Phase::CkptReq,
                    start_s: s + duration,
                    end_s: s + duration,
                });
                duration
            }
        };
        iter_wall.push(duration);
        clock = s + duration;
    }

    if train.mode == SimMode::Pipelined {
        // Drain: the final checkpoint completes after the loop.
        let done = clock + t_ckpt;
        events.push(Event {
            iter: n - 1,
            phase: Phase::CkptDone,
            start_s: done,
            end_s: done,
        });
        clock = done;
    }

    let steady_state_iter_time = if iter_wall.len() > 1 {
        iter_wall[1]
    } else {
        iter_wall[0]
    };
    let slowdown = slowdown_vs(steady_state_iter_time, fb + t_o);

    Ok(SimResult {
        mode: train.mode,
        iter_wall,
        steady_state_iter_time,
        slowdown,
        stall_seconds,
        total_wall: clock,
        events,
        persister_accel_allocs: 0,
        persister_comm_ops: 0,
        checkpoint_stems: Vec::new(),
    })
}

/// Rows of a gradient-accumulation sweep.
#[derive(Debug, Clone)]
pub struct GasSweepRow {
    pub gas: u32,
    pub mode: SimMode,
    pub result: SimResult,
}

/// Run pipelined and sequential schedules across `gas_values` with the
/// checkpoint task fixed. Larger gas stretches the compute window, so
/// pipelined slowdown is non-increasing in gas.
pub fn gas_sweep(
    base: &TrainConfig,
    gas_values: &[u32],
    ckpt: &CkptTask,
) -> Result<Vec<GasSweepRow>> {
    let mut rows = Vec::with_capacity(gas_values.len() * 2);
    for &gas in gas_values {
        for mode in [SimMode::Pipelined, SimMode::Sequential] {
            let train = TrainConfig::new(
                gas,
                base.t_forward,
                base.t_backward,
                base.t_optimizer,
                base.iterations,
                mode,
            )?;
            rows.push(GasSweepRow {
                gas,
                mode,
                result: simulate(&train, ckpt)?,
            });
        }
    }
    Ok(rows)
}

/// Seed for the synthetic stream persisted by live runs and `save`'s
/// default fill; fixed so `--verify` can regenerate the exact bytes.
pub const SYNTHETIC_SEED: u64 = 0xFA57_C001;

struct CkptRequest {
    iter: u32,
}

struct CkptComplete {
    iter: u32,
    result: Result<()>,
}

fn synthetic_records(bytes: u64, seed: u64) -> Vec<TensorRecord> {
    use rand::{RngCore, SeedableRng};
    let mut payload = vec![0u8; bytes as usize];
    rand_chacha::ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut payload);
    vec![TensorRecord::new("state", DType::I8, vec![bytes], payload).expect("valid record")]
}

/// Deterministic synthetic checkpoint content for live runs and the CLI:
/// a single byte tensor of `bytes` payload, seeded.
pub fn synthetic_stream(bytes: u64, seed: u64) -> (Vec<TensorRecord>, SerializedStream) {
    let records = synthetic_records(bytes, seed);
    let stream = serialize(&records).expect("synthetic records serialize");
    (records, stream)
}

/// Replay the pipelined/sequential schedule with real sleeps for compute
/// and real sharded disk writes for persistence. Every checkpoint is fully
/// durable (written and synced) before the next optimizer step may run;
/// iteration `i`'s files live at `<scratch>/ckpt-<i>.*`.
pub fn run_live(train: &TrainConfig, ckpt: &CkptTask, writer_count: u32) -> Result<SimResult> {
    let CkptSink::Live(sink) = &ckpt.sink else {
        return Err(Error::Config("run_live requires a live sink".into()));
    };
    if writer_count < 1 {
        return Err(Error::Config("writer_count must be >= 1".into()));
    }
    if train.mode == SimMode::NoCheckpoint {
        return Err(Error::Config(
            "run_live needs a checkpointing mode (sequential or pipelined)".into(),
        ));
    }
    std::fs::create_dir_all(&sink.scratch).map_err(|e| Error::io(&sink.scratch, e))?;

    let (_, stream) = synthetic_stream(ckpt.bytes, SYNTHETIC_SEED);
    let stream = Arc::new(stream);
    let topo = Topology::new(1, 1, writer_count)?;
    let ranks: Vec<u32> = (0..writer_count).collect();
    let partition: PartitionPlan = plan(stream.len(), &ranks, WriterStrategy::Replica, &topo)?;

    let counters = Arc::new(PersisterCounters::default());
    let (req_tx, req_rx) = mpsc::sync_channel::<CkptRequest>(1);
    let (done_tx, done_rx) = mpsc::sync_channel::<CkptComplete>(1);

    let persister = {
        let stream = Arc::clone(&stream);
        let partition = partition.clone();
        let scratch = sink.scratch.clone();
        let write_mode = sink.write_mode;
        let staging = sink.staging;
        thread::Builder::new()
            .name("fastckpt-persister".into())
            .spawn(move || {
                // The persister reads the shared stream in place (no
                // device-side allocation) and talks to nobody but its
                // trainer, so both counters stay at zero.
                while let Ok(req) = req_rx.recv() {
                    let stem = scratch.join(format!("ckpt-{:05}", req.iter));
                    let result =
                        save_sharded(&stream, &partition, &stem, write_mode, &staging)
                            .map(|_| ());
                    if done_tx
                        .send(CkptComplete {
                            iter: req.iter,
                            result,
                        })
                        .is_err()
                    {
                        break;
                    }
                }
            })
            .map_err(|e| Error::io(&sink.scratch, e))?
    };

    let run = Instant::now();
    let now = |run: &Instant| run.elapsed().as_secs_f64();
    let mut events = Vec::new();
    let mut iter_wall = Vec::with_capacity(train.iterations as usize);
    let mut stall_seconds = 0.0f64;
    let mut stems = Vec::new();
    let gtf = train.gas as f64 * train.t_forward;
    let gtb = train.gas as f64 * train.t_backward;

    let mut abort: Option<Error> = None;
    let mut iter_start = 0.0f64;
    'iters: for i in 0..train.iterations {
        let f0 = now(&run);
        thread::sleep(Duration::from_secs_f64(gtf));
        let f1 = now(&run);
        events.push(Event {
            iter: i,
            phase: Phase::Forward,
            start_s: f0,
            end_s: f1,
        });
        thread::sleep(Duration::from_secs_f64(gtb));
        let b1 = now(&run);
        events.push(Event {
            iter: i,
            phase: Phase::Backward,
            start_s: f1,
            end_s: b1,
        });

        // Pipelined: confirm checkpoint(i-1) is durable before updating
        // the model it snapshotted.
        if train.mode == SimMode::Pipelined && i > 0 {
            match wait_completion(&done_rx, &mut events, &mut stall_seconds, &run, i)? {
                Ok(()) => {}
                Err(e) => {
                    abort = Some(e);
                    break 'iters;
                }
            }
        }

        let o0 = now(&run);
        thread::sleep(Duration::from_secs_f64(train.t_optimizer));
        let o1 = now(&run);
        events.push(Event {
            iter: i,
            phase: Phase::Optimizer,
            start_s: o0,
            end_s: o1,
        });

        req_tx
            .send(CkptRequest { iter: i })
            .expect("persister alive");
        let req_t = now(&run);
        events.push(Event {
            iter: i,
            phase: Phase::CkptReq,
            start_s: req_t,
            end_s: req_t,
        });
        stems.push(sink.scratch.join(format!("ckpt-{i:05}")));

        // Sequential: block on this iteration's checkpoint immediately.
        if train.mode == SimMode::Sequential {
            match wait_completion(&done_rx, &mut events, &mut stall_seconds, &run, i)? {
                Ok(()) => {}
                Err(e) => {
                    abort = Some(e);
                    break 'iters;
                }
            }
        }

        let end = now(&run);
        iter_wall.push(end - iter_start);
        iter_start = end;
    }

    // Drain the outstanding pipelined checkpoint; the wait is not a stall.
    if abort.is_none() && train.mode == SimMode::Pipelined {
        match done_rx.recv() {
            Ok(done) => {
                let t = now(&run);
                events.push(Event {
                    iter: done.iter,
                    phase: Phase::CkptDone,
                    start_s: t,
                    end_s: t,
                });
                if let Err(e) = done.result {
                    abort = Some(Error::LiveRun {
                        iter: done.iter,
                        source: Box::new(e),
                    });
                }
            }
            Err(_) => {
                abort = Some(Error::Verify("persister exited early".into()));
            }
        }
    }

    drop(req_tx);
    persister.join().expect("persister panicked");
    if let Some(e) = abort {
        return Err(e);
    }

    let total_wall = now(&run);
    let steady_state_iter_time = if iter_wall.len() > 1 {
        iter_wall[1..].iter().sum::<f64>() / (iter_wall.len() - 1) as f64
    } else {
        iter_wall[0]
    };
    let slowdown = slowdown_vs(
        steady_state_iter_time,
        train.compute_window() + train.t_optimizer,
    );

    Ok(SimResult {
        mode: train.mode,
        iter_wall,
        steady_state_iter_time,
        slowdown,
        stall_seconds,
        total_wall,
        events,
        persister_accel_allocs: counters.accel_allocs.load(Ordering::Relaxed),
        persister_comm_ops: counters.comm_ops.load(Ordering::Relaxed),
        checkpoint_stems: stems,
    })
}

/// Receive one completion, logging a STALL interval when the trainer had
/// to block. Outer error: broken harness; inner error: failed write.
fn wait_completion(
    done_rx: &mpsc::Receiver<CkptComplete>,
    events: &mut Vec<Event>,
    stall_seconds: &mut f64,
    run: &Instant,
    at_iter: u32,
) -> Result<std::result::Result<(), Error>> {
    let t0 = run.elapsed().as_secs_f64();
    let done = match done_rx.try_recv() {
        Ok(done) => done,
        Err(mpsc::TryRecvError::Empty) => {
            let done = done_rx
                .recv()
                .map_err(|_| Error::Verify("persister exited early".into()))?;
            let t1 = run.elapsed().as_secs_f64();
            events.push(Event {
                iter: at_iter,
                phase: Phase::Stall,
                start_s: t0,
                end_s: t1,
            });
            *stall_seconds += t1 - t0;
            done
        }
        Err(mpsc::TryRecvError::Disconnected) => {
            return Err(Error::Verify("persister exited early".into()))
        }
    };
    let t = run.elapsed().as_secs_f64();
    events.push(Event {
        iter: done.iter,
        phase: Phase::CkptDone,
        start_s: t,
        end_s: t,
    });
    Ok(done.result.map_err(|e| Error::LiveRun {
        iter: done.iter,
        source: Box::new(e),
    }))
}

/// Assert the schedule invariants on an event log: each checkpoint's
/// completion precedes the next iteration's optimizer start, and at most
/// one checkpoint request is outstanding at any instant.
pub fn check_event_log(events: &[Event]) -> Result<()> {
    let mut reqs: Vec<(u32, f64)> = Vec::new();
    let mut dones: Vec<(u32, f64)> = Vec::new();
    let mut opt_starts: Vec<(u32, f64)> = Vec::new();
    for e in events {
        if e.end_s < e.start_s {
            return Err(Error::Verify(format!(
                "event {} of iter {} runs backwards",
                e.phase.name(),
                e.iter
            )));
        }
        match e.phase {
            Phase::CkptReq => reqs.push((e.iter, e.start_s)),
            Phase::CkptDone => dones.push((e.iter, e.start_s)),
            Phase::Optimizer => opt_starts.push((e.iter, e.start_s)),
            _ => {}
        }
    }
    for &(iter, done_t) in &dones {
        if let Some(&(_, o_t)) = opt_starts.iter().find(|(i, _)| *i == iter + 1) {
            if done_t > o_t {
                return Err(Error::Verify(format!(
                    "checkpoint {iter} completed at {done_t}, after optimizer {} started at {o_t}",
                    iter + 1
                )));
            }
        }
    }
    reqs.sort_by_key(|&(i, _)| i);
    dones.sort_by_key(|&(i, _)| i);
    if reqs.len() != dones.len() {
        return Err(Error::Verify(format!(
            "{} checkpoint requests but {} completions",
            reqs.len(),
            dones.len()
        )));
    }
    for (r, d) in reqs.iter().zip(&dones) {
        if r.0 != d.0 {
            return Err(Error::Verify(format!(
                "request/completion iteration mismatch: {} vs {}",
                r.0, d.0
            )));
        }
        if d.1 < r.1 {
            return Err(Error::Verify(format!(
                "checkpoint {} completed before it was requested",
                r.0
            )));
        }
    }
    for (next_req, prev_done) in reqs.iter().skip(1).zip(&dones) {
        if next_req.1 < prev_done.1 {
            return Err(Error::Verify(format!(
                "checkpoint {} requested at {} while checkpoint {} was still outstanding \
                 (done at {})",
                next_req.0, next_req.1, prev_done.0, prev_done.1
            )));
        }
    }
    Ok(())
}
