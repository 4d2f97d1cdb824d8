//! Command-line front end: micro-benchmarks, sharded save/load with
//! verification, plan inspection, schedule simulation, and the analytical
//! estimates. Tabular output is CSV on stdout; progress notes go to stderr.
//!
//! Exit codes: 0 ok, 2 usage, 3 I/O, 4 verification. The environment
//! variable `FASTCKPT_SCRATCH` overrides `--scratch`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_sharded;
use crate::ckpt_format::{
    load_parallel, manifest_path, serialize, DType, TensorRecord, DEFAULT_ALIGNMENT,
};
use crate::error::{Error, Result};
use crate::partition_planner::{plan, Topology, WriterStrategy};
use crate::perf_model::{
    estimate_checkpoint_bytes, recovery_overhead, required_bandwidth, IterationTiming,
    ModelProfile, RecoverySpec, DEFAULT_BYTES_PER_PARAM,
};
use crate::pipeline_sim::{
    gas_sweep, run_live, simulate, synthetic_stream, CkptSink, CkptTask, LiveSink, SimMode,
    TrainConfig, EVENT_CSV_HEADER, SUMMARY_CSV_HEADER, SYNTHETIC_SEED,
};
use crate::write_engine::{
    bench_write, BenchPlan, StagingBuffer, WriteMode, BENCH_CSV_HEADER,
};

pub const SCRATCH_ENV: &str = "FASTCKPT_SCRATCH";

#[derive(Debug, Parser)]
#[command(
    name = "fastckpt",
    version,
    about = "Checkpoint persistence engine and benchmark harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Sweep write throughput over checkpoint sizes, IO buffer sizes, and
    /// buffering modes; emits one CSV row per run.
    Bench(BenchArgs),
    /// Serialize a checkpoint and persist it as balanced shards plus a
    /// manifest.
    Save(SaveArgs),
    /// Reassemble a sharded checkpoint, verifying shard checksums.
    Load(LoadArgs),
    /// Print the byte-range partition plan for a topology as JSON.
    Plan(PlanArgs),
    /// Run the training-loop schedule, synthetic or live.
    Simulate(SimArgs),
    /// Analytical estimates: checkpoint size, overlap bandwidth, recovery
    /// overhead.
    #[command(subcommand)]
    Estimate(EstimateCmd),
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Checkpoint sizes, e.g. "16MiB,512MiB" or "16MiB..512MiB" (doubling).
    #[arg(long, default_value = "16MiB,512MiB")]
    pub sizes: String,
    /// IO buffer sizes, same syntax.
    #[arg(long, default_value = "2MiB..128MiB")]
    pub buffers: String,
    /// Buffering modes: single, double, or single,double.
    #[arg(long, default_value = "single,double")]
    pub modes: String,
    #[arg(long, default_value_t = 3)]
    pub repeats: u32,
    #[arg(long)]
    pub scratch: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALIGNMENT)]
    pub alignment: u64,
    /// Skip page-locking the staging buffers.
    #[arg(long)]
    pub no_mlock: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// Nodes in the modeled cluster.
    #[arg(long, default_value_t = 1)]
    pub nodes: u32,
    /// CPU sockets per node.
    #[arg(long, default_value_t = 1)]
    pub sockets: u32,
    /// Ranks per node (default: one per socket, grown to fit --dp or
    /// fixed:K writers).
    #[arg(long)]
    pub ranks_per_node: Option<u32>,
    /// Data-parallel group size; ranks 0..dp hold the replica.
    #[arg(long)]
    pub dp: Option<u32>,
    /// Writer selection: replica, socket, or fixed:K.
    #[arg(long, default_value = "replica")]
    pub writers: String,
}

impl TopologyArgs {
    /// Resolve (topology, dp_ranks, strategy) with defaults sized so the
    /// requested writers fit on the modeled cluster.
    fn resolve(&self) -> Result<(Topology, Vec<u32>, WriterStrategy)> {
        let strategy: WriterStrategy = self.writers.parse()?;
        let need = match (self.dp, strategy) {
            (Some(dp), _) => dp,
            (None, WriterStrategy::Fixed(k)) => k,
            (None, _) => self.nodes * self.sockets,
        };
        let ranks_per_node = match self.ranks_per_node {
            Some(r) => r,
            None => {
                let per_node = need.div_ceil(self.nodes.max(1)).max(1);
                // Round up so each socket hosts the same rank count.
                per_node.div_ceil(self.sockets.max(1)) * self.sockets.max(1)
            }
        };
        let topo = Topology::new(self.nodes, self.sockets, ranks_per_node)?;
        let dp = self.dp.unwrap_or(need.max(1));
        if dp as u64 > topo.total_ranks() {
            return Err(Error::Config(format!(
                "dp {dp} exceeds the {} ranks of the topology",
                topo.total_ranks()
            )));
        }
        Ok((topo, (0..dp).collect(), strategy))
    }
}

#[derive(Debug, Args)]
pub struct SaveArgs {
    /// Tensor-spec JSON file describing names, dtypes, shapes, and fills.
    #[arg(long, conflicts_with_all = ["raw", "bytes"])]
    pub spec: Option<PathBuf>,
    /// Wrap an arbitrary file's bytes as a single-tensor checkpoint.
    #[arg(long, conflicts_with = "bytes")]
    pub raw: Option<PathBuf>,
    /// Generate a synthetic checkpoint with this many payload bytes.
    #[arg(long, value_parser = parse_size)]
    pub bytes: Option<u64>,
    /// Output stem, relative to the scratch directory.
    #[arg(long, default_value = "ckpt")]
    pub out: PathBuf,
    #[arg(long)]
    pub scratch: Option<PathBuf>,
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Buffering mode for the write engine.
    #[arg(long, default_value = "double")]
    pub write_mode: String,
    /// Staging (IO) buffer capacity.
    #[arg(long, default_value = "8MiB", value_parser = parse_size)]
    pub buffer: u64,
    #[arg(long, default_value_t = DEFAULT_ALIGNMENT)]
    pub alignment: u64,
    #[arg(long)]
    pub no_mlock: bool,
    /// Load the shards back and compare byte-for-byte with the source.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    /// Path to the `<stem>.manifest.json` file.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub readers: usize,
    /// Re-generate records from this tensor-spec file and compare.
    #[arg(long)]
    pub verify_spec: Option<PathBuf>,
    /// Compare against the synthetic checkpoint of this payload size.
    #[arg(long, value_parser = parse_size)]
    pub verify_bytes: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Total serialized checkpoint bytes to partition.
    #[arg(long, value_parser = parse_size)]
    pub bytes: u64,
    #[command(flatten)]
    pub topology: TopologyArgs,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Schedule: pipelined, sequential, or none.
    #[arg(long, default_value = "pipelined")]
    pub mode: String,
    #[arg(long, default_value_t = 0.15)]
    pub tf: f64,
    #[arg(long, default_value_t = 0.15)]
    pub tb: f64,
    #[arg(long, default_value_t = 0.02)]
    pub to: f64,
    #[arg(long, default_value_t = 1)]
    pub gas: u32,
    #[arg(long, default_value_t = 10)]
    pub iterations: u32,
    /// Checkpoint size.
    #[arg(long, default_value = "17GiB", value_parser = parse_size)]
    pub bytes: u64,
    /// Synthetic persist bandwidth in bytes/second (e.g. 59e9 or 24GiB).
    #[arg(long, default_value = "24.8e9", value_parser = parse_rate)]
    pub bandwidth: f64,
    /// Sweep gradient accumulation, e.g. "1..512" (doubling) or "1,8,64".
    #[arg(long)]
    pub gas_sweep: Option<String>,
    /// Persist real checkpoints through the write engine instead of
    /// modeling the duration.
    #[arg(long)]
    pub live: bool,
    /// Parallel writers for live checkpoints.
    #[arg(long, default_value_t = 1)]
    pub writers: u32,
    #[arg(long, default_value = "double")]
    pub write_mode: String,
    #[arg(long, default_value = "8MiB", value_parser = parse_size)]
    pub buffer: u64,
    #[arg(long, default_value_t = DEFAULT_ALIGNMENT)]
    pub alignment: u64,
    #[arg(long)]
    pub no_mlock: bool,
    #[arg(long)]
    pub scratch: Option<PathBuf>,
    /// Also write the event log CSV to this file inside the scratch dir.
    #[arg(long)]
    pub events_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EstimateCmd {
    /// Checkpoint state bytes from a parameter count.
    Size {
        #[arg(long, value_parser = parse_count)]
        params: u64,
        #[arg(long, default_value_t = DEFAULT_BYTES_PER_PARAM)]
        bytes_per_param: u64,
    },
    /// Write bandwidth needed to hide checkpointing behind compute.
    Bandwidth {
        #[arg(long, value_parser = parse_count)]
        params: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_BYTES_PER_PARAM)]
        bytes_per_param: u64,
        /// Checkpoint size, if known directly.
        #[arg(long, value_parser = parse_size, conflicts_with = "params")]
        bytes: Option<u64>,
        /// Combined forward+backward seconds.
        #[arg(long, conflicts_with_all = ["tf", "tb"])]
        tfb: Option<f64>,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long)]
        tb: Option<f64>,
        #[arg(long, default_value_t = 1)]
        gas: u32,
    },
    /// Expected GPU-seconds lost per interruption.
    Recovery {
        /// Iterations between checkpoints.
        #[arg(long)]
        n: u64,
        /// GPU count.
        #[arg(long)]
        m: u64,
        /// Iteration seconds.
        #[arg(long)]
        t: f64,
    },
}

/// Parse a byte size: plain integer, scientific float, or an IEC suffix
/// (B, KiB, MiB, GiB, TiB), e.g. "512", "1.5MiB", "1e9".
pub fn parse_size(s: &str) -> Result<u64> {
    let s = s.trim();
    let lower = s.to_ascii_lowercase();
    let (digits, multiplier) = if let Some(d) = lower.strip_suffix("kib") {
        (d, 1u64 << 10)
    } else if let Some(d) = lower.strip_suffix("mib") {
        (d, 1 << 20)
    } else if let Some(d) = lower.strip_suffix("gib") {
        (d, 1 << 30)
    } else if let Some(d) = lower.strip_suffix("tib") {
        (d, 1 << 40)
    } else if let Some(d) = lower.strip_suffix('b') {
        (d, 1)
    } else {
        (lower.as_str(), 1)
    };
    let digits = digits.trim();
    if let Ok(v) = digits.parse::<u64>() {
        return v
            .checked_mul(multiplier)
            .ok_or_else(|| Error::Config(format!("size {s:?} overflows")));
    }
    let v: f64 = digits
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse size {s:?}")))?;
    let bytes = v * multiplier as f64;
    if bytes.is_nan() || bytes < 0.0 || bytes > u64::MAX as f64 {
        return Err(Error::Config(format!("size {s:?} out of range")));
    }
    Ok(bytes.round() as u64)
}

/// Parse a count that may be written in scientific notation (1.3e9).
pub fn parse_count(s: &str) -> Result<u64> {
    parse_size(s)
}

/// Parse a rate in bytes/second: float, scientific, or IEC-suffixed.
pub fn parse_rate(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    parse_size(s).map(|v| v as f64)
}

/// Expand "16MiB,512MiB" lists and "2MiB..128MiB" doubling ranges.
pub fn parse_size_list(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let lo = parse_size(lo)?;
            let hi = parse_size(hi)?;
            if lo == 0 || hi < lo {
                return Err(Error::Config(format!("bad size range {part:?}")));
            }
            let mut v = lo;
            while v <= hi {
                out.push(v);
                match v.checked_mul(2) {
                    Some(next) => v = next,
                    None => break,
                }
            }
        } else {
            out.push(parse_size(part)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty size list {s:?}")));
    }
    Ok(out)
}

fn parse_gas_list(s: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u32 = lo
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad gas value {lo:?}")))?;
            let hi: u32 = hi
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad gas value {hi:?}")))?;
            if lo == 0 || hi < lo {
                return Err(Error::Config(format!("bad gas range {part:?}")));
            }
            let mut v = lo;
            while v <= hi {
                out.push(v);
                match v.checked_mul(2) {
                    Some(next) => v = next,
                    None => break,
                }
            }
        } else {
            let v: u32 = part
                .parse()
                .map_err(|_| Error::Config(format!("bad gas value {part:?}")))?;
            if v == 0 {
                return Err(Error::Config("gas must be >= 1".into()));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty gas list {s:?}")));
    }
    Ok(out)
}

fn parse_mode_list(s: &str) -> Result<Vec<WriteMode>> {
    let modes: Vec<WriteMode> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse())
        .collect::<Result<_>>()?;
    if modes.is_empty() {
        return Err(Error::Config("empty mode list".into()));
    }
    Ok(modes)
}

/// `FASTCKPT_SCRATCH` overrides the flag; some scratch dir is mandatory
/// for any subcommand that touches storage.
fn resolve_scratch(flag: &Option<PathBuf>) -> Result<PathBuf> {
    if let Ok(env) = std::env::var(SCRATCH_ENV) {
        if !env.is_empty() {
            return Ok(PathBuf::from(env));
        }
    }
    flag.clone().ok_or_else(|| {
        Error::Config(format!(
            "no scratch directory: pass --scratch or set {SCRATCH_ENV}"
        ))
    })
}

fn require_dir(path: &Path) -> Result<()> {
    if !path.is_dir() {
        return Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "scratch directory does not exist",
            ),
        ));
    }
    Ok(())
}

/// Fill rule for one synthetic tensor.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FillRule {
    /// Seeded random bytes (seed = file seed + tensor index).
    #[default]
    Random,
    Zero,
    Constant(u8),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<u64>,
    #[serde(default)]
    pub fill: FillRule,
}

/// Declarative description of a synthetic checkpoint: deterministic given
/// the seed, so saved data can be re-generated for verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorSpecFile {
    #[serde(default)]
    pub seed: u64,
    pub tensors: Vec<TensorSpec>,
}

impl TensorSpecFile {
    pub fn read_from(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad tensor spec {}: {e}", path.display())))
    }

    pub fn build_records(&self) -> Result<Vec<TensorRecord>> {
        self.tensors
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let dtype: DType = t.dtype.parse()?;
                let elems = t
                    .shape
                    .iter()
                    .try_fold(1u64, |acc, &d| acc.checked_mul(d))
                    .ok_or_else(|| Error::Config(format!("tensor {:?} shape overflows", t.name)))?;
                let len = elems
                    .checked_mul(dtype.size_bytes())
                    .and_then(|v| usize::try_from(v).ok())
                    .ok_or_else(|| Error::Config(format!("tensor {:?} too large", t.name)))?;
                let payload = match t.fill {
                    FillRule::Zero => vec![0u8; len],
                    FillRule::Constant(c) => vec![c; len],
                    FillRule::Random => {
                        let mut payload = vec![0u8; len];
                        rand_chacha::ChaCha8Rng::seed_from_u64(
                            self.seed.wrapping_add(i as u64),
                        )
                        .fill_bytes(&mut payload);
                        payload
                    }
                };
                TensorRecord::new(t.name.clone(), dtype, t.shape.clone(), payload)
            })
            .collect()
    }
}

/// Build the records a `save` invocation persists.
fn source_records(args: &SaveArgs) -> Result<Vec<TensorRecord>> {
    if let Some(spec) = &args.spec {
        return TensorSpecFile::read_from(spec)?.build_records();
    }
    if let Some(raw) = &args.raw {
        let payload = std::fs::read(raw).map_err(|e| Error::io(raw, e))?;
        let len = payload.len() as u64;
        return Ok(vec![TensorRecord::new("raw", DType::I8, vec![len], payload)?]);
    }
    if let Some(bytes) = args.bytes {
        return Ok(synthetic_stream(bytes, SYNTHETIC_SEED).0);
    }
    Err(Error::Config(
        "save needs a source: --spec FILE, --raw FILE, or --bytes SIZE".into(),
    ))
}

fn staging_of(buffer: u64, alignment: u64, no_mlock: bool) -> Result<StagingBuffer> {
    Ok(StagingBuffer::new(buffer, alignment)?.with_locking(!no_mlock))
}

fn scratch_relative(out: &Path, scratch: &Path) -> Result<PathBuf> {
    if out.is_absolute() {
        return Err(Error::Config(format!(
            "--out must be relative to the scratch directory, got {}",
            out.display()
        )));
    }
    Ok(scratch.join(out))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Save(args) => cmd_save(args),
        Cmd::Load(args) => cmd_load(args),
        Cmd::Plan(args) => cmd_plan(args),
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Estimate(cmd) => cmd_estimate(cmd),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let scratch = resolve_scratch(&args.scratch)?;
    require_dir(&scratch)?;
    let plan = BenchPlan {
        sizes: parse_size_list(&args.sizes)?,
        buffer_sizes: parse_size_list(&args.buffers)?,
        modes: parse_mode_list(&args.modes)?,
        repeats: args.repeats,
        alignment: args.alignment,
        lock_memory: !args.no_mlock,
        seed: args.seed,
    };
    let rows = bench_write(&plan, &scratch)?;
    println!("{BENCH_CSV_HEADER}");
    for row in rows {
        println!("{}", row.to_csv());
    }
    Ok(())
}

const SHARD_CSV_HEADER: &str =
    "shard,writer_id,bytes,wall_seconds,throughput_bps,direct_writes,buffered_writes,fallback";

fn cmd_save(args: SaveArgs) -> Result<()> {
    let scratch = resolve_scratch(&args.scratch)?;
    require_dir(&scratch)?;
    let stem = scratch_relative(&args.out, &scratch)?;
    if let Some(parent) = stem.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let records = source_records(&args)?;
    let stream = serialize(&records)?;
    let (topo, dp_ranks, strategy) = args.topology.resolve()?;
    let partition = plan(stream.len(), &dp_ranks, strategy, &topo)?;
    let mode: WriteMode = args.write_mode.parse()?;
    let staging = staging_of(args.buffer, args.alignment, args.no_mlock)?;

    let (manifest, stats) = save_sharded(&stream, &partition, &stem, mode, &staging)?;
    eprintln!(
        "wrote {} ({} bytes in {} shards)",
        manifest_path(&stem).display(),
        manifest.total_bytes,
        manifest.shards.len()
    );
    println!("{SHARD_CSV_HEADER}");
    for (i, (entry, s)) in manifest.shards.iter().zip(&stats).enumerate() {
        println!(
            "{},{},{},{:.9},{:.3},{},{},{}",
            i,
            entry.writer_id,
            s.bytes_written,
            s.wall_seconds,
            s.throughput_bps,
            s.direct_write_count,
            s.buffered_write_count,
            s.fallback as u8
        );
    }

    if args.verify {
        let loaded = load_parallel(&manifest_path(&stem), partition.writer_count().max(1))?;
        if loaded != records {
            return Err(Error::Verify(
                "reloaded records differ from the saved source".into(),
            ));
        }
        eprintln!("verify ok: {} records match", loaded.len());
    }
    Ok(())
}

fn cmd_load(args: LoadArgs) -> Result<()> {
    let records = load_parallel(&args.manifest, args.readers.max(1))?;
    let total: u64 = records.iter().map(|r| r.payload.len() as u64).sum();

    if let Some(spec) = &args.verify_spec {
        let expected = TensorSpecFile::read_from(spec)?.build_records()?;
        if records != expected {
            return Err(Error::Verify(
                "loaded records differ from the tensor spec".into(),
            ));
        }
    }
    if let Some(bytes) = args.verify_bytes {
        let (expected, _) = synthetic_stream(bytes, SYNTHETIC_SEED);
        if records != expected {
            return Err(Error::Verify(format!(
                "loaded records differ from the {bytes}-byte synthetic checkpoint"
            )));
        }
    }

    println!("records,payload_bytes");
    println!("{},{}", records.len(), total);
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> Result<()> {
    let (topo, dp_ranks, strategy) = args.topology.resolve()?;
    let partition = plan(args.bytes, &dp_ranks, strategy, &topo)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&partition)
            .map_err(|e| Error::Config(format!("encode plan: {e}")))?
    );
    Ok(())
}

fn cmd_simulate(args: SimArgs) -> Result<()> {
    let mode: SimMode = args.mode.parse()?;

    if let Some(sweep) = &args.gas_sweep {
        let gas_values = parse_gas_list(sweep)?;
        let base = TrainConfig::new(1, args.tf, args.tb, args.to, args.iterations, mode)?;
        let task = CkptTask::synthetic(args.bytes, args.bandwidth);
        let rows = gas_sweep(&base, &gas_values, &task)?;
        println!("gas,mode,steady_state_iter_time_s,slowdown,stall_seconds");
        for row in rows {
            println!(
                "{},{},{:.9},{:.9},{:.9}",
                row.gas,
                row.mode,
                row.result.steady_state_iter_time,
                row.result.slowdown,
                row.result.stall_seconds
            );
        }
        return Ok(());
    }

    let timing = IterationTiming::new(args.tf, args.tb, args.to, args.gas)?;
    let train = TrainConfig::from_timing(&timing, args.iterations, mode)?;
    let result = if args.live {
        let scratch = resolve_scratch(&args.scratch)?;
        require_dir(&scratch)?;
        let task = CkptTask {
            bytes: args.bytes,
            sink: CkptSink::Live(LiveSink {
                scratch: scratch.clone(),
                write_mode: args.write_mode.parse()?,
                staging: staging_of(args.buffer, args.alignment, args.no_mlock)?,
            }),
        };
        run_live(&train, &task, args.writers)?
    } else {
        simulate(&train, &CkptTask::synthetic(args.bytes, args.bandwidth))?
    };

    println!("{SUMMARY_CSV_HEADER}");
    println!("{}", result.summary_csv(&train));

    if let Some(events_file) = &args.events_file {
        let scratch = resolve_scratch(&args.scratch)?;
        require_dir(&scratch)?;
        let path = scratch_relative(events_file, &scratch)?;
        let mut text = String::from(EVENT_CSV_HEADER);
        text.push('\n');
        for e in &result.events {
            text.push_str(&e.to_csv());
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        eprintln!("wrote event log to {}", path.display());
    }
    Ok(())
}

fn cmd_estimate(cmd: EstimateCmd) -> Result<()> {
    match cmd {
        EstimateCmd::Size {
            params,
            bytes_per_param,
        } => {
            println!("{}", estimate_checkpoint_bytes(params, bytes_per_param)?);
        }
        EstimateCmd::Bandwidth {
            params,
            bytes_per_param,
            bytes,
            tfb,
            tf,
            tb,
            gas,
        } => {
            let profile = match (bytes, params) {
                (Some(b), _) => ModelProfile::from_checkpoint_bytes(b),
                (None, Some(p)) => ModelProfile::from_params(p, bytes_per_param)?,
                (None, None) => {
                    return Err(Error::Config(
                        "estimate bandwidth needs --params or --bytes".into(),
                    ))
                }
            };
            let (t_forward, t_backward) = match (tfb, tf, tb) {
                (Some(t), None, None) => (t, 0.0),
                (None, Some(f), Some(b)) => (f, b),
                _ => {
                    return Err(Error::Config(
                        "pass either --tfb or both --tf and --tb".into(),
                    ))
                }
            };
            let timing = IterationTiming::new(t_forward, t_backward, 0.0, gas)?;
            println!("{}", required_bandwidth(profile.checkpoint_bytes, &timing)?);
        }
        EstimateCmd::Recovery { n, m, t } => {
            println!("{}", recovery_overhead(&RecoverySpec::new(n, m, t)?));
        }
    }
    Ok(())
}
