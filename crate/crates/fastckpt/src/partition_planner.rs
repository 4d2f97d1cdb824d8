//! Writer selection over a modeled cluster topology and byte-granular
//! partitioning of the serialized stream, balanced to at most one byte.
//!
//! Planning is a pure function of its inputs, so every rank can compute the
//! identical plan locally during setup and write its range with no runtime
//! coordination.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Peak write bandwidth of one node's local SSD volume, bytes/second.
/// Informational only; taken from the reference testbed (24.8 GB/s).
pub const DEFAULT_NODE_WRITE_BW: f64 = 24.8e9;

/// Modeled cluster layout. Rank `r` lives on node `r / ranks_per_node`,
/// socket `(r % ranks_per_node) / (ranks_per_node / sockets_per_node)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Topology {
    pub node_count: u32,
    pub sockets_per_node: u32,
    pub ranks_per_node: u32,
    pub ssd_write_bw_per_node: f64,
}

impl Topology {
    pub fn new(node_count: u32, sockets_per_node: u32, ranks_per_node: u32) -> Result<Self> {
        if node_count < 1 {
            return Err(Error::Config("node_count must be >= 1".into()));
        }
        if sockets_per_node < 1 || ranks_per_node < sockets_per_node {
            return Err(Error::Config(format!(
                "need ranks_per_node >= sockets_per_node >= 1, got {ranks_per_node} and \
                 {sockets_per_node}"
            )));
        }
        if !ranks_per_node.is_multiple_of(sockets_per_node) {
            return Err(Error::Config(format!(
                "ranks_per_node ({ranks_per_node}) must be divisible by sockets_per_node \
                 ({sockets_per_node})"
            )));
        }
        Ok(Topology {
            node_count,
            sockets_per_node,
            ranks_per_node,
            ssd_write_bw_per_node: DEFAULT_NODE_WRITE_BW,
        })
    }

    pub fn total_ranks(&self) -> u64 {
        self.node_count as u64 * self.ranks_per_node as u64
    }

    pub fn node_of(&self, rank: u32) -> u32 {
        rank / self.ranks_per_node
    }

    /// (node, socket) hosting `rank`.
    pub fn location_of(&self, rank: u32) -> (u32, u32) {
        let ranks_per_socket = self.ranks_per_node / self.sockets_per_node;
        let node = rank / self.ranks_per_node;
        let socket = (rank % self.ranks_per_node) / ranks_per_socket;
        (node, socket)
    }
}

/// Which subset of DP ranks performs checkpoint writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriterStrategy {
    /// Every DP rank writes a shard.
    Replica,
    /// One writer per CPU socket that hosts at least one DP rank.
    Socket,
    /// Exactly `k` writers, socket-first placement.
    Fixed(u32),
}

impl FromStr for WriterStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replica" => Ok(WriterStrategy::Replica),
            "socket" => Ok(WriterStrategy::Socket),
            other => {
                if let Some(k) = other.strip_prefix("fixed:") {
                    let k: u32 = k.parse().map_err(|_| {
                        Error::Config(format!("bad writer count in {other:?}"))
                    })?;
                    if k < 1 {
                        return Err(Error::Config("fixed writer count must be >= 1".into()));
                    }
                    Ok(WriterStrategy::Fixed(k))
                } else {
                    Err(Error::Config(format!(
                        "unknown writer strategy {other:?} (replica, socket, fixed:K)"
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for WriterStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WriterStrategy::Replica => write!(f, "replica"),
            WriterStrategy::Socket => write!(f, "socket"),
            WriterStrategy::Fixed(k) => write!(f, "fixed:{k}"),
        }
    }
}

/// One writer's contiguous byte range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Assignment {
    #[serde(rename = "writer_id")]
    pub rank: u32,
    pub offset: u64,
    pub length: u64,
}

/// Contiguous byte ranges tiling `[0, total_bytes)`, one per selected writer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionPlan {
    pub total_bytes: u64,
    pub assignments: Vec<Assignment>,
}

impl PartitionPlan {
    pub fn writer_count(&self) -> usize {
        self.assignments.len()
    }
}

fn check_ranks(dp_ranks: &[u32], topo: &Topology) -> Result<Vec<u32>> {
    if dp_ranks.is_empty() {
        return Err(Error::Plan("dp_ranks must be non-empty".into()));
    }
    let mut sorted = dp_ranks.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Plan("dp_ranks contains duplicates".into()));
    }
    if let Some(&r) = sorted.last() {
        if (r as u64) >= topo.total_ranks() {
            return Err(Error::Plan(format!(
                "rank {r} outside topology of {} ranks",
                topo.total_ranks()
            )));
        }
    }
    Ok(sorted)
}

/// DP ranks grouped by (node, socket), groups in (node, socket) order,
/// ranks ascending within each group.
fn socket_groups(sorted_ranks: &[u32], topo: &Topology) -> Vec<Vec<u32>> {
    let mut groups: Vec<((u32, u32), Vec<u32>)> = Vec::new();
    for &rank in sorted_ranks {
        let loc = topo.location_of(rank);
        match groups.iter_mut().find(|(l, _)| *l == loc) {
            Some((_, g)) => g.push(rank),
            None => groups.push((loc, vec![rank])),
        }
    }
    groups.sort_by_key(|(loc, _)| *loc);
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Pick the writer ranks for a strategy. Deterministic: the result depends
/// only on the rank set, the strategy, and the topology.
pub fn select_writers(
    dp_ranks: &[u32],
    strategy: WriterStrategy,
    topo: &Topology,
) -> Result<Vec<u32>> {
    let sorted = check_ranks(dp_ranks, topo)?;
    match strategy {
        WriterStrategy::Replica => Ok(sorted),
        WriterStrategy::Socket => Ok(socket_groups(&sorted, topo)
            .iter()
            .map(|g| g[0])
            .collect()),
        WriterStrategy::Fixed(k) => {
            let k = k as usize;
            if k > sorted.len() {
                return Err(Error::Plan(format!(
                    "fixed:{k} exceeds the {} available dp ranks",
                    sorted.len()
                )));
            }
            let groups = socket_groups(&sorted, topo);
            let mut writers: Vec<u32> = groups.iter().map(|g| g[0]).collect();
            writers.truncate(k);
            // Past one-per-socket, spread extra writers round-robin across
            // the sockets' remaining ranks.
            let mut depth = 1;
            while writers.len() < k {
                let mut grew = false;
                for g in &groups {
                    if writers.len() == k {
                        break;
                    }
                    if let Some(&rank) = g.get(depth) {
                        writers.push(rank);
                        grew = true;
                    }
                }
                debug_assert!(grew || writers.len() == k);
                if !grew {
                    break;
                }
                depth += 1;
            }
            Ok(writers)
        }
    }
}

/// Split `total` bytes across `k` writers: the first `total % k` get
/// `ceil(total/k)`, the rest `floor(total/k)`. Imbalance is at most 1 byte.
pub fn balance(total: u64, k: usize) -> Vec<u64> {
    assert!(k >= 1, "balance requires k >= 1");
    let k64 = k as u64;
    let base = total / k64;
    let extra = (total % k64) as usize;
    (0..k)
        .map(|i| if i < extra { base + 1 } else { base })
        .collect()
}

/// Build the full partition plan: select writers, balance byte quotas,
/// assign contiguous ranges by prefix sums.
pub fn plan(
    total: u64,
    dp_ranks: &[u32],
    strategy: WriterStrategy,
    topo: &Topology,
) -> Result<PartitionPlan> {
    let writers = select_writers(dp_ranks, strategy, topo)?;
    let lengths = balance(total, writers.len());
    let mut offset = 0u64;
    let assignments = writers
        .into_iter()
        .zip(lengths)
        .map(|(rank, length)| {
            let a = Assignment {
                rank,
                offset,
                length,
            };
            offset += length;
            a
        })
        .collect();
    Ok(PartitionPlan {
        total_bytes: total,
        assignments,
    })
}
