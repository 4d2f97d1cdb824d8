//! Sharded save: one write engine per selected writer, each persisting its
//! contiguous byte range to its own shard file, plus the JSON manifest that
//! lets any reader count reassemble the stream.

use std::path::Path;
use std::thread;

use crate::ckpt_format::{
    manifest_path, shard_path, SerializedStream, ShardEntry, ShardManifest, FORMAT_VERSION,
};
use crate::error::Result;
use crate::partition_planner::PartitionPlan;
use crate::write_engine::{write_bytes, EngineStats, StagingBuffer, WriteMode};

/// Persist `stream` as shards under `<stem>.shard-<i>-of-<k>` plus
/// `<stem>.manifest.json`. DP replicas hold identical bytes, so each writer
/// runs with no coordination beyond the precomputed plan; here the writers
/// are concurrent engine instances over the shared in-memory stream.
///
/// Returns the manifest and per-writer engine stats in plan order.
pub fn save_sharded(
    stream: &SerializedStream,
    plan: &PartitionPlan,
    stem: &Path,
    mode: WriteMode,
    staging: &StagingBuffer,
) -> Result<(ShardManifest, Vec<EngineStats>)> {
    assert_eq!(
        plan.total_bytes,
        stream.len(),
        "plan was computed for a different stream size"
    );
    let bytes = stream.bytes();
    let count = plan.assignments.len();

    let mut results: Vec<Option<Result<(ShardEntry, EngineStats)>>> =
        (0..count).map(|_| None).collect();
    thread::scope(|scope| {
        let handles: Vec<_> = plan
            .assignments
            .iter()
            .enumerate()
            .map(|(index, a)| {
                let slice = &bytes[a.offset as usize..(a.offset + a.length) as usize];
                let path = shard_path(stem, index, count);
                scope.spawn(move || {
                    let crc32 = crc32fast::hash(slice);
                    let stats = write_bytes(slice, &path, mode, staging)?;
                    Ok((
                        ShardEntry {
                            writer_id: a.rank,
                            offset: a.offset,
                            length: a.length,
                            crc32,
                        },
                        stats,
                    ))
                })
            })
            .collect();
        for (index, handle) in handles.into_iter().enumerate() {
            results[index] = Some(handle.join().expect("shard writer panicked"));
        }
    });

    let mut shards = Vec::with_capacity(count);
    let mut stats = Vec::with_capacity(count);
    for result in results.into_iter().flatten() {
        let (entry, s) = result?;
        shards.push(entry);
        stats.push(s);
    }

    let manifest = ShardManifest {
        format_version: FORMAT_VERSION,
        total_bytes: plan.total_bytes,
        alignment: staging.alignment,
        shards,
    };
    manifest.validate()?;
    manifest.write_to(&manifest_path(stem))?;
    Ok((manifest, stats))
}
