//! Serialized checkpoint container, aligned prefix/suffix split, shard
//! manifests, and parallel load with reassembly.
//!
//! Wire layout (little-endian throughout):
//!
//! ```text
//! stream:  magic "FPCK" | version u32 | record_count u64 | records... | crc32 u32
//! record:  name_len u16 | name bytes | dtype u8 | ndim u8 | dims u64*ndim
//!          | payload_len u64 | payload bytes
//! ```
//!
//! The trailing crc32 (IEEE polynomial) covers every byte before it. Shard
//! files are raw byte ranges of the stream named `<stem>.shard-<i>-of-<k>`,
//! described by a JSON manifest at `<stem>.manifest.json`.

use std::convert::TryFrom;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FPCK";
pub const FORMAT_VERSION: u32 = 1;
/// Smallest direct-I/O alignment accepted anywhere in the crate.
pub const MIN_ALIGNMENT: u64 = 512;
pub const DEFAULT_ALIGNMENT: u64 = 512;

const HEADER_LEN: u64 = 16; // magic + version + record_count
const FOOTER_LEN: u64 = 4; // crc32

/// Element type of a tensor payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum DType {
    F16 = 0,
    F32 = 1,
    F64 = 2,
    I8 = 3,
    I32 = 4,
    I64 = 5,
}

impl DType {
    pub fn size_bytes(self) -> u64 {
        match self {
            DType::F16 => 2,
            DType::F32 => 4,
            DType::F64 => 8,
            DType::I8 => 1,
            DType::I32 => 4,
            DType::I64 => 8,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => DType::F16,
            1 => DType::F32,
            2 => DType::F64,
            3 => DType::I8,
            4 => DType::I32,
            5 => DType::I64,
            other => return Err(Error::Format(format!("unknown dtype code {other}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F16 => "f16",
            DType::F32 => "f32",
            DType::F64 => "f64",
            DType::I8 => "i8",
            DType::I32 => "i32",
            DType::I64 => "i64",
        }
    }
}

impl FromStr for DType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "f16" => DType::F16,
            "f32" => DType::F32,
            "f64" => DType::F64,
            "i8" => DType::I8,
            "i32" => DType::I32,
            "i64" => DType::I64,
            other => return Err(Error::Config(format!("unknown dtype {other:?}"))),
        })
    }
}

impl std::fmt::Display for DType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One serialized tensor: name, element type, shape, and raw payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorRecord {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<u64>,
    pub payload: Vec<u8>,
}

impl TensorRecord {
    pub fn new(
        name: impl Into<String>,
        dtype: DType,
        shape: Vec<u64>,
        payload: Vec<u8>,
    ) -> Result<Self> {
        let rec = TensorRecord {
            name: name.into(),
            dtype,
            shape,
            payload,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Format("tensor name must be non-empty".into()));
        }
        if self.name.len() > u16::MAX as usize {
            return Err(Error::Format(format!(
                "tensor name is {} bytes encoded, max {}",
                self.name.len(),
                u16::MAX
            )));
        }
        if self.shape.len() > u8::MAX as usize {
            return Err(Error::Format(format!(
                "tensor {:?} has {} dims, max {}",
                self.name,
                self.shape.len(),
                u8::MAX
            )));
        }
        let elems = self
            .shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("tensor {:?} shape overflows", self.name)))?;
        let expected = elems
            .checked_mul(self.dtype.size_bytes())
            .ok_or_else(|| Error::Format(format!("tensor {:?} byte size overflows", self.name)))?;
        if self.payload.len() as u64 != expected {
            return Err(Error::Format(format!(
                "tensor {:?}: payload is {} bytes but shape {:?} x {} implies {}",
                self.name,
                self.payload.len(),
                self.shape,
                self.dtype,
                expected
            )));
        }
        Ok(())
    }

    /// Encoded size of this record on the wire.
    pub fn encoded_len(&self) -> u64 {
        2 + self.name.len() as u64 + 1 + 1 + 8 * self.shape.len() as u64 + 8
            + self.payload.len() as u64
    }
}

/// A fully serialized checkpoint: the container bytes plus an index of
/// (offset, length) for each record inside them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedStream {
    bytes: Vec<u8>,
    record_offsets: Vec<(u64, u64)>,
}

impl SerializedStream {
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> u64 {
        self.bytes.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn record_count(&self) -> u64 {
        self.record_offsets.len() as u64
    }

    /// (start offset, encoded length) of each record, in stream order.
    pub fn record_offsets(&self) -> &[(u64, u64)] {
        &self.record_offsets
    }

    /// Parse and validate container bytes (magic, version, bounds, crc32),
    /// rebuilding the record index.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let record_offsets = index_records(&bytes)?;
        let body_end = bytes.len() - FOOTER_LEN as usize;
        let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
        let actual = crc32fast::hash(&bytes[..body_end]);
        if stored != actual {
            return Err(Error::Format(format!(
                "stream crc32 mismatch: footer {stored:#010x}, computed {actual:#010x}"
            )));
        }
        Ok(SerializedStream {
            bytes,
            record_offsets,
        })
    }
}

/// Serialize records into the container layout. Deterministic: equal inputs
/// produce byte-identical streams.
pub fn serialize(records: &[TensorRecord]) -> Result<SerializedStream> {
    let mut total = HEADER_LEN + FOOTER_LEN;
    for rec in records {
        rec.validate()?;
        total += rec.encoded_len();
    }
    let mut bytes = Vec::with_capacity(usize::try_from(total).map_err(|_| {
        Error::Format(format!("stream of {total} bytes exceeds addressable memory"))
    })?);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(records.len() as u64).to_le_bytes());

    let mut record_offsets = Vec::with_capacity(records.len());
    for rec in records {
        let start = bytes.len() as u64;
        bytes.extend_from_slice(&(rec.name.len() as u16).to_le_bytes());
        bytes.extend_from_slice(rec.name.as_bytes());
        bytes.push(rec.dtype as u8);
        bytes.push(rec.shape.len() as u8);
        for &dim in &rec.shape {
            bytes.extend_from_slice(&dim.to_le_bytes());
        }
        bytes.extend_from_slice(&(rec.payload.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&rec.payload);
        record_offsets.push((start, bytes.len() as u64 - start));
    }

    let crc = crc32fast::hash(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    Ok(SerializedStream {
        bytes,
        record_offsets,
    })
}

/// Decode the records of a validated stream.
pub fn deserialize(stream: &SerializedStream) -> Result<Vec<TensorRecord>> {
    let bytes = stream.bytes();
    let mut records = Vec::with_capacity(stream.record_offsets.len());
    for &(start, len) in &stream.record_offsets {
        let mut cur = Cursor {
            bytes,
            pos: start as usize,
        };
        let rec = cur.read_record()?;
        debug_assert_eq!(cur.pos as u64 - start, len);
        records.push(rec);
    }
    Ok(records)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated stream: need {n} bytes at offset {}",
                    self.pos
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn read_record(&mut self) -> Result<TensorRecord> {
        let name_len = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(name_len)?)
            .map_err(|e| Error::Format(format!("tensor name is not UTF-8: {e}")))?
            .to_owned();
        let dtype = DType::from_code(self.take(1)?[0])?;
        let ndim = self.take(1)?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(self.u64()?);
        }
        let payload_len = self.u64()?;
        let payload_len = usize::try_from(payload_len)
            .map_err(|_| Error::Format(format!("payload of {payload_len} bytes not loadable")))?;
        let payload = self.take(payload_len)?.to_vec();
        let rec = TensorRecord {
            name,
            dtype,
            shape,
            payload,
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// Walk the container and return each record's (offset, length) without
/// copying payloads. Validates magic, version, and record-region bounds.
fn index_records(bytes: &[u8]) -> Result<Vec<(u64, u64)>> {
    if (bytes.len() as u64) < HEADER_LEN + FOOTER_LEN {
        return Err(Error::Format(format!(
            "stream of {} bytes is shorter than header+footer",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, not a checkpoint stream".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported stream version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let record_count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body_end = bytes.len() as u64 - FOOTER_LEN;

    let mut offsets = Vec::new();
    let mut cur = Cursor {
        bytes,
        pos: HEADER_LEN as usize,
    };
    for i in 0..record_count {
        if (cur.pos as u64) >= body_end {
            return Err(Error::Format(format!(
                "record count {record_count} exceeds records present ({i})"
            )));
        }
        let start = cur.pos as u64;
        cur.read_record()?;
        offsets.push((start, cur.pos as u64 - start));
    }
    if cur.pos as u64 != body_end {
        return Err(Error::Format(format!(
            "record region ends at {}, expected {body_end}",
            cur.pos
        )));
    }
    Ok(offsets)
}

/// Split of a byte count into the largest alignment-multiple prefix and the
/// sub-alignment suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedSplit {
    pub prefix_len: u64,
    pub suffix_len: u64,
    pub alignment: u64,
}

pub fn validate_alignment(alignment: u64) -> Result<()> {
    if !alignment.is_power_of_two() || alignment < MIN_ALIGNMENT {
        return Err(Error::Config(format!(
            "alignment must be a power of two >= {MIN_ALIGNMENT}, got {alignment}"
        )));
    }
    Ok(())
}

/// `prefix_len = floor(total/alignment)*alignment`, `suffix_len < alignment`.
pub fn split_aligned(total: u64, alignment: u64) -> Result<AlignedSplit> {
    validate_alignment(alignment)?;
    let prefix_len = total / alignment * alignment;
    Ok(AlignedSplit {
        prefix_len,
        suffix_len: total - prefix_len,
        alignment,
    })
}

/// Manifest entry describing one shard: which writer produced it and which
/// byte range of the stream it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub writer_id: u32,
    pub offset: u64,
    pub length: u64,
    pub crc32: u32,
}

/// Map from shard files back to the original stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardManifest {
    #[serde(rename = "version")]
    pub format_version: u32,
    pub total_bytes: u64,
    pub alignment: u64,
    pub shards: Vec<ShardEntry>,
}

impl ShardManifest {
    /// Check that shards are sorted by offset, contiguous from 0, and sum
    /// to `total_bytes`.
    pub fn validate(&self) -> Result<()> {
        let mut expected_offset = 0u64;
        for (i, shard) in self.shards.iter().enumerate() {
            if shard.offset != expected_offset {
                return Err(Error::Manifest(format!(
                    "shard {i} starts at {}, expected {expected_offset} (gap or overlap)",
                    shard.offset
                )));
            }
            expected_offset = expected_offset.checked_add(shard.length).ok_or_else(|| {
                Error::Manifest(format!("shard {i} length overflows the byte range"))
            })?;
        }
        if expected_offset != self.total_bytes {
            return Err(Error::Manifest(format!(
                "shards cover {expected_offset} bytes, manifest says {}",
                self.total_bytes
            )));
        }
        Ok(())
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Manifest(format!("encode: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: ShardManifest =
            serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("decode: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported manifest version {}",
                manifest.format_version
            )));
        }
        manifest.validate()?;
        Ok(manifest)
    }
}

/// `<stem>.manifest.json`
pub fn manifest_path(stem: &Path) -> PathBuf {
    append_ext(stem, "manifest.json")
}

/// `<stem>.shard-<i>-of-<k>`
pub fn shard_path(stem: &Path, index: usize, count: usize) -> PathBuf {
    append_ext(stem, &format!("shard-{index}-of-{count}"))
}

fn append_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut os = stem.as_os_str().to_owned();
    os.push(".");
    os.push(ext);
    PathBuf::from(os)
}

/// Recover the stem from a manifest path (inverse of [`manifest_path`]).
pub fn stem_from_manifest_path(path: &Path) -> Result<PathBuf> {
    let s = path.to_str().ok_or_else(|| {
        Error::Manifest(format!("manifest path {} is not UTF-8", path.display()))
    })?;
    match s.strip_suffix(".manifest.json") {
        Some(stem) if !stem.is_empty() => Ok(PathBuf::from(stem)),
        _ => Err(Error::Manifest(format!(
            "manifest path {s:?} does not end in .manifest.json"
        ))),
    }
}

/// Reassemble stream bytes from shards, verifying per-shard length and
/// crc32 against the manifest. Shards are given in manifest order.
pub fn assemble(shards: &[Vec<u8>], manifest: &ShardManifest) -> Result<Vec<u8>> {
    manifest.validate()?;
    if shards.len() != manifest.shards.len() {
        return Err(Error::Manifest(format!(
            "got {} shards, manifest lists {}",
            shards.len(),
            manifest.shards.len()
        )));
    }
    let mut out = Vec::with_capacity(manifest.total_bytes as usize);
    for (i, (bytes, entry)) in shards.iter().zip(&manifest.shards).enumerate() {
        if bytes.len() as u64 != entry.length {
            return Err(Error::ShardCorrupt {
                shard_index: i,
                writer_id: entry.writer_id,
                expected: entry.crc32,
                actual: crc32fast::hash(bytes),
            });
        }
        let actual = crc32fast::hash(bytes);
        if actual != entry.crc32 {
            return Err(Error::ShardCorrupt {
                shard_index: i,
                writer_id: entry.writer_id,
                expected: entry.crc32,
                actual,
            });
        }
        out.extend_from_slice(bytes);
    }
    Ok(out)
}

/// Load a sharded checkpoint back into tensor records.
///
/// Shard files are read by up to `reader_count` concurrent readers (each
/// reader owns a disjoint subset of shards), then reassembled and decoded.
/// The result is independent of `reader_count`.
pub fn load_parallel(manifest_path: &Path, reader_count: usize) -> Result<Vec<TensorRecord>> {
    if reader_count == 0 {
        return Err(Error::Config("reader_count must be >= 1".into()));
    }
    let manifest = ShardManifest::read_from(manifest_path)?;
    let stem = stem_from_manifest_path(manifest_path)?;
    let count = manifest.shards.len();

    let mut slots: Vec<Option<Vec<u8>>> = (0..count).map(|_| None).collect();
    if count > 0 {
        let readers = reader_count.min(count);
        let results: Vec<Mutex<Option<Result<Vec<u8>>>>> =
            (0..count).map(|_| Mutex::new(None)).collect();
        thread::scope(|scope| {
            for reader in 0..readers {
                let stem = &stem;
                let results = &results;
                scope.spawn(move || {
                    for index in (reader..count).step_by(readers) {
                        let path = shard_path(stem, index, count);
                        let read = fs::read(&path).map_err(|e| Error::ShardUnreadable {
                            shard_index: index,
                            path,
                            source: e,
                        });
                        *results[index].lock().unwrap() = Some(read);
                    }
                });
            }
        });
        for (index, slot) in results.into_iter().enumerate() {
            slots[index] = Some(slot.into_inner().unwrap().expect("reader covered shard")?);
        }
    }

    let shards: Vec<Vec<u8>> = slots.into_iter().map(|s| s.unwrap()).collect();
    let bytes = assemble(&shards, &manifest)?;
    let stream = SerializedStream::from_bytes(bytes)?;
    deserialize(&stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f32_tensor(name: &str, shape: Vec<u64>) -> TensorRecord {
        let elems: u64 = shape.iter().product();
        let payload = (0..elems * 4).map(|i| (i % 251) as u8).collect();
        TensorRecord::new(name, DType::F32, shape, payload).unwrap()
    }

    #[test]
    fn crc32_known_vector() {
        // IEEE polynomial check value.
        assert_eq!(crc32fast::hash(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn single_record_stream_is_49_bytes() {
        // header 16 + record (2 + 1 + 1 + 1 + 8 + 8 + 8) + footer 4
        let rec = TensorRecord::new("w", DType::F32, vec![2], vec![0u8; 8]).unwrap();
        assert_eq!(rec.encoded_len(), 29);
        let stream = serialize(&[rec]).unwrap();
        assert_eq!(stream.len(), 49);
        assert_eq!(stream.record_offsets(), &[(16, 29)]);
    }

    #[test]
    fn empty_record_list_round_trips() {
        let stream = serialize(&[]).unwrap();
        assert_eq!(stream.len(), HEADER_LEN + FOOTER_LEN);
        let parsed = SerializedStream::from_bytes(stream.bytes().to_vec()).unwrap();
        assert_eq!(deserialize(&parsed).unwrap(), vec![]);
    }

    #[test]
    fn record_order_and_offsets_preserved() {
        let a = f32_tensor("a", vec![3]);
        let b = f32_tensor("b", vec![2, 2]);
        let stream = serialize(&[a.clone(), b.clone()]).unwrap();
        let offs = stream.record_offsets();
        assert_eq!(offs.len(), 2);
        assert!(offs[0].0 < offs[1].0);
        assert_eq!(offs[1].0, offs[0].0 + offs[0].1);
        assert_eq!(deserialize(&stream).unwrap(), vec![a, b]);
    }

    #[test]
    fn serialization_is_deterministic() {
        let recs = vec![f32_tensor("x", vec![5]), f32_tensor("y", vec![1, 7])];
        assert_eq!(
            serialize(&recs).unwrap().bytes(),
            serialize(&recs).unwrap().bytes()
        );
    }

    #[test]
    fn mismatched_payload_rejected() {
        let err = TensorRecord::new("w", DType::F32, vec![2], vec![0u8; 7]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
        let err = TensorRecord::new("", DType::I8, vec![0], vec![]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn zero_dim_shape_means_empty_payload() {
        let rec = TensorRecord::new("z", DType::F64, vec![0, 4], vec![]).unwrap();
        let stream = serialize(std::slice::from_ref(&rec)).unwrap();
        assert_eq!(deserialize(&stream).unwrap(), vec![rec]);
    }

    #[test]
    fn corrupted_footer_detected() {
        let stream = serialize(&[f32_tensor("w", vec![4])]).unwrap();
        let mut bytes = stream.into_bytes();
        let n = bytes.len();
        bytes[n - 1] ^= 0xff;
        assert!(matches!(
            SerializedStream::from_bytes(bytes),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn corrupted_body_detected() {
        let stream = serialize(&[f32_tensor("w", vec![4])]).unwrap();
        let mut bytes = stream.into_bytes();
        bytes[20] ^= 0x01;
        assert!(SerializedStream::from_bytes(bytes).is_err());
    }

    #[test]
    fn split_examples() {
        let s = split_aligned(1030, 512).unwrap();
        assert_eq!((s.prefix_len, s.suffix_len), (1024, 6));
        let s = split_aligned(1024, 512).unwrap();
        assert_eq!((s.prefix_len, s.suffix_len), (1024, 0));
        let s = split_aligned(0, 512).unwrap();
        assert_eq!((s.prefix_len, s.suffix_len), (0, 0));
        // 17 GiB checkpoint loses less than one sector to the buffered path.
        let s = split_aligned(17 * (1 << 30), 512).unwrap();
        assert!(s.suffix_len < 512);
        assert_eq!(s.prefix_len + s.suffix_len, 17 * (1 << 30));
    }

    #[test]
    fn split_rejects_bad_alignment() {
        assert!(matches!(split_aligned(100, 500), Err(Error::Config(_))));
        assert!(matches!(split_aligned(100, 256), Err(Error::Config(_))));
        assert!(matches!(split_aligned(100, 0), Err(Error::Config(_))));
    }

    fn manifest_for(chunks: &[&[u8]]) -> ShardManifest {
        let mut offset = 0;
        let shards = chunks
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let e = ShardEntry {
                    writer_id: i as u32,
                    offset,
                    length: c.len() as u64,
                    crc32: crc32fast::hash(c),
                };
                offset += c.len() as u64;
                e
            })
            .collect();
        ShardManifest {
            format_version: FORMAT_VERSION,
            total_bytes: offset,
            alignment: 512,
            shards,
        }
    }

    #[test]
    fn assemble_restores_original_bytes() {
        let data: Vec<u8> = (0..10).collect();
        let chunks = [&data[0..4], &data[4..7], &data[7..10]];
        let manifest = manifest_for(&chunks);
        let shards: Vec<Vec<u8>> = chunks.iter().map(|c| c.to_vec()).collect();
        assert_eq!(assemble(&shards, &manifest).unwrap(), data);
    }

    #[test]
    fn assemble_single_shard_is_identity() {
        let data: Vec<u8> = (0..99).collect();
        let manifest = manifest_for(&[&data]);
        assert_eq!(assemble(std::slice::from_ref(&data), &manifest).unwrap(), data);
    }

    #[test]
    fn assemble_flags_flipped_bit_with_writer_id() {
        let data: Vec<u8> = (0..10).collect();
        let chunks = [&data[0..4], &data[4..7], &data[7..10]];
        let manifest = manifest_for(&chunks);
        let mut shards: Vec<Vec<u8>> = chunks.iter().map(|c| c.to_vec()).collect();
        shards[1][0] ^= 0x80;
        match assemble(&shards, &manifest).unwrap_err() {
            Error::ShardCorrupt {
                shard_index,
                writer_id,
                ..
            } => {
                assert_eq!(shard_index, 1);
                assert_eq!(writer_id, 1);
            }
            other => panic!("expected ShardCorrupt, got {other:?}"),
        }
    }

    #[test]
    fn assemble_rejects_gap() {
        let data: Vec<u8> = (0..10).collect();
        let chunks = [&data[0..4], &data[4..7], &data[7..10]];
        let mut manifest = manifest_for(&chunks);
        manifest.shards[2].offset += 1;
        let shards: Vec<Vec<u8>> = chunks.iter().map(|c| c.to_vec()).collect();
        assert!(matches!(
            assemble(&shards, &manifest),
            Err(Error::Manifest(_))
        ));
    }

    #[test]
    fn manifest_json_uses_contracted_keys() {
        let manifest = manifest_for(&[&[1u8, 2, 3]]);
        let json = serde_json::to_value(&manifest).unwrap();
        assert!(json.get("version").is_some());
        assert!(json.get("total_bytes").is_some());
        assert!(json.get("alignment").is_some());
        let shard = &json["shards"][0];
        for key in ["writer_id", "offset", "length", "crc32"] {
            assert!(shard.get(key).is_some(), "missing key {key}");
        }
    }

    #[test]
    fn stem_round_trip() {
        let stem = Path::new("/tmp/run/ckpt-3");
        let m = manifest_path(stem);
        assert_eq!(m, Path::new("/tmp/run/ckpt-3.manifest.json"));
        assert_eq!(stem_from_manifest_path(&m).unwrap(), stem);
        assert_eq!(
            shard_path(stem, 2, 8),
            Path::new("/tmp/run/ckpt-3.shard-2-of-8")
        );
    }
}
