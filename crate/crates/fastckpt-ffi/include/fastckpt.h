/* C interface to the fastckpt checkpoint persistence engine. */

#pragma once

/* Generated with cbindgen:0.27.0 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible fastckpt call.
 */
typedef enum FcStatus {
  FcStatus_Ok = 0,
  /**
   * Bad arguments or configuration.
   */
  FcStatus_InvalidArgument = 1,
  /**
   * Storage or filesystem failure.
   */
  FcStatus_IoError = 2,
  /**
   * Checksum mismatch or malformed checkpoint data.
   */
  FcStatus_Corrupt = 3,
} FcStatus;

/**
 * Opaque checkpoint content: tensor records to be saved, or records
 * produced by a load.
 */
typedef struct FcStream FcStream;

/**
 * Shape metadata of one record.
 */
typedef struct FcTensorInfo {
  uint8_t dtype;
  uint8_t ndim;
  /**
   * Bytes of the tensor name (UTF-8, no terminator).
   */
  uint64_t name_len;
  uint64_t payload_len;
} FcTensorInfo;

/**
 * Steady-state metrics of one simulated schedule.
 */
typedef struct FcSimSummary {
  double steady_state_iter_time_s;
  double slowdown;
  double stall_seconds;
  double total_wall_s;
} FcSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Never `NULL`;
 * empty string when no error occurred yet.
 */
const char *fc_last_error(void);

/**
 * Library version as a static string.
 */
const char *fc_version(void);

/**
 * Checkpoint state bytes for a parameter count (14 bytes/param covers
 * mixed-precision Adam training).
 *
 * # Safety
 * `out_bytes` must be writable.
 */
enum FcStatus fc_estimate_checkpoint_bytes(uint64_t param_count,
                                           uint64_t bytes_per_param,
                                           uint64_t *out_bytes);

/**
 * Write bandwidth (bytes/second) needed to hide a checkpoint behind one
 * iteration's forward+backward compute.
 *
 * # Safety
 * `out_bps` must be writable.
 */
enum FcStatus fc_required_bandwidth(uint64_t checkpoint_bytes,
                                    double t_forward,
                                    double t_backward,
                                    uint32_t gas,
                                    double *out_bps);

/**
 * Expected GPU-seconds lost to one interruption when checkpointing every
 * `interval_n` iterations on `gpu_count_m` GPUs.
 *
 * # Safety
 * `out_gpu_seconds` must be writable.
 */
enum FcStatus fc_recovery_overhead(uint64_t interval_n,
                                   uint64_t gpu_count_m,
                                   double iter_time_t,
                                   double *out_gpu_seconds);

/**
 * New empty stream handle. Free with [`fc_stream_free`].
 */
struct FcStream *fc_stream_new(void);

/**
 * Release a stream handle. `NULL` is a no-op.
 *
 * # Safety
 * `stream` must have come from [`fc_stream_new`] or [`fc_load`] and must
 * not be used afterwards.
 */
void fc_stream_free(struct FcStream *stream);

/**
 * Append one tensor record. `dtype` codes: f16=0, f32=1, f64=2, i8=3,
 * i32=4, i64=5. `payload_len` must equal the element count times the
 * element size.
 *
 * # Safety
 * `dims` must point to `ndim` u64 values and `payload` to `payload_len`
 * bytes (either may be `NULL` when its length is zero).
 */
enum FcStatus fc_stream_add_tensor(struct FcStream *stream,
                                   const char *name,
                                   uint8_t dtype,
                                   const uint64_t *dims,
                                   uintptr_t ndim,
                                   const uint8_t *payload,
                                   uintptr_t payload_len);

/**
 * Number of tensor records in the stream.
 *
 * # Safety
 * `stream` must be a live handle.
 */
uintptr_t fc_stream_record_count(const struct FcStream *stream);

/**
 * Size in bytes of the serialized container for this stream.
 *
 * # Safety
 * `stream` must be a live handle; `out_bytes` must be writable.
 */
enum FcStatus fc_stream_serialized_bytes(const struct FcStream *stream, uint64_t *out_bytes);

/**
 * Metadata of record `index`.
 *
 * # Safety
 * `stream` must be a live handle; `out` must be writable.
 */
enum FcStatus fc_stream_record_info(const struct FcStream *stream,
                                    uintptr_t index,
                                    struct FcTensorInfo *out);

/**
 * Copy the record's name (not NUL-terminated) into `buf`.
 *
 * # Safety
 * `buf` must have room for `cap` bytes.
 */
enum FcStatus fc_stream_record_name(const struct FcStream *stream,
                                    uintptr_t index,
                                    uint8_t *buf,
                                    uintptr_t cap);

/**
 * Copy the record's dims into `buf` (`cap` counts u64 slots).
 *
 * # Safety
 * `buf` must have room for `cap` u64 values.
 */
enum FcStatus fc_stream_record_dims(const struct FcStream *stream,
                                    uintptr_t index,
                                    uint64_t *buf,
                                    uintptr_t cap);

/**
 * Copy the record's payload bytes into `buf`.
 *
 * # Safety
 * `buf` must have room for `cap` bytes.
 */
enum FcStatus fc_stream_record_payload(const struct FcStream *stream,
                                       uintptr_t index,
                                       uint8_t *buf,
                                       uintptr_t cap);

/**
 * Serialize the stream and persist it as `writer_count` balanced shards
 * plus a JSON manifest at `<stem>.manifest.json`. `double_buffer`
 * non-zero selects the overlapped two-buffer write pipeline.
 *
 * # Safety
 * `stem` must be a NUL-terminated path.
 */
enum FcStatus fc_save(const struct FcStream *stream,
                      const char *stem,
                      uint32_t writer_count,
                      uint8_t double_buffer,
                      uint64_t buffer_bytes,
                      uint64_t alignment,
                      uint8_t lock_memory);

/**
 * Load a sharded checkpoint; returns a stream handle of its records, or
 * `NULL` (see [`fc_last_error`]) on failure.
 *
 * # Safety
 * `manifest_path` must be a NUL-terminated path.
 */
struct FcStream *fc_load(const char *manifest_path, uint32_t reader_count);

/**
 * Evaluate the checkpoint schedule analytically. `mode`: 0 no-checkpoint,
 * 1 sequential, 2 pipelined.
 *
 * # Safety
 * `out` must be writable.
 */
enum FcStatus fc_simulate(uint32_t gas,
                          double t_forward,
                          double t_backward,
                          double t_optimizer,
                          uint32_t iterations,
                          uint8_t mode,
                          uint64_t checkpoint_bytes,
                          double bandwidth_bps,
                          struct FcSimSummary *out);

/**
 * Build a byte-range partition plan and return it as a JSON string
 * (free with [`fc_string_free`]). `strategy` is "replica", "socket", or
 * "fixed:K"; ranks 0..dp form the replica group.
 *
 * # Safety
 * `strategy` must be NUL-terminated; `out_json` must be writable.
 */
enum FcStatus fc_plan_json(uint64_t total_bytes,
                           uint32_t node_count,
                           uint32_t sockets_per_node,
                           uint32_t ranks_per_node,
                           uint32_t dp,
                           const char *strategy,
                           char **out_json);

/**
 * Free a string returned by this library. `NULL` is a no-op.
 *
 * # Safety
 * `s` must have been returned by a fastckpt function.
 */
void fc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
