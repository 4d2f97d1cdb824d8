/* Minimal consumer of the generated header: build a checkpoint, shard it
 * to disk, load it back, and check the analytics entry points. */

#include "fastckpt.h"

#include <stdio.h>
#include <string.h>

static int fail(const char *what) {
  fprintf(stderr, "FAIL %s: %s\n", what, fc_last_error());
  return 1;
}

int main(int argc, char **argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: %s <scratch-dir>\n", argv[0]);
    return 2;
  }

  uint64_t bytes = 0;
  if (fc_estimate_checkpoint_bytes(1300000000ULL, 14, &bytes) != FcStatus_Ok)
    return fail("estimate");
  if (bytes != 18200000000ULL) return fail("estimate value");

  double bps = 0.0;
  if (fc_required_bandwidth(bytes, 0.2, 0.109, 1, &bps) != FcStatus_Ok)
    return fail("bandwidth");
  if (bps < 5.8e10 || bps > 6.0e10) return fail("bandwidth value");

  FcSimSummary sim;
  if (fc_simulate(1, 0.6, 0.4, 0.1, 5, 2, 500, 1000.0, &sim) != FcStatus_Ok)
    return fail("simulate");
  if (sim.steady_state_iter_time_s != 1.1) return fail("simulate value");

  FcStream *stream = fc_stream_new();
  uint64_t dims[2] = {16, 8};
  uint8_t payload[16 * 8 * 4];
  for (size_t i = 0; i < sizeof payload; i++) payload[i] = (uint8_t)(i * 7);
  if (fc_stream_add_tensor(stream, "w", 1, dims, 2, payload, sizeof payload) !=
      FcStatus_Ok)
    return fail("add_tensor");

  char stem[1024], manifest[1024];
  snprintf(stem, sizeof stem, "%s/c-smoke", argv[1]);
  snprintf(manifest, sizeof manifest, "%s/c-smoke.manifest.json", argv[1]);
  if (fc_save(stream, stem, 2, 1, 4096, 512, 0) != FcStatus_Ok)
    return fail("save");
  fc_stream_free(stream);

  FcStream *loaded = fc_load(manifest, 2);
  if (!loaded) return fail("load");
  if (fc_stream_record_count(loaded) != 1) return fail("record count");

  FcTensorInfo info;
  if (fc_stream_record_info(loaded, 0, &info) != FcStatus_Ok)
    return fail("record info");
  if (info.payload_len != sizeof payload || info.ndim != 2 || info.dtype != 1)
    return fail("record shape");

  uint8_t back[sizeof payload];
  if (fc_stream_record_payload(loaded, 0, back, sizeof back) != FcStatus_Ok)
    return fail("payload copy");
  if (memcmp(back, payload, sizeof payload) != 0) return fail("payload bytes");
  fc_stream_free(loaded);

  char *json = NULL;
  if (fc_plan_json(10, 1, 1, 3, 3, "fixed:3", &json) != FcStatus_Ok)
    return fail("plan");
  if (!strstr(json, "\"length\": 4")) return fail("plan content");
  fc_string_free(json);

  printf("c smoke ok: %s\n", fc_version());
  return 0;
}
