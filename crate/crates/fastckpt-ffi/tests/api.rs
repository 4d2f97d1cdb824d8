//! Exercise the C ABI from Rust: handle lifecycle, status codes, and the
//! save/load round trip.

use std::ffi::{CStr, CString};
use std::ptr;

use fastckpt_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fc_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn version_is_non_empty() {
    let v = unsafe { CStr::from_ptr(fc_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn perf_model_wrappers() {
    unsafe {
        let mut bytes = 0u64;
        assert_eq!(
            fc_estimate_checkpoint_bytes(1_300_000_000, 14, &mut bytes),
            FcStatus::Ok
        );
        assert_eq!(bytes, 18_200_000_000);

        assert_eq!(
            fc_estimate_checkpoint_bytes(u64::MAX, 14, &mut bytes),
            FcStatus::InvalidArgument
        );
        assert!(last_error().contains("overflow"));

        let mut bps = 0f64;
        assert_eq!(
            fc_required_bandwidth(1_000, 0.25, 0.25, 1, &mut bps),
            FcStatus::Ok
        );
        assert_eq!(bps, 2000.0);
        assert_eq!(
            fc_required_bandwidth(1_000, 0.0, 0.0, 1, &mut bps),
            FcStatus::InvalidArgument
        );

        let mut overhead = 0f64;
        assert_eq!(fc_recovery_overhead(1, 1000, 10.0, &mut overhead), FcStatus::Ok);
        assert_eq!(overhead, 5000.0);
        assert_eq!(
            fc_recovery_overhead(0, 1, 1.0, &mut overhead),
            FcStatus::InvalidArgument
        );
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(
            fc_estimate_checkpoint_bytes(1, 1, ptr::null_mut()),
            FcStatus::InvalidArgument
        );
        assert_eq!(
            fc_stream_add_tensor(ptr::null_mut(), c("x").as_ptr(), 1, ptr::null(), 0, ptr::null(), 0),
            FcStatus::InvalidArgument
        );
        let stream = fc_stream_new();
        assert_eq!(
            fc_stream_add_tensor(stream, ptr::null(), 1, ptr::null(), 0, ptr::null(), 0),
            FcStatus::InvalidArgument
        );
        fc_stream_free(stream);
        fc_stream_free(ptr::null_mut());
    }
}

#[test]
fn stream_build_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let stem = c(dir.path().join("ffi-ckpt").to_str().unwrap());

    unsafe {
        let stream = fc_stream_new();
        let dims = [2u64, 3];
        let payload: Vec<u8> = (0..24).collect(); // 6 f32 elements
        assert_eq!(
            fc_stream_add_tensor(
                stream,
                c("layer.weight").as_ptr(),
                1, // f32
                dims.as_ptr(),
                dims.len(),
                payload.as_ptr(),
                payload.len(),
            ),
            FcStatus::Ok
        );
        // Payload length must match shape x dtype.
        assert_eq!(
            fc_stream_add_tensor(
                stream,
                c("bad").as_ptr(),
                1,
                dims.as_ptr(),
                dims.len(),
                payload.as_ptr(),
                7,
            ),
            FcStatus::Corrupt
        );
        assert_eq!(fc_stream_record_count(stream), 1);

        let mut serialized = 0u64;
        assert_eq!(fc_stream_serialized_bytes(stream, &mut serialized), FcStatus::Ok);
        // header 16 + (2 + 12 + 1 + 1 + 16 + 8 + 24) + footer 4
        assert_eq!(serialized, 84);

        assert_eq!(
            fc_save(stream, stem.as_ptr(), 3, 1, 4096, 512, 0),
            FcStatus::Ok
        );
        fc_stream_free(stream);

        let manifest = c(dir.path().join("ffi-ckpt.manifest.json").to_str().unwrap());
        let loaded = fc_load(manifest.as_ptr(), 2);
        assert!(!loaded.is_null(), "{}", last_error());
        assert_eq!(fc_stream_record_count(loaded), 1);

        let mut info = FcTensorInfo {
            dtype: 0,
            ndim: 0,
            name_len: 0,
            payload_len: 0,
        };
        assert_eq!(fc_stream_record_info(loaded, 0, &mut info), FcStatus::Ok);
        assert_eq!(info.dtype, 1);
        assert_eq!(info.ndim, 2);
        assert_eq!(info.name_len, 12);
        assert_eq!(info.payload_len, 24);

        let mut name = vec![0u8; info.name_len as usize];
        assert_eq!(
            fc_stream_record_name(loaded, 0, name.as_mut_ptr(), name.len()),
            FcStatus::Ok
        );
        assert_eq!(name, b"layer.weight");

        let mut got_dims = [0u64; 2];
        assert_eq!(
            fc_stream_record_dims(loaded, 0, got_dims.as_mut_ptr(), 2),
            FcStatus::Ok
        );
        assert_eq!(got_dims, dims);

        let mut got_payload = vec![0u8; info.payload_len as usize];
        assert_eq!(
            fc_stream_record_payload(loaded, 0, got_payload.as_mut_ptr(), got_payload.len()),
            FcStatus::Ok
        );
        assert_eq!(got_payload, payload);

        // Undersized buffers are reported, not overrun.
        assert_eq!(
            fc_stream_record_payload(loaded, 0, got_payload.as_mut_ptr(), 3),
            FcStatus::InvalidArgument
        );
        fc_stream_free(loaded);
    }
}

#[test]
fn load_failures_set_status_and_message() {
    unsafe {
        let missing = c("/no/such/ckpt.manifest.json");
        assert!(fc_load(missing.as_ptr(), 1).is_null());
        assert!(!last_error().is_empty());
    }

    // Corrupt shard surfaces through fc_load as NULL + message.
    let dir = tempfile::tempdir().unwrap();
    let stem_path = dir.path().join("x");
    let stem = c(stem_path.to_str().unwrap());
    unsafe {
        let stream = fc_stream_new();
        let payload = vec![7u8; 4096];
        let dims = [4096u64];
        assert_eq!(
            fc_stream_add_tensor(
                stream,
                c("t").as_ptr(),
                3,
                dims.as_ptr(),
                1,
                payload.as_ptr(),
                payload.len()
            ),
            FcStatus::Ok
        );
        assert_eq!(fc_save(stream, stem.as_ptr(), 2, 0, 512, 512, 0), FcStatus::Ok);
        fc_stream_free(stream);
    }
    let shard = dir.path().join("x.shard-1-of-2");
    let mut bytes = std::fs::read(&shard).unwrap();
    bytes[10] ^= 0x10;
    std::fs::write(&shard, bytes).unwrap();
    unsafe {
        let manifest = c(dir.path().join("x.manifest.json").to_str().unwrap());
        assert!(fc_load(manifest.as_ptr(), 1).is_null());
        assert!(last_error().contains("corrupt"), "{}", last_error());
    }
}

#[test]
fn simulate_matches_closed_form() {
    let mut out = FcSimSummary {
        steady_state_iter_time_s: 0.0,
        slowdown: 0.0,
        stall_seconds: 0.0,
        total_wall_s: 0.0,
    };
    unsafe {
        // fb = 1.0, t_o = 0.1, t_ckpt = 0.5
        assert_eq!(
            fc_simulate(1, 0.6, 0.4, 0.1, 5, 2, 500, 1000.0, &mut out),
            FcStatus::Ok
        );
        assert_eq!(out.steady_state_iter_time_s, 1.1);
        assert_eq!(out.slowdown, 1.0);
        assert_eq!(out.stall_seconds, 0.0);

        assert_eq!(
            fc_simulate(1, 0.6, 0.4, 0.1, 5, 1, 500, 1000.0, &mut out),
            FcStatus::Ok
        );
        assert_eq!(out.steady_state_iter_time_s, 1.6);

        assert_eq!(
            fc_simulate(1, 0.6, 0.4, 0.1, 5, 9, 500, 1000.0, &mut out),
            FcStatus::InvalidArgument
        );
        assert_eq!(
            fc_simulate(1, 0.6, 0.4, 0.1, 5, 2, 500, 0.0, &mut out),
            FcStatus::InvalidArgument
        );
    }
}

#[test]
fn plan_json_matches_balance_rule() {
    unsafe {
        let strategy = c("fixed:3");
        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(
            fc_plan_json(10, 1, 1, 3, 3, strategy.as_ptr(), &mut json),
            FcStatus::Ok
        );
        let text = CStr::from_ptr(json).to_string_lossy().into_owned();
        fc_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let lengths: Vec<u64> = v["assignments"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["length"].as_u64().unwrap())
            .collect();
        assert_eq!(lengths, vec![4, 3, 3]);

        // Too many writers for the rank set.
        assert_eq!(
            fc_plan_json(10, 1, 1, 2, 2, c("fixed:5").as_ptr(), &mut json),
            FcStatus::InvalidArgument
        );
    }
}
