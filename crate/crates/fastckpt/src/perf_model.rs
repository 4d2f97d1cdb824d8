//! Analytical cost models for checkpointing: state sizing, the write
//! bandwidth needed to hide checkpoint creation behind compute, and the
//! expected recovery overhead of a checkpoint interval.

use crate::error::{Error, Result};

/// Bytes of persistent state per model parameter for mixed-precision Adam
/// training: fp16 weights (2) + fp32 master weights (4) + fp32 momentum (4)
/// + fp32 variance (4).
pub const DEFAULT_BYTES_PER_PARAM: u64 = 14;

/// Size profile of one model's checkpoint state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelProfile {
    pub param_count: u64,
    pub bytes_per_param: u64,
    /// Total checkpoint state size in bytes (S_C).
    pub checkpoint_bytes: u64,
}

impl ModelProfile {
    /// Derive the checkpoint size from a parameter count.
    pub fn from_params(param_count: u64, bytes_per_param: u64) -> Result<Self> {
        let checkpoint_bytes = estimate_checkpoint_bytes(param_count, bytes_per_param)?;
        Ok(ModelProfile {
            param_count,
            bytes_per_param,
            checkpoint_bytes,
        })
    }

    /// Profile for a checkpoint whose serialized size is already known.
    pub fn from_checkpoint_bytes(checkpoint_bytes: u64) -> Self {
        ModelProfile {
            param_count: 0,
            bytes_per_param: 0,
            checkpoint_bytes,
        }
    }
}

/// Per-iteration compute timings.
///
/// `gas` is the number of forward/backward micro-steps accumulated per
/// optimizer step; an iteration's independent compute window is
/// `gas * (t_forward + t_backward)`. `t_optimizer` is not part of that
/// window (the optimizer is the synchronization point) and is consumed
/// only by the schedule simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationTiming {
    pub t_forward: f64,
    pub t_backward: f64,
    pub t_optimizer: f64,
    pub gas: u32,
}

impl IterationTiming {
    pub fn new(t_forward: f64, t_backward: f64, t_optimizer: f64, gas: u32) -> Result<Self> {
        if [t_forward, t_backward, t_optimizer]
            .iter()
            .any(|t| t.is_nan() || *t < 0.0)
        {
            return Err(Error::Domain(
                "iteration times must be finite and >= 0".into(),
            ));
        }
        if gas < 1 {
            return Err(Error::Domain("gas must be >= 1".into()));
        }
        Ok(IterationTiming {
            t_forward,
            t_backward,
            t_optimizer,
            gas,
        })
    }

    /// Length of the compute window a checkpoint write can overlap:
    /// `gas * (t_forward + t_backward)`.
    pub fn overlap_window(&self) -> f64 {
        self.gas as f64 * (self.t_forward + self.t_backward)
    }
}

/// Inputs to the recovery-overhead estimate: checkpoint every `interval_n`
/// iterations on `gpu_count_m` GPUs with iteration time `iter_time_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoverySpec {
    pub interval_n: u64,
    pub gpu_count_m: u64,
    pub iter_time_t: f64,
}

impl RecoverySpec {
    pub fn new(interval_n: u64, gpu_count_m: u64, iter_time_t: f64) -> Result<Self> {
        if interval_n < 1 {
            return Err(Error::Domain("checkpoint interval must be >= 1".into()));
        }
        if gpu_count_m < 1 {
            return Err(Error::Domain("gpu count must be >= 1".into()));
        }
        if iter_time_t.is_nan() || iter_time_t < 0.0 {
            return Err(Error::Domain(
                "iteration time must be finite and >= 0".into(),
            ));
        }
        Ok(RecoverySpec {
            interval_n,
            gpu_count_m,
            iter_time_t,
        })
    }
}

/// Checkpoint state size in bytes: `param_count * bytes_per_param`, exact.
pub fn estimate_checkpoint_bytes(param_count: u64, bytes_per_param: u64) -> Result<u64> {
    param_count
        .checked_mul(bytes_per_param)
        .ok_or(Error::SizeOverflow {
            param_count,
            bytes_per_param,
        })
}

/// Minimum write bandwidth (bytes/second) at which persisting a checkpoint
/// of `checkpoint_bytes` finishes within the overlappable compute of one
/// iteration: `S_C / (gas * (t_forward + t_backward))`.
///
/// With `gas == 1` this is the bare forward+backward window.
pub fn required_bandwidth(checkpoint_bytes: u64, timing: &IterationTiming) -> Result<f64> {
    let window = timing.overlap_window();
    if window.is_nan() || window <= 0.0 {
        return Err(Error::Domain(format!(
            "compute window gas*(t_forward+t_backward) must be > 0, got {window}"
        )));
    }
    Ok(checkpoint_bytes as f64 / window)
}

/// Expected GPU-seconds of recomputation lost to one interruption:
/// `(n/2) * m * t`, with `n/2` as a real number.
///
/// An interruption lands uniformly inside the interval, so on average half
/// of the `n` iterations since the last checkpoint are repeated on all `m`
/// GPUs.
pub fn recovery_overhead(spec: &RecoverySpec) -> f64 {
    (spec.interval_n as f64 / 2.0) * spec.gpu_count_m as f64 * spec.iter_time_t
}

#[cfg(test)]
mod tests {
    use super::*;

    const GIB: f64 = 1024.0 * 1024.0 * 1024.0;

    #[test]
    fn sizing_matches_published_checkpoint_sizes() {
        // 1.3e9 params * 14 B = 1.82e10 B = 16.95 GiB, published as 17 GB.
        let bytes = estimate_checkpoint_bytes(1_300_000_000, 14).unwrap();
        assert_eq!(bytes, 18_200_000_000);
        assert!((bytes as f64 / GIB - 17.0).abs() / 17.0 < 0.03);

        // 6.7e9 params * 14 B = 9.38e10 B = 87.4 GiB, published as 88 GB.
        let bytes = estimate_checkpoint_bytes(6_700_000_000, 14).unwrap();
        assert_eq!(bytes, 93_800_000_000);
        assert!((bytes as f64 / GIB - 88.0).abs() / 88.0 < 0.03);
    }

    #[test]
    fn sizing_zero_params() {
        assert_eq!(estimate_checkpoint_bytes(0, 14).unwrap(), 0);
    }

    #[test]
    fn sizing_overflow_is_an_error() {
        let err = estimate_checkpoint_bytes(u64::MAX, 14).unwrap_err();
        assert!(matches!(err, Error::SizeOverflow { .. }));
    }

    #[test]
    fn bandwidth_back_computed_from_published_tables() {
        // 17 GiB checkpoint over a 0.309 s forward+backward window should
        // land within 2% of the published 59 GB/s target.
        let timing = IterationTiming::new(0.309, 0.0, 0.0, 1).unwrap();
        let bw = required_bandwidth((17.0 * GIB) as u64, &timing).unwrap();
        assert!((bw - 59.0e9).abs() / 59.0e9 < 0.02, "bw = {bw}");
    }

    #[test]
    fn bandwidth_trivial_cases() {
        let timing = IterationTiming::new(25.0, 25.0, 1.0, 1).unwrap();
        assert_eq!(required_bandwidth(0, &timing).unwrap(), 0.0);
        assert_eq!(required_bandwidth(100, &timing).unwrap(), 2.0);
    }

    #[test]
    fn bandwidth_zero_window_is_domain_error() {
        let timing = IterationTiming::new(0.0, 0.0, 1.0, 4).unwrap();
        assert!(matches!(
            required_bandwidth(1, &timing),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bandwidth_is_homogeneous_in_checkpoint_size() {
        let timing = IterationTiming::new(0.1, 0.2, 0.05, 4).unwrap();
        let base = required_bandwidth(1_000, &timing).unwrap();
        for k in [2u64, 10, 1000] {
            let scaled = required_bandwidth(1_000 * k, &timing).unwrap();
            assert_eq!(scaled, base * k as f64);
        }
    }

    #[test]
    fn gas_stretches_the_window() {
        let t1 = IterationTiming::new(0.1, 0.1, 0.0, 1).unwrap();
        let t8 = IterationTiming::new(0.1, 0.1, 0.0, 8).unwrap();
        let b1 = required_bandwidth(1 << 30, &t1).unwrap();
        let b8 = required_bandwidth(1 << 30, &t8).unwrap();
        assert!((b1 / b8 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn recovery_examples() {
        let s = RecoverySpec::new(1, 1000, 10.0).unwrap();
        assert_eq!(recovery_overhead(&s), 5000.0);

        let s100 = RecoverySpec::new(100, 1000, 10.0).unwrap();
        assert_eq!(recovery_overhead(&s100), 500_000.0);
        assert_eq!(recovery_overhead(&s100) / recovery_overhead(&s), 100.0);

        let zero_t = RecoverySpec::new(2, 1, 0.0).unwrap();
        assert_eq!(recovery_overhead(&zero_t), 0.0);
    }

    #[test]
    fn recovery_is_linear_in_each_input() {
        let base = RecoverySpec::new(7, 13, 3.5).unwrap();
        let b = recovery_overhead(&base);
        let dn = RecoverySpec::new(14, 13, 3.5).unwrap();
        let dm = RecoverySpec::new(7, 26, 3.5).unwrap();
        let dt = RecoverySpec::new(7, 13, 7.0).unwrap();
        assert_eq!(recovery_overhead(&dn), 2.0 * b);
        assert_eq!(recovery_overhead(&dm), 2.0 * b);
        assert_eq!(recovery_overhead(&dt), 2.0 * b);
    }

    #[test]
    fn half_interval_is_not_truncated() {
        let s = RecoverySpec::new(3, 1, 1.0).unwrap();
        assert_eq!(recovery_overhead(&s), 1.5);
    }

    #[test]
    fn model_profile_derives_size() {
        let p = ModelProfile::from_params(1_300_000_000, 14).unwrap();
        assert_eq!(p.checkpoint_bytes, p.param_count * p.bytes_per_param);
        assert!(ModelProfile::from_params(u64::MAX, 3).is_err());
        let direct = ModelProfile::from_checkpoint_bytes(4096);
        assert_eq!(direct.checkpoint_bytes, 4096);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(IterationTiming::new(-1.0, 0.0, 0.0, 1).is_err());
        assert!(IterationTiming::new(f64::NAN, 0.0, 0.0, 1).is_err());
        assert!(IterationTiming::new(0.1, 0.1, 0.1, 0).is_err());
        assert!(RecoverySpec::new(0, 1, 1.0).is_err());
        assert!(RecoverySpec::new(1, 0, 1.0).is_err());
        assert!(RecoverySpec::new(1, 1, -0.5).is_err());
    }
}
