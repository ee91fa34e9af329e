//! Error metrics between a trace and its float64 reference, plus spike
//! statistics.
//!
//! NRMSE is normalized by the reference range (max - min), not its mean:
//! membrane traces cross zero and mean-normalization is ill-conditioned.

use alloc::vec::Vec;
use core::fmt;

use crate::neural_pool::SpikeTrain;

/// Summary comparison of a test trace against a reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub nrmse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub max_abs_err: f64,
    pub spike_count_ref: usize,
    pub spike_count_test: usize,
    pub mean_rate_ref_hz: f64,
    pub mean_rate_test_hz: f64,
    pub isi_cv_ref: f64,
    pub isi_cv_test: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricsError {
    LengthMismatch { ref_len: usize, test_len: usize },
    TooShort,
    ConstantReference,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { ref_len, test_len } => {
                write!(f, "trace length mismatch: ref {ref_len}, test {test_len}")
            }
            MetricsError::TooShort => write!(f, "need at least two samples"),
            MetricsError::ConstantReference => write!(f, "reference trace is constant"),
        }
    }
}

impl core::error::Error for MetricsError {}

fn check(reference: &[f64], test: &[f64]) -> Result<(f64, f64), MetricsError> {
    if reference.len() != test.len() {
        return Err(MetricsError::LengthMismatch {
            ref_len: reference.len(),
            test_len: test.len(),
        });
    }
    if reference.len() < 2 {
        return Err(MetricsError::TooShort);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in reference {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if hi == lo {
        return Err(MetricsError::ConstantReference);
    }
    Ok((lo, hi))
}

/// Root-mean-square error.
pub fn rmse(reference: &[f64], test: &[f64]) -> Result<f64, MetricsError> {
    check(reference, test)?;
    let n = reference.len() as f64;
    let ss: f64 = reference
        .iter()
        .zip(test)
        .map(|(r, t)| (r - t) * (r - t))
        .sum();
    Ok(libm::sqrt(ss / n))
}

/// RMSE normalized by the reference range.
pub fn nrmse(reference: &[f64], test: &[f64]) -> Result<f64, MetricsError> {
    let (lo, hi) = check(reference, test)?;
    Ok(rmse(reference, test)? / (hi - lo))
}

/// Mean absolute error.
pub fn mae(reference: &[f64], test: &[f64]) -> Result<f64, MetricsError> {
    check(reference, test)?;
    let n = reference.len() as f64;
    let s: f64 = reference
        .iter()
        .zip(test)
        .map(|(r, t)| libm::fabs(r - t))
        .sum();
    Ok(s / n)
}

/// Largest pointwise absolute error.
pub fn max_abs_err(reference: &[f64], test: &[f64]) -> Result<f64, MetricsError> {
    check(reference, test)?;
    Ok(reference
        .iter()
        .zip(test)
        .map(|(r, t)| libm::fabs(r - t))
        .fold(0.0, f64::max))
}

/// Mean firing rate (Hz) and ISI coefficient of variation for one
/// channel's events at step resolution `dt_ms`. CV is 0 below 2 spikes.
pub fn spike_stats(events: &[u32], step_count: u32, dt_ms: f64) -> (f64, f64) {
    let duration_s = step_count as f64 * dt_ms / 1000.0;
    let rate = if duration_s > 0.0 {
        events.len() as f64 / duration_s
    } else {
        0.0
    };
    if events.len() < 2 {
        return (rate, 0.0);
    }
    let isis: Vec<f64> = events
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 * dt_ms)
        .collect();
    let mean = isis.iter().sum::<f64>() / isis.len() as f64;
    let var = isis.iter().map(|i| (i - mean) * (i - mean)).sum::<f64>() / isis.len() as f64;
    (rate, libm::sqrt(var) / mean)
}

/// Burst structure of one channel, split at 3x the minimum ISI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BurstStats {
    /// Bursts per second over the whole trace.
    pub burst_rate_hz: f64,
    /// 1 / mean intra-burst ISI; for a tonic train this is the firing rate.
    pub intra_burst_rate_hz: f64,
    pub mean_spikes_per_burst: f64,
    /// Shortest gap between consecutive bursts, ms (0 with a single burst).
    pub min_quiescence_ms: f64,
    pub min_isi_ms: f64,
}

/// Group spikes into bursts: consecutive ISIs at most 3x the minimum ISI
/// stay in one burst.
pub fn burst_stats(events: &[u32], step_count: u32, dt_ms: f64) -> Option<BurstStats> {
    if events.len() < 2 {
        return None;
    }
    let isis: Vec<f64> = events
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 * dt_ms)
        .collect();
    let min_isi = isis.iter().copied().fold(f64::INFINITY, f64::min);
    let split = 3.0 * min_isi;
    let mut bursts = 1usize;
    let mut intra: Vec<f64> = Vec::new();
    let mut min_quiescence = f64::INFINITY;
    for &i in &isis {
        if i > split {
            bursts += 1;
            min_quiescence = min_quiescence.min(i);
        } else {
            intra.push(i);
        }
    }
    let duration_s = step_count as f64 * dt_ms / 1000.0;
    let intra_mean = if intra.is_empty() {
        f64::INFINITY
    } else {
        intra.iter().sum::<f64>() / intra.len() as f64
    };
    Some(BurstStats {
        burst_rate_hz: bursts as f64 / duration_s,
        intra_burst_rate_hz: if intra_mean.is_finite() {
            1000.0 / intra_mean
        } else {
            0.0
        },
        mean_spikes_per_burst: events.len() as f64 / bursts as f64,
        min_quiescence_ms: if min_quiescence.is_finite() {
            min_quiescence
        } else {
            0.0
        },
        min_isi_ms: min_isi,
    })
}

/// Full comparison report for one pair of single-channel recordings.
pub fn compare_traces(
    reference: &[f64],
    test: &[f64],
    ref_train: &SpikeTrain,
    test_train: &SpikeTrain,
    dt_ms: f64,
) -> Result<MetricsReport, MetricsError> {
    let (r_rate, r_cv) = spike_stats(ref_train.events(0), ref_train.step_count(), dt_ms);
    let (t_rate, t_cv) = spike_stats(test_train.events(0), test_train.step_count(), dt_ms);
    Ok(MetricsReport {
        nrmse: nrmse(reference, test)?,
        rmse: rmse(reference, test)?,
        mae: mae(reference, test)?,
        max_abs_err: max_abs_err(reference, test)?,
        spike_count_ref: ref_train.events(0).len(),
        spike_count_test: test_train.events(0).len(),
        mean_rate_ref_hz: r_rate,
        mean_rate_test_hz: t_rate,
        isi_cv_ref: r_cv,
        isi_cv_test: t_cv,
    })
}
