//! Rate-coded spiking inference over 28x28 digit images: deterministic
//! encoders, the 784 -> 64 -> 10 network built on the neural pool, and a
//! pairwise STDP rule.
//!
//! Weight provisioning (the float64 surrogate trainer) and IDX file
//! handling live in the companion crate; this module is the pure
//! inference path.

use alloc::vec::Vec;
use core::fmt;

use rand_core::{RngCore, SeedableRng};

use crate::fixedpoint::QFormat;
use crate::hh_neuron::NeuronParams;
use crate::neural_pool::{DimensionMismatch, NeuralPool, PoolConfig, SpikeTrain, SynapseMatrix};

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const HIDDEN_NEURONS: usize = 64;
pub const CLASS_COUNT: usize = 10;

/// A labelled digit image set.
#[derive(Clone, Debug, Default)]
pub struct MnistDataset {
    pub images: Vec<[u8; IMAGE_PIXELS]>,
    pub labels: Vec<u8>,
}

impl MnistDataset {
    pub fn count(&self) -> usize {
        debug_assert_eq!(self.images.len(), self.labels.len());
        self.images.len()
    }
}

/// How a pixel intensity becomes a spike train.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncodeScheme {
    /// Evenly spaced spikes with a channel-indexed phase offset; the spike
    /// count per channel is phase-independent.
    DeterministicPhase,
    /// Per-step Bernoulli draws from a stream seeded only by this value
    /// and the channel index.
    Poisson { seed: u64 },
}

/// Rate-coding window and scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateCodeConfig {
    pub window_ms: f64,
    pub max_rate_hz: f64,
    pub scheme: EncodeScheme,
}

impl Default for RateCodeConfig {
    fn default() -> Self {
        RateCodeConfig {
            window_ms: 100.0,
            max_rate_hz: 200.0,
            scheme: EncodeScheme::DeterministicPhase,
        }
    }
}

impl RateCodeConfig {
    /// A saturated pixel must emit at least one spike in the window.
    pub fn validate(&self) -> bool {
        self.window_ms > 0.0 && self.max_rate_hz * self.window_ms / 1000.0 >= 1.0
    }

    pub fn steps(&self, dt_ms: f64) -> usize {
        libm::round(self.window_ms / dt_ms) as usize
    }
}

const GOLDEN_CONJ: f64 = 0.618_033_988_749_894_9;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Encode one image: channel `i` fires at `(pixel_i / 255) * max_rate_hz`.
pub fn rate_encode(image: &[u8], cfg: &RateCodeConfig, dt_ms: f64) -> SpikeTrain {
    let steps = cfg.steps(dt_ms);
    assert!(steps >= 1, "dt must divide the window into at least one step");
    let mut events: Vec<Vec<u32>> = Vec::with_capacity(image.len());
    for (i, &pix) in image.iter().enumerate() {
        let rate_hz = pix as f64 / 255.0 * cfg.max_rate_hz;
        let mut ch = Vec::new();
        match cfg.scheme {
            EncodeScheme::DeterministicPhase => {
                let count = libm::floor(rate_hz * cfg.window_ms / 1000.0) as usize;
                let count = count.min(steps);
                if count > 0 {
                    let phase = libm::fmod(i as f64 * GOLDEN_CONJ, 1.0);
                    let spacing = cfg.window_ms / count as f64;
                    for k in 0..count {
                        let t = (k as f64 + phase) * spacing;
                        let step = (libm::floor(t / dt_ms) as u32).min(steps as u32 - 1);
                        if ch.last().is_none_or(|&l| l < step) {
                            ch.push(step);
                        }
                    }
                }
            }
            EncodeScheme::Poisson { seed } => {
                let p = rate_hz * dt_ms / 1000.0;
                if p > 0.0 {
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                        seed ^ splitmix64(i as u64 + 1),
                    );
                    for step in 0..steps {
                        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                        if u < p {
                            ch.push(step as u32);
                        }
                    }
                }
            }
        }
        events.push(ch);
    }
    SpikeTrain::from_events(events, steps as u32)
}

/// The rate-coded classifier: input weights into one hidden pool, readout
/// weights into the ten class neurons.
#[derive(Clone, Debug)]
pub struct SnnNetwork {
    pub w_in: SynapseMatrix,
    pub w_out: SynapseMatrix,
    pub encode: RateCodeConfig,
    pub params: NeuronParams,
    pub format: QFormat,
}

/// Outcome of one inference: predicted digit, per-class spike counts, and
/// the hidden pool's spike activity fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub digit: u8,
    pub counts: [u32; CLASS_COUNT],
    pub hidden_activity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopologyError {
    pub matrix: &'static str,
    pub expected: (usize, usize),
    pub got: (usize, usize),
}

impl fmt::Display for TopologyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} must be {}x{}, got {}x{}",
            self.matrix, self.expected.0, self.expected.1, self.got.0, self.got.1
        )
    }
}

impl core::error::Error for TopologyError {}

impl SnnNetwork {
    pub fn new(
        w_in: SynapseMatrix,
        w_out: SynapseMatrix,
        encode: RateCodeConfig,
        params: NeuronParams,
        format: QFormat,
    ) -> Result<Self, TopologyError> {
        if (w_in.pre_count(), w_in.post_count()) != (IMAGE_PIXELS, HIDDEN_NEURONS) {
            return Err(TopologyError {
                matrix: "w_in",
                expected: (IMAGE_PIXELS, HIDDEN_NEURONS),
                got: (w_in.pre_count(), w_in.post_count()),
            });
        }
        if (w_out.pre_count(), w_out.post_count()) != (HIDDEN_NEURONS, CLASS_COUNT) {
            return Err(TopologyError {
                matrix: "w_out",
                expected: (HIDDEN_NEURONS, CLASS_COUNT),
                got: (w_out.pre_count(), w_out.post_count()),
            });
        }
        Ok(SnnNetwork {
            w_in,
            w_out,
            encode,
            params,
            format,
        })
    }

    pub fn sim_steps(&self) -> usize {
        self.encode.steps(self.params.dt)
    }

    /// Encode, run both layers, and pick the class with the most output
    /// spikes; ties break toward the lowest class index.
    pub fn infer(&self, image: &[u8]) -> Result<Inference, DimensionMismatch> {
        let input = rate_encode(image, &self.encode, self.params.dt);
        let mut hidden_pool = NeuralPool::new(&PoolConfig::new(
            HIDDEN_NEURONS,
            self.params,
            self.format,
        ));
        let hidden = hidden_pool.run_layer(&self.w_in, &input)?;
        let hidden_activity = hidden.activity_fraction();
        let mut out_pool =
            NeuralPool::new(&PoolConfig::new(CLASS_COUNT, self.params, self.format));
        let out = out_pool.run_layer(&self.w_out, &hidden)?;
        let mut counts = [0u32; CLASS_COUNT];
        for (c, n) in counts.iter_mut().zip(out.counts()) {
            *c = n as u32;
        }
        let mut digit = 0u8;
        for (k, &c) in counts.iter().enumerate() {
            if c > counts[digit as usize] {
                digit = k as u8;
            }
        }
        Ok(Inference {
            digit,
            counts,
            hidden_activity,
        })
    }
}

/// Pairwise STDP parameters and weight clip range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StdpConfig {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus_ms: f64,
    pub tau_minus_ms: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for StdpConfig {
    fn default() -> Self {
        StdpConfig {
            a_plus: 0.010,
            a_minus: 0.012,
            tau_plus_ms: 20.0,
            tau_minus_ms: 20.0,
            w_min: 0.0,
            w_max: 1.0,
        }
    }
}

/// One pairwise weight update. Post-after-pre (delta >= 0, zero counts as
/// causal) potentiates by `a_plus * exp(-dt/tau+)`; pre-after-post
/// depresses by `a_minus * exp(dt/tau-)`. The result clips to the
/// configured range.
pub fn stdp_update(w: f64, t_pre_ms: f64, t_post_ms: f64, cfg: &StdpConfig) -> f64 {
    let dt = t_post_ms - t_pre_ms;
    let dw = if dt >= 0.0 {
        cfg.a_plus * libm::exp(-dt / cfg.tau_plus_ms)
    } else {
        -cfg.a_minus * libm::exp(dt / cfg.tau_minus_ms)
    };
    (w + dw).clamp(cfg.w_min, cfg.w_max)
}
