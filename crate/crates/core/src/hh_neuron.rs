//! Hodgkin-Huxley neuron on the CORDIC fixed-point datapath, with a
//! float64 twin used as the reference oracle.
//!
//! Both backends run the same control flow: per timestep the rate
//! functions are evaluated at the pre-update membrane potential (so the
//! six argument divisions are independent), gating powers are built by
//! repeated CORDIC multiplies, the three ionic-current terms accumulate
//! in a quire, and the explicit-Euler update closes the step. The same
//! five work stages drive the per-neuron FSM, so one full FSM cycle is
//! bit-identical to one [`HhCore::euler_step`] by construction.

use alloc::vec::Vec;
use core::fmt;

use crate::cordic::{CordicMode, CordicPlan, ExecutionStyle, PreparedCordic};
use crate::fixedpoint::{Fixed, QFormat};
use crate::neural_pool::SpikeTrain;

/// Membrane constants and integration settings, in physical units
/// (uF/cm^2, mS/cm^2, mV, ms).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuronParams {
    pub c_m: f64,
    pub g_na: f64,
    pub g_k: f64,
    pub g_l: f64,
    pub v_na: f64,
    pub v_k: f64,
    pub v_l: f64,
    pub dt: f64,
    pub v_threshold: f64,
}

impl Default for NeuronParams {
    /// Classical squid-axon constants in the -65 mV resting convention.
    fn default() -> Self {
        NeuronParams {
            c_m: 1.0,
            g_na: 120.0,
            g_k: 36.0,
            g_l: 0.3,
            v_na: 50.0,
            v_k: -77.0,
            v_l: -54.387,
            dt: 0.01,
            v_threshold: 0.0,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.c_m > 0.0) || !(self.dt > 0.0) {
            return Err(ParamError::NonPositive);
        }
        if self.g_na < 0.0 || self.g_k < 0.0 || self.g_l < 0.0 {
            return Err(ParamError::NegativeConductance);
        }
        if !(self.v_na > self.v_threshold && self.v_threshold > self.v_k) {
            return Err(ParamError::ThresholdOrdering);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamError {
    NonPositive,
    NegativeConductance,
    ThresholdOrdering,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonPositive => write!(f, "c_m and dt must be positive"),
            ParamError::NegativeConductance => write!(f, "conductances must be non-negative"),
            ParamError::ThresholdOrdering => write!(f, "need v_na > v_threshold > v_k"),
        }
    }
}

impl core::error::Error for ParamError {}

/// The per-step pipeline phases of a single neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Idle,
    RateCalc,
    PowerCalc,
    CurrentCalc,
    UpdateState,
    Done,
}

/// Gating transition rates at one membrane potential, in 1/ms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSet<T> {
    pub alpha_m: T,
    pub beta_m: T,
    pub alpha_h: T,
    pub beta_h: T,
    pub alpha_n: T,
    pub beta_n: T,
}

/// Intermediate values carried between FSM phases.
#[derive(Clone, Copy, Debug)]
struct Scratch {
    rates: RateSet<Fixed>,
    n4: Fixed,
    m3h: Fixed,
    i_ion: Fixed,
    crossed: bool,
}

impl Scratch {
    fn zero(fmt: QFormat) -> Self {
        let z = Fixed::zero(fmt);
        Scratch {
            rates: RateSet {
                alpha_m: z,
                beta_m: z,
                alpha_h: z,
                beta_h: z,
                alpha_n: z,
                beta_n: z,
            },
            n4: z,
            m3h: z,
            i_ion: z,
            crossed: false,
        }
    }
}

/// Dynamic state of one fixed-point neuron.
#[derive(Clone, Copy, Debug)]
pub struct NeuronState {
    pub v: Fixed,
    pub m: Fixed,
    pub h: Fixed,
    pub n: Fixed,
    pub phase: Phase,
    pub spiked_last_step: bool,
    scratch: Scratch,
}

impl NeuronState {
    pub fn new(v: Fixed, m: Fixed, h: Fixed, n: Fixed) -> Self {
        let fmt = v.format();
        NeuronState {
            v,
            m,
            h,
            n,
            phase: Phase::Idle,
            spiked_last_step: false,
            scratch: Scratch::zero(fmt),
        }
    }

    /// Bitwise dynamic-state equality (v, m, h, n, spike flag).
    pub fn same_dynamics(&self, other: &NeuronState) -> bool {
        self.v.raw() == other.v.raw()
            && self.m.raw() == other.m.raw()
            && self.h.raw() == other.h.raw()
            && self.n.raw() == other.n.raw()
            && self.spiked_last_step == other.spiked_last_step
    }
}

/// The fixed-point datapath: quantized constants plus prepared CORDIC
/// kernels for multiply, divide, and exp.
#[derive(Clone, Debug)]
pub struct HhCore {
    fmt: QFormat,
    pub params: NeuronParams,
    g_na: Fixed,
    g_k: Fixed,
    g_l: Fixed,
    v_na: Fixed,
    v_k: Fixed,
    v_l: Fixed,
    dt: Fixed,
    thr: Fixed,
    /// Divided once at build time on the iterative divider.
    dt_over_cm: Fixed,
    one: Fixed,
    c40: Fixed,
    c65: Fixed,
    c35: Fixed,
    c55: Fixed,
    c10: Fixed,
    c18: Fixed,
    c20: Fixed,
    c80: Fixed,
    c100: Fixed,
    c200: Fixed,
    c007: Fixed,
    c01: Fixed,
    eps: Fixed,
    mul: PreparedCordic,
    div: PreparedCordic,
    exp: PreparedCordic,
}

impl HhCore {
    pub fn new(params: NeuronParams, fmt: QFormat) -> Self {
        Self::with_styles(params, fmt, ExecutionStyle::Parallel, ExecutionStyle::Iterative)
    }

    /// Build the datapath with chosen deployment styles (numerically
    /// identical; recorded for the latency model).
    pub fn with_styles(
        params: NeuronParams,
        fmt: QFormat,
        rate_style: ExecutionStyle,
        scalar_style: ExecutionStyle,
    ) -> Self {
        let q = |x: f64| Fixed::from_real(x, fmt);
        let mul = CordicPlan::for_format(CordicMode::LinearRotate, rate_style, fmt).prepare(fmt);
        let div = CordicPlan::for_format(CordicMode::LinearVector, rate_style, fmt).prepare(fmt);
        let exp =
            CordicPlan::for_format(CordicMode::HyperbolicRotate, rate_style, fmt).prepare(fmt);
        let div_once =
            CordicPlan::for_format(CordicMode::LinearVector, scalar_style, fmt).prepare(fmt);
        let dt_over_cm = div_once
            .divide(q(params.dt), q(params.c_m))
            .expect("c_m > 0");
        HhCore {
            fmt,
            params,
            g_na: q(params.g_na),
            g_k: q(params.g_k),
            g_l: q(params.g_l),
            v_na: q(params.v_na),
            v_k: q(params.v_k),
            v_l: q(params.v_l),
            dt: q(params.dt),
            thr: q(params.v_threshold),
            dt_over_cm,
            one: Fixed::one(fmt),
            c40: q(40.0),
            c65: q(65.0),
            c35: q(35.0),
            c55: q(55.0),
            c10: q(10.0),
            c18: q(18.0),
            c20: q(20.0),
            c80: q(80.0),
            c100: q(100.0),
            c200: q(200.0),
            c007: q(0.07),
            c01: q(0.1),
            eps: q(0.0625),
            mul,
            div,
            exp,
        }
    }

    pub fn format(&self) -> QFormat {
        self.fmt
    }

    pub fn quantize(&self, x: f64) -> Fixed {
        Fixed::from_real(x, self.fmt)
    }

    #[inline]
    fn divide(&self, num: Fixed, den: Fixed) -> Fixed {
        // totality: den == 0 cannot be reached from the guarded call sites
        self.div.divide(num, den).expect("nonzero divisor")
    }

    /// All six Table-style rates at the given membrane potential. The
    /// removable singularities of alpha_m / alpha_n are replaced by their
    /// series limit inside a small guard band (and whenever quantization
    /// collapses the denominator), which makes the map total.
    pub fn rate_set(&self, v: Fixed) -> RateSet<Fixed> {
        let u1 = v.sat_add(self.c40);
        let u2 = v.sat_add(self.c65);
        let u3 = v.sat_add(self.c35);
        let u4 = v.sat_add(self.c55);

        // the six argument divisions; independent, deployed 6x in parallel
        let x_m = self.divide(u1, self.c10);
        let x_bm = self.divide(u2, self.c18);
        let x_h = self.divide(u2, self.c20);
        let x_bh = self.divide(u3, self.c10);
        let x_n = self.divide(u4, self.c10);
        let x_bn = self.divide(u2, self.c80);

        let alpha_m = if u1.raw().abs() < self.eps.raw() {
            // u/(1 - e^-u/10) ~ 10 + u/2, scaled by 0.1
            self.one.sat_add(self.divide(u1, self.c20))
        } else {
            let e = self.exp.exp(x_m.sat_neg());
            let den10 = self.mul.multiply(self.one.sat_sub(e), self.c10);
            if den10.raw() == 0 {
                self.one.sat_add(self.divide(u1, self.c20))
            } else {
                self.divide(u1, den10)
            }
        };

        let beta_m = self.exp.exp(x_bm.sat_neg()).shl_sat(2);
        let alpha_h = self.mul.multiply(self.exp.exp(x_h.sat_neg()), self.c007);
        let beta_h = {
            let den = self.one.sat_add(self.exp.exp(x_bh.sat_neg()));
            self.divide(self.one, den)
        };

        let alpha_n = if u4.raw().abs() < self.eps.raw() {
            self.c01.sat_add(self.divide(u4, self.c200))
        } else {
            let e = self.exp.exp(x_n.sat_neg());
            let den100 = self.mul.multiply(self.one.sat_sub(e), self.c100);
            if den100.raw() == 0 {
                self.c01.sat_add(self.divide(u4, self.c200))
            } else {
                self.divide(u4, den100)
            }
        };

        let beta_n = self.exp.exp(x_bn.sat_neg()).shr_floor(3);

        RateSet {
            alpha_m,
            beta_m,
            alpha_h,
            beta_h,
            alpha_n,
            beta_n,
        }
    }

    fn clamp01(&self, x: Fixed) -> Fixed {
        if x.raw() < 0 {
            Fixed::zero(self.fmt)
        } else if x.raw() > self.one.raw() {
            self.one
        } else {
            x
        }
    }

    /// One explicit-Euler gating update, clamped to [0, 1].
    pub fn gating_step(&self, x: Fixed, alpha: Fixed, beta: Fixed, dt: Fixed) -> Fixed {
        let grow = self.mul.multiply(alpha, self.one.sat_sub(x));
        let decay = self.mul.multiply(beta, x);
        let delta = self.mul.multiply(grow.sat_sub(decay), dt);
        self.clamp01(x.sat_add(delta))
    }

    fn powers(&self, s: &NeuronState) -> (Fixed, Fixed) {
        let mul = &self.mul;
        let n2 = mul.multiply(s.n, s.n);
        let n4 = mul.multiply(n2, n2);
        let m2 = mul.multiply(s.m, s.m);
        let m3 = mul.multiply(m2, s.m);
        let m3h = mul.multiply(m3, s.h);
        (n4, m3h)
    }

    fn current_from_powers(&self, v: Fixed, n4: Fixed, m3h: Fixed) -> Fixed {
        let mul = &self.mul;
        let t_k = mul.multiply(mul.multiply(v.sat_sub(self.v_k), self.g_k), n4);
        let t_na = mul.multiply(mul.multiply(v.sat_sub(self.v_na), self.g_na), m3h);
        let t_l = mul.multiply(v.sat_sub(self.v_l), self.g_l);
        t_k.to_quire().add(t_na.to_quire()).add(t_l.to_quire()).to_fixed()
    }

    /// Total ionic current at the state's potential and gate values.
    pub fn ionic_current(&self, s: &NeuronState) -> Fixed {
        let (n4, m3h) = self.powers(s);
        self.current_from_powers(s.v, n4, m3h)
    }

    fn work_rate(&self, s: &mut NeuronState) {
        s.scratch.rates = self.rate_set(s.v);
    }

    fn work_power(&self, s: &mut NeuronState) {
        let (n4, m3h) = self.powers(s);
        s.scratch.n4 = n4;
        s.scratch.m3h = m3h;
    }

    fn work_current(&self, s: &mut NeuronState) {
        s.scratch.i_ion = self.current_from_powers(s.v, s.scratch.n4, s.scratch.m3h);
    }

    fn work_update(&self, s: &mut NeuronState, i_inj: Fixed) {
        let r = s.scratch.rates;
        let dv = self
            .mul
            .multiply(i_inj.sat_sub(s.scratch.i_ion), self.dt_over_cm);
        let v_next = s.v.sat_add(dv);
        s.scratch.crossed = v_next.raw() >= self.thr.raw() && s.v.raw() < self.thr.raw();
        s.m = self.gating_step(s.m, r.alpha_m, r.beta_m, self.dt);
        s.h = self.gating_step(s.h, r.alpha_h, r.beta_h, self.dt);
        s.n = self.gating_step(s.n, r.alpha_n, r.beta_n, self.dt);
        s.v = v_next;
    }

    fn work_done(&self, s: &mut NeuronState) {
        s.spiked_last_step = s.scratch.crossed;
    }

    /// One full timestep: rates at the pre-update potential, gating powers,
    /// ionic current, Euler update, spike latch.
    pub fn euler_step(&self, s: &NeuronState, i_inj: Fixed) -> NeuronState {
        let mut next = *s;
        self.work_rate(&mut next);
        self.work_power(&mut next);
        self.work_current(&mut next);
        self.work_update(&mut next, i_inj);
        self.work_done(&mut next);
        next
    }

    /// Advance the per-neuron FSM by exactly one phase. Returns the phase
    /// entered, or `None` for the idle self-loop. A full cycle of six calls
    /// from `Idle` with `start_sim` high equals one `euler_step` bit for bit.
    pub fn fsm_step(
        &self,
        s: &mut NeuronState,
        start_sim: bool,
        i_inj: Fixed,
    ) -> Option<Phase> {
        match s.phase {
            Phase::Idle => {
                if !start_sim {
                    return None;
                }
                s.phase = Phase::RateCalc;
                self.work_rate(s);
            }
            Phase::RateCalc => {
                s.phase = Phase::PowerCalc;
                self.work_power(s);
            }
            Phase::PowerCalc => {
                s.phase = Phase::CurrentCalc;
                self.work_current(s);
            }
            Phase::CurrentCalc => {
                s.phase = Phase::UpdateState;
                self.work_update(s, i_inj);
            }
            Phase::UpdateState => {
                s.phase = Phase::Done;
                self.work_done(s);
            }
            Phase::Done => {
                s.phase = Phase::Idle;
            }
        }
        Some(s.phase)
    }

    /// Resting state: V = -65 mV, gates at their steady-state values
    /// computed through the fixed-point datapath itself.
    pub fn init_state(&self) -> NeuronState {
        let v0 = self.quantize(-65.0);
        let r = self.rate_set(v0);
        let gate = |a: Fixed, b: Fixed| self.clamp01(self.divide(a, a.sat_add(b)));
        NeuronState::new(
            v0,
            gate(r.alpha_m, r.beta_m),
            gate(r.alpha_h, r.beta_h),
            gate(r.alpha_n, r.beta_n),
        )
    }
}

/// Float64 twin of the fixed datapath. Same control flow; arithmetic in
/// f64 with the analytic limit at the singular points.
#[derive(Clone, Copy, Debug)]
pub struct RefCore {
    pub params: NeuronParams,
}

/// Float64 neuron state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefState {
    pub v: f64,
    pub m: f64,
    pub h: f64,
    pub n: f64,
    pub spiked_last_step: bool,
}

/// Rate functions in f64 over the same formulas.
pub fn rate_set_f64(v: f64) -> RateSet<f64> {
    let u1 = v + 40.0;
    let u2 = v + 65.0;
    let u3 = v + 35.0;
    let u4 = v + 55.0;
    let alpha_m = if u1 == 0.0 {
        1.0
    } else {
        0.1 * u1 / (1.0 - libm::exp(-u1 / 10.0))
    };
    let beta_m = 4.0 * libm::exp(-u2 / 18.0);
    let alpha_h = 0.07 * libm::exp(-u2 / 20.0);
    let beta_h = 1.0 / (1.0 + libm::exp(-u3 / 10.0));
    let alpha_n = if u4 == 0.0 {
        0.1
    } else {
        0.01 * u4 / (1.0 - libm::exp(-u4 / 10.0))
    };
    let beta_n = 0.125 * libm::exp(-u2 / 80.0);
    RateSet {
        alpha_m,
        beta_m,
        alpha_h,
        beta_h,
        alpha_n,
        beta_n,
    }
}

impl RefCore {
    pub fn new(params: NeuronParams) -> Self {
        RefCore { params }
    }

    pub fn init_state(&self) -> RefState {
        let r = rate_set_f64(-65.0);
        RefState {
            v: -65.0,
            m: r.alpha_m / (r.alpha_m + r.beta_m),
            h: r.alpha_h / (r.alpha_h + r.beta_h),
            n: r.alpha_n / (r.alpha_n + r.beta_n),
            spiked_last_step: false,
        }
    }

    pub fn ionic_current(&self, s: &RefState) -> f64 {
        let p = &self.params;
        let n4 = s.n * s.n * s.n * s.n;
        let m3h = s.m * s.m * s.m * s.h;
        p.g_k * n4 * (s.v - p.v_k) + p.g_na * m3h * (s.v - p.v_na) + p.g_l * (s.v - p.v_l)
    }

    pub fn euler_step(&self, s: &RefState, i_inj: f64) -> RefState {
        let p = &self.params;
        let r = rate_set_f64(s.v);
        let i_ion = self.ionic_current(s);
        let v = s.v + (p.dt / p.c_m) * (i_inj - i_ion);
        let gate = |x: f64, a: f64, b: f64| {
            let y = x + p.dt * (a * (1.0 - x) - b * x);
            y.clamp(0.0, 1.0)
        };
        RefState {
            v,
            m: gate(s.m, r.alpha_m, r.beta_m),
            h: gate(s.h, r.alpha_h, r.beta_h),
            n: gate(s.n, r.alpha_n, r.beta_n),
            spiked_last_step: v >= p.v_threshold && s.v < p.v_threshold,
        }
    }
}

/// Which arithmetic backend a simulation runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimBackend {
    FixedCordic(QFormat),
    Float64Ref,
}

/// Per-step simulation record. Values are the float view of each backend.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub dt_ms: f64,
    pub t_ms: Vec<f64>,
    pub v: Vec<f64>,
    pub m: Vec<f64>,
    pub h: Vec<f64>,
    pub n: Vec<f64>,
    pub spike: Vec<bool>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn spike_count(&self) -> usize {
        self.spike.iter().filter(|&&s| s).count()
    }

    /// Single-channel spike train of this trace.
    pub fn spike_train(&self) -> SpikeTrain {
        let events: Vec<u32> = self
            .spike
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| if s { Some(i as u32) } else { None })
            .collect();
        SpikeTrain::from_events(alloc::vec![events], self.spike.len() as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimulateError {
    /// The stimulus series has fewer samples than requested steps.
    StimulusTooShort { needed: usize, got: usize },
    ZeroSteps,
}

impl fmt::Display for SimulateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulateError::StimulusTooShort { needed, got } => {
                write!(f, "stimulus has {got} samples, need {needed}")
            }
            SimulateError::ZeroSteps => write!(f, "simulation needs at least one step"),
        }
    }
}

impl core::error::Error for SimulateError {}

/// Drive one neuron for `steps` timesteps with a per-step injected-current
/// series. Both backends share this driver.
pub fn simulate(
    params: &NeuronParams,
    stimulus: &[f64],
    steps: usize,
    backend: SimBackend,
) -> Result<SimTrace, SimulateError> {
    if steps == 0 {
        return Err(SimulateError::ZeroSteps);
    }
    if stimulus.len() < steps {
        return Err(SimulateError::StimulusTooShort {
            needed: steps,
            got: stimulus.len(),
        });
    }
    let dt = params.dt;
    let mut trace = SimTrace {
        dt_ms: dt,
        t_ms: Vec::with_capacity(steps),
        v: Vec::with_capacity(steps),
        m: Vec::with_capacity(steps),
        h: Vec::with_capacity(steps),
        n: Vec::with_capacity(steps),
        spike: Vec::with_capacity(steps),
    };
    match backend {
        SimBackend::FixedCordic(fmt) => {
            let core = HhCore::new(*params, fmt);
            let mut s = core.init_state();
            for (k, &i) in stimulus.iter().take(steps).enumerate() {
                s = core.euler_step(&s, core.quantize(i));
                trace.t_ms.push((k + 1) as f64 * dt);
                trace.v.push(s.v.to_real());
                trace.m.push(s.m.to_real());
                trace.h.push(s.h.to_real());
                trace.n.push(s.n.to_real());
                trace.spike.push(s.spiked_last_step);
            }
        }
        SimBackend::Float64Ref => {
            let core = RefCore::new(*params);
            let mut s = core.init_state();
            for (k, &i) in stimulus.iter().take(steps).enumerate() {
                s = core.euler_step(&s, i);
                trace.t_ms.push((k + 1) as f64 * dt);
                trace.v.push(s.v);
                trace.m.push(s.m);
                trace.h.push(s.h);
                trace.n.push(s.n);
                trace.spike.push(s.spiked_last_step);
            }
        }
    }
    Ok(trace)
}

/// Injected-current waveforms used by the firing-pattern presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StimulusSpec {
    Constant {
        amplitude: f64,
    },
    /// `baseline` before `t_on_ms`, `amplitude` after.
    Step {
        t_on_ms: f64,
        amplitude: f64,
        baseline: f64,
    },
    /// Rectangular pulse train starting at `start_ms`.
    PulseTrain {
        period_ms: f64,
        width_ms: f64,
        high: f64,
        low: f64,
        start_ms: f64,
    },
    /// Linear ramp from `baseline` to `peak` over `t_end_ms`, then hold.
    Ramp {
        t_end_ms: f64,
        peak: f64,
        baseline: f64,
    },
}

impl StimulusSpec {
    pub fn value_at(&self, t_ms: f64) -> f64 {
        match *self {
            StimulusSpec::Constant { amplitude } => amplitude,
            StimulusSpec::Step {
                t_on_ms,
                amplitude,
                baseline,
            } => {
                if t_ms >= t_on_ms {
                    amplitude
                } else {
                    baseline
                }
            }
            StimulusSpec::PulseTrain {
                period_ms,
                width_ms,
                high,
                low,
                start_ms,
            } => {
                if t_ms < start_ms {
                    low
                } else {
                    let ph = (t_ms - start_ms) % period_ms;
                    if ph < width_ms {
                        high
                    } else {
                        low
                    }
                }
            }
            StimulusSpec::Ramp {
                t_end_ms,
                peak,
                baseline,
            } => {
                if t_ms >= t_end_ms {
                    peak
                } else {
                    baseline + (peak - baseline) * t_ms / t_end_ms
                }
            }
        }
    }

    /// Per-step current series for a run of `steps` timesteps.
    pub fn materialize(&self, dt_ms: f64, steps: usize) -> Vec<f64> {
        (0..steps).map(|k| self.value_at(k as f64 * dt_ms)).collect()
    }
}

/// The five firing-pattern identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternName {
    FastSpiking,
    IntrinsicallyBursting,
    Chattering,
    LowThreshold,
    TonicRebound,
}

impl PatternName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PatternName::FastSpiking => "fast_spiking",
            PatternName::IntrinsicallyBursting => "intrinsically_bursting",
            PatternName::Chattering => "chattering",
            PatternName::LowThreshold => "low_threshold",
            PatternName::TonicRebound => "tonic_rebound",
        }
    }

    pub fn parse(s: &str) -> Option<PatternName> {
        Some(match s {
            "fast_spiking" => PatternName::FastSpiking,
            "intrinsically_bursting" => PatternName::IntrinsicallyBursting,
            "chattering" => PatternName::Chattering,
            "low_threshold" => PatternName::LowThreshold,
            "tonic_rebound" => PatternName::TonicRebound,
            _ => return None,
        })
    }

    pub fn all() -> [PatternName; 5] {
        [
            PatternName::FastSpiking,
            PatternName::IntrinsicallyBursting,
            PatternName::Chattering,
            PatternName::LowThreshold,
            PatternName::TonicRebound,
        ]
    }
}

/// A named firing pattern: parameters plus stimulus, loaded from preset
/// data files by the companion crate.
#[derive(Clone, Copy, Debug)]
pub struct PatternPreset {
    pub name: PatternName,
    pub params: NeuronParams,
    pub stimulus: StimulusSpec,
    pub duration_ms: f64,
}

impl PatternPreset {
    pub fn steps(&self) -> usize {
        libm::round(self.duration_ms / self.params.dt) as usize
    }

    pub fn run(&self, backend: SimBackend) -> Result<SimTrace, SimulateError> {
        let steps = self.steps();
        let stim = self.stimulus.materialize(self.params.dt, steps);
        simulate(&self.params, &stim, steps, backend)
    }
}
