//! The cortical neural pool: a synchronous array of fixed-point neurons
//! behind a synaptic weighting stage that turns presynaptic spikes into
//! injected currents.
//!
//! Each timestep has two strictly ordered stages: current accumulation
//! over the incoming spike bits (quire-width sums, narrowed once per
//! postsynaptic neuron), then the lockstep neuron update. Neurons are
//! independent within a step, so any partition of the update loop across
//! workers yields bit-identical spikes.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fixedpoint::{Fixed, QFormat, Quire};
use crate::hh_neuron::{HhCore, NeuronParams, NeuronState};

/// Pool shape and shared neuron parameters.
#[derive(Clone, Copy, Debug)]
pub struct PoolConfig {
    pub neuron_count: usize,
    pub params: NeuronParams,
    pub format: QFormat,
}

impl PoolConfig {
    pub fn new(neuron_count: usize, params: NeuronParams, format: QFormat) -> Self {
        assert!(neuron_count >= 1, "pool needs at least one neuron");
        PoolConfig {
            neuron_count,
            params,
            format,
        }
    }
}

/// Dense synaptic weight matrix, `pre x post`, in uA/cm^2 injected per
/// presynaptic spike.
#[derive(Clone, Debug, PartialEq)]
pub struct SynapseMatrix {
    weights: Vec<Fixed>,
    pre: usize,
    post: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimensionMismatch {
    pub expected: usize,
    pub got: usize,
}

impl fmt::Display for DimensionMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dimension mismatch: expected {}, got {}", self.expected, self.got)
    }
}

impl core::error::Error for DimensionMismatch {}

impl SynapseMatrix {
    pub fn zeros(pre: usize, post: usize, fmt: QFormat) -> Self {
        SynapseMatrix {
            weights: vec![Fixed::zero(fmt); pre * post],
            pre,
            post,
        }
    }

    /// Build from row-major real weights, quantizing into `fmt`.
    pub fn from_real_rows(rows: &[Vec<f64>], fmt: QFormat) -> Self {
        let pre = rows.len();
        let post = rows.first().map_or(0, Vec::len);
        let mut weights = Vec::with_capacity(pre * post);
        for row in rows {
            assert_eq!(row.len(), post, "ragged weight rows");
            for &w in row {
                weights.push(Fixed::from_real(w, fmt));
            }
        }
        SynapseMatrix { weights, pre, post }
    }

    pub fn from_fixed(weights: Vec<Fixed>, pre: usize, post: usize) -> Self {
        assert_eq!(weights.len(), pre * post, "weight count mismatch");
        SynapseMatrix { weights, pre, post }
    }

    pub fn pre_count(&self) -> usize {
        self.pre
    }

    pub fn post_count(&self) -> usize {
        self.post
    }

    pub fn get(&self, pre: usize, post: usize) -> Fixed {
        self.weights[pre * self.post + post]
    }

    pub fn set(&mut self, pre: usize, post: usize, w: Fixed) {
        self.weights[pre * self.post + post] = w;
    }

    pub fn row(&self, pre: usize) -> &[Fixed] {
        &self.weights[pre * self.post..(pre + 1) * self.post]
    }

    pub fn format(&self) -> QFormat {
        self.weights
            .first()
            .map_or(crate::fixedpoint::Q16_16, Fixed::format)
    }
}

/// Timestamped binary events per neuron; the inter-layer currency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeTrain {
    /// Strictly increasing step indices per neuron.
    events: Vec<Vec<u32>>,
    step_count: u32,
}

impl SpikeTrain {
    pub fn empty(neuron_count: usize, step_count: u32) -> Self {
        SpikeTrain {
            events: vec![Vec::new(); neuron_count],
            step_count,
        }
    }

    pub fn from_events(events: Vec<Vec<u32>>, step_count: u32) -> Self {
        for ch in &events {
            debug_assert!(ch.windows(2).all(|w| w[0] < w[1]), "events not increasing");
            debug_assert!(ch.iter().all(|&e| e < step_count), "event past end");
        }
        SpikeTrain {
            events,
            step_count,
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.events.len()
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn events(&self, neuron: usize) -> &[u32] {
        &self.events[neuron]
    }

    pub fn push(&mut self, neuron: usize, step: u32) {
        debug_assert!(step < self.step_count);
        debug_assert!(self.events[neuron].last().is_none_or(|&l| l < step));
        self.events[neuron].push(step);
    }

    pub fn total_spikes(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.events.iter().map(Vec::len).collect()
    }

    /// Flat `(step, neuron)` list sorted by step then neuron id.
    pub fn sorted_events(&self) -> Vec<(u32, u32)> {
        let mut all: Vec<(u32, u32)> = self
            .events
            .iter()
            .enumerate()
            .flat_map(|(n, ev)| ev.iter().map(move |&s| (s, n as u32)))
            .collect();
        all.sort_unstable();
        all
    }

    /// Spiking neuron ids grouped by step, for event-driven replay.
    pub fn by_step(&self) -> Vec<Vec<u32>> {
        let mut steps = vec![Vec::new(); self.step_count as usize];
        for (n, ev) in self.events.iter().enumerate() {
            for &s in ev {
                steps[s as usize].push(n as u32);
            }
        }
        for s in &mut steps {
            s.sort_unstable();
        }
        steps
    }

    /// Fraction of (neuron, step) slots carrying a spike.
    pub fn activity_fraction(&self) -> f64 {
        let slots = self.events.len() as f64 * self.step_count as f64;
        if slots == 0.0 {
            0.0
        } else {
            self.total_spikes() as f64 / slots
        }
    }
}

/// Injected current per postsynaptic neuron for one step of presynaptic
/// spike bits: `I[j] = sum over spiking i of w[i][j]`, accumulated in
/// quire width and narrowed once.
pub fn synaptic_current(
    w: &SynapseMatrix,
    spikes_now: &[bool],
) -> Result<Vec<Fixed>, DimensionMismatch> {
    if spikes_now.len() != w.pre {
        return Err(DimensionMismatch {
            expected: w.pre,
            got: spikes_now.len(),
        });
    }
    let fmt = w.format();
    let mut acc = vec![Quire::zero(fmt); w.post];
    for (i, &fired) in spikes_now.iter().enumerate() {
        if fired {
            for (j, &wij) in w.row(i).iter().enumerate() {
                acc[j] = acc[j].add(wij.to_quire());
            }
        }
    }
    Ok(acc.into_iter().map(Quire::to_fixed).collect())
}

/// Same accumulation driven by a sparse list of spiking presynaptic ids.
pub fn synaptic_current_events(w: &SynapseMatrix, spiking: &[u32], out: &mut [Fixed]) {
    debug_assert_eq!(out.len(), w.post);
    let fmt = w.format();
    let mut acc = vec![Quire::zero(fmt); w.post];
    for &i in spiking {
        for (j, &wij) in w.row(i as usize).iter().enumerate() {
            acc[j] = acc[j].add(wij.to_quire());
        }
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o = a.to_fixed();
    }
}

/// A synchronous pool of fixed-point neurons sharing one parameter set
/// (per-neuron overrides allowed for pattern demos).
pub struct NeuralPool {
    core: HhCore,
    states: Vec<NeuronState>,
    step: u32,
}

impl NeuralPool {
    pub fn new(cfg: &PoolConfig) -> Self {
        let core = HhCore::new(cfg.params, cfg.format);
        let rest = core.init_state();
        NeuralPool {
            core,
            states: vec![rest; cfg.neuron_count],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn core(&self) -> &HhCore {
        &self.core
    }

    pub fn state(&self, idx: usize) -> &NeuronState {
        &self.states[idx]
    }

    pub fn steps_run(&self) -> u32 {
        self.step
    }

    pub fn reset(&mut self) {
        let rest = self.core.init_state();
        self.states.fill(rest);
        self.step = 0;
    }

    /// Split the neuron array for worker-partitioned updates. Each chunk
    /// advances independently; results do not depend on the partition.
    pub fn partition_mut(
        &mut self,
        chunk: usize,
    ) -> (impl Iterator<Item = &mut [NeuronState]>, &HhCore) {
        (self.states.chunks_mut(chunk.max(1)), &self.core)
    }

    /// Advance every neuron one timestep with its injected current;
    /// returns this step's spike bits.
    pub fn step(&mut self, i_inj: &[Fixed]) -> Vec<bool> {
        assert_eq!(i_inj.len(), self.states.len(), "current vector length");
        let core = &self.core;
        let mut spikes = vec![false; self.states.len()];
        step_slice(core, &mut self.states, i_inj, &mut spikes);
        self.step += 1;
        spikes
    }

    /// Drive the pool for the input train's full duration, composing the
    /// synaptic stage and the neuron update; returns the pool spike train.
    pub fn run_layer(
        &mut self,
        w: &SynapseMatrix,
        input: &SpikeTrain,
    ) -> Result<SpikeTrain, DimensionMismatch> {
        if input.neuron_count() != w.pre_count() {
            return Err(DimensionMismatch {
                expected: w.pre_count(),
                got: input.neuron_count(),
            });
        }
        if w.post_count() != self.len() {
            return Err(DimensionMismatch {
                expected: self.len(),
                got: w.post_count(),
            });
        }
        let steps = input.step_count();
        let mut out = SpikeTrain::empty(self.len(), steps);
        let by_step = input.by_step();
        let mut currents = vec![Fixed::zero(self.core.format()); self.len()];
        for t in 0..steps {
            synaptic_current_events(w, &by_step[t as usize], &mut currents);
            let spikes = self.step(&currents);
            for (n, &s) in spikes.iter().enumerate() {
                if s {
                    out.push(n, t);
                }
            }
        }
        Ok(out)
    }
}

/// Advance a contiguous slice of neurons one step. The building block for
/// both the sequential loop and thread-partitioned drivers; the result is
/// a pure function of each neuron's own state and current.
pub fn step_slice(core: &HhCore, states: &mut [NeuronState], i_inj: &[Fixed], spikes: &mut [bool]) {
    debug_assert_eq!(states.len(), i_inj.len());
    debug_assert_eq!(states.len(), spikes.len());
    for ((s, &i), spike) in states.iter_mut().zip(i_inj).zip(spikes.iter_mut()) {
        *s = core.euler_step(s, i);
        *spike = s.spiked_last_step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::Q16_16;

    fn cfg(n: usize) -> PoolConfig {
        PoolConfig::new(n, NeuronParams::default(), Q16_16)
    }

    #[test]
    fn synaptic_current_cases() {
        let fmt = Q16_16;
        let mut w = SynapseMatrix::zeros(3, 2, fmt);
        w.set(0, 0, Fixed::from_real(1.0, fmt));
        w.set(0, 1, Fixed::from_real(2.0, fmt));
        w.set(1, 0, Fixed::from_real(1.0, fmt));
        w.set(1, 1, Fixed::from_real(-0.5, fmt));

        let none = synaptic_current(&w, &[false, false, false]).unwrap();
        assert!(none.iter().all(|c| c.raw() == 0));

        let one = synaptic_current(&w, &[true, false, false]).unwrap();
        assert_eq!(one[0].to_real(), 1.0);
        assert_eq!(one[1].to_real(), 2.0);

        let two = synaptic_current(&w, &[true, true, false]).unwrap();
        assert_eq!(two[0].to_real(), 2.0);
        assert_eq!(two[1].to_real(), 1.5);

        assert!(synaptic_current(&w, &[true]).is_err());
    }

    #[test]
    fn superposition_of_disjoint_spike_sets() {
        let fmt = Q16_16;
        let mut w = SynapseMatrix::zeros(4, 3, fmt);
        for i in 0..4 {
            for j in 0..3 {
                w.set(i, j, Fixed::from_real(0.25 * (i + j) as f64, fmt));
            }
        }
        let s1 = [true, false, true, false];
        let s2 = [false, true, false, false];
        let both = [true, true, true, false];
        let c1 = synaptic_current(&w, &s1).unwrap();
        let c2 = synaptic_current(&w, &s2).unwrap();
        let cb = synaptic_current(&w, &both).unwrap();
        for j in 0..3 {
            assert_eq!(cb[j], c1[j].sat_add(c2[j]));
        }
    }

    #[test]
    fn quiet_pool_stays_quiet() {
        let mut pool = NeuralPool::new(&cfg(4));
        let zero = vec![Fixed::zero(Q16_16); 4];
        for _ in 0..500 {
            let spikes = pool.step(&zero);
            assert!(spikes.iter().all(|&s| !s));
        }
    }

    #[test]
    fn driven_neuron_is_isolated() {
        let mut pool = NeuralPool::new(&cfg(3));
        let mut i = vec![Fixed::zero(Q16_16); 3];
        i[1] = Fixed::from_real(10.0, Q16_16);
        let mut fired = [false; 3];
        for _ in 0..2000 {
            let spikes = pool.step(&i);
            for (f, s) in fired.iter_mut().zip(&spikes) {
                *f |= s;
            }
        }
        assert_eq!(fired, [false, true, false]);
    }

    #[test]
    fn partitioned_update_matches_sequential() {
        let build = || NeuralPool::new(&cfg(8));
        let i: Vec<Fixed> = (0..8)
            .map(|k| Fixed::from_real(k as f64 * 2.0, Q16_16))
            .collect();

        let mut seq = build();
        let mut seq_spikes = Vec::new();
        for _ in 0..800 {
            seq_spikes.push(seq.step(&i));
        }

        // chunked like a 3-worker split
        let mut par = build();
        let mut par_spikes = Vec::new();
        for _ in 0..800 {
            let mut bits = vec![false; 8];
            {
                let (chunks, core) = par.partition_mut(3);
                let mut off = 0;
                for chunk in chunks {
                    let len = chunk.len();
                    let mut local = vec![false; len];
                    step_slice(core, chunk, &i[off..off + len], &mut local);
                    bits[off..off + len].copy_from_slice(&local);
                    off += len;
                }
            }
            par_spikes.push(bits);
        }
        assert_eq!(seq_spikes, par_spikes);
    }

    #[test]
    fn run_layer_contract() {
        let mut pool = NeuralPool::new(&cfg(2));
        let w = SynapseMatrix::zeros(3, 2, Q16_16);
        let input = SpikeTrain::empty(3, 0);
        let out = pool.run_layer(&w, &input).unwrap();
        assert_eq!(out.step_count(), 0);
        assert_eq!(out.total_spikes(), 0);

        let bad = SpikeTrain::empty(5, 10);
        assert!(pool.run_layer(&w, &bad).is_err());
    }

    #[test]
    fn strong_drive_makes_every_neuron_fire() {
        let mut pool = NeuralPool::new(&cfg(4));
        let mut w = SynapseMatrix::zeros(1, 4, Q16_16);
        for j in 0..4 {
            // dense input at every step; 0.12 uA per spike-step ~ 12 uA mean
            w.set(0, j, Fixed::from_real(12.0, Q16_16));
        }
        let steps = 10_000u32; // 100 ms at dt = 0.01
        let every: Vec<u32> = (0..steps).collect();
        let input = SpikeTrain::from_events(vec![every], steps);
        let out = pool.run_layer(&w, &input).unwrap();
        for n in 0..4 {
            assert!(!out.events(n).is_empty(), "neuron {n} silent");
        }
    }

    #[test]
    fn spike_train_accessors() {
        let mut t = SpikeTrain::empty(2, 100);
        t.push(0, 3);
        t.push(0, 40);
        t.push(1, 7);
        assert_eq!(t.total_spikes(), 3);
        assert_eq!(t.counts(), vec![2, 1]);
        assert_eq!(t.sorted_events(), vec![(3, 0), (7, 1), (40, 0)]);
        let by = t.by_step();
        assert_eq!(by[3], vec![0]);
        assert_eq!(by[7], vec![1]);
        assert!((t.activity_fraction() - 3.0 / 200.0).abs() < 1e-12);
    }
}
