//! Analytical cycle and throughput model for CORDIC deployments.
//!
//! The model prices each pipeline phase from its operation inventory and
//! the chosen deployment style: an iterative unit serializes its k
//! operations (`k * stages` cycles) while a parallel deployment runs them
//! on concurrent units (`ceil(k / units) * stages`), and add reductions
//! collapse from `k` to `ceil(log2 k)` adder cycles with a tree. Relative
//! latencies are the target; absolute nanoseconds are out of scope.

use alloc::vec::Vec;

use crate::cordic::{CordicPlan, ExecutionStyle};
use crate::hh_neuron::Phase;

/// Unit costs and clocking for the latency model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub cycles_per_cordic_stage: u64,
    pub adder_cycles: u64,
    pub clock_hz: f64,
    /// Concurrent divider units available to a parallel RATE_CALC.
    pub divider_units: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            cycles_per_cordic_stage: 1,
            adder_cycles: 1,
            clock_hz: 100e6,
            divider_units: 6,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> bool {
        self.cycles_per_cordic_stage > 0
            && self.adder_cycles > 0
            && self.clock_hz > 0.0
            && self.divider_units > 0
    }
}

/// Stage depth and style for one kernel kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanCost {
    pub stages: u64,
    pub style: ExecutionStyle,
}

impl PlanCost {
    pub fn from_plan(plan: &CordicPlan) -> Self {
        PlanCost {
            stages: plan.schedule().len() as u64,
            style: plan.style,
        }
    }
}

/// Deployment choice per kernel kind, covering every FSM phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeploymentPlans {
    pub multiply: PlanCost,
    pub divide: PlanCost,
    pub exp: PlanCost,
    pub adders: ExecutionStyle,
}

impl DeploymentPlans {
    /// Every kernel iterative, `stages` deep.
    pub fn all_iterative(stages: u64) -> Self {
        let p = PlanCost {
            stages,
            style: ExecutionStyle::Iterative,
        };
        DeploymentPlans {
            multiply: p,
            divide: p,
            exp: p,
            adders: ExecutionStyle::Iterative,
        }
    }

    /// Every kernel on parallel units, `stages` deep.
    pub fn all_parallel(stages: u64) -> Self {
        let p = PlanCost {
            stages,
            style: ExecutionStyle::Parallel,
        };
        DeploymentPlans {
            multiply: p,
            divide: p,
            exp: p,
            adders: ExecutionStyle::Parallel,
        }
    }
}

/// Operation counts of one FSM phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseOps {
    pub muls: u64,
    pub divs: u64,
    pub exps: u64,
    pub adds: u64,
}

impl PhaseOps {
    pub fn total(&self) -> u64 {
        self.muls + self.divs + self.exps + self.adds
    }
}

/// Operation inventory along the per-step phase chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseInventory {
    pub phases: Vec<(Phase, PhaseOps)>,
}

impl PhaseInventory {
    /// Inventory of the fixed-point datapath in this crate: six argument
    /// divisions plus the ratio divisions and exponentials in RATE_CALC,
    /// the gating-power multiply chain, the three-term current
    /// accumulation, and the Euler update.
    pub fn rchh_default() -> Self {
        PhaseInventory {
            phases: alloc::vec![
                (
                    Phase::RateCalc,
                    PhaseOps {
                        muls: 3,
                        divs: 9,
                        exps: 6,
                        adds: 7,
                    },
                ),
                (
                    Phase::PowerCalc,
                    PhaseOps {
                        muls: 5,
                        ..PhaseOps::default()
                    },
                ),
                (
                    Phase::CurrentCalc,
                    PhaseOps {
                        muls: 5,
                        adds: 5,
                        ..PhaseOps::default()
                    },
                ),
                (
                    Phase::UpdateState,
                    PhaseOps {
                        muls: 10,
                        adds: 11,
                        ..PhaseOps::default()
                    },
                ),
                (Phase::Done, PhaseOps::default()),
            ],
        }
    }

    /// Total operations per timestep.
    pub fn ops_per_step(&self) -> u64 {
        self.phases.iter().map(|(_, o)| o.total()).sum()
    }
}

/// Per-phase and total cycle counts for one neuron timestep.
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyReport {
    pub neuron_cycles: u64,
    pub pool_cycles: u64,
    pub est_gops: f64,
    pub breakdown: Vec<(Phase, u64)>,
}

fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn ceil_log2(k: u64) -> u64 {
    debug_assert!(k >= 1);
    64 - (k - 1).leading_zeros() as u64
}

/// Latency of k same-kind CORDIC operations on one unit class.
fn group_latency(k: u64, plan: PlanCost, units: u64, cost: &CostModel) -> u64 {
    if k == 0 {
        return 0;
    }
    let lat = plan.stages * cost.cycles_per_cordic_stage;
    match plan.style {
        ExecutionStyle::Iterative => k * lat,
        ExecutionStyle::Parallel => ceil_div(k, units.max(1)) * lat,
    }
}

/// Latency of reducing/performing k additions.
pub fn reduction_latency(k: u64, style: ExecutionStyle, cost: &CostModel) -> u64 {
    if k == 0 {
        return 0;
    }
    match style {
        ExecutionStyle::Iterative => k * cost.adder_cycles,
        ExecutionStyle::Parallel => ceil_log2(k).max(1) * cost.adder_cycles,
    }
}

fn phase_latency(ops: PhaseOps, plans: &DeploymentPlans, cost: &CostModel) -> u64 {
    group_latency(ops.muls, plans.multiply, ops.muls.max(1), cost)
        + group_latency(ops.divs, plans.divide, cost.divider_units, cost)
        + group_latency(ops.exps, plans.exp, ops.exps.max(1), cost)
        + reduction_latency(ops.adds, plans.adders, cost)
}

/// Cycle count of one neuron timestep along the phase chain.
pub fn neuron_latency(
    inventory: &PhaseInventory,
    plans: &DeploymentPlans,
    cost: &CostModel,
) -> LatencyReport {
    let breakdown: Vec<(Phase, u64)> = inventory
        .phases
        .iter()
        .map(|&(p, ops)| (p, phase_latency(ops, plans, cost)))
        .collect();
    let neuron_cycles: u64 = breakdown.iter().map(|&(_, c)| c).sum();
    let ops = inventory.ops_per_step() as f64;
    let est_gops = if neuron_cycles > 0 {
        ops * cost.clock_hz / neuron_cycles as f64 / 1e9
    } else {
        0.0
    };
    LatencyReport {
        neuron_cycles,
        // lockstep lanes: pool depth equals neuron depth here; synaptic
        // accumulation is added by the pool-level model
        pool_cycles: neuron_cycles,
        est_gops,
        breakdown,
    }
}

/// Pool-level workload description for throughput estimation.
#[derive(Clone, Debug)]
pub struct PoolWorkload {
    pub neuron_count: u64,
    pub inventory: PhaseInventory,
    /// Synaptic accumulate ops per timestep at full activity (pre x post).
    pub synaptic_ops_per_step: u64,
    /// Fraction of synaptic work actually performed (event-driven).
    pub activity_factor: f64,
    /// Fan-in of the accumulation stage, for its reduction latency.
    pub fan_in: u64,
}

/// Throughput estimate for a pool configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputReport {
    pub neuron_cycles: u64,
    pub pool_cycles: u64,
    pub neuron_ops_per_step: f64,
    pub synaptic_ops_per_step: f64,
    pub ops_per_step: f64,
    pub steps_per_s: f64,
    pub est_gops: f64,
}

/// Operations per second of the pool: datapath ops per timestep times the
/// step rate at the model clock, with event-driven scaling on the
/// synaptic work.
pub fn pool_throughput(
    workload: &PoolWorkload,
    plans: &DeploymentPlans,
    cost: &CostModel,
) -> ThroughputReport {
    let neuron = neuron_latency(&workload.inventory, plans, cost);
    let synapse_cycles = reduction_latency(workload.fan_in, plans.adders, cost);
    let pool_cycles = neuron.neuron_cycles + synapse_cycles;
    let neuron_ops = (workload.inventory.ops_per_step() * workload.neuron_count) as f64;
    let synaptic_ops = workload.synaptic_ops_per_step as f64 * workload.activity_factor;
    let ops_per_step = neuron_ops + synaptic_ops;
    let steps_per_s = if pool_cycles > 0 {
        cost.clock_hz / pool_cycles as f64
    } else {
        0.0
    };
    ThroughputReport {
        neuron_cycles: neuron.neuron_cycles,
        pool_cycles,
        neuron_ops_per_step: neuron_ops,
        synaptic_ops_per_step: synaptic_ops,
        ops_per_step,
        steps_per_s,
        est_gops: ops_per_step * steps_per_s / 1e9,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate_calc_divs_only() -> PhaseInventory {
        PhaseInventory {
            phases: alloc::vec![(
                Phase::RateCalc,
                PhaseOps {
                    divs: 6,
                    ..PhaseOps::default()
                }
            )],
        }
    }

    #[test]
    fn six_sequential_divisions_cost_108() {
        let cost = CostModel::default();
        let report = neuron_latency(
            &rate_calc_divs_only(),
            &DeploymentPlans::all_iterative(18),
            &cost,
        );
        assert_eq!(report.neuron_cycles, 108);
    }

    #[test]
    fn six_parallel_dividers_cost_18() {
        let cost = CostModel::default();
        let report = neuron_latency(
            &rate_calc_divs_only(),
            &DeploymentPlans::all_parallel(18),
            &cost,
        );
        assert_eq!(report.neuron_cycles, 18);
    }

    #[test]
    fn doubling_iterations_doubles_cost() {
        let cost = CostModel::default();
        let inv = rate_calc_divs_only();
        let a = neuron_latency(&inv, &DeploymentPlans::all_iterative(18), &cost);
        let b = neuron_latency(&inv, &DeploymentPlans::all_iterative(36), &cost);
        assert_eq!(b.neuron_cycles, 2 * a.neuron_cycles);
        let ap = neuron_latency(&inv, &DeploymentPlans::all_parallel(18), &cost);
        let bp = neuron_latency(&inv, &DeploymentPlans::all_parallel(36), &cost);
        assert_eq!(bp.neuron_cycles, 2 * ap.neuron_cycles);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let cost = CostModel::default();
        let report = neuron_latency(
            &PhaseInventory::rchh_default(),
            &DeploymentPlans::all_parallel(18),
            &cost,
        );
        let sum: u64 = report.breakdown.iter().map(|&(_, c)| c).sum();
        assert_eq!(sum, report.neuron_cycles);
        assert!(report.pool_cycles >= report.neuron_cycles);
    }

    #[test]
    fn reduction_tree_scaling() {
        let cost = CostModel::default();
        for k in [2u64, 4, 8, 16, 32, 64] {
            assert_eq!(reduction_latency(k, ExecutionStyle::Iterative, &cost), k);
            assert_eq!(
                reduction_latency(k, ExecutionStyle::Parallel, &cost),
                ceil_log2(k)
            );
        }
        assert_eq!(ceil_log2(64), 6);
        assert_eq!(ceil_log2(33), 6);
    }

    #[test]
    fn activity_factor_scales_synaptic_ops_exactly() {
        let plans = DeploymentPlans::all_parallel(18);
        let cost = CostModel::default();
        let mk = |activity: f64| PoolWorkload {
            neuron_count: 64,
            inventory: PhaseInventory::rchh_default(),
            synaptic_ops_per_step: 784 * 64,
            activity_factor: activity,
            fan_in: 784,
        };
        let full = pool_throughput(&mk(1.0), &plans, &cost);
        let sparse = pool_throughput(&mk(0.15), &plans, &cost);
        assert!((sparse.synaptic_ops_per_step - 0.15 * full.synaptic_ops_per_step).abs() < 1e-9);
        // event-driven pool beats the iso-functional dense pipeline
        assert!(full.ops_per_step / sparse.ops_per_step > 1.0);
    }

    #[test]
    fn neuron_ops_scale_with_pool_size() {
        let plans = DeploymentPlans::all_parallel(18);
        let cost = CostModel::default();
        let mk = |n: u64| PoolWorkload {
            neuron_count: n,
            inventory: PhaseInventory::rchh_default(),
            synaptic_ops_per_step: 0,
            activity_factor: 1.0,
            fan_in: 1,
        };
        let one = pool_throughput(&mk(1), &plans, &cost);
        let pool = pool_throughput(&mk(64), &plans, &cost);
        assert!((pool.neuron_ops_per_step - 64.0 * one.neuron_ops_per_step).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_cost_parameters() {
        let inv = PhaseInventory::rchh_default();
        let plans = DeploymentPlans::all_parallel(18);
        let base = CostModel::default();
        let a = neuron_latency(&inv, &plans, &base).neuron_cycles;
        for bump in [
            CostModel {
                cycles_per_cordic_stage: 2,
                ..base
            },
            CostModel {
                adder_cycles: 3,
                ..base
            },
        ] {
            let b = neuron_latency(&inv, &plans, &bump).neuron_cycles;
            assert!(b >= a);
        }
    }
}
