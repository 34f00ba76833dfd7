//! Parallel multi-run execution and across-run aggregation.
//!
//! Every run gets its own seed from [`derive_seed`] and results are gathered
//! in run order, so aggregates are bit-identical for any thread count.

use anyhow::Result;
use iabandit_core::engine::{derive_seed, per_receiver_state_means};
use iabandit_core::stats::MeanStderr;
use iabandit_core::{
    generate_pool, precompute_true_means, regret_trace, run_combinational, run_distributed,
    LinkTable, PolicyKind, RewardKind, RewardModel, RunTrace, ScenarioConfig, TrueMeans, USERS,
};
use rayon::prelude::*;

use crate::config::Mode;

/// Maps `f` over `0..n` in parallel, keeping index order.
pub fn par_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f` on a pool of `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    Ok(pool.install(f))
}

/// Seed of one run. The mode occupies the high half of the policy slot so
/// combinational and distributed runs of the same policy stay independent.
pub fn run_seed(master: u64, run: usize, policy: usize, mode: Mode, axis: usize) -> u64 {
    let policy_id = ((mode as u64) << 32) | policy as u64;
    derive_seed(master, run as u64, policy_id, axis as u64)
}

pub fn build_table(cfg: &ScenarioConfig) -> Result<LinkTable> {
    Ok(LinkTable::build(&generate_pool(cfg)?)?)
}

/// A reward model with its exact arm means, ready to run policies against.
pub struct Bench<'a> {
    pub model: RewardModel<'a>,
    pub means: TrueMeans,
    pub receiver_means: [Vec<f64>; USERS],
}

impl<'a> Bench<'a> {
    pub fn new(table: &'a LinkTable, p_tx: f64, reward: RewardKind) -> Result<Self> {
        let model = RewardModel::new(table, p_tx, reward)?;
        let means = precompute_true_means(&model)?;
        let receiver_means = per_receiver_state_means(&model)?;
        Ok(Bench {
            model,
            means,
            receiver_means,
        })
    }

    pub fn run(&self, kind: PolicyKind, mode: Mode, horizon: usize, seed: u64) -> Result<RunTrace> {
        Ok(match mode {
            Mode::Combinational => {
                run_combinational(&self.model, &self.means, kind, horizon, seed)?
            }
            Mode::Distributed => {
                run_distributed(&self.model, kind, horizon, seed, Some(&self.receiver_means))?
            }
        })
    }
}

/// Shared settings of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    /// Linear transmit power, used unless the power is the swept axis.
    pub p_tx: f64,
    pub reward: RewardKind,
    pub mode: Mode,
    pub slots: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Axis {
    /// Linear transmit powers; metric is the mean sum rate of a run.
    Power(Vec<f64>),
    /// Antenna states per receiver; metric is the cumulative regret at the horizon.
    States(Vec<usize>),
    /// Slot counts; metric is the cumulative regret after that many slots.
    Horizon(Vec<usize>),
}

impl Axis {
    pub fn len(&self) -> usize {
        match self {
            Axis::Power(v) => v.len(),
            Axis::States(v) => v.len(),
            Axis::Horizon(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Across-run mean and standard error of one metric per (axis value, policy).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub policies: Vec<String>,
    /// `cells[value][policy]`.
    pub cells: Vec<Vec<MeanStderr>>,
    pub runs: usize,
    /// Arm count at each axis value.
    pub arms: Vec<usize>,
    pub resamples: u64,
    pub degenerate_entries: usize,
}

pub fn sweep(cfg: &SweepConfig, axis: Axis, policies: &[PolicyKind]) -> Result<SweepResult> {
    anyhow::ensure!(!axis.is_empty(), "sweep axis has no values");
    anyhow::ensure!(cfg.runs >= 1, "runs must be at least 1");
    let mut out = SweepResult {
        axis: axis.clone(),
        policies: policies.iter().map(|p| p.label()).collect(),
        cells: Vec::new(),
        runs: cfg.runs,
        arms: Vec::new(),
        resamples: 0,
        degenerate_entries: 0,
    };

    match &axis {
        Axis::Power(powers) => {
            let table = build_table(&cfg.scenario)?;
            out.degenerate_entries = table.degenerate_count();
            for (ai, &p_tx) in powers.iter().enumerate() {
                let bench = Bench::new(&table, p_tx, cfg.reward)?;
                let row = sweep_cell(cfg, &bench, policies, ai, &mut out.resamples, |t, _| {
                    Ok(vec![t.mean_sum_rate()])
                })?;
                out.cells
                    .push(row.into_iter().map(|mut v| v.remove(0)).collect());
                out.arms.push(table.n_arms());
            }
        }
        Axis::States(values) => {
            for (ai, &states) in values.iter().enumerate() {
                let scenario = ScenarioConfig {
                    state_powers: if cfg.scenario.states == states {
                        cfg.scenario.state_powers.clone()
                    } else {
                        iabandit_core::channel::default_state_powers(states)
                    },
                    states,
                    ..cfg.scenario.clone()
                };
                let table = build_table(&scenario)?;
                out.degenerate_entries += table.degenerate_count();
                let bench = Bench::new(&table, cfg.p_tx, cfg.reward)?;
                let row = sweep_cell(cfg, &bench, policies, ai, &mut out.resamples, |t, m| {
                    Ok(vec![*regret_trace(t, m)?.last().unwrap_or(&0.0)])
                })?;
                out.cells
                    .push(row.into_iter().map(|mut v| v.remove(0)).collect());
                out.arms.push(table.n_arms());
            }
        }
        Axis::Horizon(slots) => {
            let max = *slots.iter().max().expect("nonempty");
            anyhow::ensure!(
                slots.iter().all(|&s| s >= 1),
                "horizon values must be positive"
            );
            let table = build_table(&cfg.scenario)?;
            out.degenerate_entries = table.degenerate_count();
            let bench = Bench::new(&table, cfg.p_tx, cfg.reward)?;
            let long = SweepConfig {
                slots: max,
                ..cfg.clone()
            };
            let per_policy = sweep_cell(&long, &bench, policies, 0, &mut out.resamples, |t, m| {
                let r = regret_trace(t, m)?;
                Ok(slots.iter().map(|&s| r[s - 1]).collect())
            })?;
            for vi in 0..slots.len() {
                out.cells.push(per_policy.iter().map(|v| v[vi]).collect());
                out.arms.push(table.n_arms());
            }
        }
    }
    Ok(out)
}

/// Runs every policy `cfg.runs` times and aggregates the metrics `f` returns
/// per run; the result is indexed `[policy][metric]`.
fn sweep_cell<F>(
    cfg: &SweepConfig,
    bench: &Bench<'_>,
    policies: &[PolicyKind],
    axis_index: usize,
    resamples: &mut u64,
    f: F,
) -> Result<Vec<Vec<MeanStderr>>>
where
    F: Fn(&RunTrace, &TrueMeans) -> Result<Vec<f64>> + Sync + Send,
{
    let mut cells = Vec::with_capacity(policies.len());
    for (pi, &kind) in policies.iter().enumerate() {
        let per_run = par_map(cfg.runs, |run| {
            let seed = run_seed(cfg.seed, run, pi, cfg.mode, axis_index);
            let trace = bench.run(kind, cfg.mode, cfg.slots, seed)?;
            Ok((f(&trace, &bench.means)?, trace.resamples))
        })?;
        *resamples += per_run.iter().map(|r| r.1).sum::<u64>();
        let width = per_run[0].0.len();
        cells.push(
            (0..width)
                .map(|m| {
                    let xs: Vec<f64> = per_run.iter().map(|r| r.0[m]).collect();
                    MeanStderr::from_samples(&xs)
                })
                .collect(),
        );
    }
    Ok(cells)
}

/// Across-run mean and standard error of a per-slot series at each slot in
/// `slots` (1-based).
pub fn aggregate_at(series: &[Vec<f64>], slots: &[usize]) -> Vec<MeanStderr> {
    let mut xs = Vec::with_capacity(series.len());
    slots
        .iter()
        .map(|&s| {
            xs.clear();
            xs.extend(series.iter().map(|r| r[s - 1]));
            MeanStderr::from_samples(&xs)
        })
        .collect()
}

/// Slots `every, 2·every, …` plus the horizon, 1-based.
pub fn record_slots(horizon: usize, every: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=horizon / every).map(|i| i * every).collect();
    if v.last() != Some(&horizon) {
        v.push(horizon);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_slots_includes_horizon() {
        assert_eq!(record_slots(10, 3), vec![3, 6, 9, 10]);
        assert_eq!(record_slots(4, 1), vec![1, 2, 3, 4]);
        assert_eq!(record_slots(5, 10), vec![5]);
    }

    #[test]
    fn par_map_keeps_order() {
        let v = with_threads(3, || par_map(100, |i| Ok(i * i)))
            .unwrap()
            .unwrap();
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }
}
