//! The five experiments and the rows they produce.

use anyhow::Result;
use iabandit_core::stats::{deciles, ecdf_sorted, MeanStderr};
use iabandit_core::{regret_trace, PolicyKind, StateCombination, USERS};
use serde::Serialize;

use crate::config::{db_to_linear, ExperimentKind, ExperimentSpec, Mode};
use crate::sweep::{
    aggregate_at, build_table, par_map, record_slots, run_seed, sweep, Axis, Bench, SweepConfig,
};

/// `regret_vs_n.csv`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretRow {
    pub slot: usize,
    pub policy: String,
    pub mean_regret: f64,
    pub stderr: f64,
    pub runs: usize,
    /// `mean_regret / slot`.
    pub time_avg_regret: f64,
}

/// `regret_vs_P.csv`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretByStatesRow {
    pub states: usize,
    pub arms: usize,
    pub policy: String,
    pub mean_regret: f64,
    pub stderr: f64,
    pub runs: usize,
    pub time_avg_regret: f64,
}

/// `sumrate_vs_power.csv`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SumRateRow {
    pub power_db: f64,
    pub policy: String,
    pub mean_sum_rate: f64,
    pub stderr: f64,
    pub runs: usize,
}

/// `chordal_cdf.csv`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfRow {
    pub policy: String,
    pub total_chordal: f64,
    pub cdf: f64,
}

/// `chordal_deciles.csv`: per-run deciles of the total chordal distance,
/// averaged across runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecileRow {
    pub policy: String,
    pub quantile: f64,
    pub total_chordal: f64,
    pub stderr: f64,
    pub runs: usize,
}

/// `distributed_vs_combinational.csv`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeRow {
    pub power_db: f64,
    pub policy: String,
    pub mode: String,
    pub mean_sum_rate: f64,
    pub stderr: f64,
    pub runs: usize,
}

/// `arm_means.csv`: exact mean reward of every joint arm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArmRow {
    pub arm: usize,
    /// Receiver states joined by `-`, receiver 0 first.
    pub states: String,
    pub mean_reward: f64,
    pub mean_sum_rate: f64,
    pub best: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tables {
    RegretVsN {
        regret: Vec<RegretRow>,
        arms: Vec<ArmRow>,
    },
    RegretVsP(Vec<RegretByStatesRow>),
    SumrateVsPower(Vec<SumRateRow>),
    ChordalCdf {
        cdf: Vec<CdfRow>,
        deciles: Vec<DecileRow>,
    },
    DistributedVsCombinational(Vec<ModeRow>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub tables: Tables,
    /// Joint arm count `C = P^K` for each `P` visited.
    pub arms: Vec<usize>,
    /// Slots whose pool draw was degenerate and had to be redrawn.
    pub resamples: u64,
    /// Pool entries at which the alignment solve failed.
    pub degenerate_entries: usize,
}

/// Runs a validated spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let policies = spec.policy_kinds();
    match spec.experiment {
        ExperimentKind::RegretVsN => regret_vs_n(spec, &policies),
        ExperimentKind::RegretVsP => regret_vs_p(spec, &policies),
        ExperimentKind::SumrateVsPower => sumrate_vs_power(spec, &policies),
        ExperimentKind::ChordalCdf => chordal_cdf(spec, &policies),
        ExperimentKind::DistributedVsCombinational => distributed_vs_combinational(spec, &policies),
    }
}

fn sweep_config(spec: &ExperimentSpec, mode: Mode) -> SweepConfig {
    SweepConfig {
        scenario: spec.scenario(spec.states),
        p_tx: db_to_linear(spec.snr_db),
        reward: spec.reward().into(),
        mode,
        slots: spec.slots,
        runs: spec.runs,
        seed: spec.seed,
    }
}

fn state_label(c: &StateCombination) -> String {
    c.0.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn regret_vs_n(spec: &ExperimentSpec, policies: &[PolicyKind]) -> Result<ExperimentOutput> {
    let table = build_table(&spec.scenario(spec.states))?;
    let bench = Bench::new(&table, db_to_linear(spec.snr_db), spec.reward().into())?;
    let slots = record_slots(spec.slots, spec.record_every);
    let mut regret = Vec::new();
    let mut resamples = 0;
    for (pi, &kind) in policies.iter().enumerate() {
        let per_run = par_map(spec.runs, |run| {
            let seed = run_seed(spec.seed, run, pi, spec.mode, 0);
            let trace = bench.run(kind, spec.mode, spec.slots, seed)?;
            Ok((regret_trace(&trace, &bench.means)?, trace.resamples))
        })?;
        resamples += per_run.iter().map(|r| r.1).sum::<u64>();
        let series: Vec<Vec<f64>> = per_run.into_iter().map(|r| r.0).collect();
        let label = kind.label();
        for (&slot, agg) in slots.iter().zip(aggregate_at(&series, &slots)) {
            regret.push(RegretRow {
                slot,
                policy: label.clone(),
                mean_regret: agg.mean,
                stderr: agg.stderr,
                runs: agg.n,
                time_avg_regret: agg.mean / slot as f64,
            });
        }
    }
    let arms = (0..table.n_arms())
        .map(|arm| {
            Ok(ArmRow {
                arm,
                states: state_label(&StateCombination::decode(arm, spec.states)?),
                mean_reward: bench.means.means[arm],
                mean_sum_rate: bench.means.mean_sum_rate[arm],
                best: arm == bench.means.best_arm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentOutput {
        tables: Tables::RegretVsN { regret, arms },
        arms: vec![table.n_arms()],
        resamples,
        degenerate_entries: table.degenerate_count(),
    })
}

fn regret_vs_p(spec: &ExperimentSpec, policies: &[PolicyKind]) -> Result<ExperimentOutput> {
    let cfg = SweepConfig {
        scenario: spec.scenario(spec.states_grid[0]),
        ..sweep_config(spec, spec.mode)
    };
    let res = sweep(&cfg, Axis::States(spec.states_grid.clone()), policies)?;
    let mut rows = Vec::new();
    for (vi, &states) in spec.states_grid.iter().enumerate() {
        for (pi, label) in res.policies.iter().enumerate() {
            let c = res.cells[vi][pi];
            rows.push(RegretByStatesRow {
                states,
                arms: res.arms[vi],
                policy: label.clone(),
                mean_regret: c.mean,
                stderr: c.stderr,
                runs: c.n,
                time_avg_regret: c.mean / spec.slots as f64,
            });
        }
    }
    Ok(ExperimentOutput {
        tables: Tables::RegretVsP(rows),
        arms: res.arms,
        resamples: res.resamples,
        degenerate_entries: res.degenerate_entries,
    })
}

fn power_sweep(
    spec: &ExperimentSpec,
    policies: &[PolicyKind],
    mode: Mode,
) -> Result<crate::sweep::SweepResult> {
    let powers = spec.power_db.iter().map(|&db| db_to_linear(db)).collect();
    sweep(&sweep_config(spec, mode), Axis::Power(powers), policies)
}

fn sumrate_vs_power(spec: &ExperimentSpec, policies: &[PolicyKind]) -> Result<ExperimentOutput> {
    let res = power_sweep(spec, policies, spec.mode)?;
    let mut rows = Vec::new();
    for (vi, &power_db) in spec.power_db.iter().enumerate() {
        for (pi, label) in res.policies.iter().enumerate() {
            let c = res.cells[vi][pi];
            rows.push(SumRateRow {
                power_db,
                policy: label.clone(),
                mean_sum_rate: c.mean,
                stderr: c.stderr,
                runs: c.n,
            });
        }
    }
    Ok(ExperimentOutput {
        tables: Tables::SumrateVsPower(rows),
        arms: vec![res.arms[0]],
        resamples: res.resamples,
        degenerate_entries: res.degenerate_entries,
    })
}

fn chordal_cdf(spec: &ExperimentSpec, policies: &[PolicyKind]) -> Result<ExperimentOutput> {
    let table = build_table(&spec.scenario(spec.states))?;
    let bench = Bench::new(&table, db_to_linear(spec.snr_db), spec.reward().into())?;
    let grid: Vec<f64> = (0..spec.cdf_points)
        .map(|j| USERS as f64 * j as f64 / (spec.cdf_points - 1) as f64)
        .collect();
    let (mut cdf, mut dec) = (Vec::new(), Vec::new());
    let mut resamples = 0;
    for (pi, &kind) in policies.iter().enumerate() {
        let per_run = par_map(spec.runs, |run| {
            let seed = run_seed(spec.seed, run, pi, spec.mode, 0);
            let trace = bench.run(kind, spec.mode, spec.slots, seed)?;
            let values = trace.total_chordal[spec.chordal_burn_in..].to_vec();
            Ok((deciles(&values), values, trace.resamples))
        })?;
        resamples += per_run.iter().map(|r| r.2).sum::<u64>();
        let label = kind.label();
        for q in 0..9 {
            let xs: Vec<f64> = per_run.iter().map(|r| r.0[q]).collect();
            let m = MeanStderr::from_samples(&xs);
            dec.push(DecileRow {
                policy: label.clone(),
                quantile: (q + 1) as f64 / 10.0,
                total_chordal: m.mean,
                stderr: m.stderr,
                runs: m.n,
            });
        }
        let mut pooled: Vec<f64> = per_run.into_iter().flat_map(|r| r.1).collect();
        pooled.sort_by(f64::total_cmp);
        for &x in &grid {
            cdf.push(CdfRow {
                policy: label.clone(),
                total_chordal: x,
                cdf: ecdf_sorted(&pooled, x),
            });
        }
    }
    Ok(ExperimentOutput {
        tables: Tables::ChordalCdf { cdf, deciles: dec },
        arms: vec![table.n_arms()],
        resamples,
        degenerate_entries: table.degenerate_count(),
    })
}

fn distributed_vs_combinational(
    spec: &ExperimentSpec,
    policies: &[PolicyKind],
) -> Result<ExperimentOutput> {
    let modes = [Mode::Combinational, Mode::Distributed];
    let results = modes
        .iter()
        .map(|&m| power_sweep(spec, policies, m))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (vi, &power_db) in spec.power_db.iter().enumerate() {
        for (mi, res) in results.iter().enumerate() {
            for (pi, label) in res.policies.iter().enumerate() {
                let c = res.cells[vi][pi];
                rows.push(ModeRow {
                    power_db,
                    policy: label.clone(),
                    mode: modes[mi].name().into(),
                    mean_sum_rate: c.mean,
                    stderr: c.stderr,
                    runs: c.n,
                });
            }
        }
    }
    Ok(ExperimentOutput {
        tables: Tables::DistributedVsCombinational(rows),
        arms: vec![results[0].arms[0]],
        resamples: results.iter().map(|r| r.resamples).sum(),
        degenerate_entries: results[0].degenerate_entries,
    })
}
