//! Single-run experiment engine.
//!
//! Alignment depends only on the chosen combination and pool sample, never on
//! the policy, so every (arm, sample) pair is solved once up front into a
//! [`LinkTable`]. A slot then costs one table lookup. The table also provides
//! exact arm means over the pool, which is what the oracle baseline and the
//! regret definitions need.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bandit::{Divergence, Policy, PolicyKind, RewardSample};
use crate::channel::{ChannelPool, StateCombination, USERS};
use crate::error::{Error, Result};
use crate::ia::{effective_gain, link_metrics, rate_from_gain, solve_ia};
use crate::math;

/// Which post-alignment quantity is fed back as reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RewardKind {
    /// Per-user rate divided by the scenario's largest per-user rate.
    #[default]
    SumRate,
    /// Per-receiver chordal distance between desired and interference directions.
    Chordal,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
struct LinkEntry {
    gain: [f64; USERS],
    chordal: [f64; USERS],
}

/// Alignment outcome for every (arm, sample) of a pool. Entries whose solve
/// failed (singular link or defective chain matrix) are marked invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkTable {
    states: usize,
    n_arms: usize,
    n_samples: usize,
    entries: Vec<Option<LinkEntry>>,
    valid_per_arm: Vec<usize>,
    degenerate: usize,
    fingerprint: u64,
}

impl LinkTable {
    pub fn build(pool: &ChannelPool) -> Result<Self> {
        let (states, n_arms, n_samples) = (pool.states(), pool.arms(), pool.n_samples());
        let mut entries = Vec::with_capacity(n_arms * n_samples);
        let mut valid_per_arm = alloc::vec![0usize; n_arms];
        let mut degenerate = 0;
        let mut fp = Fnv::new();
        fp.write_u64(states as u64);
        fp.write_u64(n_samples as u64);
        for (arm, valid) in valid_per_arm.iter_mut().enumerate() {
            let c = StateCombination::decode(arm, states)?;
            for s in 0..n_samples {
                let h = pool.links(&c, s)?;
                let entry = solve_ia(&h).and_then(|sol| {
                    let m = link_metrics(&h, &sol, 1.0)?;
                    let mut gain = [0.0; USERS];
                    for (k, g) in gain.iter_mut().enumerate() {
                        *g = effective_gain(&h[k][k], &sol, k);
                    }
                    Ok(LinkEntry {
                        gain,
                        chordal: m.per_rx_chordal,
                    })
                });
                match entry {
                    Ok(e) => {
                        *valid += 1;
                        for x in e.gain.iter().chain(e.chordal.iter()) {
                            fp.write_u64(x.to_bits());
                        }
                        entries.push(Some(e));
                    }
                    Err(
                        Error::SingularMatrix { .. } | Error::DefectiveMatrix | Error::ZeroVector,
                    ) => {
                        degenerate += 1;
                        fp.write_u64(u64::MAX);
                        entries.push(None);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(LinkTable {
            states,
            n_arms,
            n_samples,
            entries,
            valid_per_arm,
            degenerate,
            fingerprint: fp.finish(),
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Number of (arm, sample) pairs whose solve failed.
    pub fn degenerate_count(&self) -> usize {
        self.degenerate
    }

    pub fn valid_samples(&self, arm: usize) -> usize {
        self.valid_per_arm.get(arm).copied().unwrap_or(0)
    }

    #[inline]
    fn entry(&self, arm: usize, sample: usize) -> Option<&LinkEntry> {
        self.entries[arm * self.n_samples + sample].as_ref()
    }
}

/// One slot's outcome as seen by the engine.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Outcome {
    pub sample: RewardSample,
    /// Bits per channel use summed over users (zero for synthetic arms).
    pub sum_rate: f64,
    pub total_chordal: f64,
    /// Pool draws rejected as degenerate before this outcome was produced.
    pub resamples: u32,
}

impl Outcome {
    /// Reward handed to a combinational policy, in `[0, 1]`.
    #[inline]
    pub fn reward(&self) -> f64 {
        self.sample.normalized()
    }
}

/// Anything a policy can be run against.
pub trait Environment {
    fn n_arms(&self) -> usize;
    /// Identifies the scenario so traces and means can be matched.
    fn tag(&self) -> u64;
    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<Outcome>;
}

/// Link table plus the transmit power and reward metric of one experiment cell.
#[derive(Clone, Debug)]
pub struct RewardModel<'a> {
    table: &'a LinkTable,
    p_tx: f64,
    kind: RewardKind,
    r_max: f64,
}

impl<'a> RewardModel<'a> {
    /// `p_tx` is the linear per-user SNR. The rate normalizer is the largest
    /// per-user rate found anywhere in the table.
    pub fn new(table: &'a LinkTable, p_tx: f64, kind: RewardKind) -> Result<Self> {
        if !(p_tx >= 0.0 && p_tx.is_finite()) {
            return Err(Error::Config(
                "transmit power must be finite and non-negative",
            ));
        }
        if let Some(arm) = table.valid_per_arm.iter().position(|&v| v == 0) {
            return Err(Error::UninitializedArm(arm));
        }
        let g_max = table
            .entries
            .iter()
            .flatten()
            .flat_map(|e| e.gain)
            .fold(0.0f64, f64::max);
        Ok(RewardModel {
            table,
            p_tx,
            kind,
            r_max: rate_from_gain(g_max, p_tx),
        })
    }

    pub fn table(&self) -> &LinkTable {
        self.table
    }

    pub fn p_tx(&self) -> f64 {
        self.p_tx
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Outcome of `arm` on pool sample `sample`, `None` for a degenerate entry.
    pub fn outcome(&self, arm: usize, sample: usize) -> Option<Outcome> {
        let e = self.table.entry(arm, sample)?;
        let rates = e.gain.map(|g| rate_from_gain(g, self.p_tx));
        let per_receiver = match self.kind {
            RewardKind::SumRate if self.r_max > 0.0 => rates.map(|r| r / self.r_max),
            RewardKind::SumRate => [0.0; USERS],
            RewardKind::Chordal => e.chordal,
        };
        let sample = RewardSample::new(per_receiver).ok()?;
        Some(Outcome {
            sample,
            sum_rate: rates.iter().sum(),
            total_chordal: e.chordal.iter().sum(),
            resamples: 0,
        })
    }
}

impl Environment for RewardModel<'_> {
    fn n_arms(&self) -> usize {
        self.table.n_arms
    }

    fn tag(&self) -> u64 {
        let mut h = Fnv::new();
        h.write_u64(self.table.fingerprint);
        h.write_u64(self.p_tx.to_bits());
        h.write_u64(self.kind as u64);
        h.finish()
    }

    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<Outcome> {
        if arm >= self.table.n_arms {
            return Err(Error::Index {
                what: "arm",
                index: arm,
                limit: self.table.n_arms,
            });
        }
        let mut resamples = 0u32;
        loop {
            let s = rng.random_range(0..self.table.n_samples);
            if let Some(mut out) = self.outcome(arm, s) {
                out.resamples = resamples;
                return Ok(out);
            }
            resamples += 1;
        }
    }
}

/// Synthetic arms paying Bernoulli rewards; used to check regret bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliArms {
    pub means: Vec<f64>,
}

impl Environment for BernoulliArms {
    fn n_arms(&self) -> usize {
        self.means.len()
    }

    fn tag(&self) -> u64 {
        let mut h = Fnv::new();
        for m in &self.means {
            h.write_u64(m.to_bits());
        }
        h.finish()
    }

    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<Outcome> {
        let p = *self.means.get(arm).ok_or(Error::Index {
            what: "arm",
            index: arm,
            limit: self.means.len(),
        })?;
        let x = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
        // Single-receiver synthetic reward: keep the bandit scale at x.
        Ok(Outcome {
            sample: RewardSample {
                per_receiver: [x; USERS],
                total: x * USERS as f64,
            },
            ..Outcome::default()
        })
    }
}

/// Exact per-arm mean rewards of a scenario, on the `[0, 1]` bandit scale.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueMeans {
    pub means: Vec<f64>,
    /// Mean sum rate (bits per channel use) per arm; empty for synthetic arms.
    pub mean_sum_rate: Vec<f64>,
    pub best_arm: usize,
    pub best_mean: f64,
    /// Rate normalizer used for sum-rate rewards.
    pub r_max: f64,
    pub tag: u64,
}

impl TrueMeans {
    pub fn from_means(means: Vec<f64>, tag: u64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Config("no arms"));
        }
        let best_arm = crate::bandit::oracle_select(&means);
        Ok(TrueMeans {
            best_mean: means[best_arm],
            best_arm,
            means,
            mean_sum_rate: Vec::new(),
            r_max: 1.0,
            tag,
        })
    }

    pub fn n_arms(&self) -> usize {
        self.means.len()
    }

    pub fn worst_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mean over a uniformly random arm.
    pub fn uniform_mean(&self) -> f64 {
        self.means.iter().sum::<f64>() / self.means.len() as f64
    }
}

impl BernoulliArms {
    pub fn true_means(&self) -> Result<TrueMeans> {
        TrueMeans::from_means(self.means.clone(), self.tag())
    }
}

/// Averages the normalized total reward of every arm over all valid pool samples.
pub fn precompute_true_means(model: &RewardModel<'_>) -> Result<TrueMeans> {
    let table = model.table;
    let mut means = Vec::with_capacity(table.n_arms);
    let mut rates = Vec::with_capacity(table.n_arms);
    for arm in 0..table.n_arms {
        let (mut acc, mut acc_rate, mut n) = (0.0, 0.0, 0usize);
        for s in 0..table.n_samples {
            if let Some(o) = model.outcome(arm, s) {
                acc += o.reward();
                acc_rate += o.sum_rate;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::UninitializedArm(arm));
        }
        means.push(acc / n as f64);
        rates.push(acc_rate / n as f64);
    }
    let mut tm = TrueMeans::from_means(means, model.tag())?;
    tm.mean_sum_rate = rates;
    tm.r_max = model.r_max;
    Ok(tm)
}

/// Mean per-receiver reward of each state, averaged over the other receivers'
/// states uniformly. `out[rx][p]`.
pub fn per_receiver_state_means(model: &RewardModel<'_>) -> Result<[Vec<f64>; USERS]> {
    let table = model.table;
    let p = table.states;
    let mut acc: [Vec<f64>; USERS] = core::array::from_fn(|_| alloc::vec![0.0; p]);
    let mut cnt: [Vec<usize>; USERS] = core::array::from_fn(|_| alloc::vec![0; p]);
    for arm in 0..table.n_arms {
        let c = StateCombination::decode(arm, p)?;
        for s in 0..table.n_samples {
            if let Some(o) = model.outcome(arm, s) {
                for rx in 0..USERS {
                    acc[rx][c.state_of(rx)] += o.sample.per_receiver[rx];
                    cnt[rx][c.state_of(rx)] += 1;
                }
            }
        }
    }
    for rx in 0..USERS {
        for st in 0..p {
            if cnt[rx][st] == 0 {
                return Err(Error::UninitializedArm(st));
            }
            acc[rx][st] /= cnt[rx][st] as f64;
        }
    }
    Ok(acc)
}

/// Slot-by-slot record of one run.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunTrace {
    /// Joint arm played in each slot.
    pub arms: Vec<u32>,
    pub per_receiver: Vec<[f64; USERS]>,
    /// Normalized total reward per slot, in `[0, 1]`.
    pub reward: Vec<f64>,
    /// Running sum of `reward`.
    pub cum_reward: Vec<f64>,
    pub sum_rate: Vec<f64>,
    pub total_chordal: Vec<f64>,
    /// Pull count per joint arm at the end of the run.
    pub pulls: Vec<u64>,
    pub resamples: u64,
    pub tag: u64,
}

impl RunTrace {
    fn with_capacity(n_arms: usize, horizon: usize, tag: u64) -> Self {
        RunTrace {
            arms: Vec::with_capacity(horizon),
            per_receiver: Vec::with_capacity(horizon),
            reward: Vec::with_capacity(horizon),
            cum_reward: Vec::with_capacity(horizon),
            sum_rate: Vec::with_capacity(horizon),
            total_chordal: Vec::with_capacity(horizon),
            pulls: alloc::vec![0; n_arms],
            resamples: 0,
            tag,
        }
    }

    fn push(&mut self, arm: usize, out: &Outcome) {
        let prev = self.cum_reward.last().copied().unwrap_or(0.0);
        self.arms.push(arm as u32);
        self.per_receiver.push(out.sample.per_receiver);
        self.reward.push(out.reward());
        self.cum_reward.push(prev + out.reward());
        self.sum_rate.push(out.sum_rate);
        self.total_chordal.push(out.total_chordal);
        self.pulls[arm] += 1;
        self.resamples += out.resamples as u64;
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.cum_reward.last().copied().unwrap_or(0.0)
    }

    pub fn mean_sum_rate(&self) -> f64 {
        if self.sum_rate.is_empty() {
            return 0.0;
        }
        self.sum_rate.iter().sum::<f64>() / self.sum_rate.len() as f64
    }
}

/// Runs `policy` for `horizon` slots. Only the played arm's statistics change.
pub fn run_policy<E: Environment, R: Rng>(
    env: &E,
    policy: &mut Policy,
    horizon: usize,
    rng: &mut R,
) -> Result<RunTrace> {
    let mut trace = RunTrace::with_capacity(env.n_arms(), horizon, env.tag());
    for _ in 0..horizon {
        let arm = policy.select(rng)?;
        let out = env.pull(arm, rng)?;
        policy.observe(arm, out.reward())?;
        trace.push(arm, &out);
    }
    Ok(trace)
}

/// Builds the policy for a combinational run. `Fixed(p)` becomes the arm with
/// every receiver in state `p`.
pub fn combinational_policy(kind: PolicyKind, states: usize, means: &TrueMeans) -> Result<Policy> {
    let n_arms = means.n_arms();
    let fixed_arm = match kind {
        PolicyKind::Fixed(p) => StateCombination([p; USERS]).arm_index(states)?,
        _ => 0,
    };
    let policy = Policy::new(kind, n_arms, fixed_arm)?;
    if kind == PolicyKind::Oracle {
        policy.with_true_means(&means.means)
    } else {
        Ok(policy)
    }
}

/// One combinational run: a single controller over all `P^K` combinations.
pub fn run_combinational(
    model: &RewardModel<'_>,
    means: &TrueMeans,
    kind: PolicyKind,
    horizon: usize,
    run_seed: u64,
) -> Result<RunTrace> {
    if means.tag != model.tag() {
        return Err(Error::ScenarioMismatch);
    }
    if kind.is_learning() && horizon < means.n_arms() {
        return Err(Error::Config("horizon must cover one initial pull per arm"));
    }
    let mut policy = combinational_policy(kind, model.table.states, means)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    run_policy(model, &mut policy, horizon, &mut rng)
}

/// One distributed run: each receiver runs its own policy over its `P` states
/// and learns from its own chordal distance only.
///
/// `receiver_means` is only consulted by the oracle (see
/// [`per_receiver_state_means`]).
pub fn run_distributed(
    model: &RewardModel<'_>,
    kind: PolicyKind,
    horizon: usize,
    run_seed: u64,
    receiver_means: Option<&[Vec<f64>; USERS]>,
) -> Result<RunTrace> {
    if model.kind != RewardKind::Chordal {
        return Err(Error::Config(
            "distributed selection uses the chordal reward",
        ));
    }
    let states = model.table.states;
    if kind.is_learning() && horizon < states {
        return Err(Error::Config(
            "horizon must cover one initial pull per state",
        ));
    }
    let mut controllers = Vec::with_capacity(USERS);
    for rx in 0..USERS {
        let fixed = if let PolicyKind::Fixed(p) = kind {
            p
        } else {
            0
        };
        let mut pol = Policy::new(kind, states, fixed)?;
        if kind == PolicyKind::Oracle {
            let means = receiver_means.ok_or(Error::Config("oracle needs per-receiver means"))?;
            pol = pol.with_true_means(&means[rx])?;
        }
        controllers.push(pol);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut trace = RunTrace::with_capacity(model.table.n_arms, horizon, model.tag());
    for _ in 0..horizon {
        let mut c = StateCombination::default();
        for (rx, pol) in controllers.iter().enumerate() {
            c.0[rx] = pol.select(&mut rng)?;
        }
        let arm = c.arm_index(states)?;
        let out = model.pull(arm, &mut rng)?;
        for (rx, pol) in controllers.iter_mut().enumerate() {
            pol.observe(c.0[rx], out.sample.per_receiver[rx])?;
        }
        trace.push(arm, &out);
    }
    Ok(trace)
}

/// Cumulative regret `r(n) = n μ* − Σ_{t≤n} reward_t` for `n = 1..=len`.
pub fn regret_trace(trace: &RunTrace, means: &TrueMeans) -> Result<Vec<f64>> {
    if trace.tag != means.tag || trace.pulls.len() != means.n_arms() {
        return Err(Error::ScenarioMismatch);
    }
    Ok(trace
        .cum_reward
        .iter()
        .enumerate()
        .map(|(i, cum)| (i + 1) as f64 * means.best_mean - cum)
        .collect())
}

/// Value of the UCB1 finite-time regret bound; `degenerate` when no arm is
/// suboptimal (the value is then 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretBound {
    pub value: f64,
    pub degenerate: bool,
}

/// `8 Σ ln n / Δ_i + (1 + π²/3) Σ Δ_i` over arms with `Δ_i = μ* − μ_i > 0`.
pub fn ucb1_regret_bound(means: &TrueMeans, n: f64) -> RegretBound {
    let (mut inv_gap, mut gap) = (0.0, 0.0);
    for &m in &means.means {
        let d = means.best_mean - m;
        if d > 0.0 {
            inv_gap += 1.0 / d;
            gap += d;
        }
    }
    if gap == 0.0 {
        return RegretBound {
            value: 0.0,
            degenerate: true,
        };
    }
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    RegretBound {
        value: 8.0 * math::ln(n) * inv_gap + (1.0 + pi2 / 3.0) * gap,
        degenerate: false,
    }
}

/// One row of the asymptotic pull-count diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaiRobbinsRow {
    pub arm: usize,
    pub mean: f64,
    /// `D(μ_i ‖ μ*)` under the configured divergence.
    pub divergence: f64,
    /// `1 / D`, `None` for the optimal arm(s).
    pub inverse_divergence: Option<f64>,
    /// Empirical `E[T_i(n)] / ln n`.
    pub pulls_over_ln_n: f64,
}

/// Compares average pull counts against `1 / D(μ_i ‖ μ*)`. Informative only:
/// the bound is asymptotic.
pub fn lai_robbins_diag(
    means: &TrueMeans,
    mean_pulls: &[f64],
    n: f64,
    divergence: Divergence,
) -> Result<Vec<LaiRobbinsRow>> {
    if mean_pulls.len() != means.n_arms() {
        return Err(Error::ScenarioMismatch);
    }
    if !(n > 1.0) {
        return Err(Error::Domain("horizon must exceed 1"));
    }
    let best = means.best_mean;
    if !(best > 0.0 && best < 1.0) {
        return Err(Error::Domain("optimal mean must lie in (0, 1)"));
    }
    let ln_n = math::ln(n);
    let mut rows = Vec::with_capacity(means.n_arms());
    for (arm, (&mu, &pulls)) in means.means.iter().zip(mean_pulls).enumerate() {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Domain("arm means must lie in (0, 1)"));
        }
        let d = divergence.eval(mu, best)?;
        rows.push(LaiRobbinsRow {
            arm,
            mean: mu,
            divergence: d,
            inverse_divergence: (d > 0.0).then(|| 1.0 / d),
            pulls_over_ln_n: pulls / ln_n,
        });
    }
    Ok(rows)
}

/// Element-wise average of the final pull counts of several traces.
pub fn mean_pulls(traces: &[RunTrace]) -> Vec<f64> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let mut acc = alloc::vec![0.0; first.pulls.len()];
    for t in traces {
        for (a, &p) in acc.iter_mut().zip(&t.pulls) {
            *a += p as f64;
        }
    }
    let n = traces.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Seed for one run, mixed from the master seed and the run's coordinates.
pub fn derive_seed(master: u64, run: u64, policy: u64, axis: u64) -> u64 {
    let mut s = splitmix64(master);
    for part in [run, policy, axis] {
        s = splitmix64(s ^ splitmix64(part.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    s
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, x: u64) {
        for b in x.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
