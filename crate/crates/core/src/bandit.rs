//! Index policies over a finite set of arms.
//!
//! Learning policies first pull every arm once in index order, then pick the
//! arm with the largest upper confidence index. Every argmax breaks ties
//! towards the lowest arm id.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::channel::USERS;
use crate::error::{Error, Result};
use crate::math;

/// Slack allowed on the `[0, 1]` reward range before an update is refused.
pub const REWARD_SLACK: f64 = 1e-9;
/// Means are clamped to `[ε, 1 − ε]` before entering a divergence.
pub const DIVERGENCE_FLOOR: f64 = 1e-6;
/// Upper end of the KL-UCB search bracket for unbounded divergences.
pub const KLUCB_Q_MAX: f64 = 1e6;
/// Absolute tolerance of the KL-UCB root solve.
pub const KLUCB_TOL: f64 = 1e-9;

/// Running statistics of one arm.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ArmState {
    pub pulls: u64,
    pub cum_reward: f64,
    pub mean: f64,
}

impl ArmState {
    /// Records one reward in `[0, 1]`.
    pub fn update(&mut self, reward: f64) -> Result<()> {
        if !(-REWARD_SLACK..=1.0 + REWARD_SLACK).contains(&reward) {
            return Err(Error::Range(reward));
        }
        let reward = reward.clamp(0.0, 1.0);
        self.pulls += 1;
        self.cum_reward += reward;
        self.mean = (self.cum_reward / self.pulls as f64).clamp(0.0, 1.0);
        Ok(())
    }
}

/// Divergence used by KL-UCB and by the Lai–Robbins diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Divergence {
    /// `d(x, y) = x/y − 1 − ln(x/y)`.
    #[default]
    Exponential,
    /// Bernoulli relative entropy.
    Bernoulli,
}

impl Divergence {
    /// Raw divergence; both arguments must lie in the domain of the form.
    pub fn eval(self, x: f64, y: f64) -> Result<f64> {
        match self {
            Divergence::Exponential => klucb_divergence(x, y),
            Divergence::Bernoulli => bernoulli_kl(x, y),
        }
    }

    fn eval_unchecked(self, x: f64, y: f64) -> f64 {
        match self {
            Divergence::Exponential => {
                let r = x / y;
                r - 1.0 - math::ln(r)
            }
            Divergence::Bernoulli => bernoulli_kl_unchecked(x, y),
        }
    }

    /// `∂d(x, y)/∂y`.
    fn dy(self, x: f64, y: f64) -> f64 {
        match self {
            Divergence::Exponential => (y - x) / (y * y),
            Divergence::Bernoulli => (y - x) / (y * (1.0 - y)),
        }
    }
}

/// `d(x, y) = x/y − 1 − ln(x/y)` for `x, y > 0`.
pub fn klucb_divergence(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain("divergence arguments must be positive"));
    }
    let r = x / y;
    Ok((r - 1.0 - math::ln(r)).max(0.0))
}

fn bernoulli_kl_unchecked(x: f64, y: f64) -> f64 {
    let a = if x > 0.0 { x * math::ln(x / y) } else { 0.0 };
    let b = if x < 1.0 {
        (1.0 - x) * math::ln((1.0 - x) / (1.0 - y))
    } else {
        0.0
    };
    a + b
}

/// Bernoulli relative entropy, `x ∈ [0, 1]`, `y ∈ (0, 1)`.
pub fn bernoulli_kl(x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(y > 0.0 && y < 1.0) {
        return Err(Error::Domain(
            "bernoulli divergence needs x in [0,1], y in (0,1)",
        ));
    }
    Ok(bernoulli_kl_unchecked(x, y).max(0.0))
}

/// Exploration budget `ln n + a ln ln n`; the second term is dropped while
/// `ln n ≤ 1`.
pub fn klucb_budget(n: u64, a: f64) -> f64 {
    let ln_n = math::ln(n.max(1) as f64);
    if a > 0.0 && ln_n > 1.0 {
        ln_n + a * math::ln(ln_n)
    } else {
        ln_n
    }
}

/// Largest `q ≥ mean` with `m · d(mean, q) ≤ budget`.
pub fn klucb_index(arm: &ArmState, n: u64, a: f64, divergence: Divergence) -> Result<f64> {
    klucb_index_for_budget(arm, klucb_budget(n, a), divergence)
}

/// [`klucb_index`] with the budget given directly.
pub fn klucb_index_for_budget(arm: &ArmState, budget: f64, divergence: Divergence) -> Result<f64> {
    if arm.pulls == 0 {
        return Err(Error::UninitializedArm(usize::MAX));
    }
    if !(budget > 0.0) {
        return Ok(arm.mean);
    }
    let x = arm.mean.clamp(DIVERGENCE_FLOOR, 1.0 - DIVERGENCE_FLOOR);
    let target = budget / arm.pulls as f64;
    let g = |q: f64| divergence.eval_unchecked(x, q) - target;

    let mut lo = x;
    let mut hi = match divergence {
        Divergence::Bernoulli => 1.0,
        Divergence::Exponential => {
            let mut hi = 2.0 * x;
            while hi < KLUCB_Q_MAX && g(hi) <= 0.0 {
                lo = hi;
                hi *= 2.0;
            }
            if hi >= KLUCB_Q_MAX {
                hi = KLUCB_Q_MAX;
                if g(hi) <= 0.0 {
                    return Ok(KLUCB_Q_MAX);
                }
            }
            hi
        }
    };

    // Bracketed Newton: fall back to bisection whenever the step leaves (lo, hi).
    let mut q = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gq = g(q);
        if gq.abs() * (arm.pulls as f64) <= 1e-11 {
            break;
        }
        if gq > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        if hi - lo <= KLUCB_TOL * 1e-3 {
            q = lo;
            break;
        }
        let step = q - gq / divergence.dy(x, q);
        q = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(q.max(arm.mean))
}

/// UCB1 index `mean + sqrt(2 ln n / m)`.
#[inline]
pub fn ucb1_index(arm: &ArmState, n: u64) -> f64 {
    arm.mean + math::sqrt(2.0 * math::ln(n.max(1) as f64) / arm.pulls as f64)
}

fn argmax_by<F: FnMut(usize) -> Result<f64>>(len: usize, mut score: F) -> Result<usize> {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..len {
        let s = score(i)?;
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(best)
}

fn first_unpulled(arms: &[ArmState]) -> Option<usize> {
    arms.iter().position(|a| a.pulls == 0)
}

fn require_initialized(arms: &[ArmState]) -> Result<()> {
    if arms.is_empty() {
        return Err(Error::Config("no arms"));
    }
    match first_unpulled(arms) {
        Some(i) => Err(Error::UninitializedArm(i)),
        None => Ok(()),
    }
}

/// Argmax of the UCB1 index; every arm must have been pulled.
pub fn ucb1_select(arms: &[ArmState], n: u64) -> Result<usize> {
    require_initialized(arms)?;
    argmax_by(arms.len(), |i| Ok(ucb1_index(&arms[i], n)))
}

/// Argmax of the KL-UCB index; every arm must have been pulled.
pub fn klucb_select(arms: &[ArmState], n: u64, a: f64, divergence: Divergence) -> Result<usize> {
    require_initialized(arms)?;
    let budget = klucb_budget(n, a);
    argmax_by(arms.len(), |i| {
        klucb_index_for_budget(&arms[i], budget, divergence)
    })
}

/// Arm with the largest true mean.
pub fn oracle_select(true_means: &[f64]) -> usize {
    argmax_by(true_means.len(), |i| Ok(true_means[i])).unwrap_or(0)
}

/// Uniform arm draw. A single arm is returned without consuming randomness.
pub fn random_select<R: Rng + ?Sized>(rng: &mut R, n_arms: usize) -> usize {
    if n_arms <= 1 {
        return 0;
    }
    rng.random_range(0..n_arms)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyKind {
    Ucb1,
    KlUcb {
        a: f64,
        divergence: Divergence,
    },
    /// Knows every arm's true mean and always plays the best one.
    Oracle,
    /// Uniform over arms, independently every slot.
    Random,
    /// Always the same arm: every receiver in state `p`. Conventional IA is `Fixed(0)`.
    Fixed(usize),
}

impl PolicyKind {
    pub const KLUCB: PolicyKind = PolicyKind::KlUcb {
        a: 0.0,
        divergence: Divergence::Exponential,
    };

    /// Short stable label used in output files.
    pub fn label(&self) -> alloc::string::String {
        use alloc::format;
        match self {
            PolicyKind::Ucb1 => "ucb1".into(),
            PolicyKind::KlUcb { a, divergence } => {
                let mut s: alloc::string::String = "klucb".into();
                if *a != 0.0 {
                    s += &format!(":a={a}");
                }
                if *divergence == Divergence::Bernoulli {
                    s += ":bernoulli";
                }
                s
            }
            PolicyKind::Oracle => "oracle".into(),
            PolicyKind::Random => "random".into(),
            PolicyKind::Fixed(0) => "conventional".into(),
            PolicyKind::Fixed(p) => format!("fixed:{p}"),
        }
    }

    pub fn is_learning(&self) -> bool {
        matches!(self, PolicyKind::Ucb1 | PolicyKind::KlUcb { .. })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    /// Accepts the labels produced by [`PolicyKind::label`], plus `fixed`
    /// and `kl-ucb`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or("");
        let kind = match head {
            "ucb1" | "ucb" => PolicyKind::Ucb1,
            "oracle" => PolicyKind::Oracle,
            "random" => PolicyKind::Random,
            "conventional" | "fixed" => match parts.next() {
                None => PolicyKind::Fixed(0),
                Some(p) => PolicyKind::Fixed(
                    p.parse()
                        .map_err(|_| Error::Domain("fixed state must be an integer"))?,
                ),
            },
            "klucb" | "kl-ucb" => {
                let mut a = 0.0;
                let mut divergence = Divergence::Exponential;
                for opt in parts.by_ref() {
                    if let Some(v) = opt.strip_prefix("a=") {
                        a = v
                            .parse()
                            .map_err(|_| Error::Domain("klucb parameter a must be a number"))?;
                        if !(a >= 0.0) {
                            return Err(Error::Domain("klucb parameter a must be non-negative"));
                        }
                    } else if opt == "bernoulli" {
                        divergence = Divergence::Bernoulli;
                    } else if opt == "exponential" {
                        divergence = Divergence::Exponential;
                    } else {
                        return Err(Error::Domain("unknown klucb option"));
                    }
                }
                PolicyKind::KlUcb { a, divergence }
            }
            _ => return Err(Error::Domain("unknown policy")),
        };
        if parts.next().is_some() {
            return Err(Error::Domain("unexpected policy option"));
        }
        Ok(kind)
    }
}

/// Policy state owned by exactly one run.
#[derive(Clone, Debug)]
pub struct Policy {
    kind: PolicyKind,
    arms: Vec<ArmState>,
    oracle_arm: Option<usize>,
    fixed_arm: usize,
}

impl Policy {
    /// `fixed_arm` is the arm played by [`PolicyKind::Fixed`]; it is ignored by
    /// other kinds. Oracle policies need [`Policy::with_true_means`].
    pub fn new(kind: PolicyKind, n_arms: usize, fixed_arm: usize) -> Result<Self> {
        if n_arms == 0 {
            return Err(Error::Config("a policy needs at least one arm"));
        }
        if let PolicyKind::KlUcb { a, .. } = kind {
            if !(a >= 0.0) {
                return Err(Error::Config("klucb parameter a must be non-negative"));
            }
        }
        if matches!(kind, PolicyKind::Fixed(_)) && fixed_arm >= n_arms {
            return Err(Error::Index {
                what: "fixed arm",
                index: fixed_arm,
                limit: n_arms,
            });
        }
        Ok(Policy {
            kind,
            arms: alloc::vec![ArmState::default(); n_arms],
            oracle_arm: None,
            fixed_arm,
        })
    }

    pub fn with_true_means(mut self, true_means: &[f64]) -> Result<Self> {
        if true_means.len() != self.arms.len() {
            return Err(Error::ScenarioMismatch);
        }
        self.oracle_arm = Some(oracle_select(true_means));
        Ok(self)
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn total_pulls(&self) -> u64 {
        self.arms.iter().map(|a| a.pulls).sum()
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        match self.kind {
            PolicyKind::Oracle => self.oracle_arm.ok_or(Error::Config(
                "oracle policy constructed without true means",
            )),
            PolicyKind::Random => Ok(random_select(rng, self.arms.len())),
            PolicyKind::Fixed(_) => Ok(self.fixed_arm),
            PolicyKind::Ucb1 | PolicyKind::KlUcb { .. } => {
                if let Some(i) = first_unpulled(&self.arms) {
                    return Ok(i);
                }
                let n = self.total_pulls();
                match self.kind {
                    PolicyKind::KlUcb { a, divergence } => {
                        klucb_select(&self.arms, n, a, divergence)
                    }
                    _ => ucb1_select(&self.arms, n),
                }
            }
        }
    }

    /// Credits `reward` to `arm`; no other arm changes.
    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        let limit = self.arms.len();
        self.arms
            .get_mut(arm)
            .ok_or(Error::Index {
                what: "arm",
                index: arm,
                limit,
            })?
            .update(reward)
    }
}

/// Per-receiver rewards of one slot, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RewardSample {
    pub per_receiver: [f64; USERS],
    pub total: f64,
}

impl RewardSample {
    pub fn new(per_receiver: [f64; USERS]) -> Result<Self> {
        for &x in &per_receiver {
            if !(-REWARD_SLACK..=1.0 + REWARD_SLACK).contains(&x) {
                return Err(Error::Range(x));
            }
        }
        let per_receiver = per_receiver.map(|x| x.clamp(0.0, 1.0));
        Ok(RewardSample {
            per_receiver,
            total: per_receiver.iter().sum(),
        })
    }

    /// Total scaled into `[0, 1]` for the bandit.
    #[inline]
    pub fn normalized(&self) -> f64 {
        self.total / USERS as f64
    }
}
