//! Experiment configuration: the TOML document, its defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use iabandit_core::channel::{arm_count, default_state_powers};
use iabandit_core::{ChannelModel, PolicyKind, RewardKind, ScenarioConfig, ANTENNAS, USERS};
use serde::{Deserialize, Serialize};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
pub enum ExperimentKind {
    /// Cumulative regret against the slot index.
    #[default]
    #[serde(rename = "regret_vs_n")]
    #[value(name = "regret_vs_n")]
    RegretVsN,
    /// Regret at the horizon against the number of antenna states.
    #[serde(rename = "regret_vs_P")]
    #[value(name = "regret_vs_P")]
    RegretVsP,
    /// Mean sum rate against transmit power.
    #[serde(rename = "sumrate_vs_power")]
    #[value(name = "sumrate_vs_power")]
    SumrateVsPower,
    /// Distribution of the per-slot total chordal distance.
    #[serde(rename = "chordal_cdf")]
    #[value(name = "chordal_cdf")]
    ChordalCdf,
    /// Sum rate of combinational and distributed selection against power.
    #[serde(rename = "distributed_vs_combinational")]
    #[value(name = "distributed_vs_combinational")]
    DistributedVsCombinational,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RegretVsN => "regret_vs_n",
            ExperimentKind::RegretVsP => "regret_vs_P",
            ExperimentKind::SumrateVsPower => "sumrate_vs_power",
            ExperimentKind::ChordalCdf => "chordal_cdf",
            ExperimentKind::DistributedVsCombinational => "distributed_vs_combinational",
        }
    }

    /// Policies run when the configuration does not list any.
    pub fn default_policies(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::RegretVsN => &["oracle", "klucb", "ucb1", "random"],
            ExperimentKind::RegretVsP => &["klucb", "ucb1", "random"],
            ExperimentKind::SumrateVsPower | ExperimentKind::ChordalCdf => {
                &["oracle", "klucb", "ucb1", "random", "conventional"]
            }
            ExperimentKind::DistributedVsCombinational => &["klucb", "ucb1", "random"],
        }
    }

    pub fn default_reward(self) -> Reward {
        match self {
            ExperimentKind::ChordalCdf | ExperimentKind::DistributedVsCombinational => {
                Reward::Chordal
            }
            _ => Reward::Sumrate,
        }
    }

    /// Whether the experiment sweeps the power grid rather than using `snr_db`.
    pub fn sweeps_power(self) -> bool {
        matches!(
            self,
            ExperimentKind::SumrateVsPower | ExperimentKind::DistributedVsCombinational
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Combinational,
    Distributed,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Combinational => "combinational",
            Mode::Distributed => "distributed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Reward {
    Sumrate,
    Chordal,
}

impl From<Reward> for RewardKind {
    fn from(r: Reward) -> Self {
        match r {
            Reward::Sumrate => RewardKind::SumRate,
            Reward::Chordal => RewardKind::Chordal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModelArg {
    Independent,
    Scaled,
}

impl From<ChannelModelArg> for ChannelModel {
    fn from(c: ChannelModelArg) -> Self {
        match c {
            ChannelModelArg::Independent => ChannelModel::Independent,
            ChannelModelArg::Scaled => ChannelModel::Scaled,
        }
    }
}

/// Everything needed to reproduce one experiment.
///
/// Missing keys take the values of [`ExperimentSpec::default`]; unknown keys
/// are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    /// Users `K`.
    #[serde(alias = "K")]
    pub users: usize,
    /// Transmit antennas `M`.
    #[serde(alias = "M")]
    pub tx_antennas: usize,
    /// Receive antennas `N`.
    #[serde(alias = "N")]
    pub rx_antennas: usize,
    /// Antenna states per receiver `P`.
    #[serde(alias = "P")]
    pub states: usize,
    /// Mean power per state and receive antenna (linear); the default
    /// profile is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_powers: Option<Vec<[f64; ANTENNAS]>>,
    pub n_samples: usize,
    pub seed: u64,
    pub channel_model: ChannelModelArg,
    pub mode: Mode,
    /// Experiment-specific default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<Reward>,
    /// Experiment-specific default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<String>>,
    /// Horizon `n` in slots.
    pub slots: usize,
    pub runs: usize,
    /// Operating point of the non-power experiments, in dB.
    pub snr_db: f64,
    /// Power grid of the power sweeps, in dB.
    pub power_db: Vec<f64>,
    /// Values of `P` visited by `regret_vs_P`.
    pub states_grid: Vec<usize>,
    /// Regret rows are written every `record_every` slots (and at the horizon).
    pub record_every: usize,
    /// Slots skipped at the start of each run before collecting chordal distances.
    pub chordal_burn_in: usize,
    /// Evaluation points of the written chordal CDF over `[0, K]`.
    pub cdf_points: usize,
    /// Worker threads for the runs; 0 uses all cores. Results do not depend on it.
    pub threads: usize,
    pub out: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            experiment: ExperimentKind::RegretVsN,
            users: USERS,
            tx_antennas: ANTENNAS,
            rx_antennas: ANTENNAS,
            states: 4,
            state_powers: None,
            n_samples: 1000,
            seed: 42,
            channel_model: ChannelModelArg::Independent,
            mode: Mode::Combinational,
            reward: None,
            policies: None,
            slots: 10_000,
            runs: 100,
            snr_db: 20.0,
            power_db: power_grid(0.0, 30.0, 5.0).expect("valid default grid"),
            states_grid: vec![2, 3, 4],
            record_every: 1,
            chordal_burn_in: 0,
            cdf_points: 301,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),
}

/// `start, start + step, …` up to and including `stop`.
pub fn power_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("grid bounds must be finite".into());
    }
    if start == stop {
        return Ok(vec![start]);
    }
    if !(step > 0.0) || stop < start {
        return Err("grid needs start ≤ stop and a positive step".into());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err("grid has too many points".into());
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Parses `a:b:step` or a single value `a`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{p}` is not a number"))
    };
    match parts.as_slice() {
        [a] => Ok(vec![num(a)?]),
        [a, b, step] => power_grid(num(a)?, num(b)?, num(step)?),
        _ => Err(format!("expected a:b:step or a single value, got `{s}`")),
    }
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl FromStr for ExperimentSpec {
    type Err = ConfigError;

    /// Parses and validates a TOML document.
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let spec: ExperimentSpec = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec: ExperimentSpec = toml::from_str(&text)?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn reward(&self) -> Reward {
        self.reward.unwrap_or(self.experiment.default_reward())
    }

    pub fn policy_names(&self) -> Vec<String> {
        match &self.policies {
            Some(p) => p.clone(),
            None => self
                .experiment
                .default_policies()
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    /// Parsed policy list; only valid after [`ExperimentSpec::validate`].
    pub fn policy_kinds(&self) -> Vec<PolicyKind> {
        self.policy_names()
            .iter()
            .map(|p| p.parse().expect("validated policy"))
            .collect()
    }

    /// State powers for `states` states: the configured profile, or the default one.
    pub fn powers_for(&self, states: usize) -> Vec<[f64; ANTENNAS]> {
        match &self.state_powers {
            Some(p) => p.clone(),
            None => default_state_powers(states),
        }
    }

    /// Scenario with `states` states.
    pub fn scenario(&self, states: usize) -> ScenarioConfig {
        ScenarioConfig {
            users: self.users,
            tx_antennas: self.tx_antennas,
            rx_antennas: self.rx_antennas,
            states,
            state_powers: self.powers_for(states),
            n_samples: self.n_samples,
            seed: self.seed,
            channel_model: self.channel_model.into(),
        }
    }

    /// The `P` values the experiment visits.
    pub fn state_values(&self) -> Vec<usize> {
        match self.experiment {
            ExperimentKind::RegretVsP => self.states_grid.clone(),
            _ => vec![self.states],
        }
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.users != USERS {
            errs.push(format!("K (users) must be {USERS}, got {}", self.users));
        }
        if self.tx_antennas != ANTENNAS {
            errs.push(format!(
                "M (tx_antennas) must be {ANTENNAS}, got {}",
                self.tx_antennas
            ));
        }
        if self.rx_antennas != ANTENNAS {
            errs.push(format!(
                "N (rx_antennas) must be {ANTENNAS}, got {}",
                self.rx_antennas
            ));
        }
        if self.states == 0 {
            errs.push("P (states) must be at least 1".into());
        }
        if self.seed > i64::MAX as u64 {
            errs.push("seed must not exceed 2^63 - 1".into());
        }
        if self.n_samples == 0 {
            errs.push("n_samples must be at least 1".into());
        }
        if self.runs == 0 {
            errs.push("runs must be at least 1".into());
        }
        if self.slots == 0 {
            errs.push("slots must be at least 1".into());
        }
        if self.record_every == 0 {
            errs.push("record_every must be at least 1".into());
        }
        if self.cdf_points < 2 {
            errs.push("cdf_points must be at least 2".into());
        }
        if self.chordal_burn_in >= self.slots {
            errs.push("chordal_burn_in must be smaller than slots".into());
        }
        if !self.snr_db.is_finite() {
            errs.push("snr_db must be finite".into());
        }
        if self.power_db.is_empty() {
            errs.push("power_db must not be empty".into());
        }
        if self.power_db.iter().any(|x| !x.is_finite()) {
            errs.push("power_db values must be finite".into());
        }
        if self.power_db.windows(2).any(|w| w[1] <= w[0]) {
            errs.push("power_db must be strictly increasing".into());
        }
        if self.experiment == ExperimentKind::RegretVsP {
            if self.states_grid.is_empty() {
                errs.push("states_grid must not be empty".into());
            }
            if self.states_grid.contains(&0) {
                errs.push("states_grid values (P) must be at least 1".into());
            }
            if self.states_grid.windows(2).any(|w| w[1] <= w[0]) {
                errs.push("states_grid must be strictly increasing".into());
            }
            if self.state_powers.is_some() && self.states_grid.len() > 1 {
                errs.push("state_powers cannot be combined with several states_grid values".into());
            }
        }
        let state_values = self.state_values();
        if let Some(p) = &self.state_powers {
            for &states in &state_values {
                if p.len() != states {
                    errs.push(format!(
                        "state_powers has {} entries but P (states) is {states}",
                        p.len()
                    ));
                }
            }
            if p.iter().flatten().any(|&s| !(s > 0.0 && s.is_finite())) {
                errs.push("state_powers must be positive and finite".into());
            }
        }
        let reward = self.reward();
        if self.mode == Mode::Distributed && reward == Reward::Sumrate {
            errs.push("distributed mode requires reward = chordal".into());
        }
        if self.experiment == ExperimentKind::DistributedVsCombinational
            && reward == Reward::Sumrate
        {
            errs.push("distributed_vs_combinational requires reward = chordal".into());
        }

        let names = self.policy_names();
        if names.is_empty() {
            errs.push("policies must not be empty".into());
        }
        let mut labels = Vec::new();
        for name in &names {
            match name.parse::<PolicyKind>() {
                Err(e) => errs.push(format!("policy `{name}`: {e}")),
                Ok(kind) => {
                    let label = kind.label();
                    if labels.contains(&label) {
                        errs.push(format!("policy `{name}` listed twice"));
                    }
                    labels.push(label);
                    if let PolicyKind::Fixed(p) = kind {
                        if state_values.iter().any(|&s| p >= s) {
                            errs.push(format!("policy `{name}`: state {p} exceeds P (states)"));
                        }
                    }
                    if kind.is_learning() {
                        for &s in state_values.iter().filter(|&&s| s > 0) {
                            // distributed_vs_combinational always runs both modes
                            let arms = if self.mode == Mode::Distributed
                                && self.experiment != ExperimentKind::DistributedVsCombinational
                            {
                                s
                            } else {
                                arm_count(s).unwrap_or(usize::MAX)
                            };
                            if self.slots < arms {
                                errs.push(format!(
                                    "slots ({}) must cover one initial pull for each of the {arms} arms (P = {s})",
                                    self.slots
                                ));
                                break;
                            }
                        }
                    }
                }
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(errs))
        }
    }
}
