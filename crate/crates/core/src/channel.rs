//! Channel realizations for every (receiver, transmitter, antenna state, sample).
//!
//! Receivers carry reconfigurable antennas with `states` radiation states;
//! state `p` at receive antenna `n` has mean power `state_powers[p][n]`.
//! Transmitters are conventional. All indices in this module are zero based.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cxmat::{Complex, ComplexMat2};
use crate::error::{Error, Result};
use crate::math;

/// Number of transmit/receive pairs. The closed-form alignment needs exactly three.
pub const USERS: usize = 3;
/// Antennas per node on either side.
pub const ANTENNAS: usize = 2;

/// How per-state channels relate to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ChannelModel {
    /// A fresh Gaussian draw per state, rows scaled by the state's amplitudes.
    #[default]
    Independent,
    /// One base draw per link and sample, left-multiplied by `diag(σ_p)` for each state.
    Scaled,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    pub users: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    /// Antenna states per receiver (`P`).
    pub states: usize,
    /// Linear mean power per state and receive antenna, `σ²_{p,n}`.
    pub state_powers: Vec<[f64; ANTENNAS]>,
    /// Pool depth per (link, state).
    pub n_samples: usize,
    pub seed: u64,
    pub channel_model: ChannelModel,
}

/// Default power profile: evenly spaced from 0.4 to 1.0, weakest state first,
/// so state 0 (the fixed/conventional choice) is the least favourable one.
/// `P = 2` uses `{0.6, 1.0}`.
pub fn default_state_powers(states: usize) -> Vec<[f64; ANTENNAS]> {
    match states {
        0 => Vec::new(),
        1 => alloc::vec![[1.0; ANTENNAS]],
        2 => alloc::vec![[0.6; ANTENNAS], [1.0; ANTENNAS]],
        p => (0..p)
            .map(|i| {
                let s = 0.4 + 0.6 * i as f64 / (p - 1) as f64;
                [s; ANTENNAS]
            })
            .collect(),
    }
}

impl ScenarioConfig {
    /// Three users, 2×2 links, `states` states with the default power profile,
    /// 1000 samples, independent channels.
    pub fn with_states(states: usize, seed: u64) -> Self {
        ScenarioConfig {
            users: USERS,
            tx_antennas: ANTENNAS,
            rx_antennas: ANTENNAS,
            states,
            state_powers: default_state_powers(states),
            n_samples: 1000,
            seed,
            channel_model: ChannelModel::Independent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users != USERS {
            return Err(Error::Config(
                "closed-form alignment requires exactly 3 users",
            ));
        }
        if self.tx_antennas != ANTENNAS || self.rx_antennas != ANTENNAS {
            return Err(Error::Config("closed-form alignment requires 2x2 links"));
        }
        if self.states == 0 {
            return Err(Error::Config("states must be at least 1"));
        }
        if self.state_powers.len() != self.states {
            return Err(Error::Config("state_powers must list one entry per state"));
        }
        if self
            .state_powers
            .iter()
            .flatten()
            .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(Error::Config("state powers must be finite and positive"));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1"));
        }
        if arm_count(self.states).is_none() {
            return Err(Error::Config("states^users overflows"));
        }
        Ok(())
    }

    /// Number of joint state combinations, `P^K`.
    pub fn arms(&self) -> usize {
        arm_count(self.states).unwrap_or(usize::MAX)
    }
}

/// `states^USERS`, or `None` on overflow.
pub fn arm_count(states: usize) -> Option<usize> {
    states.checked_pow(USERS as u32)
}

/// Per-receiver antenna state vector; one arm of the combinational bandit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct StateCombination(pub [usize; USERS]);

impl StateCombination {
    /// Mixed-radix index, base `states`, receiver 0 most significant.
    pub fn arm_index(&self, states: usize) -> Result<usize> {
        let mut idx = 0usize;
        for &p in &self.0 {
            if p >= states {
                return Err(Error::Index {
                    what: "antenna state",
                    index: p,
                    limit: states,
                });
            }
            idx = idx * states + p;
        }
        Ok(idx)
    }

    pub fn decode(index: usize, states: usize) -> Result<Self> {
        let limit = arm_count(states).ok_or(Error::Config("states^users overflows"))?;
        if index >= limit {
            return Err(Error::Index {
                what: "arm",
                index,
                limit,
            });
        }
        let mut out = [0usize; USERS];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = rest % states;
            rest /= states;
        }
        Ok(StateCombination(out))
    }

    #[inline]
    pub fn state_of(&self, rx: usize) -> usize {
        self.0[rx]
    }
}

/// All nine cross links of one joint realization, `links[rx][tx]`.
pub type LinkSet = [[ComplexMat2; USERS]; USERS];

/// Immutable pool of pre-generated channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPool {
    states: usize,
    n_samples: usize,
    data: Vec<ComplexMat2>,
}

fn cn01<R: Rng>(rng: &mut R) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn gaussian_mat<R: Rng>(rng: &mut R) -> ComplexMat2 {
    ComplexMat2([cn01(rng), cn01(rng), cn01(rng), cn01(rng)])
}

/// Draws the pool. Entries are circular complex Gaussian with unit variance
/// before state scaling; the same config always yields the same pool.
pub fn generate_pool(cfg: &ScenarioConfig) -> Result<ChannelPool> {
    cfg.validate()?;
    let (p_count, s_count) = (cfg.states, cfg.n_samples);
    let amps: Vec<[f64; ANTENNAS]> = cfg
        .state_powers
        .iter()
        .map(|pw| [math::sqrt(pw[0]), math::sqrt(pw[1])])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = alloc::vec![ComplexMat2::default(); USERS * USERS * p_count * s_count];
    let at =
        |rx: usize, tx: usize, p: usize, s: usize| ((rx * USERS + tx) * p_count + p) * s_count + s;

    match cfg.channel_model {
        ChannelModel::Independent => {
            for rx in 0..USERS {
                for tx in 0..USERS {
                    for (p, amp) in amps.iter().enumerate() {
                        for s in 0..s_count {
                            data[at(rx, tx, p, s)] = gaussian_mat(&mut rng).scale_rows(*amp);
                        }
                    }
                }
            }
        }
        ChannelModel::Scaled => {
            for rx in 0..USERS {
                for tx in 0..USERS {
                    for s in 0..s_count {
                        let base = gaussian_mat(&mut rng);
                        for (p, amp) in amps.iter().enumerate() {
                            data[at(rx, tx, p, s)] = base.scale_rows(*amp);
                        }
                    }
                }
            }
        }
    }
    Ok(ChannelPool {
        states: p_count,
        n_samples: s_count,
        data,
    })
}

impl ChannelPool {
    pub fn states(&self) -> usize {
        self.states
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn arms(&self) -> usize {
        arm_count(self.states).unwrap_or(usize::MAX)
    }

    #[inline]
    fn offset(&self, rx: usize, tx: usize, state: usize, sample: usize) -> usize {
        ((rx * USERS + tx) * self.states + state) * self.n_samples + sample
    }

    fn check(&self, rx: usize, tx: usize, state: usize, sample: usize) -> Result<()> {
        let checks = [
            ("receiver", rx, USERS),
            ("transmitter", tx, USERS),
            ("antenna state", state, self.states),
            ("sample", sample, self.n_samples),
        ];
        for (what, index, limit) in checks {
            if index >= limit {
                return Err(Error::Index { what, index, limit });
            }
        }
        Ok(())
    }

    /// Raw pool entry `H^{[rx,tx]}_state(sample)`.
    pub fn get(&self, rx: usize, tx: usize, state: usize, sample: usize) -> Result<ComplexMat2> {
        self.check(rx, tx, state, sample)?;
        Ok(self.data[self.offset(rx, tx, state, sample)])
    }

    /// Channel from `tx` to `rx` when receivers use combination `c`: the
    /// state is the one chosen by `rx`, whichever transmitter is looked at.
    pub fn channel_at(
        &self,
        rx: usize,
        tx: usize,
        c: &StateCombination,
        sample: usize,
    ) -> Result<ComplexMat2> {
        if rx >= USERS {
            return Err(Error::Index {
                what: "receiver",
                index: rx,
                limit: USERS,
            });
        }
        self.get(rx, tx, c.state_of(rx), sample)
    }

    /// Every link for combination `c` and one sample.
    pub fn links(&self, c: &StateCombination, sample: usize) -> Result<LinkSet> {
        for rx in 0..USERS {
            self.check(rx, 0, c.state_of(rx), sample)?;
        }
        let mut out = [[ComplexMat2::default(); USERS]; USERS];
        for (rx, row) in out.iter_mut().enumerate() {
            for (tx, h) in row.iter_mut().enumerate() {
                *h = self.data[self.offset(rx, tx, c.state_of(rx), sample)];
            }
        }
        Ok(out)
    }
}
