//! Closed-form interference alignment for three users on 2×2 links with one
//! stream each, and the two link metrics used as bandit rewards.
//!
//! Alignment puts both interferers at every receiver into one direction:
//!
//! * rx 0: `H01 v1 ∥ H02 v2`
//! * rx 1: `H10 v0 ∥ H12 v2`
//! * rx 2: `H20 v0 ∥ H21 v1`
//!
//! Eliminating `v1` and `v2` leaves `v0` as an eigenvector of
//! `E = H20⁻¹ H21 H01⁻¹ H02 H12⁻¹ H10`. Each decoder is the unit vector
//! orthogonal to the aligned interference direction at its receiver.

use crate::channel::{LinkSet, USERS};
use crate::cxmat::{unit_orth_complement, ComplexMat2, ComplexVec2, ZERO_NORM};
use crate::error::{Error, Result};
use crate::math;

/// Precoders `v` and decoders `u` for one joint channel realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IaSolution {
    pub v: [ComplexVec2; USERS],
    pub u: [ComplexVec2; USERS],
    /// Which eigenvector of the chain matrix seeded `v[0]`
    /// (0 = larger-modulus eigenvalue).
    pub eig_choice: usize,
}

/// Per-link outcome of one aligned transmission.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LinkMetrics {
    /// Bits per channel use, per user.
    pub per_user_rate: [f64; USERS],
    pub sum_rate: f64,
    pub per_rx_chordal: [f64; USERS],
    pub total_chordal: f64,
}

/// The interferer used when a single one is needed at receiver `rx`.
#[inline]
pub const fn first_interferer(rx: usize) -> usize {
    if rx == 0 {
        1
    } else {
        0
    }
}

/// Alignment chain matrix whose eigenvectors seed `v[0]`.
pub fn chain_matrix(h: &LinkSet) -> Result<ComplexMat2> {
    Ok(h[2][0].inv()? * h[2][1] * h[0][1].inv()? * h[0][2] * h[1][2].inv()? * h[1][0])
}

/// Aligns using the larger-modulus eigenvector of the chain matrix.
pub fn solve_ia(h: &LinkSet) -> Result<IaSolution> {
    solve_ia_with(h, 0)
}

/// Aligns using eigenvector `eig_choice` (0 or 1) of the chain matrix.
pub fn solve_ia_with(h: &LinkSet, eig_choice: usize) -> Result<IaSolution> {
    if eig_choice > 1 {
        return Err(Error::Index {
            what: "eigenvector choice",
            index: eig_choice,
            limit: 2,
        });
    }
    for row in h {
        for m in row {
            // Every link must pass the conditioning test, not only the inverted ones.
            m.inv()?;
        }
    }
    let eig = chain_matrix(h)?.eig2()?;
    let v0 = eig.vectors[eig_choice];
    let v1 = (h[2][1].inv()? * h[2][0] * v0).normalize()?;
    let v2 = (h[1][2].inv()? * h[1][0] * v0).normalize()?;
    let v = [v0, v1, v2];

    let mut u = [ComplexVec2::default(); USERS];
    for (rx, slot) in u.iter_mut().enumerate() {
        let j = first_interferer(rx);
        *slot = unit_orth_complement(&(h[rx][j] * v[j]))?;
    }
    Ok(IaSolution { v, u, eig_choice })
}

/// `max_{i≠j} |u_i† H^{[i,j]} v_j|`, the leakage left after alignment.
pub fn alignment_residual(h: &LinkSet, sol: &IaSolution) -> f64 {
    let mut worst = 0.0f64;
    for rx in 0..USERS {
        for tx in (0..USERS).filter(|&tx| tx != rx) {
            worst = worst.max(sol.u[rx].dot(&(h[rx][tx] * sol.v[tx])).abs());
        }
    }
    worst
}

/// `|u_k† H^{[k,k]} v_k|²`, the post-alignment desired-signal gain.
#[inline]
pub fn effective_gain(h_kk: &ComplexMat2, sol: &IaSolution, k: usize) -> f64 {
    sol.u[k].dot(&(*h_kk * sol.v[k])).norm_sqr()
}

/// Rate of a single stream with effective gain `gain` at linear SNR `p_tx`,
/// `log2(1 + p_tx · gain)`.
#[inline]
pub fn rate_from_gain(gain: f64, p_tx: f64) -> f64 {
    math::log1p(p_tx * gain) * core::f64::consts::LOG2_E
}

/// Achievable rate of user `k` in bits per channel use, unit noise power and
/// one stream: `log2(1 + p_tx |u_k† H^{[k,k]} v_k|²)`.
pub fn user_rate(h_kk: &ComplexMat2, sol: &IaSolution, k: usize, p_tx: f64) -> f64 {
    debug_assert!(p_tx >= 0.0, "transmit power must be non-negative");
    rate_from_gain(effective_gain(h_kk, sol, k), p_tx)
}

pub fn sum_rate(h: &LinkSet, sol: &IaSolution, p_tx: f64) -> f64 {
    (0..USERS).map(|k| user_rate(&h[k][k], sol, k, p_tx)).sum()
}

/// Chordal distance between the lines spanned by `x` and `y` in ℂ².
///
/// Equals `sqrt(1 − |x̂†ŷ|²)`; evaluated as `|det[x y]| / (‖x‖‖y‖)`, which is
/// the same quantity without cancellation near zero.
pub fn chordal_distance(x: &ComplexVec2, y: &ComplexVec2) -> Result<f64> {
    let (nx, ny) = (x.norm(), y.norm());
    if !(nx > ZERO_NORM && ny > ZERO_NORM) {
        return Err(Error::ZeroVector);
    }
    let cross = x.e0() * y.e1() - x.e1() * y.e0();
    Ok((cross.abs() / (nx * ny)).clamp(0.0, 1.0))
}

/// Chordal distance at receiver `rx` between the desired direction
/// `H^{[rx,rx]} v_rx` and the aligned interference direction.
pub fn receiver_chordal(h: &LinkSet, sol: &IaSolution, rx: usize) -> Result<f64> {
    receiver_chordal_via(h, sol, rx, first_interferer(rx))
}

/// As [`receiver_chordal`], measuring against interferer `tx` explicitly.
pub fn receiver_chordal_via(h: &LinkSet, sol: &IaSolution, rx: usize, tx: usize) -> Result<f64> {
    if rx >= USERS || tx >= USERS || tx == rx {
        return Err(Error::Index {
            what: "interferer",
            index: tx,
            limit: USERS,
        });
    }
    chordal_distance(&(h[rx][rx] * sol.v[rx]), &(h[rx][tx] * sol.v[tx]))
}

pub fn link_metrics(h: &LinkSet, sol: &IaSolution, p_tx: f64) -> Result<LinkMetrics> {
    let mut m = LinkMetrics::default();
    for k in 0..USERS {
        m.per_user_rate[k] = user_rate(&h[k][k], sol, k, p_tx);
        m.per_rx_chordal[k] = receiver_chordal(h, sol, k)?;
    }
    m.sum_rate = m.per_user_rate.iter().sum();
    m.total_chordal = m.per_rx_chordal.iter().sum();
    Ok(m)
}
