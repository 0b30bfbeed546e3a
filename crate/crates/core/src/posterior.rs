//! Posterior recursions for the geometric change-point prior.
//!
//! Updates are carried out on the "stay" mass `1 - π`, which can be formed
//! as an exact product `(1 - π)(1 - ρ)^m`, and Bayes' rule is applied on the
//! log-odds scale so extreme likelihood ratios neither underflow nor
//! produce NaN.

use crate::error::{domain, Result};
use crate::model::DensityPair;

/// Largest posterior used when forming log-odds.
pub const LOG_ODDS_CLAMP: f64 = 1.0 - 1e-15;

/// A posterior probability that the change has already happened.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Posterior(f64);

impl Posterior {
    pub fn new(pi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return domain(format!("posterior must lie in [0, 1], got {pi}"));
        }
        Ok(Self(pi))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn silent(self, rho: f64) -> Self {
        Self(propagate_silent(self.0, rho))
    }
}

/// Φ₀(π) = π + (1 - π)ρ.
pub fn propagate_silent(pi: f64, rho: f64) -> f64 {
    pi + (1.0 - pi) * rho
}

/// (1 - ρ)^m computed without repeated multiplication.
pub fn stay_factor(rho: f64, m: u64) -> f64 {
    (m as f64 * (-rho).ln_1p()).exp()
}

/// Φ₀ applied m times: 1 - (1 - π)(1 - ρ)^m.
pub fn propagate_silent_n(pi: f64, rho: f64, m: u64) -> f64 {
    1.0 - (1.0 - pi) * stay_factor(rho, m)
}

/// Posterior given a prior whose no-change mass is `stay` and an observation
/// with log-likelihood ratio `llr`.
pub fn bayes_from_stay(stay: f64, llr: f64) -> f64 {
    if stay <= 0.0 {
        return 1.0;
    }
    if stay >= 1.0 {
        return 0.0;
    }
    // minus the posterior log-odds
    let z = stay.ln() - (-stay).ln_1p() - llr;
    if z.is_nan() {
        // llr is NaN; treat as uninformative
        return 1.0 - stay;
    }
    1.0 / (1.0 + z.exp())
}

fn pair_llr(pair: &dyn DensityPair, x: f64) -> Result<f64> {
    let llr = pair.llr(x);
    if llr.is_nan() {
        return domain(format!("likelihood ratio undefined at x = {x}"));
    }
    Ok(llr)
}

/// One slot of silent propagation followed by a Bayes update on `x`.
pub fn update_with_observation(pi: f64, x: f64, pair: &dyn DensityPair, rho: f64) -> Result<f64> {
    posterior_after_interval(pi, rho, 1, x, pair)
}

/// Σ_{k=0}^{m-1} π_k along the silent recursion started at π.
pub fn silent_sum(pi: f64, rho: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let one_minus = -(m as f64 * (-rho).ln_1p()).exp_m1();
    m as f64 - (1.0 - pi) / rho * one_minus
}

/// Posterior after `m - 1` silent slots and one observation at slot `m`.
pub fn posterior_after_interval(
    pi: f64,
    rho: f64,
    m: u64,
    x: f64,
    pair: &dyn DensityPair,
) -> Result<f64> {
    if m == 0 {
        return domain("interval must be at least 1");
    }
    let stay = (1.0 - pi) * stay_factor(rho, m);
    if stay <= 0.0 {
        return Ok(1.0);
    }
    Ok(bayes_from_stay(stay, pair_llr(pair, x)?))
}

/// Cumulative score `s` and exact log-odds `r` of the posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreState {
    pub s: f64,
    pub r: f64,
}

impl ScoreState {
    /// Score 0 with log-odds of the (clamped) posterior.
    pub fn from_posterior(pi: f64) -> Self {
        Self {
            s: 0.0,
            r: log_odds(pi),
        }
    }

    pub fn posterior(&self) -> f64 {
        if self.r == f64::INFINITY {
            1.0
        } else {
            1.0 / (1.0 + (-self.r).exp())
        }
    }
}

/// log(π / (1 - π)) with π clamped to [0, 1 - 1e-15].
pub fn log_odds(pi: f64) -> f64 {
    let p = pi.clamp(0.0, LOG_ODDS_CLAMP);
    p.ln() - (-p).ln_1p()
}

/// log(π₀/(1 - π₀) + ρ), the offset between the score and the log-odds
/// after the first slot.
pub fn initial_offset(pi0: f64, rho: f64) -> f64 {
    (pi0 / (1.0 - pi0) + rho).ln()
}

/// Advances the score by `log_lr + |log(1 - ρ)|` and the log-odds by the
/// exact posterior recursion.
pub fn score_step(state: ScoreState, log_lr: f64, rho: f64) -> ScoreState {
    let drift = -(-rho).ln_1p();
    let r = state.r;
    let base = if r == f64::NEG_INFINITY {
        rho.ln()
    } else if r > 0.0 {
        r + (rho * (-r).exp()).ln_1p()
    } else {
        (r.exp() + rho).ln()
    };
    ScoreState {
        s: state.s + log_lr + drift,
        r: base + drift + log_lr,
    }
}

/// Shiryaev-Roberts recursion on a sequence subsampled every `interval`
/// slots: (1 + R) · lr / (1 - ρ)^interval.
pub fn shiryaev_roberts_step(r_prev: f64, lr: f64, rho: f64, interval: u64) -> f64 {
    (1.0 + r_prev) * lr / stay_factor(rho, interval)
}

/// Posterior equivalent of the subsampled Shiryaev-Roberts statistic.
pub fn sr_posterior(r: f64, rho: f64, interval: u64) -> f64 {
    let hazard = -(interval as f64 * (-rho).ln_1p()).exp_m1();
    r * hazard / (r * hazard + 1.0)
}
