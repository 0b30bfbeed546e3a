//! Leading-order detection delay bounds as the false-alarm level vanishes.
//!
//! All logarithms are natural. `min_rights_for_interval_base10` is kept
//! only for reporting; its ratio coincides with the natural-log one.

use serde::Serialize;

use crate::error::{domain, Result};

/// Inputs shared by the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub alpha: f64,
    pub kl: f64,
    pub rho: f64,
    pub interval: u64,
    pub ptilde: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.kl >= 0.0 && self.kl.is_finite()) {
            return domain(format!("kl must be nonnegative, got {}", self.kl));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return domain(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if self.interval == 0 {
            return domain("interval must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.ptilde) {
            return domain(format!("ptilde must lie in [0, 1], got {}", self.ptilde));
        }
        Ok(())
    }
}

/// |ln(1 - ρ)|.
pub fn prior_rate(rho: f64) -> f64 {
    -(-rho).ln_1p()
}

/// |ln α| / (D + |ln(1 - ρ)|).
pub fn lower_bound_add(alpha: f64, kl: f64, rho: f64) -> f64 {
    alpha.ln().abs() / (kl + prior_rate(rho))
}

/// |ln α| ς / (D + ς |ln(1 - ρ)|), uniform sampling every ς slots.
pub fn upper_bound_add(alpha: f64, kl: f64, rho: f64, interval: u64) -> f64 {
    let s = interval as f64;
    alpha.ln().abs() * s / (kl + s * prior_rate(rho))
}

/// |ln α| / (p̃ D + |ln(1 - ρ)|).
pub fn greedy_asymptotic_add(alpha: f64, ptilde: f64, kl: f64, rho: f64) -> f64 {
    alpha.ln().abs() / (ptilde * kl + prior_rate(rho))
}

/// |ln α| / |ln(1 - ρ)|, the delay with no observations at all.
pub fn prior_only_add(alpha: f64, rho: f64) -> f64 {
    alpha.ln().abs() / prior_rate(rho)
}

/// Smallest N with N ≥ |ln α| / (|ln(1 - ρ)| ς).
pub fn min_rights_for_interval(alpha: f64, rho: f64, interval: u64) -> u64 {
    rights_ratio(alpha.ln().abs(), prior_rate(rho), interval).ceil() as u64
}

/// Same ratio with base-10 logarithms.
pub fn min_rights_for_interval_base10(alpha: f64, rho: f64, interval: u64) -> u64 {
    rights_ratio(alpha.log10().abs(), (1.0 - rho).log10().abs(), interval).ceil() as u64
}

fn rights_ratio(log_alpha: f64, log_stay: f64, interval: u64) -> f64 {
    let r = log_alpha / (log_stay * interval as f64);
    // guard against 1.0000000000000002 style round-up
    let nearest = r.round();
    if (r - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        r
    }
}

/// Interval implied by N rights: |ln α| / (N |ln(1 - ρ)|).
pub fn interval_for_rights(alpha: f64, rho: f64, rights: u64) -> f64 {
    alpha.ln().abs() / (rights as f64 * prior_rate(rho))
}
