//! Seeded parallel Monte Carlo estimation of delay, false alarms and risk.
//!
//! Trial `i` uses `TrajectorySeed::new(master_seed, i)`. Records are
//! gathered in trial order and summed sequentially with compensation, so
//! estimates do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{ChangeModel, EnergyModel, TrajectorySeed};
use crate::policy::{run_trial, DetectionOutcome, Policy};

/// Smallest accepted trial count.
pub const MIN_TRIALS: usize = 100;

/// Largest tolerated share of trials hitting the step cap.
pub const MAX_CAPPED_FRACTION: f64 = 1e-3;

/// Per-trial losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub lambda: u64,
    pub tau: u64,
    pub samples_used: u64,
    pub false_alarm: bool,
    pub delay_plus: u64,
    /// c (τ - Λ)⁺ + 1{τ < Λ}.
    pub risk_contrib: f64,
    /// 1 - π_τ + c Σ_{k<τ} π_k.
    pub posterior_risk: f64,
    pub posterior_pfa: f64,
}

impl TrialRecord {
    pub fn from_outcome(o: &DetectionOutcome, c: f64) -> Self {
        let delay_plus = o.delay();
        Self {
            lambda: o.lambda,
            tau: o.tau,
            samples_used: o.samples_used,
            false_alarm: o.false_alarm,
            delay_plus,
            risk_contrib: c * delay_plus as f64 + f64::from(u8::from(o.false_alarm)),
            posterior_risk: 1.0 - o.posterior_at_stop + c * o.posterior_sum,
            posterior_pfa: 1.0 - o.posterior_at_stop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub trials: usize,
    pub capped: usize,
    pub add: f64,
    pub add_se: f64,
    pub pfa: f64,
    pub pfa_se: f64,
    pub risk: f64,
    pub risk_se: f64,
    /// Posterior forms of PFA and risk, E[1 - π_τ] and E[1 - π_τ + cΣπ_k].
    pub pfa_posterior: f64,
    pub pfa_posterior_se: f64,
    pub risk_posterior: f64,
    pub risk_posterior_se: f64,
    /// Standard error of the per-trial difference of the two risk forms.
    pub risk_diff_se: f64,
    pub mean_samples: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut s = CompensatedSum::default();
    let mut n = 0usize;
    for x in xs.clone() {
        s.add(x);
        n += 1;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut ss = CompensatedSum::default();
    for x in xs {
        ss.add((x - mean) * (x - mean));
    }
    let var = ss.value() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs trials `0..trials`, returning per-trial records in order and the
/// number of trajectories abandoned at the step cap.
pub fn run_trials(
    policy: &Policy,
    model: &ChangeModel,
    c: f64,
    trials: usize,
    master_seed: u64,
) -> Result<(Vec<TrialRecord>, usize)> {
    if trials < MIN_TRIALS {
        return domain(format!(
            "at least {MIN_TRIALS} trials required, got {trials}"
        ));
    }
    let results: Vec<Result<DetectionOutcome>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(policy, model, TrajectorySeed::new(master_seed, i)))
        .collect();
    let mut records = Vec::with_capacity(trials);
    let mut capped = 0;
    for r in results {
        match r {
            Ok(o) => records.push(TrialRecord::from_outcome(&o, c)),
            Err(Error::StepCap { .. }) => capped += 1,
            Err(e) => return Err(e),
        }
    }
    if capped as f64 > MAX_CAPPED_FRACTION * trials as f64 {
        return Err(Error::TooManyCapped { capped, trials });
    }
    Ok((records, capped))
}

pub fn summarize(records: &[TrialRecord], trials: usize, capped: usize) -> SimEstimate {
    let it = || records.iter();
    let (add, add_se) = mean_se(it().map(|r| r.delay_plus as f64));
    let (pfa, pfa_se) = mean_se(it().map(|r| f64::from(u8::from(r.false_alarm))));
    let (risk, risk_se) = mean_se(it().map(|r| r.risk_contrib));
    let (pfa_posterior, pfa_posterior_se) = mean_se(it().map(|r| r.posterior_pfa));
    let (risk_posterior, risk_posterior_se) = mean_se(it().map(|r| r.posterior_risk));
    let (_, risk_diff_se) = mean_se(it().map(|r| r.risk_contrib - r.posterior_risk));
    let (mean_samples, _) = mean_se(it().map(|r| r.samples_used as f64));
    SimEstimate {
        trials,
        capped,
        add,
        add_se,
        pfa,
        pfa_se,
        risk,
        risk_se,
        pfa_posterior,
        pfa_posterior_se,
        risk_posterior,
        risk_posterior_se,
        risk_diff_se,
        mean_samples,
    }
}

/// Monte Carlo estimate for one policy. `c` only enters the risk columns.
pub fn estimate(
    policy: &Policy,
    model: &ChangeModel,
    c: f64,
    trials: usize,
    master_seed: u64,
) -> Result<SimEstimate> {
    if !(c >= 0.0 && c.is_finite()) {
        return domain(format!("c must be nonnegative and finite, got {c}"));
    }
    let (records, capped) = run_trials(policy, model, c, trials, master_seed)?;
    Ok(summarize(&records, trials, capped))
}

/// Mean and standard error of c (τ - Λ)⁺ + 1{τ < Λ}.
pub fn risk_estimate(
    policy: &Policy,
    model: &ChangeModel,
    c: f64,
    trials: usize,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return domain(format!("c must be positive, got {c}"));
    }
    estimate(policy, model, c, trials, master_seed).map(|e| (e.risk, e.risk_se))
}

/// Threshold-rule families swept over α.
#[derive(Debug, Clone)]
pub enum PolicyFamily {
    Shiryaev,
    Uniform {
        interval: u64,
        max_samples: Option<u64>,
    },
    Greedy {
        energy: EnergyModel,
    },
}

impl PolicyFamily {
    pub fn at(&self, alpha: f64) -> Result<Policy> {
        match self {
            PolicyFamily::Shiryaev => Policy::shiryaev(alpha),
            PolicyFamily::Uniform {
                interval,
                max_samples,
            } => {
                let mut p = Policy::uniform(*interval, alpha)?;
                if let Policy::Uniform { max_samples: m, .. } = &mut p {
                    *m = *max_samples;
                }
                Ok(p)
            }
            PolicyFamily::Greedy { energy } => Policy::greedy(alpha, energy.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyFamily::Shiryaev => "shiryaev",
            PolicyFamily::Uniform { .. } => "uniform",
            PolicyFamily::Greedy { .. } => "greedy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub param: f64,
    pub estimate: SimEstimate,
    /// Leading-order delay bound at this α, when attached.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub policy: String,
    pub points: Vec<CurvePoint>,
}

/// One estimate per α; α must be strictly decreasing in (0, 1).
pub fn sweep_alpha(
    family: &PolicyFamily,
    alphas: &[f64],
    model: &ChangeModel,
    c: f64,
    trials: usize,
    master_seed: u64,
    bound: Option<&dyn Fn(f64) -> f64>,
) -> Result<CurveSet> {
    if alphas.is_empty() {
        return domain("no alpha values to sweep");
    }
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return domain("alpha values must be strictly decreasing");
    }
    let mut points = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let policy = family.at(a)?;
        points.push(CurvePoint {
            param: a,
            estimate: estimate(&policy, model, c, trials, master_seed)?,
            bound: bound.map(|f| f(a)),
        });
    }
    Ok(CurveSet {
        policy: family.name().to_string(),
        points,
    })
}
