//! Online sampling and stopping policies, and single-trial simulation.
//!
//! A trial draws Λ from the change-point channel, one observation per slot
//! from the observation channel (whether or not the slot is sampled, so
//! different policies see the same data), and replenishment from its own
//! channel.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::limited::{interval_of, LimitedPolicyTable};
use crate::model::{
    log_likelihood_ratio, sample_change_point, sample_observation, sample_replenishment,
    ChangeModel, Channel, EnergyModel, TrajectorySeed,
};
use crate::posterior::{bayes_from_stay, propagate_silent};
use crate::stochastic::{
    check_alpha, greedy_action, greedy_threshold_stop, optimal_action, optimal_stop,
    StochasticValueTable,
};

/// Slots after which a trajectory is abandoned.
pub const STEP_CAP: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub enum Policy {
    /// Stop at slot 0.
    ImmediateStop,
    /// Sample every slot, stop once π ≥ 1 - α.
    Shiryaev { alpha: f64 },
    /// Sample every `interval` slots (at most `max_samples` times), stop at
    /// the first sampling epoch with π ≥ 1 - α. Once samples run out the
    /// posterior drifts silently and the same threshold applies every slot.
    Uniform {
        interval: u64,
        alpha: f64,
        max_samples: Option<u64>,
    },
    /// Optimal policy for a fixed budget of rights.
    Limited(Arc<LimitedPolicyTable>),
    /// Intervals from a limited-rights table, stopping at π ≥ 1 - α.
    LimitedThreshold {
        table: Arc<LimitedPolicyTable>,
        alpha: f64,
    },
    /// Sample whenever a right is available, stop once π ≥ 1 - α.
    Greedy { alpha: f64, energy: EnergyModel },
    /// Optimal policy for randomly replenished rights.
    StochasticOptimal(Arc<StochasticValueTable>),
}

impl Policy {
    pub fn shiryaev(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Policy::Shiryaev { alpha })
    }

    pub fn uniform(interval: u64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if interval == 0 {
            return domain("interval must be at least 1");
        }
        Ok(Policy::Uniform {
            interval,
            alpha,
            max_samples: None,
        })
    }

    pub fn greedy(alpha: f64, energy: EnergyModel) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Policy::Greedy { alpha, energy })
    }

    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Policy::ImmediateStop => "immediate",
            Policy::Shiryaev { .. } => "shiryaev",
            Policy::Uniform { .. } => "uniform",
            Policy::Limited(_) => "limited",
            Policy::LimitedThreshold { .. } => "limited-threshold",
            Policy::Greedy { .. } => "greedy",
            Policy::StochasticOptimal(_) => "stochastic-optimal",
        }
    }

    /// Sweep parameter: α for threshold rules, c for table policies.
    pub fn param(&self) -> f64 {
        match self {
            Policy::ImmediateStop => 0.0,
            Policy::Shiryaev { alpha }
            | Policy::Uniform { alpha, .. }
            | Policy::LimitedThreshold { alpha, .. }
            | Policy::Greedy { alpha, .. } => *alpha,
            Policy::Limited(t) => t.c,
            Policy::StochasticOptimal(t) => t.c,
        }
    }
}

/// Result of one simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionOutcome {
    pub tau: u64,
    pub lambda: u64,
    pub samples_used: u64,
    pub sample_times: Vec<u64>,
    pub false_alarm: bool,
    /// Σ_{k<τ} π_k.
    pub posterior_sum: f64,
    pub posterior_at_stop: f64,
}

impl DetectionOutcome {
    pub fn delay(&self) -> u64 {
        self.tau.saturating_sub(self.lambda)
    }
}

/// What happened in one slot, for audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    /// Posterior after the slot's update.
    pub pi: f64,
    pub energy_before: u32,
    pub arrival: u32,
    pub sampled: bool,
    pub energy_after: u32,
}

enum Machine<'a> {
    Immediate,
    Every {
        alpha: f64,
    },
    Uniform {
        interval: u64,
        alpha: f64,
        left: u64,
    },
    Table {
        table: &'a LimitedPolicyTable,
        alpha: Option<f64>,
        used: usize,
        next: Option<u64>,
    },
    Greedy {
        alpha: f64,
        energy: &'a EnergyModel,
        level: u32,
    },
    Optimal {
        table: &'a StochasticValueTable,
        level: u32,
    },
}

impl<'a> Machine<'a> {
    fn new(policy: &'a Policy) -> Result<Self> {
        Ok(match policy {
            Policy::ImmediateStop => Machine::Immediate,
            Policy::Shiryaev { alpha } => {
                check_alpha(*alpha)?;
                Machine::Every { alpha: *alpha }
            }
            Policy::Uniform {
                interval,
                alpha,
                max_samples,
            } => {
                check_alpha(*alpha)?;
                if *interval == 0 {
                    return domain("interval must be at least 1");
                }
                Machine::Uniform {
                    interval: *interval,
                    alpha: *alpha,
                    left: max_samples.unwrap_or(u64::MAX),
                }
            }
            Policy::Limited(t) => Machine::Table {
                table: t,
                alpha: None,
                used: 0,
                next: None,
            },
            Policy::LimitedThreshold { table, alpha } => {
                check_alpha(*alpha)?;
                Machine::Table {
                    table,
                    alpha: Some(*alpha),
                    used: 0,
                    next: None,
                }
            }
            Policy::Greedy { alpha, energy } => {
                check_alpha(*alpha)?;
                Machine::Greedy {
                    alpha: *alpha,
                    energy,
                    level: energy.initial(),
                }
            }
            Policy::StochasticOptimal(t) => Machine::Optimal {
                table: t,
                level: t.energy.initial(),
            },
        })
    }

    fn energy(&self) -> Option<&EnergyModel> {
        match self {
            Machine::Greedy { energy, .. } => Some(energy),
            Machine::Optimal { table, .. } => Some(&table.energy),
            _ => None,
        }
    }

    fn level(&self) -> u32 {
        match self {
            Machine::Greedy { level, .. } | Machine::Optimal { level, .. } => *level,
            _ => 0,
        }
    }

    /// Stop decision at slot `k` with posterior `pi`. Also schedules the
    /// next sample for table policies at decision epochs.
    fn stop(&mut self, k: u64, pi: f64, epoch: bool) -> Result<bool> {
        Ok(match self {
            Machine::Immediate => true,
            Machine::Every { alpha } => greedy_threshold_stop(pi, *alpha),
            Machine::Uniform {
                interval,
                alpha,
                left,
            } => (*left == 0 || k.is_multiple_of(*interval)) && greedy_threshold_stop(pi, *alpha),
            Machine::Table {
                table,
                alpha,
                used,
                next,
            } => {
                let n = table.rights();
                let thr = match alpha {
                    Some(a) => 1.0 - *a,
                    None => table.threshold_after(*used),
                };
                if *used == n {
                    pi >= thr
                } else if epoch {
                    if pi >= thr {
                        true
                    } else {
                        *next = Some(k + interval_of(table, *used, pi)?);
                        false
                    }
                } else {
                    false
                }
            }
            Machine::Greedy { alpha, .. } => greedy_threshold_stop(pi, *alpha),
            Machine::Optimal { table, level } => optimal_stop(table, pi, *level),
        })
    }

    /// Sampling decision for slot `k` given the arrival `nu`; `pi` is the
    /// posterior at slot `k - 1`.
    fn sample(&mut self, k: u64, pi: f64, nu: u32) -> bool {
        match self {
            Machine::Immediate => false,
            Machine::Every { .. } => true,
            Machine::Uniform { interval, left, .. } => {
                if *left > 0 && k.is_multiple_of(*interval) {
                    *left -= 1;
                    true
                } else {
                    false
                }
            }
            Machine::Table { used, next, .. } => {
                if *next == Some(k) {
                    *used += 1;
                    *next = None;
                    true
                } else {
                    false
                }
            }
            Machine::Greedy { energy, level, .. } => {
                let mu = greedy_action(*level, nu) == 1;
                *level = energy.next_level(*level, nu, mu);
                mu
            }
            Machine::Optimal { table, level } => {
                let mu = optimal_action(table, pi, *level, nu) == 1;
                *level = table.energy.next_level(*level, nu, mu);
                mu
            }
        }
    }
}

/// Simulates one trajectory.
pub fn run_trial(
    policy: &Policy,
    model: &ChangeModel,
    seed: TrajectorySeed,
) -> Result<DetectionOutcome> {
    run_trial_traced(policy, model, seed, &mut |_| {})
}

/// As [`run_trial`], reporting every slot to `audit`.
pub fn run_trial_traced(
    policy: &Policy,
    model: &ChangeModel,
    seed: TrajectorySeed,
    audit: &mut dyn FnMut(&SlotRecord),
) -> Result<DetectionOutcome> {
    let mut machine = Machine::new(policy)?;
    let rho = model.rho();
    let pair = model.pair.as_ref();
    let lambda = sample_change_point(&model.prior, seed);
    let mut obs = seed.rng(Channel::Observations);
    let mut arrivals = seed.rng(Channel::Replenishment);

    let mut pi = model.pi0();
    let mut k = 0u64;
    let mut sum = 0.0;
    let mut sample_times = Vec::new();
    let mut epoch = true;
    loop {
        if machine.stop(k, pi, epoch)? {
            return Ok(DetectionOutcome {
                tau: k,
                lambda,
                samples_used: sample_times.len() as u64,
                sample_times,
                false_alarm: k < lambda,
                posterior_sum: sum,
                posterior_at_stop: pi,
            });
        }
        if k >= STEP_CAP {
            return Err(Error::StepCap { cap: STEP_CAP });
        }
        sum += pi;
        k += 1;
        let x = sample_observation(pair, k >= lambda, &mut obs);
        let before = machine.level();
        let nu = match machine.energy() {
            Some(e) => sample_replenishment(e, &mut arrivals),
            None => 0,
        };
        let sampled = machine.sample(k, pi, nu);
        pi = if sampled {
            sample_times.push(k);
            let stay = (1.0 - pi) * (1.0 - rho);
            bayes_from_stay(stay, log_likelihood_ratio(pair, x, true))
        } else {
            propagate_silent(pi, rho)
        };
        epoch = sampled;
        audit(&SlotRecord {
            slot: k,
            pi,
            energy_before: before,
            arrival: nu,
            sampled,
            energy_after: machine.level(),
        });
    }
}

pub fn run_limited_policy(
    table: &Arc<LimitedPolicyTable>,
    model: &ChangeModel,
    seed: TrajectorySeed,
) -> Result<DetectionOutcome> {
    run_trial(&Policy::Limited(table.clone()), model, seed)
}

/// Which stochastic-rights policy to run.
#[derive(Debug, Clone)]
pub enum StochasticPolicy {
    Optimal(Arc<StochasticValueTable>),
    Greedy { alpha: f64, energy: EnergyModel },
}

pub fn run_stochastic_policy(
    policy: &StochasticPolicy,
    model: &ChangeModel,
    seed: TrajectorySeed,
) -> Result<DetectionOutcome> {
    let p = match policy {
        StochasticPolicy::Optimal(t) => Policy::StochasticOptimal(t.clone()),
        StochasticPolicy::Greedy { alpha, energy } => Policy::greedy(*alpha, energy.clone())?,
    };
    run_trial(&p, model, seed)
}

pub fn shiryaev_policy(alpha: f64) -> Result<Policy> {
    Policy::shiryaev(alpha)
}

pub fn uniform_sampling_policy(interval: u64, alpha: f64) -> Result<Policy> {
    Policy::uniform(interval, alpha)
}
