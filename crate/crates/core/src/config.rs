//! Versioned JSON experiment configuration.
//!
//! Every block has explicit defaults, unknown keys are rejected, and
//! [`ExperimentConfig::from_json`] validates ranges before anything is
//! built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PolicyGrid, MAX_GRID_SIZE};
use crate::model::{ChangeModel, EnergyModel, MAX_CAPACITY};
use crate::quadrature::{ExpectationMethod, QuadratureConfig};
use crate::stochastic::IterationConfig;

pub const CONFIG_FORMAT: u32 = 1;

const MAX_RIGHTS: usize = 10_000;
const MAX_ITERS: usize = 10_000_000;
const MAX_TRIALS: usize = 1_000_000_000;
const MAX_SWEEP: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "format_version")]
    pub format: u32,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub energy: EnergyBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub run: RunBlock,
}

fn format_version() -> u32 {
    CONFIG_FORMAT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub pi0: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub snr_db: f64,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            pi0: 0.0,
            rho: 0.1,
            sigma2: 1.0,
            snr_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyBlock {
    pub capacity: u32,
    pub pmf: Vec<f64>,
    pub initial: u32,
}

impl Default for EnergyBlock {
    fn default() -> Self {
        Self {
            capacity: 3,
            pmf: vec![0.85, 0.1, 0.03, 0.01, 0.01],
            initial: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub grid_size: usize,
    pub quad_tol: f64,
    pub vi_tol: f64,
    pub max_iters: usize,
    /// Rights N for the limited-rights solver.
    pub rights: usize,
    /// Observation cost c.
    pub cost: f64,
    pub quadrature: ExpectationMethod,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            grid_size: 2001,
            quad_tol: 1e-8,
            vi_tol: 1e-9,
            max_iters: 10_000,
            rights: 8,
            cost: 0.01,
            quadrature: ExpectationMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Immediate,
    Shiryaev,
    Uniform,
    Limited,
    LimitedThreshold,
    Greedy,
    StochasticOptimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub policy: PolicyKind,
    pub alphas: Vec<f64>,
    /// Cost sweep for the limited-rights policy; empty means `solver.cost`.
    pub costs: Vec<f64>,
    pub interval: u64,
    pub max_samples: Option<u64>,
    pub trials: usize,
    pub master_seed: u64,
    pub out: Option<String>,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Shiryaev,
            alphas: vec![0.1, 0.01, 0.001],
            costs: Vec::new(),
            interval: 11,
            max_samples: None,
            trials: 200_000,
            master_seed: 0,
            out: None,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            format: CONFIG_FORMAT,
            model: ModelBlock::default(),
            energy: EnergyBlock::default(),
            solver: SolverBlock::default(),
            run: RunBlock::default(),
        }
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn strictly_monotone(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0]) || xs.windows(2).all(|w| w[1] > w[0])
}

impl ExperimentConfig {
    /// Parses and validates a configuration document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CONFIG_FORMAT {
            return bad(format!(
                "unsupported format {}, expected {CONFIG_FORMAT}",
                self.format
            ));
        }
        let m = &self.model;
        if !(0.0..1.0).contains(&m.pi0) {
            return bad(format!("model.pi0 must lie in [0, 1), got {}", m.pi0));
        }
        if !(m.rho > 0.0 && m.rho < 1.0) {
            return bad(format!("model.rho must lie in (0, 1), got {}", m.rho));
        }
        if !(m.sigma2 > 0.0 && m.sigma2.is_finite()) {
            return bad(format!("model.sigma2 must be positive, got {}", m.sigma2));
        }
        if !(m.snr_db.is_finite() && m.snr_db.abs() <= 300.0) {
            return bad(format!(
                "model.snr_db must lie in [-300, 300], got {}",
                m.snr_db
            ));
        }
        if self.energy.capacity > MAX_CAPACITY {
            return bad(format!("energy.capacity must not exceed {MAX_CAPACITY}"));
        }
        self.energy_model()?;

        let s = &self.solver;
        if !(2..=MAX_GRID_SIZE).contains(&s.grid_size) {
            return bad(format!(
                "solver.grid_size must lie in [2, {MAX_GRID_SIZE}], got {}",
                s.grid_size
            ));
        }
        if !(s.quad_tol > 0.0 && s.quad_tol < 1.0) {
            return bad(format!(
                "solver.quad_tol must lie in (0, 1), got {}",
                s.quad_tol
            ));
        }
        if !(s.vi_tol > 0.0 && s.vi_tol < 1.0) {
            return bad(format!(
                "solver.vi_tol must lie in (0, 1), got {}",
                s.vi_tol
            ));
        }
        if !(1..=MAX_ITERS).contains(&s.max_iters) {
            return bad(format!("solver.max_iters must lie in [1, {MAX_ITERS}]"));
        }
        if s.rights > MAX_RIGHTS {
            return bad(format!("solver.rights must not exceed {MAX_RIGHTS}"));
        }
        if !(s.cost > 0.0 && s.cost.is_finite()) {
            return bad(format!("solver.cost must be positive, got {}", s.cost));
        }

        let r = &self.run;
        if r.alphas.len() > MAX_SWEEP || r.costs.len() > MAX_SWEEP {
            return bad(format!("sweeps are limited to {MAX_SWEEP} values"));
        }
        if let Some(a) = r.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("run.alphas must lie in (0, 1), got {a}"));
        }
        if r.alphas.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("run.alphas must be strictly decreasing");
        }
        if let Some(c) = r.costs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return bad(format!("run.costs must be positive, got {c}"));
        }
        if !strictly_monotone(&r.costs) {
            return bad("run.costs must be strictly monotone");
        }
        if r.interval == 0 {
            return bad("run.interval must be at least 1");
        }
        if !(crate::montecarlo::MIN_TRIALS..=MAX_TRIALS).contains(&r.trials) {
            return bad(format!(
                "run.trials must lie in [{}, {MAX_TRIALS}], got {}",
                crate::montecarlo::MIN_TRIALS,
                r.trials
            ));
        }
        Ok(())
    }

    pub fn change_model(&self) -> Result<ChangeModel> {
        let m = &self.model;
        ChangeModel::gaussian(m.pi0, m.rho, m.sigma2, m.snr_db)
    }

    pub fn energy_model(&self) -> Result<EnergyModel> {
        let e = &self.energy;
        EnergyModel::with_initial(e.capacity, e.pmf.clone(), e.initial)
    }

    pub fn grid(&self) -> Result<PolicyGrid> {
        PolicyGrid::new(self.solver.grid_size)
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.solver.quad_tol,
            method: self.solver.quadrature,
            ..QuadratureConfig::default()
        }
    }

    pub fn iteration(&self) -> IterationConfig {
        IterationConfig {
            tol: self.solver.vi_tol,
            max_iters: self.solver.max_iters,
        }
    }

    /// Costs to solve for: `run.costs`, or `solver.cost` alone.
    pub fn cost_sweep(&self) -> Vec<f64> {
        if self.run.costs.is_empty() {
            vec![self.solver.cost]
        } else {
            self.run.costs.clone()
        }
    }
}
