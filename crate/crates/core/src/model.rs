//! Change-point process, observation densities and the replenishment process.
//!
//! The change point Λ has a zero-modified geometric law: mass `pi0` at 0 and
//! `(1 - pi0) rho (1 - rho)^(λ-1)` at λ ≥ 1. Observations are i.i.d. from the
//! pre-change density before Λ and from the post-change density from slot Λ
//! on. Sampling rights arrive i.i.d. from a finite pmf and are stored up to a
//! capacity.
//!
//! Every random draw goes through a [`TrajectorySeed`], so a trial is a pure
//! function of `(master_seed, trial_index)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_adaptive, QuadratureConfig};

/// Prior on the change point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior")]
pub struct GeometricPrior {
    pi0: f64,
    rho: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    pi0: f64,
    rho: f64,
}

impl TryFrom<RawPrior> for GeometricPrior {
    type Error = Error;

    fn try_from(r: RawPrior) -> Result<Self> {
        Self::new(r.pi0, r.rho)
    }
}

impl GeometricPrior {
    pub fn new(pi0: f64, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&pi0) {
            return domain(format!("pi0 must lie in [0, 1), got {pi0}"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return domain(format!("rho must lie in (0, 1), got {rho}"));
        }
        Ok(Self { pi0, rho })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// P(Λ = λ).
    pub fn pmf(&self, lambda: u64) -> f64 {
        if lambda == 0 {
            self.pi0
        } else {
            (1.0 - self.pi0) * self.rho * (1.0 - self.rho).powf((lambda - 1) as f64)
        }
    }

    /// P(Λ ≥ k + 1) = (1 - pi0)(1 - rho)^k for k ≥ 0.
    pub fn tail(&self, k: u64) -> f64 {
        (1.0 - self.pi0) * (1.0 - self.rho).powf(k as f64)
    }
}

/// Serializable description of a built-in density pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityParams {
    /// f0 = N(0, sigma2), f1 = N(0, sigma2 + shift).
    GaussianVariance { sigma2: f64, shift: f64 },
}

impl DensityParams {
    pub fn build(&self) -> Result<Arc<dyn DensityPair>> {
        match *self {
            DensityParams::GaussianVariance { sigma2, shift } => {
                Ok(Arc::new(GaussianShift::new(sigma2, shift)?))
            }
        }
    }
}

/// A pre-/post-change density pair.
///
/// Solvers only need log densities, sampling, and a finite integration
/// window; the optional likelihood-ratio law lets expectations be computed
/// in closed form.
pub trait DensityPair: Send + Sync + fmt::Debug {
    fn log_pdf_pre(&self, x: f64) -> f64;
    fn log_pdf_post(&self, x: f64) -> f64;
    fn sample_pre(&self, rng: &mut dyn RngCore) -> f64;
    fn sample_post(&self, rng: &mut dyn RngCore) -> f64;

    /// log f1(x)/f0(x); NaN when both densities vanish at `x`.
    fn llr(&self, x: f64) -> f64 {
        let l1 = self.log_pdf_post(x);
        let l0 = self.log_pdf_pre(x);
        if l1 == f64::NEG_INFINITY && l0 == f64::NEG_INFINITY {
            f64::NAN
        } else {
            l1 - l0
        }
    }

    /// Half-width `L` of the window `[-L, L]` carrying all relevant mass of
    /// both densities.
    fn integration_half_width(&self) -> f64;

    /// `(P(l(X) <= t), P(l(X) > t))` for the log-likelihood ratio `l` under
    /// the pre- (`post_change == false`) or post-change density, if known in
    /// closed form.
    fn llr_law(&self, _t: f64, _post_change: bool) -> Option<(f64, f64)> {
        None
    }

    /// D(f1 || f0). The default integrates numerically.
    fn kl_divergence(&self) -> f64 {
        let l = self.integration_half_width();
        let f = |x: f64| {
            let l1 = self.log_pdf_post(x);
            if l1 == f64::NEG_INFINITY {
                0.0
            } else {
                l1.exp() * (l1 - self.log_pdf_pre(x))
            }
        };
        integrate_adaptive(f, -l, l, &QuadratureConfig::default())
            .map(|r| r.value.max(0.0))
            .unwrap_or(f64::NAN)
    }

    fn params(&self) -> Option<DensityParams> {
        None
    }
}

/// Zero-mean Gaussian variance shift: f0 = N(0, σ²), f1 = N(0, σ² + P).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianShift {
    sigma2: f64,
    shift: f64,
    // l(x) = llr_offset + llr_slope * x^2
    llr_offset: f64,
    llr_slope: f64,
}

impl GaussianShift {
    pub fn new(sigma2: f64, shift: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return domain(format!("sigma2 must be positive and finite, got {sigma2}"));
        }
        if !(shift >= 0.0 && shift.is_finite()) {
            return domain(format!("shift must be nonnegative and finite, got {shift}"));
        }
        let post = sigma2 + shift;
        Ok(Self {
            sigma2,
            shift,
            llr_offset: -0.5 * (shift / sigma2).ln_1p(),
            llr_slope: 0.5 * shift / (sigma2 * post),
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn post_variance(&self) -> f64 {
        self.sigma2 + self.shift
    }

    /// Numerically integrates both densities over their integration window.
    pub fn normalization_error(&self) -> f64 {
        let l = self.integration_half_width();
        let cfg = QuadratureConfig::default();
        let m0 = integrate_adaptive(|x| self.log_pdf_pre(x).exp(), -l, l, &cfg)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        let m1 = integrate_adaptive(|x| self.log_pdf_post(x).exp(), -l, l, &cfg)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        (m0 - 1.0).abs().max((m1 - 1.0).abs())
    }
}

fn normal_log_pdf(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - x * x / (2.0 * var)
}

impl DensityPair for GaussianShift {
    fn log_pdf_pre(&self, x: f64) -> f64 {
        normal_log_pdf(x, self.sigma2)
    }

    fn log_pdf_post(&self, x: f64) -> f64 {
        normal_log_pdf(x, self.post_variance())
    }

    fn sample_pre(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * self.sigma2.sqrt()
    }

    fn sample_post(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        z * self.post_variance().sqrt()
    }

    fn llr(&self, x: f64) -> f64 {
        self.llr_offset + self.llr_slope * x * x
    }

    fn integration_half_width(&self) -> f64 {
        10.0 * self.post_variance().sqrt()
    }

    fn llr_law(&self, t: f64, post_change: bool) -> Option<(f64, f64)> {
        if self.llr_slope == 0.0 {
            return Some(if t >= 0.0 { (1.0, 0.0) } else { (0.0, 1.0) });
        }
        if t == f64::INFINITY {
            return Some((1.0, 0.0));
        }
        if t <= self.llr_offset {
            return Some((0.0, 1.0));
        }
        // l(X) <= t  <=>  X^2 <= (t - offset) / slope
        let x2 = (t - self.llr_offset) / self.llr_slope;
        let var = if post_change {
            self.post_variance()
        } else {
            self.sigma2
        };
        let z = (x2 / (2.0 * var)).sqrt();
        Some((libm::erf(z), libm::erfc(z)))
    }

    fn kl_divergence(&self) -> f64 {
        let r = self.shift / self.sigma2;
        0.5 * (r - r.ln_1p())
    }

    fn params(&self) -> Option<DensityParams> {
        Some(DensityParams::GaussianVariance {
            sigma2: self.sigma2,
            shift: self.shift,
        })
    }
}

/// Gaussian pair with shift `P = sigma2 * 10^(snr_db / 10)`.
pub fn make_gaussian_pair(sigma2: f64, snr_db: f64) -> Result<GaussianShift> {
    if !snr_db.is_finite() {
        return domain(format!("snr_db must be finite, got {snr_db}"));
    }
    if !(sigma2 > 0.0) {
        return domain(format!("sigma2 must be positive, got {sigma2}"));
    }
    GaussianShift::new(sigma2, sigma2 * 10f64.powf(snr_db / 10.0))
}

/// D(f1 || f0) of a density pair.
pub fn kl_divergence(pair: &dyn DensityPair) -> f64 {
    pair.kl_divergence()
}

/// log f1(x)/f0(x) for a sampled slot, 0 for a skipped one.
pub fn log_likelihood_ratio(pair: &dyn DensityPair, x: f64, sampled: bool) -> f64 {
    if sampled {
        pair.llr(x)
    } else {
        0.0
    }
}

/// Prior plus density pair.
#[derive(Debug, Clone)]
pub struct ChangeModel {
    pub prior: GeometricPrior,
    pub pair: Arc<dyn DensityPair>,
}

impl ChangeModel {
    pub fn new(prior: GeometricPrior, pair: Arc<dyn DensityPair>) -> Self {
        Self { prior, pair }
    }

    pub fn gaussian(pi0: f64, rho: f64, sigma2: f64, snr_db: f64) -> Result<Self> {
        Ok(Self {
            prior: GeometricPrior::new(pi0, rho)?,
            pair: Arc::new(make_gaussian_pair(sigma2, snr_db)?),
        })
    }

    pub fn rho(&self) -> f64 {
        self.prior.rho()
    }

    pub fn pi0(&self) -> f64 {
        self.prior.pi0()
    }
}

/// Sampling-right capacity and replenishment pmf over `{0, .., V}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnergy")]
pub struct EnergyModel {
    capacity: u32,
    pmf: Vec<f64>,
    initial: u32,
}

/// Largest accepted capacity and pmf support.
pub const MAX_CAPACITY: u32 = 1000;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnergy {
    capacity: u32,
    pmf: Vec<f64>,
    #[serde(default)]
    initial: u32,
}

impl TryFrom<RawEnergy> for EnergyModel {
    type Error = Error;

    fn try_from(r: RawEnergy) -> Result<Self> {
        Self::with_initial(r.capacity, r.pmf, r.initial)
    }
}

impl EnergyModel {
    pub fn new(capacity: u32, pmf: Vec<f64>) -> Result<Self> {
        Self::with_initial(capacity, pmf, 0)
    }

    pub fn with_initial(capacity: u32, pmf: Vec<f64>, initial: u32) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::Config("replenishment pmf is empty".into()));
        }
        if capacity > MAX_CAPACITY || pmf.len() > MAX_CAPACITY as usize + 1 {
            return Err(Error::Config(format!(
                "capacity and pmf support are limited to {MAX_CAPACITY}"
            )));
        }
        if let Some(p) = pmf.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Config(format!(
                "replenishment pmf entries must be nonnegative, got {p}"
            )));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "replenishment pmf must sum to 1, sums to {total}"
            )));
        }
        if initial > capacity {
            return Err(Error::Config(format!(
                "initial rights {initial} exceed capacity {capacity}"
            )));
        }
        Ok(Self {
            capacity,
            pmf,
            initial,
        })
    }

    /// The limited-rights special case: `n` rights, no replenishment.
    pub fn limited(n: u32) -> Self {
        Self {
            capacity: n,
            pmf: vec![1.0],
            initial: n,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Rights held at slot 0.
    pub fn initial(&self) -> u32 {
        self.initial
    }

    /// Largest replenishment amount V.
    pub fn max_arrival(&self) -> u32 {
        (self.pmf.len() - 1) as u32
    }

    /// N_k = min(C, N_{k-1} + ν_k - μ_k).
    pub fn next_level(&self, prev: u32, arrival: u32, sampled: bool) -> u32 {
        let avail = prev as u64 + arrival as u64;
        debug_assert!(!sampled || avail >= 1);
        let after = avail - sampled as u64;
        after.min(self.capacity as u64) as u32
    }
}

/// Per-trial seed. Each trial draws from independent ChaCha streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrajectorySeed {
    pub master_seed: u64,
    pub trial_index: u64,
}

/// Independent random channels of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    ChangePoint = 1,
    Observations = 2,
    Replenishment = 3,
}

impl TrajectorySeed {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    pub fn rng(&self, channel: Channel) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&(channel as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.trial_index);
        rng
    }
}

/// Draws Λ: 0 with probability pi0, else 1 + Geometric(rho).
pub fn sample_change_point(prior: &GeometricPrior, seed: TrajectorySeed) -> u64 {
    let mut rng = seed.rng(Channel::ChangePoint);
    draw_change_point(prior, &mut rng)
}

pub(crate) fn draw_change_point(prior: &GeometricPrior, rng: &mut impl Rng) -> u64 {
    let u: f64 = rng.random();
    if u < prior.pi0() {
        return 0;
    }
    // rho is validated to lie in (0, 1).
    let geo = Geometric::new(prior.rho()).expect("validated rho");
    1 + geo.sample(rng)
}

pub fn sample_observation(pair: &dyn DensityPair, post_change: bool, rng: &mut dyn RngCore) -> f64 {
    if post_change {
        pair.sample_post(rng)
    } else {
        pair.sample_pre(rng)
    }
}

pub fn sample_replenishment(energy: &EnergyModel, rng: &mut dyn RngCore) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in energy.pmf().iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    last_positive as u32
}
