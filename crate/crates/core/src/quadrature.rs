//! Gauss-Legendre rules and an adaptive composite integrator.
//!
//! Nodes are found by Newton iteration on the three-term Legendre recurrence,
//! which is accurate to machine precision for the small orders used here.
//! The composite integrator doubles the panel count until two successive
//! levels agree to the requested relative tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // Tricomi initial guess for the i-th root counted from +1.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[half - 1] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule over `panels` equal panels of `[a, b]`, as (node, weight) pairs.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let width = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.order());
        for p in 0..panels {
            let lo = a + width * p as f64;
            let mid = lo + 0.5 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * width * x, 0.5 * width * w));
            }
        }
        out
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        self.composite(a, b, panels)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Settings for expectations over the observation variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Relative tolerance between successive refinement levels.
    pub rel_tol: f64,
    /// Points per panel.
    pub order: usize,
    /// Initial panel count; doubled on each refinement.
    pub initial_panels: usize,
    /// Refinement stops with an error beyond this many panels.
    pub max_panels: usize,
    pub method: ExpectationMethod,
}

/// How predictive expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectationMethod {
    /// Closed-form likelihood-ratio law when the density pair provides one,
    /// composite Gauss-Legendre otherwise.
    Auto,
    /// Always use composite Gauss-Legendre on `[-L, L]`.
    GaussLegendre,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            order: 8,
            initial_panels: 32,
            max_panels: 1 << 15,
            method: ExpectationMethod::Auto,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub panels: usize,
    pub achieved_tol: f64,
}

/// Integrates `f` over `[a, b]` by panel doubling.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    let rule = GaussLegendre::new(cfg.order);
    let mut panels = cfg.initial_panels.max(1);
    let mut prev = rule.integrate(a, b, panels, &f);
    let mut achieved = f64::INFINITY;
    while panels < cfg.max_panels {
        panels *= 2;
        let cur = rule.integrate(a, b, panels, &f);
        let scale = cur.abs().max(f64::MIN_POSITIVE);
        achieved = (cur - prev).abs() / scale;
        if achieved <= cfg.rel_tol || (cur - prev).abs() <= 1e-300 {
            return Ok(Integral {
                value: cur,
                panels,
                achieved_tol: achieved,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        achieved,
        requested: cfg.rel_tol,
    })
}
