//! Predictive expectations of piecewise-linear value functions.
//!
//! For a pre-observation prior `p`, the posterior after one observation is
//! `sigmoid(logit p + l(X))` with `X` drawn from the mixture
//! `p f1 + (1 - p) f0`. Because a grid value function `V` is a combination of
//! hat functions, `E[V(post)]` is a fixed linear functional of the grid
//! values. One row of weights is stored per source prior.
//!
//! Two ways to fill a row:
//! * from the law of the log-likelihood ratio, when the density pair knows
//!   it in closed form: the mass and first moment of the posterior inside
//!   every grid cell are CDF differences, so each row is exact;
//! * by composite Gauss-Legendre over `[-L, L]`, refined until the mass,
//!   mean and a curvature probe of the row stop changing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::PolicyGrid;
use crate::model::DensityPair;
use crate::posterior::bayes_from_stay;
use crate::quadrature::{ExpectationMethod, GaussLegendre, QuadratureConfig};

/// Nonzero weights of one row, starting at grid index `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl BandRow {
    fn point(index: usize) -> Self {
        Self {
            start: index,
            weights: vec![1.0],
        }
    }

    fn from_dense(dense: Vec<f64>) -> Self {
        let first = dense.iter().position(|w| *w != 0.0);
        match first {
            None => Self {
                start: 0,
                weights: Vec::new(),
            },
            Some(lo) => {
                let hi = dense.iter().rposition(|w| *w != 0.0).unwrap_or(lo);
                Self {
                    start: lo,
                    weights: dense[lo..=hi].to_vec(),
                }
            }
        }
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&values[self.start..self.start + self.weights.len()])
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct ExpectationKernel {
    sources: Vec<f64>,
    rows: Vec<BandRow>,
    method: ExpectationMethod,
}

/// Whether `cfg` selects the closed-form route for `pair`.
pub fn uses_exact_law(pair: &dyn DensityPair, cfg: &QuadratureConfig) -> bool {
    cfg.method == ExpectationMethod::Auto && pair.llr_law(0.0, false).is_some()
}

impl ExpectationKernel {
    /// Builds one row per source prior.
    pub fn build(
        grid: &PolicyGrid,
        pair: &dyn DensityPair,
        sources: &[f64],
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if let Some(p) = sources.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("source prior {p} outside [0, 1]")));
        }
        let exact = uses_exact_law(pair, cfg);
        let rows = if exact {
            let logits: Vec<f64> = grid.points().iter().map(|g| logit(*g)).collect();
            sources
                .par_iter()
                .map(|p| Ok(exact_row(grid, &logits, pair, *p)))
                .collect::<Result<Vec<_>>>()?
        } else {
            let rule = GaussLegendre::new(cfg.order);
            sources
                .par_iter()
                .map(|p| quadrature_row(grid, pair, *p, cfg, &rule))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            sources: sources.to_vec(),
            rows,
            method: if exact {
                ExpectationMethod::Auto
            } else {
                ExpectationMethod::GaussLegendre
            },
        })
    }

    /// Kernel whose sources are the grid points themselves.
    pub fn on_grid(
        grid: &PolicyGrid,
        pair: &dyn DensityPair,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        Self::build(grid, pair, grid.points(), cfg)
    }

    pub fn sources(&self) -> &[f64] {
        &self.sources
    }

    pub fn rows(&self) -> &[BandRow] {
        &self.rows
    }

    pub fn method(&self) -> ExpectationMethod {
        self.method
    }

    /// E[V(post)] for every source.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.rows.par_iter().map(|r| r.dot(values)).collect()
    }
}

fn logit(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        p.ln() - (-p).ln_1p()
    }
}

// Probability of (a, b] given (cdf, sf) at both ends.
fn cell_mass(a: (f64, f64), b: (f64, f64)) -> f64 {
    if a.0 > 0.5 {
        (a.1 - b.1).max(0.0)
    } else {
        (b.0 - a.0).max(0.0)
    }
}

fn exact_row(grid: &PolicyGrid, logits: &[f64], pair: &dyn DensityPair, p: f64) -> BandRow {
    let g = grid.points();
    let n = g.len();
    if p <= 0.0 {
        return BandRow::point(0);
    }
    if p >= 1.0 {
        return BandRow::point(n - 1);
    }
    let h = grid.spacing();
    let lp = logit(p);
    let law = |t: f64, post: bool| pair.llr_law(t, post).expect("closed-form law");
    let mut dense = vec![0.0; n];
    let mut prev0 = (0.0, 1.0);
    let mut prev1 = (0.0, 1.0);
    for j in 0..n - 1 {
        let t = logits[j + 1] - lp;
        let (c0, c1) = if t == f64::INFINITY {
            ((1.0, 0.0), (1.0, 0.0))
        } else {
            (law(t, false), law(t, true))
        };
        let m0 = cell_mass(prev0, c0);
        let m1 = cell_mass(prev1, c1);
        if m0 > 0.0 || m1 > 0.0 {
            let mix = p * m1 + (1.0 - p) * m0;
            let first = p * m1;
            dense[j] += ((g[j + 1] * mix - first) / h).max(0.0);
            dense[j + 1] += ((first - g[j] * mix) / h).max(0.0);
        }
        prev0 = c0;
        prev1 = c1;
        if prev0.1 == 0.0 && prev1.1 == 0.0 {
            break;
        }
    }
    BandRow::from_dense(dense)
}

struct RowStats {
    mass: f64,
    mean: f64,
    curvature: f64,
}

fn row_stats(grid: &PolicyGrid, dense: &[f64]) -> RowStats {
    let mut s = RowStats {
        mass: 0.0,
        mean: 0.0,
        curvature: 0.0,
    };
    for (w, g) in dense.iter().zip(grid.points()) {
        s.mass += w;
        s.mean += w * g;
        s.curvature += w * g * (1.0 - g);
    }
    s
}

fn quadrature_row(
    grid: &PolicyGrid,
    pair: &dyn DensityPair,
    p: f64,
    cfg: &QuadratureConfig,
    rule: &GaussLegendre,
) -> Result<BandRow> {
    let n = grid.len();
    if p <= 0.0 {
        return Ok(BandRow::point(0));
    }
    if p >= 1.0 {
        return Ok(BandRow::point(n - 1));
    }
    let half = pair.integration_half_width();
    let stay = 1.0 - p;
    let accumulate = |panels: usize| {
        let mut dense = vec![0.0; n];
        for (x, w) in rule.composite(-half, half, panels) {
            let dens = p * pair.log_pdf_post(x).exp() + stay * pair.log_pdf_pre(x).exp();
            if dens == 0.0 {
                continue;
            }
            let post = bayes_from_stay(stay, pair.llr(x));
            let (i, t) = grid.locate(post);
            dense[i] += w * dens * (1.0 - t);
            if t > 0.0 {
                dense[i + 1] += w * dens * t;
            }
        }
        dense
    };
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let mut panels = cfg.initial_panels.max(1);
    let mut prev_stats = row_stats(grid, &accumulate(panels));
    let mut achieved = f64::INFINITY;
    while panels < cfg.max_panels {
        panels *= 2;
        let cur = accumulate(panels);
        let st = row_stats(grid, &cur);
        achieved = rel(st.mass, prev_stats.mass)
            .max(rel(st.mean, prev_stats.mean))
            .max(rel(st.curvature, prev_stats.curvature));
        if achieved <= cfg.rel_tol {
            return Ok(BandRow::from_dense(cur));
        }
        prev_stats = st;
    }
    Err(Error::Quadrature {
        achieved,
        requested: cfg.rel_tol,
    })
}
