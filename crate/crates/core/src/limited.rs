//! Value iteration for a fixed budget of `N` sampling rights.
//!
//! Row `n` of a table holds `V_n`, the optimal cost-to-go with `n` rights
//! left. `V_0` is a deterministic stopping problem over the silent
//! recursion. Each further row is one application of the interval operator:
//! wait `m` slots, pay `c` times the accumulated posterior, then observe once
//! and continue with one right fewer.
//!
//! The predictive expectation `E_p[V_{n-1}(post)]` is tabulated once per row
//! at every grid prior `p` and read back by linear interpolation at
//! `p = 1 - (1 - π)(1 - ρ)^m`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::PolicyGrid;
use crate::kernel::ExpectationKernel;
use crate::model::DensityPair;
use crate::posterior::{propagate_silent_n, silent_sum, stay_factor};
use crate::quadrature::QuadratureConfig;

/// Gap `1 - π - V` below which a point counts as stopping.
pub const STOP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRow {
    pub values: Vec<f64>,
    /// Minimizing interval per grid point (smallest on ties).
    pub intervals: Vec<u64>,
    pub threshold: f64,
}

/// Upper end of the interval search.
pub fn m_max(rho: f64, c: f64) -> u64 {
    (1.0 / c + 1.0 / rho).ceil() as u64 + 1
}

/// Cost of stopping after `m` silent slots.
pub fn v0_cost(pi: f64, rho: f64, c: f64, m: u64) -> f64 {
    c * silent_sum(pi, rho, m) + (1.0 - pi) * stay_factor(rho, m)
}

fn check_inputs(rho: f64, c: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return domain(format!("rho must lie in (0, 1), got {rho}"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return domain(format!("c must be positive and finite, got {c}"));
    }
    Ok(())
}

/// Minimum over `m in [from, M_max]` of `v0_cost`, smallest `m` on ties.
///
/// The cost is convex in `m` with increments `c - (1-π)(1-ρ)^m (c+ρ)`;
/// once these exceed `c/2` nothing later can tie, so the scan stops there.
fn v0_scan(pi: f64, rho: f64, c: f64, from: u64) -> (f64, u64) {
    let cap = m_max(rho, c);
    let mut best = (f64::INFINITY, from);
    let mut m = from;
    while m <= cap {
        let v = v0_cost(pi, rho, c, m);
        if v < best.0 {
            best = (v, m);
        }
        if (1.0 - pi) * stay_factor(rho, m) * (c + rho) < 0.5 * c {
            break;
        }
        m += 1;
    }
    best
}

/// V₀(π) and its minimizing wait.
pub fn v0_point(pi: f64, rho: f64, c: f64) -> (f64, u64) {
    v0_scan(pi, rho, c, 0)
}

pub fn v0_row(grid: &PolicyGrid, rho: f64, c: f64) -> Result<ValueRow> {
    check_inputs(rho, c)?;
    let (values, intervals): (Vec<f64>, Vec<u64>) = grid
        .points()
        .par_iter()
        .map(|p| v0_point(*p, rho, c))
        .unzip();
    let cont = |pi: f64| v0_scan(pi, rho, c, 1).0;
    let threshold = extract_threshold(grid, &values, cont);
    Ok(ValueRow {
        values,
        intervals,
        threshold,
    })
}

/// Continuation value `min_{m>=1} c S(π, m) + E(p_m)` given the tabulated
/// predictive expectation `expect` on the grid.
fn continuation(grid: &PolicyGrid, expect: &[f64], pi: f64, rho: f64, c: f64) -> (f64, u64) {
    let cap = m_max(rho, c);
    let mut best = (f64::INFINITY, 1);
    for m in 1..=cap {
        let p = propagate_silent_n(pi, rho, m);
        let v = c * silent_sum(pi, rho, m) + grid.interp(expect, p);
        if v < best.0 {
            best = (v, m);
        }
        // beyond this point the source prior is pinned at 1 and the cost
        // only grows
        if p == 1.0 {
            break;
        }
    }
    best
}

/// First grid point where stopping is optimal, refined by bisection on
/// the continuation function.
pub fn extract_threshold(grid: &PolicyGrid, values: &[f64], cont: impl Fn(f64) -> f64) -> f64 {
    let g = grid.points();
    let first = (0..g.len()).find(|&i| (1.0 - g[i]) - values[i] <= STOP_TOL);
    let i = match first {
        Some(0) => return 0.0,
        Some(i) => i,
        None => return 1.0,
    };
    let stops = |pi: f64| (1.0 - pi) - cont(pi) <= STOP_TOL;
    let (mut lo, mut hi) = (g[i - 1], g[i]);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if stops(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Whether the stopping set on the grid is an upper interval.
pub fn single_crossing(grid: &PolicyGrid, values: &[f64]) -> bool {
    let stop: Vec<bool> = grid
        .points()
        .iter()
        .zip(values)
        .map(|(g, v)| (1.0 - g) - v <= STOP_TOL)
        .collect();
    stop.windows(2).all(|w| !w[0] || w[1])
}

/// One application of the interval operator with a prebuilt kernel.
pub fn bellman_with_kernel(
    prev: &ValueRow,
    grid: &PolicyGrid,
    kernel: &ExpectationKernel,
    rho: f64,
    c: f64,
) -> Result<ValueRow> {
    check_inputs(rho, c)?;
    if prev.values.len() != grid.len() || kernel.sources().len() != grid.len() {
        return Err(Error::Config("row, grid and kernel sizes disagree".into()));
    }
    let expect = kernel.apply(&prev.values);
    let (values, intervals): (Vec<f64>, Vec<u64>) = grid
        .points()
        .par_iter()
        .map(|&pi| {
            let (v, m) = continuation(grid, &expect, pi, rho, c);
            ((1.0 - pi).min(v), m)
        })
        .unzip();
    let cont = |pi: f64| continuation(grid, &expect, pi, rho, c).0;
    let threshold = extract_threshold(grid, &values, cont);
    Ok(ValueRow {
        values,
        intervals,
        threshold,
    })
}

pub fn bellman_step(
    prev: &ValueRow,
    grid: &PolicyGrid,
    rho: f64,
    c: f64,
    pair: &dyn DensityPair,
    cfg: &QuadratureConfig,
) -> Result<ValueRow> {
    let kernel = ExpectationKernel::on_grid(grid, pair, cfg)?;
    bellman_with_kernel(prev, grid, &kernel, rho, c)
}

/// Solved rows `V_0 ..= V_N`, indexed by rights remaining.
#[derive(Debug, Clone)]
pub struct LimitedPolicyTable {
    pub grid: PolicyGrid,
    pub rho: f64,
    pub c: f64,
    pub pair: Arc<dyn DensityPair>,
    pub rows: Vec<ValueRow>,
}

impl LimitedPolicyTable {
    /// Number of rights N.
    pub fn rights(&self) -> usize {
        self.rows.len() - 1
    }

    /// J(π, n) by interpolation.
    pub fn value(&self, rights_left: usize, pi: f64) -> f64 {
        self.grid.interp(&self.rows[rights_left].values, pi)
    }

    /// Stopping threshold after `n_used` samples.
    pub fn threshold_after(&self, n_used: usize) -> f64 {
        let n = self.rights();
        self.rows[n - n_used.min(n)].threshold
    }
}

pub fn solve_limited(
    n: usize,
    rho: f64,
    c: f64,
    pair: Arc<dyn DensityPair>,
    grid: &PolicyGrid,
    cfg: &QuadratureConfig,
) -> Result<LimitedPolicyTable> {
    let mut rows = vec![v0_row(grid, rho, c)?];
    if n > 0 {
        let kernel = ExpectationKernel::on_grid(grid, pair.as_ref(), cfg)?;
        for _ in 0..n {
            let next = bellman_with_kernel(rows.last().expect("nonempty"), grid, &kernel, rho, c)?;
            rows.push(next);
        }
    }
    Ok(LimitedPolicyTable {
        grid: grid.clone(),
        rho,
        c,
        pair,
        rows,
    })
}

/// Stored interval at the nearest grid point, for the row in force after
/// `n_used` samples.
pub fn interval_of(table: &LimitedPolicyTable, n_used: usize, pi: f64) -> Result<u64> {
    let n = table.rights();
    if n_used >= n {
        return domain(format!("no rights left after {n_used} of {n} samples"));
    }
    if !(0.0..1.0).contains(&pi) {
        return domain(format!("no interval at posterior {pi}"));
    }
    let row = &table.rows[n - n_used];
    Ok(row.intervals[table.grid.nearest_index(pi)].max(1))
}
