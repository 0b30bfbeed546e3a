//! Value iteration over (posterior, stored rights) when rights arrive at
//! random.
//!
//! At slot `k` with state `(π, N)` the observer either stops at cost `1 - π`
//! or pays `cπ`, receives `ν` new rights, decides whether to sample, and
//! moves to `(π', min(C, N + ν - μ))`. Sampling requires `N + ν ≥ 1`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::PolicyGrid;
use crate::kernel::ExpectationKernel;
use crate::model::{DensityPair, EnergyModel};
use crate::posterior::propagate_silent;
use crate::quadrature::QuadratureConfig;

/// Margin by which sampling must beat skipping to be chosen.
pub const ACTION_TIE_TOL: f64 = 1e-12;

/// Cap on stored branch values per table.
pub const MAX_TABLE_ENTRIES: usize = 50_000_000;

/// Converged value function and branch values.
#[derive(Debug, Clone)]
pub struct StochasticValueTable {
    pub grid: PolicyGrid,
    pub energy: EnergyModel,
    pub rho: f64,
    pub c: f64,
    pub pair: Arc<dyn DensityPair>,
    /// `v[n][i]` = V(g_i, n).
    pub v: Vec<Vec<f64>>,
    /// `w_skip[n][ν][i]`: continuation without sampling.
    pub w_skip: Vec<Vec<Vec<f64>>>,
    /// `w_sample[n][ν][i]`: continuation after sampling; `None` when
    /// `n + ν = 0`.
    pub w_sample: Vec<Vec<Option<Vec<f64>>>>,
    pub iterations: usize,
    pub achieved_tol: f64,
}

/// Solver settings shared by the finite and infinite horizon routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 10_000,
        }
    }
}

struct Operator<'a> {
    grid: &'a PolicyGrid,
    energy: &'a EnergyModel,
    c: f64,
    kernel: ExpectationKernel,
    silent: Vec<f64>,
}

struct Branches {
    skip: Vec<Vec<Vec<f64>>>,
    sample: Vec<Vec<Option<Vec<f64>>>>,
}

impl<'a> Operator<'a> {
    fn new(
        grid: &'a PolicyGrid,
        energy: &'a EnergyModel,
        rho: f64,
        c: f64,
        pair: &dyn DensityPair,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return domain(format!("rho must lie in (0, 1), got {rho}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("c must be positive and finite, got {c}"));
        }
        let silent: Vec<f64> = grid
            .points()
            .iter()
            .map(|g| propagate_silent(*g, rho))
            .collect();
        let kernel = ExpectationKernel::build(grid, pair, &silent, cfg)?;
        Ok(Self {
            grid,
            energy,
            c,
            kernel,
            silent,
        })
    }

    // E[V(post) | sample] and V(Φ₀(π)) for every energy level.
    fn parts(&self, v: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let after = v.iter().map(|row| self.kernel.apply(row)).collect();
        let quiet = v
            .iter()
            .map(|row| {
                self.silent
                    .iter()
                    .map(|p| self.grid.interp(row, *p))
                    .collect()
            })
            .collect();
        (after, quiet)
    }

    fn branches(&self, v: &[Vec<f64>]) -> Branches {
        let cap = self.energy.capacity() as usize;
        let (after, quiet) = self.parts(v);
        let arrivals = self.energy.pmf().len();
        let mut skip = Vec::with_capacity(cap + 1);
        let mut sample = Vec::with_capacity(cap + 1);
        for n in 0..=cap {
            let mut s_row = Vec::with_capacity(arrivals);
            let mut m_row = Vec::with_capacity(arrivals);
            for nu in 0..arrivals {
                let avail = n + nu;
                s_row.push(quiet[avail.min(cap)].clone());
                m_row.push(if avail >= 1 {
                    Some(after[(avail - 1).min(cap)].clone())
                } else {
                    None
                });
            }
            skip.push(s_row);
            sample.push(m_row);
        }
        Branches { skip, sample }
    }

    fn apply(&self, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let cap = self.energy.capacity() as usize;
        let (after, quiet) = self.parts(v);
        let pmf = self.energy.pmf();
        let g = self.grid.points();
        (0..v.len())
            .map(|n| {
                (0..g.len())
                    .into_par_iter()
                    .map(|i| {
                        let mut cont = self.c * g[i];
                        for (nu, p) in pmf.iter().enumerate() {
                            if *p == 0.0 {
                                continue;
                            }
                            let avail = n + nu;
                            let skip = quiet[avail.min(cap)][i];
                            let w = if avail >= 1 {
                                skip.min(after[(avail - 1).min(cap)][i])
                            } else {
                                skip
                            };
                            cont += p * w;
                        }
                        (1.0 - g[i]).min(cont)
                    })
                    .collect()
            })
            .collect()
    }
}

fn terminal(grid: &PolicyGrid, cap: u32) -> Vec<Vec<f64>> {
    let row: Vec<f64> = grid.points().iter().map(|g| 1.0 - g).collect();
    vec![row; cap as usize + 1]
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// `V^T_k` for `k = 0..=T`, each as `[n][i]`; entry `T` is `1 - π`.
pub fn finite_horizon_solve(
    horizon: usize,
    rho: f64,
    c: f64,
    pair: &dyn DensityPair,
    energy: &EnergyModel,
    grid: &PolicyGrid,
    cfg: &QuadratureConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if horizon == 0 {
        return domain("horizon must be at least 1");
    }
    let op = Operator::new(grid, energy, rho, c, pair, cfg)?;
    let mut out = vec![terminal(grid, energy.capacity())];
    for _ in 0..horizon {
        let next = op.apply(out.last().expect("nonempty"));
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

pub fn infinite_horizon_solve(
    rho: f64,
    c: f64,
    pair: Arc<dyn DensityPair>,
    energy: &EnergyModel,
    grid: &PolicyGrid,
    quad: &QuadratureConfig,
    iter: &IterationConfig,
) -> Result<StochasticValueTable> {
    if !(iter.tol > 0.0) {
        return domain(format!("tolerance must be positive, got {}", iter.tol));
    }
    let stored = (energy.capacity() as usize + 1) * energy.pmf().len() * grid.len();
    if stored > MAX_TABLE_ENTRIES {
        return Err(Error::Config(format!(
            "table would hold {stored} branch values, limit {MAX_TABLE_ENTRIES}"
        )));
    }
    let op = Operator::new(grid, energy, rho, c, pair.as_ref(), quad)?;
    let mut v = terminal(grid, energy.capacity());
    let mut achieved = f64::INFINITY;
    for it in 1..=iter.max_iters {
        let next = op.apply(&v);
        achieved = sup_diff(&next, &v);
        v = next;
        if achieved < iter.tol {
            let b = op.branches(&v);
            return Ok(StochasticValueTable {
                grid: grid.clone(),
                energy: energy.clone(),
                rho,
                c,
                pair,
                v,
                w_skip: b.skip,
                w_sample: b.sample,
                iterations: it,
                achieved_tol: achieved,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: iter.max_iters,
        achieved,
        requested: iter.tol,
    })
}

impl StochasticValueTable {
    pub fn capacity(&self) -> u32 {
        self.energy.capacity()
    }

    pub fn value(&self, pi: f64, energy_state: u32) -> f64 {
        self.grid.interp(&self.v[energy_state as usize], pi)
    }

    fn interp_min(&self, pi: f64, n: usize, nu: usize) -> f64 {
        let (i, t) = self.grid.locate(pi);
        let at = |j: usize| {
            let s = self.w_skip[n][nu][j];
            match &self.w_sample[n][nu] {
                Some(w) => s.min(w[j]),
                None => s,
            }
        };
        if t == 0.0 {
            at(i)
        } else {
            at(i) + t * (at(i + 1) - at(i))
        }
    }

    /// cπ + E_ν[W(π, N, ν)].
    pub fn continuation(&self, pi: f64, energy_state: u32) -> f64 {
        let n = energy_state.min(self.capacity()) as usize;
        let mut cont = self.c * pi;
        for (nu, p) in self.energy.pmf().iter().enumerate() {
            if *p > 0.0 {
                cont += p * self.interp_min(pi, n, nu);
            }
        }
        cont
    }
}

/// 1 when sampling strictly beats skipping; ties and infeasible cases give 0.
pub fn optimal_action(table: &StochasticValueTable, pi: f64, energy_state: u32, nu: u32) -> u8 {
    let n = energy_state.min(table.capacity()) as usize;
    let nu = nu as usize;
    if n + nu == 0 || nu >= table.energy.pmf().len() {
        return 0;
    }
    let Some(sample) = &table.w_sample[n][nu] else {
        return 0;
    };
    let skip = table.grid.interp(&table.w_skip[n][nu], pi);
    let take = table.grid.interp(sample, pi);
    u8::from(take < skip - ACTION_TIE_TOL)
}

pub fn optimal_stop(table: &StochasticValueTable, pi: f64, energy_state: u32) -> bool {
    1.0 - pi <= table.continuation(pi, energy_state)
}

/// Sample whenever a right is available.
pub fn greedy_action(prev_energy: u32, nu: u32) -> u8 {
    u8::from(prev_energy as u64 + nu as u64 >= 1)
}

pub fn greedy_threshold_stop(pi: f64, alpha: f64) -> bool {
    pi >= 1.0 - alpha
}

/// Checks `0 < alpha < 1`.
pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("alpha must lie in (0, 1), got {alpha}"))
    }
}
