//! Stored-rights Markov chain under the greedy sampling rule.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EnergyModel;
use crate::stochastic::greedy_action;

/// Agreement required between the direct solve and power iteration.
pub const CROSS_CHECK_TOL: f64 = 1e-10;

const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyChain {
    pub transition: Vec<Vec<f64>>,
    pub stationary: Vec<f64>,
    /// Power-iteration estimate of the same vector.
    pub stationary_power: Vec<f64>,
    pub sampling_fraction: f64,
    /// States of the recurrent class reached from the start state.
    pub recurrent: Vec<usize>,
}

/// Entry (i, j) = P(min(C, i + ν - μ) = j) with μ the greedy action.
pub fn transition_matrix(energy: &EnergyModel) -> Vec<Vec<f64>> {
    let cap = energy.capacity();
    let size = cap as usize + 1;
    let mut m = vec![vec![0.0; size]; size];
    for (i, row) in m.iter_mut().enumerate() {
        for (nu, p) in energy.pmf().iter().enumerate() {
            let mu = greedy_action(i as u32, nu as u32);
            let j = energy.next_level(i as u32, nu as u32, mu == 1) as usize;
            row[j] += p;
        }
    }
    m
}

fn reach(adj: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The unique closed class reachable from `start`, checked aperiodic.
pub fn recurrent_class(matrix: &[Vec<f64>], start: usize) -> Result<Vec<usize>> {
    let n = matrix.len();
    if n == 0 || start >= n {
        return Err(Error::IrregularChain(
            "empty chain or bad start state".into(),
        ));
    }
    let adj: Vec<Vec<usize>> = matrix
        .iter()
        .map(|row| (0..n).filter(|&j| row[j] > 0.0).collect())
        .collect();
    let from_start = reach(&adj, start);
    let reach_sets: Vec<Option<Vec<bool>>> = (0..n)
        .map(|i| from_start[i].then(|| reach(&adj, i)))
        .collect();
    // i is recurrent iff everything it reaches reaches back
    let recurrent: Vec<usize> = (0..n)
        .filter(|&i| {
            let Some(ri) = &reach_sets[i] else {
                return false;
            };
            (0..n).all(|j| !ri[j] || reach_sets[j].as_ref().is_some_and(|rj| rj[i]))
        })
        .collect();
    let first = recurrent[0];
    let class: Vec<usize> = recurrent
        .iter()
        .copied()
        .filter(|&j| reach_sets[first].as_ref().is_some_and(|r| r[j]))
        .collect();
    if class.len() != recurrent.len() {
        return Err(Error::IrregularChain(format!(
            "more than one recurrent class reachable from state {start}"
        )));
    }
    // period: gcd of level differences along edges inside the class
    let mut level = vec![usize::MAX; n];
    level[first] = 0;
    let mut queue = std::collections::VecDeque::from([first]);
    let mut period = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                period = gcd(period, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    if period != 1 {
        return Err(Error::IrregularChain(format!(
            "recurrent class has period {period}"
        )));
    }
    Ok(class)
}

fn direct_solve(matrix: &[Vec<f64>], class: &[usize]) -> Result<Vec<f64>> {
    let k = class.len();
    // (P^T - I) w = 0 with the last equation replaced by sum(w) = 1
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (r, &i) in class.iter().enumerate() {
        for (s, &j) in class.iter().enumerate() {
            a[(s, r)] = matrix[i][j];
        }
        a[(r, r)] -= 1.0;
    }
    for c in 0..k {
        a[(k - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let w = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::IrregularChain("singular stationarity system".into()))?;
    let mut full = vec![0.0; matrix.len()];
    for (r, &i) in class.iter().enumerate() {
        full[i] = w[r].max(0.0);
    }
    let total: f64 = full.iter().sum();
    Ok(full.into_iter().map(|x| x / total).collect())
}

fn power_iteration(matrix: &[Vec<f64>], class: &[usize]) -> Result<Vec<f64>> {
    let n = matrix.len();
    let mut w = vec![0.0; n];
    for &i in class {
        w[i] = 1.0 / class.len() as f64;
    }
    for _ in 0..POWER_MAX_ITERS {
        let mut next = vec![0.0; n];
        for &i in class {
            for &j in class {
                next[j] += w[i] * matrix[i][j];
            }
        }
        let diff = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if diff < 1e-15 {
            return Ok(w);
        }
    }
    Err(Error::IrregularChain(
        "power iteration did not settle".into(),
    ))
}

/// Stationary law of the chain started at `start`, by direct solve, with
/// the power-iteration cross-check.
pub fn stationary_pair(
    matrix: &[Vec<f64>],
    start: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let class = recurrent_class(matrix, start)?;
    let direct = direct_solve(matrix, &class)?;
    let power = power_iteration(matrix, &class)?;
    let gap = direct
        .iter()
        .zip(&power)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if gap > CROSS_CHECK_TOL {
        return Err(Error::IrregularChain(format!(
            "direct and power solutions differ by {gap:e}"
        )));
    }
    Ok((direct, power, class))
}

pub fn stationary_distribution(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    stationary_pair(matrix, 0).map(|(w, _, _)| w)
}

pub fn energy_chain(energy: &EnergyModel) -> Result<EnergyChain> {
    let transition = transition_matrix(energy);
    let start = energy.initial() as usize;
    let (stationary, stationary_power, recurrent) = stationary_pair(&transition, start)?;
    let sampling_fraction = 1.0 - energy.pmf()[0] * stationary[0];
    Ok(EnergyChain {
        transition,
        stationary,
        stationary_power,
        sampling_fraction,
        recurrent,
    })
}

/// Long-run fraction of slots sampled by the greedy rule, 1 - p₀ w̃₀.
pub fn sampling_fraction(energy: &EnergyModel) -> Result<f64> {
    energy_chain(energy).map(|c| c.sampling_fraction)
}
