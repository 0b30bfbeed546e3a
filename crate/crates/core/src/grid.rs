//! Uniform grid on [0, 1] and piecewise-linear interpolation over it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted grid.
pub const MAX_GRID_SIZE: usize = 200_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct PolicyGrid {
    points: Vec<f64>,
}

impl PolicyGrid {
    pub fn new(size: usize) -> Result<Self> {
        if !(2..=MAX_GRID_SIZE).contains(&size) {
            return Err(Error::Config(format!(
                "grid size must lie in [2, {MAX_GRID_SIZE}], got {size}"
            )));
        }
        let h = (size - 1) as f64;
        let mut points: Vec<f64> = (0..size).map(|i| i as f64 / h).collect();
        points[size - 1] = 1.0;
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    /// Cell index `i` and weight `t` with `π = (1 - t) g_i + t g_{i+1}`.
    pub fn locate(&self, pi: f64) -> (usize, f64) {
        let n = self.len() - 1;
        let pi = pi.clamp(0.0, 1.0);
        let s = pi * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let t = ((pi - self.points[i]) / self.spacing()).clamp(0.0, 1.0);
        (i, t)
    }

    pub fn nearest_index(&self, pi: f64) -> usize {
        let n = self.len() - 1;
        ((pi.clamp(0.0, 1.0) * n as f64).round() as usize).min(n)
    }

    /// Linear interpolation of grid values at `pi`.
    pub fn interp(&self, values: &[f64], pi: f64) -> f64 {
        let (i, t) = self.locate(pi);
        if t == 0.0 {
            values[i]
        } else if t == 1.0 {
            values[i + 1]
        } else {
            values[i] + t * (values[i + 1] - values[i])
        }
    }
}

impl TryFrom<usize> for PolicyGrid {
    type Error = Error;

    fn try_from(size: usize) -> Result<Self> {
        Self::new(size)
    }
}

impl From<PolicyGrid> for usize {
    fn from(g: PolicyGrid) -> usize {
        g.len()
    }
}

/// Midpoint concavity over consecutive triples, within `tol`.
pub fn is_midpoint_concave(values: &[f64], tol: f64) -> bool {
    values.windows(3).all(|w| w[1] + tol >= 0.5 * (w[0] + w[2]))
}
