//! Versioned JSON documents for solved tables.
//!
//! Floats are written with shortest round-trip formatting, so a table read
//! back from its document is bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PolicyGrid, MAX_GRID_SIZE};
use crate::limited::{LimitedPolicyTable, ValueRow};
use crate::model::{DensityPair, DensityParams, EnergyModel};
use crate::stochastic::{StochasticValueTable, MAX_TABLE_ENTRIES};

pub const TABLE_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    Limited,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitedTableDoc {
    pub format: u32,
    pub kind: TableKind,
    pub grid_size: usize,
    pub rho: f64,
    pub c: f64,
    pub density: DensityParams,
    pub rows: Vec<ValueRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticTableDoc {
    pub format: u32,
    pub kind: TableKind,
    pub grid_size: usize,
    pub rho: f64,
    pub c: f64,
    pub density: DensityParams,
    pub energy: EnergyModel,
    pub iterations: usize,
    pub achieved_tol: f64,
    pub v: Vec<Vec<f64>>,
    pub w_skip: Vec<Vec<Vec<f64>>>,
    pub w_sample: Vec<Vec<Option<Vec<f64>>>>,
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn params_of(pair: &dyn DensityPair) -> Result<DensityParams> {
    pair.params()
        .ok_or_else(|| Error::Config("density pair has no serializable description".into()))
}

fn check_common(
    format: u32,
    kind: TableKind,
    want: TableKind,
    grid_size: usize,
    rho: f64,
    c: f64,
) -> Result<()> {
    if format != TABLE_FORMAT {
        return bad(format!(
            "unsupported table format {format}, expected {TABLE_FORMAT}"
        ));
    }
    if kind != want {
        return bad(format!("expected a {want:?} table, found {kind:?}"));
    }
    if !(2..=MAX_GRID_SIZE).contains(&grid_size) {
        return bad(format!(
            "grid_size must lie in [2, {MAX_GRID_SIZE}], got {grid_size}"
        ));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return bad(format!("rho must lie in (0, 1), got {rho}"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return bad(format!("c must be positive, got {c}"));
    }
    Ok(())
}

fn check_values(xs: &[f64], len: usize, what: &str) -> Result<()> {
    if xs.len() != len {
        return bad(format!("{what} has {} entries, expected {len}", xs.len()));
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return bad(format!("{what} holds non-finite values"));
    }
    Ok(())
}

impl LimitedTableDoc {
    pub fn from_table(t: &LimitedPolicyTable) -> Result<Self> {
        Ok(Self {
            format: TABLE_FORMAT,
            kind: TableKind::Limited,
            grid_size: t.grid.len(),
            rho: t.rho,
            c: t.c,
            density: params_of(t.pair.as_ref())?,
            rows: t.rows.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_common(
            self.format,
            self.kind,
            TableKind::Limited,
            self.grid_size,
            self.rho,
            self.c,
        )?;
        if self.rows.is_empty() {
            return bad("table has no rows");
        }
        for (n, r) in self.rows.iter().enumerate() {
            check_values(&r.values, self.grid_size, &format!("row {n} values"))?;
            if r.intervals.len() != self.grid_size {
                return bad(format!("row {n} intervals have the wrong length"));
            }
            if n > 0 && r.intervals.contains(&0) {
                return bad(format!("row {n} holds a zero interval"));
            }
            if !(0.0..=1.0).contains(&r.threshold) {
                return bad(format!("row {n} threshold outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn into_table(self) -> Result<LimitedPolicyTable> {
        self.validate()?;
        Ok(LimitedPolicyTable {
            grid: PolicyGrid::new(self.grid_size)?,
            rho: self.rho,
            c: self.c,
            pair: self
                .density
                .build()
                .map_err(|e| Error::Config(e.to_string()))?,
            rows: self.rows,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }
}

impl StochasticTableDoc {
    pub fn from_table(t: &StochasticValueTable) -> Result<Self> {
        Ok(Self {
            format: TABLE_FORMAT,
            kind: TableKind::Stochastic,
            grid_size: t.grid.len(),
            rho: t.rho,
            c: t.c,
            density: params_of(t.pair.as_ref())?,
            energy: t.energy.clone(),
            iterations: t.iterations,
            achieved_tol: t.achieved_tol,
            v: t.v.clone(),
            w_skip: t.w_skip.clone(),
            w_sample: t.w_sample.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_common(
            self.format,
            self.kind,
            TableKind::Stochastic,
            self.grid_size,
            self.rho,
            self.c,
        )?;
        let levels = self.energy.capacity() as usize + 1;
        let arrivals = self.energy.pmf().len();
        if levels * arrivals * self.grid_size > MAX_TABLE_ENTRIES {
            return bad("table is too large");
        }
        if self.v.len() != levels || self.w_skip.len() != levels || self.w_sample.len() != levels {
            return bad(format!("expected {levels} energy levels"));
        }
        for n in 0..levels {
            check_values(&self.v[n], self.grid_size, &format!("v[{n}]"))?;
            if self.w_skip[n].len() != arrivals || self.w_sample[n].len() != arrivals {
                return bad(format!("expected {arrivals} arrival values at level {n}"));
            }
            for nu in 0..arrivals {
                check_values(
                    &self.w_skip[n][nu],
                    self.grid_size,
                    &format!("w_skip[{n}][{nu}]"),
                )?;
                match (&self.w_sample[n][nu], n + nu == 0) {
                    (None, true) => {}
                    (Some(w), false) => {
                        check_values(w, self.grid_size, &format!("w_sample[{n}][{nu}]"))?
                    }
                    (None, false) => return bad(format!("w_sample[{n}][{nu}] is missing")),
                    (Some(_), true) => return bad("w_sample[0][0] must be null"),
                }
            }
        }
        if !(self.achieved_tol >= 0.0) {
            return bad("achieved_tol must be nonnegative");
        }
        Ok(())
    }

    pub fn into_table(self) -> Result<StochasticValueTable> {
        self.validate()?;
        Ok(StochasticValueTable {
            grid: PolicyGrid::new(self.grid_size)?,
            energy: self.energy,
            rho: self.rho,
            c: self.c,
            pair: self
                .density
                .build()
                .map_err(|e| Error::Config(e.to_string()))?,
            v: self.v,
            w_skip: self.w_skip,
            w_sample: self.w_sample,
            iterations: self.iterations,
            achieved_tol: self.achieved_tol,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_limited_table(text: &str) -> Result<LimitedPolicyTable> {
    parse::<LimitedTableDoc>(text)?.into_table()
}

pub fn parse_stochastic_table(text: &str) -> Result<StochasticValueTable> {
    parse::<StochasticTableDoc>(text)?.into_table()
}

pub fn limited_table_json(t: &LimitedPolicyTable) -> Result<String> {
    Ok(LimitedTableDoc::from_table(t)?.to_json())
}

pub fn stochastic_table_json(t: &StochasticValueTable) -> Result<String> {
    Ok(StochasticTableDoc::from_table(t)?.to_json())
}
