//! Linear programming kernel.
//!
//! [`LpModel`] is a sparse minimisation model with bounded variables and
//! `<=`, `=`, `>=` rows. [`solve_lp`] runs a two-phase bounded primal
//! simplex and returns primal values, row duals, reduced costs and, for
//! infeasible models, a Farkas certificate. [`Simplex`] exposes the same
//! engine with bound changes, row appends and dual-simplex reoptimisation
//! for branch and bound.

mod simplex;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

pub use simplex::{BasisSnapshot, Simplex, SimplexOptions};

pub const FEAS_TOL: f64 = 1e-7;
pub const OPT_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable {0} has inconsistent bounds")]
    BadBounds(String),
    #[error("row {row} references unknown variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("non-finite coefficient in row {0}")]
    NonFinite(usize),
    #[error("duplicate variable name {0}")]
    DuplicateName(String),
    #[error("model has integer variables; relax them explicitly or use branch and bound")]
    IntegerModel,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Row { coefs, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub obj: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub row_names: Vec<String>,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lb: f64, ub: f64, obj: f64, integer: bool) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lb,
            ub,
            obj,
            integer,
        });
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> usize {
        self.add_var(name, 0.0, 1.0, obj, true)
    }

    /// Appends a row; zero coefficients are dropped and repeated indices summed.
    pub fn add_row(&mut self, name: impl Into<String>, row: Row) -> Result<usize, LpError> {
        let idx = self.rows.len();
        let row = normalize_row(row, self.vars.len(), idx)?;
        self.rows.push(row);
        self.row_names.push(name.into());
        Ok(idx)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let mut names = HashMap::with_capacity(self.vars.len());
        for v in &self.vars {
            if v.lb.is_nan() || v.ub.is_nan() || v.lb > v.ub || !v.obj.is_finite() {
                return Err(LpError::BadBounds(v.name.clone()));
            }
            if names.insert(v.name.as_str(), ()).is_some() {
                return Err(LpError::DuplicateName(v.name.clone()));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(LpError::NonFinite(i));
            }
            for &(j, a) in &r.coefs {
                if j >= self.vars.len() {
                    return Err(LpError::UnknownVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(i));
                }
            }
        }
        Ok(())
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lb - xi).max(xi - v.ub).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Human-readable listing in an LP-file-like layout, for debugging.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        for v in self.vars.iter().filter(|v| v.obj != 0.0) {
            let _ = write!(out, " {:+} {}", v.obj, v.name);
        }
        out.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let name = self.row_names.get(i).map(String::as_str).unwrap_or("");
            let _ = write!(out, " {name}:");
            for &(j, a) in &r.coefs {
                let _ = write!(out, " {a:+} {}", self.vars[j].name);
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", r.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            let _ = writeln!(out, " {} <= {} <= {}", v.lb, v.name, v.ub);
        }
        let ints: Vec<&str> = self.vars.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

pub(crate) fn normalize_row(row: Row, num_vars: usize, idx: usize) -> Result<Row, LpError> {
    if !row.rhs.is_finite() {
        return Err(LpError::NonFinite(idx));
    }
    let mut coefs = row.coefs;
    for &(j, a) in &coefs {
        if j >= num_vars {
            return Err(LpError::UnknownVariable { row: idx, var: j });
        }
        if !a.is_finite() {
            return Err(LpError::NonFinite(idx));
        }
    }
    coefs.sort_by_key(|&(j, _)| j);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coefs.len());
    for (j, a) in coefs {
        match merged.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => merged.push((j, a)),
        }
    }
    merged.retain(|&(_, a)| a != 0.0);
    Ok(Row {
        coefs: merged,
        sense: row.sense,
        rhs: row.rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals: sensitivity of the optimum to each right-hand side.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// `y.b + sum of reduced cost times active bound`; equals `objective` at
    /// an optimum.
    pub dual_objective: f64,
    /// Row multipliers `y` with `y_i <= 0` on `<=` rows, `y_i >= 0` on `>=`
    /// rows, such that the largest value of `y.A x` over the variable bounds
    /// stays strictly below `y.b`. Present iff infeasible.
    pub farkas: Option<Vec<f64>>,
}

/// Solves the LP relaxation of `model`. With `integrality_ignored == false`
/// a model carrying integer markers is rejected.
pub fn solve_lp(model: &LpModel, integrality_ignored: bool) -> Result<LpSolution, LpError> {
    model.validate()?;
    if !integrality_ignored && model.has_integers() {
        return Err(LpError::IntegerModel);
    }
    let mut spx = Simplex::new(model, SimplexOptions::default());
    let status = spx.solve()?;
    Ok(spx.solution(status))
}

/// Checks that `ray` proves `model` infeasible in the sense documented on
/// [`LpSolution::farkas`].
pub fn farkas_certifies(model: &LpModel, ray: &[f64], tol: f64) -> bool {
    if ray.len() != model.rows.len() {
        return false;
    }
    let scale = ray.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if scale == 0.0 {
        return false;
    }
    let mut g = vec![0.0; model.vars.len()];
    let mut yb = 0.0;
    for (r, &y) in model.rows.iter().zip(ray) {
        let y = y / scale;
        let sign_ok = match r.sense {
            Sense::Le => y <= tol,
            Sense::Ge => y >= -tol,
            Sense::Eq => true,
        };
        if !sign_ok {
            return false;
        }
        yb += y * r.rhs;
        for &(j, a) in &r.coefs {
            g[j] += y * a;
        }
    }
    let mut max = 0.0;
    for (v, &gj) in model.vars.iter().zip(&g) {
        if gj > tol {
            if v.ub.is_infinite() {
                return false;
            }
            max += gj * v.ub;
        } else if gj < -tol {
            if v.lb.is_infinite() {
                return false;
            }
            max += gj * v.lb;
        }
    }
    max < yb - tol
}

#[cfg(test)]
mod tests;
