//! Thin dense front end over `microlp` for the small programs used here.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `opt c·x` subject to dense rows and per-variable bounds.
pub(crate) struct DenseLp {
    sense: Sense,
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, Cmp, f64)>,
}

pub(crate) struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

impl DenseLp {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        DenseLp {
            sense,
            objective,
            bounds: vec![(0.0, f64::INFINITY); n],
            rows: Vec::new(),
        }
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, cmp: Cmp, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, cmp, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let dir = match self.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut problem = Problem::new(dir);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.bounds)
            .map(|(&c, &b)| problem.add_var(c, b))
            .collect();
        for (coeffs, cmp, rhs) in &self.rows {
            let terms: Vec<_> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, &c)| (vars[i], c))
                .collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(terms.as_slice(), op, *rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::LpInfeasible { violations: 0 },
            other => Error::Lp(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| Error::Lp("solve interrupted".into()))?;
        Ok(LpSolution {
            objective: solution.objective(),
            x: vars.iter().map(|&v| solution.var_value(v)).collect(),
        })
    }
}
