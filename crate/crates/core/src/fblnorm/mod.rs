//! Truncated free norms `‖f‖_{FBL^{(p)}_k[E]}` with certificates.
//!
//! For a tuple `(x_1*, …, x_k*)` the certificate value is
//! `(Σ |f(x_i*)|^p)^{1/p} / (sup_{x ∈ B_E} Σ |x_i*(x)|^p)^{1/p}`, which is
//! invariant under scaling of the tuple. Every value reported here is a lower
//! bound of the truncated norm, attained by an explicit tuple.

mod optimizer;
mod oracle;
mod sparsify;

use serde::{Deserialize, Serialize};

pub use optimizer::{fbl_norm, fbl_norm_k, fbl_norm_k_warm, lambda_probe, NormEstimate, ProbeRow};
pub use oracle::{oracle_norm_net, sampled_lipschitz, OracleResult, DEFAULT_ORACLE_BUDGET};
pub use sparsify::{default_c_grid, sparsify_certificate, SparsifiedCertificate};

use crate::error::{check_dim, Error, Result};
use crate::homfun::HomFn;
use crate::spaces::{Space, DEFAULT_K_EXACT};

/// Optimizer settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub seed: u64,
    /// Multi-starts per call.
    pub starts: usize,
    /// Maximum pattern-search sweeps per start.
    pub iters: usize,
    /// Sign-enumeration cutoff for the summing constraint.
    pub k_exact: usize,
    /// Pattern search stops once the step falls below this.
    pub min_step: f64,
    /// Ceiling of the doubling schedule in [`fbl_norm`].
    pub k_max: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            seed: 0,
            starts: 64,
            iters: 2000,
            k_exact: DEFAULT_K_EXACT,
            min_step: 1e-10,
            k_max: 8,
        }
    }
}

impl Budget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidArgument("budget needs at least one start".into()));
        }
        if !(self.min_step > 0.0) {
            return Err(Error::InvalidArgument("min_step must be positive".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be positive".into()));
        }
        Ok(())
    }
}

/// A tuple of dual functionals witnessing a lower bound of the free norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub tuple: Vec<Vec<f64>>,
    pub p: f64,
    /// `sup_{x ∈ B_E} Σ |x_i*(x)|^p`.
    pub constraint: f64,
    /// `(Σ |f(x_i*)|^p)^{1/p}`.
    pub objective: f64,
    /// `objective / constraint^{1/p}`, or 0 for a zero objective.
    pub value: f64,
    /// False when the constraint came from the ascent heuristic; the value
    /// may then overstate the truncated norm.
    pub exact_constraint: bool,
}

pub(crate) fn p_sum(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p == 1.0 {
        values.map(f64::abs).sum()
    } else {
        values.map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub(crate) fn ratio(objective: f64, constraint: f64, p: f64) -> f64 {
    if objective == 0.0 || constraint <= 0.0 {
        0.0
    } else if p == 1.0 {
        objective / constraint
    } else {
        objective / constraint.powf(1.0 / p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent {p} must be finite and ≥ 1")))
    }
}

impl Certificate {
    pub fn evaluate(
        space: &Space,
        f: &dyn HomFn,
        tuple: Vec<Vec<f64>>,
        p: f64,
        k_exact: usize,
    ) -> Result<Certificate> {
        check_exponent(p)?;
        check_dim(space.dim(), f.dim())?;
        let sv = space.summing_constraint(&tuple, p, k_exact)?;
        let mut values = Vec::with_capacity(tuple.len());
        for x in &tuple {
            let v = f.value(x);
            if !v.is_finite() {
                return Err(Error::Unbounded);
            }
            values.push(v);
        }
        let objective = p_sum(values.into_iter(), p);
        Ok(Certificate {
            value: ratio(objective, sv.value, p),
            tuple,
            p,
            constraint: sv.value,
            objective,
            exact_constraint: sv.exact,
        })
    }

    pub fn k(&self) -> usize {
        self.tuple.len()
    }

    /// The tuple divided by `constraint^{1/p}`, re-evaluated.
    pub fn normalized(&self, space: &Space, f: &dyn HomFn, k_exact: usize) -> Result<Certificate> {
        if self.constraint <= 0.0 {
            return Ok(self.clone());
        }
        let t = self.constraint.powf(1.0 / self.p);
        let tuple = self
            .tuple
            .iter()
            .map(|x| x.iter().map(|v| v / t).collect())
            .collect();
        Certificate::evaluate(space, f, tuple, self.p, k_exact)
    }
}
