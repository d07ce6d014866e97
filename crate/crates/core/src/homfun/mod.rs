//! Positively homogeneous functions on the dual space `E*`.

mod expr;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use expr::{LatticeExpr, Node};
pub use parse::{parse_expr, parse_expr_with};

use crate::error::{check_dim, Error, Result};
use crate::sampling;
use crate::spaces::Space;

/// Default size of the seeded validation sample used by family checks.
pub const VALIDATION_SAMPLES: usize = 512;
/// Pointwise order tolerance for increasing families.
pub const ORDER_TOL: f64 = 1e-12;

/// A function `f: R^n → R` with `f(λx*) = λ f(x*)` for `λ > 0`.
pub trait HomFn: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Value at `x`; the caller guarantees `x.len() == self.dim()`.
    fn value(&self, x: &[f64]) -> f64;

    /// A constant `L` with `|f(x*) − f(y*)| ≤ L ‖x* − y*‖_{E*}`, when one is known.
    fn lipschitz_bound(&self, _space: &Space) -> Option<f64> {
        None
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value(x))
    }
}

pub type FnRef = Arc<dyn HomFn>;

pub fn shared<F: HomFn + 'static>(f: F) -> FnRef {
    Arc::new(f)
}

/// `eval(f, x*)` with dimension checking.
pub fn eval(f: &dyn HomFn, x: &[f64]) -> Result<f64> {
    f.eval(x)
}

/// Pointwise maximum of finitely many functions.
#[derive(Clone, Debug)]
pub struct MaxOf {
    members: Vec<FnRef>,
    dim: usize,
}

impl MaxOf {
    pub fn new(members: Vec<FnRef>) -> Result<MaxOf> {
        let dim = members
            .first()
            .map(|f| f.dim())
            .ok_or_else(|| Error::InvalidArgument("maximum of an empty list".into()))?;
        for f in &members {
            check_dim(dim, f.dim())?;
        }
        Ok(MaxOf { members, dim })
    }

    pub fn members(&self) -> &[FnRef] {
        &self.members
    }
}

impl HomFn for MaxOf {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.members
            .iter()
            .map(|f| f.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn lipschitz_bound(&self, space: &Space) -> Option<f64> {
        self.members
            .iter()
            .map(|f| f.lipschitz_bound(space))
            .try_fold(0.0f64, |m, l| l.map(|l| m.max(l)))
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.members.iter().map(|f| f.describe()).collect();
        format!("max({})", parts.join(", "))
    }
}

/// `c · f` for a nonnegative constant `c`.
#[derive(Clone, Debug)]
pub struct Scaled {
    pub factor: f64,
    pub inner: FnRef,
}

impl HomFn for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn lipschitz_bound(&self, space: &Space) -> Option<f64> {
        self.inner.lipschitz_bound(space).map(|l| self.factor.abs() * l)
    }

    fn describe(&self) -> String {
        format!("{} * {}", self.factor, self.inner.describe())
    }
}

/// A homogeneous function given by a closure.
pub struct FromFn<F> {
    dim: usize,
    name: String,
    f: F,
}

impl<F> fmt::Debug for FromFn<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> HomFn for FromFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Wraps a closure; homogeneity is the caller's responsibility.
pub fn from_fn<F>(dim: usize, name: impl Into<String>, f: F) -> FnRef
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    Arc::new(FromFn {
        dim,
        name: name.into(),
        f,
    })
}

/// An increasing (pointwise nondecreasing) finite family, verified on samples.
#[derive(Clone, Debug)]
pub struct DirectedFamily {
    members: Vec<FnRef>,
}

impl DirectedFamily {
    /// Checks `f_i ≤ f_{i+1}` on the default validation sample of `space`.
    pub fn new(space: &Space, members: Vec<FnRef>) -> Result<DirectedFamily> {
        let sample = sampling::validation_sample(space, VALIDATION_SAMPLES, 0);
        Self::with_sample(space, members, &sample)
    }

    pub fn with_sample(
        space: &Space,
        members: Vec<FnRef>,
        sample: &[Vec<f64>],
    ) -> Result<DirectedFamily> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty family".into()));
        }
        for f in &members {
            check_dim(space.dim(), f.dim())?;
        }
        for x in sample {
            check_dim(space.dim(), x.len())?;
            let values: Vec<f64> = members.iter().map(|f| f.value(x)).collect();
            for i in 0..values.len() - 1 {
                let excess = values[i] - values[i + 1];
                if excess > ORDER_TOL {
                    return Err(Error::NotIncreasing {
                        member: i,
                        next: i + 1,
                        excess,
                    });
                }
            }
        }
        Ok(DirectedFamily { members })
    }

    pub fn members(&self) -> &[FnRef] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }
}

/// `g(x*) = sup_i f_i(x*)`, evaluated lazily as a maximum over the members.
#[derive(Clone, Debug)]
pub struct PointwiseSup {
    family: DirectedFamily,
}

impl PointwiseSup {
    pub fn family(&self) -> &DirectedFamily {
        &self.family
    }
}

impl HomFn for PointwiseSup {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.family
            .members
            .iter()
            .map(|f| f.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn lipschitz_bound(&self, space: &Space) -> Option<f64> {
        self.family
            .members
            .iter()
            .map(|f| f.lipschitz_bound(space))
            .try_fold(0.0f64, |m, l| l.map(|l| m.max(l)))
    }

    fn describe(&self) -> String {
        format!("sup of {} members", self.family.len())
    }
}

/// Pointwise supremum of an increasing family; fails when some member is
/// non-finite on the validation sample.
pub fn pointwise_sup(space: &Space, family: &DirectedFamily) -> Result<PointwiseSup> {
    let sample = sampling::validation_sample(space, VALIDATION_SAMPLES, 0);
    for x in &sample {
        for f in &family.members {
            if !f.value(x).is_finite() {
                return Err(Error::Unbounded);
            }
        }
    }
    Ok(PointwiseSup {
        family: family.clone(),
    })
}

/// Running joins `y_n = ⋁_{i ≤ n} a_i`.
pub fn directify(space: &Space, items: &[FnRef]) -> Result<DirectedFamily> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("directify needs at least one item".into()));
    }
    let mut members: Vec<FnRef> = Vec::with_capacity(items.len());
    for n in 0..items.len() {
        check_dim(space.dim(), items[n].dim())?;
        if n == 0 {
            members.push(items[0].clone());
        } else {
            members.push(Arc::new(MaxOf::new(items[..=n].to_vec())?));
        }
    }
    Ok(DirectedFamily { members })
}

/// Running joins of lattice expressions, kept as expressions.
pub fn directify_exprs(items: &[LatticeExpr]) -> Result<Vec<LatticeExpr>> {
    let first = items
        .first()
        .ok_or_else(|| Error::InvalidArgument("directify needs at least one item".into()))?;
    let mut out = vec![first.clone()];
    for e in &items[1..] {
        check_dim(first.dim(), e.dim())?;
        let next = out.last().expect("non-empty").join(e);
        out.push(next);
    }
    Ok(out)
}

/// Largest `|f(x*)|` over a seeded dual-sphere sample.
pub fn sampled_sup_norm(space: &Space, f: &dyn HomFn, samples: usize, seed: u64) -> f64 {
    sampling::validation_sample(space, samples, seed)
        .iter()
        .map(|x| f.value(x).abs())
        .fold(0.0, f64::max)
}
