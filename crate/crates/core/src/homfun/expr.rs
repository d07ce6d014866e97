use std::fmt;
use std::sync::Arc;

use super::{FnRef, HomFn};
use crate::error::{check_dim, Result};
use crate::spaces::Space;

/// Immutable expression tree of lattice-linear operations over evaluation
/// functionals `δ_x(x*) = ⟨x*, x⟩`.
#[derive(Clone, Debug)]
pub struct LatticeExpr {
    node: Arc<Node>,
    dim: usize,
}

#[derive(Debug)]
pub enum Node {
    Generator(Vec<f64>),
    Scale(f64, LatticeExpr),
    Sum(LatticeExpr, LatticeExpr),
    Abs(LatticeExpr),
    Join(LatticeExpr, LatticeExpr),
    Meet(LatticeExpr, LatticeExpr),
    /// `|Σ c_a |e_a|^p|^{1/p}`.
    PowerSum { p: f64, terms: Vec<(f64, LatticeExpr)> },
}

impl LatticeExpr {
    fn wrap(node: Node, dim: usize) -> LatticeExpr {
        LatticeExpr {
            node: Arc::new(node),
            dim,
        }
    }

    /// `δ_x` checked against the space dimension.
    pub fn delta(space: &Space, x: &[f64]) -> Result<LatticeExpr> {
        check_dim(space.dim(), x.len())?;
        Ok(Self::generator(x.to_vec()))
    }

    pub fn generator(x: Vec<f64>) -> LatticeExpr {
        let dim = x.len();
        Self::wrap(Node::Generator(x), dim)
    }

    pub fn zero(dim: usize) -> LatticeExpr {
        Self::generator(vec![0.0; dim])
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn same_dim(&self, other: &LatticeExpr) {
        assert_eq!(self.dim, other.dim, "lattice expressions of different dimensions");
    }

    pub fn abs(&self) -> LatticeExpr {
        Self::wrap(Node::Abs(self.clone()), self.dim)
    }

    pub fn scale(&self, c: f64) -> LatticeExpr {
        Self::wrap(Node::Scale(c, self.clone()), self.dim)
    }

    /// # Panics
    /// If the dimensions differ.
    pub fn add(&self, other: &LatticeExpr) -> LatticeExpr {
        self.same_dim(other);
        Self::wrap(Node::Sum(self.clone(), other.clone()), self.dim)
    }

    /// # Panics
    /// If the dimensions differ.
    pub fn join(&self, other: &LatticeExpr) -> LatticeExpr {
        self.same_dim(other);
        Self::wrap(Node::Join(self.clone(), other.clone()), self.dim)
    }

    /// # Panics
    /// If the dimensions differ.
    pub fn meet(&self, other: &LatticeExpr) -> LatticeExpr {
        self.same_dim(other);
        Self::wrap(Node::Meet(self.clone(), other.clone()), self.dim)
    }

    /// `|Σ c_a |e_a|^p|^{1/p}`.
    ///
    /// # Panics
    /// If `terms` is empty or the dimensions differ.
    pub fn power_sum(p: f64, terms: Vec<(f64, LatticeExpr)>) -> LatticeExpr {
        let dim = terms.first().expect("power sum of no terms").1.dim;
        for (_, e) in &terms {
            assert_eq!(dim, e.dim, "lattice expressions of different dimensions");
        }
        Self::wrap(Node::PowerSum { p, terms }, dim)
    }

    /// Sum of a non-empty list.
    pub fn sum_all<'a>(items: impl IntoIterator<Item = &'a LatticeExpr>) -> Option<LatticeExpr> {
        items.into_iter().fold(None, |acc, e| match acc {
            None => Some(e.clone()),
            Some(a) => Some(a.add(e)),
        })
    }

    /// Join of a non-empty list.
    pub fn join_all<'a>(items: impl IntoIterator<Item = &'a LatticeExpr>) -> Option<LatticeExpr> {
        items.into_iter().fold(None, |acc, e| match acc {
            None => Some(e.clone()),
            Some(a) => Some(a.join(e)),
        })
    }

    pub fn into_fn(self) -> FnRef {
        Arc::new(self)
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match &*self.node {
            Node::Generator(_) => 1,
            Node::Scale(_, e) | Node::Abs(e) => 1 + e.depth(),
            Node::Sum(a, b) | Node::Join(a, b) | Node::Meet(a, b) => 1 + a.depth().max(b.depth()),
            Node::PowerSum { terms, .. } => {
                1 + terms.iter().map(|(_, e)| e.depth()).max().unwrap_or(0)
            }
        }
    }

    fn lipschitz(&self, space: &Space) -> Option<f64> {
        Some(match &*self.node {
            Node::Generator(x) => space.primal_norm_unchecked(x),
            Node::Scale(c, e) => c.abs() * e.lipschitz(space)?,
            Node::Sum(a, b) => a.lipschitz(space)? + b.lipschitz(space)?,
            Node::Abs(e) => e.lipschitz(space)?,
            Node::Join(a, b) | Node::Meet(a, b) => a.lipschitz(space)?.max(b.lipschitz(space)?),
            Node::PowerSum { p, terms } => {
                if terms.iter().any(|(c, _)| *c < 0.0) {
                    return None;
                }
                let mut s = 0.0;
                for (c, e) in terms {
                    s += c * e.lipschitz(space)?.powf(*p);
                }
                s.powf(1.0 / p)
            }
        })
    }
}

impl HomFn for LatticeExpr {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &*self.node {
            Node::Generator(v) => v.iter().zip(x).map(|(a, b)| a * b).sum(),
            Node::Scale(c, e) => c * e.value(x),
            Node::Sum(a, b) => a.value(x) + b.value(x),
            Node::Abs(e) => e.value(x).abs(),
            Node::Join(a, b) => a.value(x).max(b.value(x)),
            Node::Meet(a, b) => a.value(x).min(b.value(x)),
            Node::PowerSum { p, terms } => {
                let s: f64 = terms
                    .iter()
                    .map(|(c, e)| c * e.value(x).abs().powf(*p))
                    .sum();
                s.abs().powf(1.0 / p)
            }
        }
    }

    /// Rigorous bound from the tree structure; `None` for power sums with
    /// negative coefficients.
    fn lipschitz_bound(&self, space: &Space) -> Option<f64> {
        self.lipschitz(space)
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

fn fmt_coords(f: &mut fmt::Formatter<'_>, x: &[f64]) -> fmt::Result {
    write!(f, "[")?;
    for (i, v) in x.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, "]")
}

/// Prefix syntax accepted by [`super::parse_expr`].
impl fmt::Display for LatticeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Generator(x) => {
                write!(f, "delta ")?;
                fmt_coords(f, x)
            }
            Node::Scale(c, e) => write!(f, "scale({c},{e})"),
            Node::Sum(a, b) => write!(f, "add({a},{b})"),
            Node::Abs(e) => write!(f, "abs({e})"),
            Node::Join(a, b) => write!(f, "join({a},{b})"),
            Node::Meet(a, b) => write!(f, "meet({a},{b})"),
            Node::PowerSum { p, terms } => {
                write!(f, "powsum({p}")?;
                for (c, e) in terms {
                    write!(f, ",{c},{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}
