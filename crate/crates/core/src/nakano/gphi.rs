use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::homfun::{HomFn, LatticeExpr};
use crate::spaces::Space;

/// Coefficients of a summable family `φ ∈ ℓ_1(A)`, indexed from 0.
#[derive(Clone)]
pub enum Coefficients {
    Finite(Vec<f64>),
    /// `φ_a = coeff(a)` for `a = 0, 1, …`, with a stated value of `Σ_a |φ_a|`.
    Countable {
        coeff: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
        abs_sum: f64,
    },
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Finite(v) => write!(f, "Finite({v:?})"),
            Coefficients::Countable { abs_sum, .. } => write!(f, "Countable(Σ|φ| = {abs_sum})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhiVector {
    pub coeffs: Coefficients,
    pub p: f64,
}

impl PhiVector {
    pub fn finite(phi: Vec<f64>, p: f64) -> Result<PhiVector> {
        check_p(p)?;
        if phi.is_empty() || phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("φ must be a non-empty finite vector".into()));
        }
        Ok(PhiVector {
            coeffs: Coefficients::Finite(phi),
            p,
        })
    }

    pub fn countable(
        coeff: impl Fn(usize) -> f64 + Send + Sync + 'static,
        abs_sum: f64,
        p: f64,
    ) -> Result<PhiVector> {
        check_p(p)?;
        if !(abs_sum >= 0.0 && abs_sum.is_finite()) {
            return Err(Error::InvalidArgument("Σ|φ_a| must be finite".into()));
        }
        Ok(PhiVector {
            coeffs: Coefficients::Countable {
                coeff: Arc::new(coeff),
                abs_sum,
            },
            p,
        })
    }

    pub fn abs_sum(&self) -> f64 {
        match &self.coeffs {
            Coefficients::Finite(v) => v.iter().map(|x| x.abs()).sum(),
            Coefficients::Countable { abs_sum, .. } => *abs_sum,
        }
    }

    pub fn coefficient(&self, a: usize) -> Option<f64> {
        match &self.coeffs {
            Coefficients::Finite(v) => v.get(a).copied(),
            Coefficients::Countable { coeff, .. } => Some(coeff(a)),
        }
    }

    pub fn as_finite(&self) -> Option<&[f64]> {
        match &self.coeffs {
            Coefficients::Finite(v) => Some(v),
            Coefficients::Countable { .. } => None,
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent {p} must be finite and ≥ 1")))
    }
}

/// `g_φ(x*) = |Σ_a φ_a |x*_a / w_a|^p|^{1/p}`; `w = 1` on `ℓ_1^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GPhi {
    phi: Vec<f64>,
    p: f64,
    weights: Option<Vec<f64>>,
}

impl GPhi {
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The same function for the weighted-`ℓ_1` space with weights `w`,
    /// whose dual ball is `{|x*_a| ≤ w_a}`.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<GPhi> {
        check_dim(self.phi.len(), weights.len())?;
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }
}

impl HomFn for GPhi {
    fn dim(&self) -> usize {
        self.phi.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let s: f64 = match &self.weights {
            None => self
                .phi
                .iter()
                .zip(x)
                .map(|(c, v)| c * v.abs().powf(self.p))
                .sum(),
            Some(w) => self
                .phi
                .iter()
                .zip(x)
                .zip(w)
                .map(|((c, v), w)| c * (v.abs() / w).powf(self.p))
                .sum(),
        };
        s.abs().powf(1.0 / self.p)
    }

    fn lipschitz_bound(&self, space: &Space) -> Option<f64> {
        if self.phi.iter().any(|c| *c < 0.0) {
            return None;
        }
        // ℓ_p norm of (φ_a^{1/p} |x*(u_a)|) with u_a = e_a / w_a
        let mut s = 0.0;
        for (a, c) in self.phi.iter().enumerate() {
            let mut u = vec![0.0; self.phi.len()];
            u[a] = 1.0 / self.weights.as_ref().map_or(1.0, |w| w[a]);
            s += c * space.primal_norm_unchecked(&u).powf(self.p);
        }
        Some(s.powf(1.0 / self.p))
    }

    fn describe(&self) -> String {
        format!("g_phi(p={}, phi={:?})", self.p, self.phi)
    }
}

/// `g_φ` for a finitely supported `φ`.
pub fn g_phi(phi: &PhiVector) -> Result<GPhi> {
    let v = phi.as_finite().ok_or_else(|| {
        Error::InvalidArgument("g_phi needs finite support; use truncate_g_phi".into())
    })?;
    Ok(GPhi {
        phi: v.to_vec(),
        p: phi.p,
        weights: None,
    })
}

/// `‖g_φ‖ = (Σ_a |φ_a|)^{1/p}`.
pub fn g_phi_norm(phi: &PhiVector) -> f64 {
    phi.abs_sum().powf(1.0 / phi.p)
}

/// `f_S = |Σ_{a∈S} φ_a |δ_{e_a}|^p|^{1/p}` on `R^{max S + 1}` (or the full
/// length of a finite `φ`), with the tail bound `(Σ_{a∉S} |φ_a|)^{1/p}` on
/// `‖g_φ − f_S‖`.
pub fn truncate_g_phi(phi: &PhiVector, support: &[usize]) -> Result<(LatticeExpr, f64)> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("repeated index".into()));
    }
    let dim = match phi.as_finite() {
        Some(v) => {
            if let Some(&a) = sorted.iter().find(|&&a| a >= v.len()) {
                return Err(Error::InvalidArgument(format!("index {a} outside the support")));
            }
            v.len()
        }
        None => sorted.last().expect("non-empty") + 1,
    };
    let terms: Vec<(f64, LatticeExpr)> = sorted
        .iter()
        .map(|&a| {
            let mut e = vec![0.0; dim];
            e[a] = 1.0;
            (phi.coefficient(a).expect("index in range"), LatticeExpr::generator(e))
        })
        .collect();
    let kept: f64 = terms.iter().map(|(c, _)| c.abs()).sum();
    let tail = match phi.as_finite() {
        Some(v) => v
            .iter()
            .enumerate()
            .filter(|(a, _)| sorted.binary_search(a).is_err())
            .map(|(_, c)| c.abs())
            .sum::<f64>(),
        None => (phi.abs_sum() - kept).max(0.0),
    };
    Ok((
        LatticeExpr::power_sum(phi.p, terms),
        tail.powf(1.0 / phi.p),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn g_phi_examples() {
        let e1 = g_phi(&PhiVector::finite(vec![1.0, 0.0], 1.0).unwrap()).unwrap();
        assert_eq!(e1.value(&[-0.3, 0.9]), 0.3);
        let half = g_phi(&PhiVector::finite(vec![0.5, 0.5], 1.0).unwrap()).unwrap();
        assert_eq!(half.value(&[1.0, -1.0]), 1.0);
        let g = g_phi(&PhiVector::finite(vec![3.0, 4.0], 2.0).unwrap()).unwrap();
        assert!((g.value(&[1.0, 1.0]) - 7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(g_phi_norm(&PhiVector::finite(vec![0.5, 0.5], 1.0).unwrap()), 1.0);
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(g_phi_norm(&PhiVector::finite(vec![1.0, 0.0, 0.0], p).unwrap()), 1.0);
        }
        assert_eq!(g_phi_norm(&PhiVector::finite(vec![3.0, 4.0], 2.0).unwrap()), 7f64.sqrt());
    }

    #[test]
    fn countable_truncation() {
        let geo = |p| PhiVector::countable(|a| 0.5f64.powi(a as i32 + 1), 1.0, p).unwrap();
        let support: Vec<usize> = (0..10).collect();
        let (f, tail) = truncate_g_phi(&geo(1.0), &support).unwrap();
        assert_eq!(tail, 2f64.powi(-10));
        assert_eq!(f.dim(), 10);
        let (_, tail) = truncate_g_phi(&geo(2.0), &support).unwrap();
        assert_eq!(tail, 2f64.powi(-5));
        assert!(g_phi(&geo(1.0)).is_err());
    }

    #[test]
    fn full_support_is_exact() {
        let phi = PhiVector::finite(vec![0.2, 0.5, 0.3], 2.0).unwrap();
        let (f, tail) = truncate_g_phi(&phi, &[0, 1, 2]).unwrap();
        assert_eq!(tail, 0.0);
        let g = g_phi(&phi).unwrap();
        for x in sampling::dual_sphere_points(&Space::l1(3).unwrap(), 100, 1) {
            assert!((f.value(&x) - g.value(&x)).abs() < 1e-15);
        }
        assert!(truncate_g_phi(&phi, &[0, 3]).is_err());
        assert!(truncate_g_phi(&phi, &[1, 1]).is_err());
    }

    #[test]
    fn weighted_version() {
        let g = g_phi(&PhiVector::finite(vec![0.5, 0.5], 1.0).unwrap())
            .unwrap()
            .with_weights(vec![0.5, 0.5])
            .unwrap();
        // dual ball vertex (½, ½) of weighted ℓ1 with w = (½, ½)
        assert_eq!(g.value(&[0.5, 0.5]), 1.0);
    }

    #[test]
    fn lipschitz_bound_valid() {
        let s = Space::l1(3).unwrap();
        let g = g_phi(&PhiVector::finite(vec![0.2, 0.5, 0.3], 2.0).unwrap()).unwrap();
        let l = g.lipschitz_bound(&s).unwrap();
        let pts = sampling::dual_sphere_points(&s, 200, 2);
        for a in &pts {
            for b in pts.iter().take(10) {
                assert!((g.value(a) - g.value(b)).abs() <= l * s.dual_distance(a, b) + 1e-12);
            }
        }
    }
}
