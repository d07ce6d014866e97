use serde::{Deserialize, Serialize};

use super::Certificate;
use crate::error::{check_dim, Error, Result};
use crate::homfun::HomFn;
use crate::lp::{Cmp, DenseLp, Sense};
use crate::spaces::Space;

const CUT_ROUNDS: usize = 200;
const EXCHANGE_PASSES: usize = 3;

/// A sub-tuple `{μ_k x_k* : k ∈ σ}` of a normalized certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparsifiedCertificate {
    pub sigma: Vec<usize>,
    /// Scalars indexed like `sigma`, with `sup Σ |μ_k x_k*(x)| ≤ 1/C` and `Σ w_k μ_k ≥ C`.
    pub mu: Vec<f64>,
    pub c: f64,
    /// `sup_σ max_ν Σ w_k ν_k` subject to `sup Σ ν_k |x_k*(x)| ≤ 1`; `C` is feasible iff `C² ≤` this.
    pub best_value: f64,
    /// `Σ_{k∈σ} C μ_k |f(x_k*)|`, a lower bound of `‖f‖_{FBL_{|σ|}}`.
    pub achieved_value: f64,
    /// `w_k = |f(x_k* / a)|`, `a` the parent objective.
    pub weights: Vec<f64>,
    pub parent: Certificate,
}

/// `0.05, 0.10, …, 1.00`.
pub fn default_c_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

struct Instance<'a> {
    space: &'a Space,
    tuple: &'a [Vec<f64>],
    weights: &'a [f64],
    k_exact: usize,
}

impl Instance<'_> {
    /// `max Σ w ν` over `ν ≥ 0` with `sup_{x∈B_E} Σ ν_k |x_k*(x)| ≤ 1`, by
    /// cutting planes at maximizing points of `B_E`.
    fn value(&self, sigma: &[usize]) -> Result<(f64, Vec<f64>)> {
        let mut points: Vec<Vec<f64>> = match self.space.half_extreme_points() {
            Some(ext) => ext.to_vec(),
            None => sigma
                .iter()
                .map(|&i| self.space.norming_vector(&self.tuple[i]))
                .collect(),
        };
        let objective: Vec<f64> = sigma.iter().map(|&i| self.weights[i]).collect();
        for _ in 0..CUT_ROUNDS {
            let mut lp = DenseLp::new(Sense::Maximize, objective.clone());
            for v in &points {
                let row: Vec<f64> = sigma
                    .iter()
                    .map(|&i| crate::spaces::dot(&self.tuple[i], v).abs())
                    .collect();
                lp.add_row(row, Cmp::Le, 1.0);
            }
            // keeps the program bounded before enough cuts exist
            for (j, &i) in sigma.iter().enumerate() {
                let d = self.space.dual_norm_unchecked(&self.tuple[i]);
                if d > 0.0 {
                    lp.set_bounds(j, 0.0, 1.0 / d);
                } else {
                    lp.set_bounds(j, 0.0, 0.0);
                }
            }
            let sol = lp.solve()?;
            let nu: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
            let scaled: Vec<Vec<f64>> = sigma
                .iter()
                .zip(&nu)
                .map(|(&i, &m)| self.tuple[i].iter().map(|v| m * v).collect())
                .collect();
            let sv = self.space.summing_constraint(&scaled, 1.0, self.k_exact)?;
            if sv.value <= 1.0 + 1e-9 || self.space.half_extreme_points().is_some() {
                let s = sv.value.max(1.0);
                let nu: Vec<f64> = nu.iter().map(|v| v / s).collect();
                let val = nu.iter().zip(&objective).map(|(a, b)| a * b).sum();
                return Ok((val, nu));
            }
            points.push(sv.argmax);
        }
        let scaled: Vec<Vec<f64>> = sigma.iter().map(|&i| self.tuple[i].clone()).collect();
        // fall back to the last iterate, rescaled into the feasible set
        let mut lp = DenseLp::new(Sense::Maximize, objective.clone());
        for v in &points {
            let row: Vec<f64> = scaled.iter().map(|x| crate::spaces::dot(x, v).abs()).collect();
            lp.add_row(row, Cmp::Le, 1.0);
        }
        let nu = lp.solve()?.x;
        let tuple: Vec<Vec<f64>> = scaled
            .iter()
            .zip(&nu)
            .map(|(x, &m)| x.iter().map(|v| m * v).collect())
            .collect();
        let s = self.space.summing_constraint(&tuple, 1.0, self.k_exact)?.value.max(1.0);
        let nu: Vec<f64> = nu.iter().map(|v| v.max(0.0) / s).collect();
        let val = nu.iter().zip(&objective).map(|(a, b)| a * b).sum();
        Ok((val, nu))
    }
}

/// Searches for `σ` with `|σ| ≤ target` and scalars `μ` meeting the two
/// sparsification conditions for the largest `C` in `c_grid`.
///
/// Requires `p = 1` and a normalized certificate (constraint 1 within 1e-6).
pub fn sparsify_certificate(
    space: &Space,
    f: &dyn HomFn,
    cert: &Certificate,
    target: usize,
    c_grid: &[f64],
    k_exact: usize,
) -> Result<SparsifiedCertificate> {
    check_dim(space.dim(), f.dim())?;
    if cert.p != 1.0 {
        return Err(Error::Unsupported("sparsification is implemented for p = 1".into()));
    }
    if target == 0 {
        return Err(Error::InvalidArgument("target must be at least 1".into()));
    }
    if (cert.constraint - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "certificate is not normalized (constraint {})",
            cert.constraint
        )));
    }
    if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::InvalidArgument("C grid must be non-empty and positive".into()));
    }
    let a = cert.objective;
    let n_items = cert.tuple.len();
    let weights: Vec<f64> = cert
        .tuple
        .iter()
        .map(|x| if a > 0.0 { f.value(x).abs() / a } else { 0.0 })
        .collect();
    let inst = Instance {
        space,
        tuple: &cert.tuple,
        weights: &weights,
        k_exact,
    };

    let size = target.min(n_items);
    let mut order: Vec<usize> = (0..n_items).collect();
    order.sort_by(|&i, &j| weights[j].total_cmp(&weights[i]).then(i.cmp(&j)));
    let mut sigma: Vec<usize> = order[..size].to_vec();
    sigma.sort_unstable();
    let (mut best, mut nu) = inst.value(&sigma)?;

    for _ in 0..EXCHANGE_PASSES {
        let mut changed = false;
        for pos in 0..sigma.len() {
            for cand in 0..n_items {
                if sigma.contains(&cand) {
                    continue;
                }
                let mut trial = sigma.clone();
                trial[pos] = cand;
                trial.sort_unstable();
                let (v, tnu) = inst.value(&trial)?;
                if v > best * (1.0 + 1e-12) + 1e-15 {
                    best = v;
                    nu = tnu;
                    sigma = trial;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let feasible = c_grid
        .iter()
        .copied()
        .filter(|c| c * c <= best * (1.0 + 1e-12))
        .fold(f64::NEG_INFINITY, f64::max);
    if !feasible.is_finite() {
        return Err(Error::NoFeasibleSparsification { best_c: best.sqrt() });
    }
    let c = feasible;
    let mu: Vec<f64> = nu.iter().map(|v| v / c).collect();
    let achieved_value = sigma
        .iter()
        .zip(&nu)
        .map(|(&i, &v)| v * f.value(&cert.tuple[i]).abs())
        .sum();
    Ok(SparsifiedCertificate {
        sigma,
        mu,
        c,
        best_value: best,
        achieved_value,
        weights,
        parent: cert.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homfun::{parse_expr, LatticeExpr};
    use crate::sampling;

    #[test]
    fn both_conditions_tight_for_join() {
        let s = Space::l1(2).unwrap();
        let f = parse_expr("join(abs(delta [1,0]),abs(delta [0,1]))", None).unwrap();
        let cert = Certificate::evaluate(&s, &f, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0, 16).unwrap();
        let sp = sparsify_certificate(&s, &f, &cert, 2, &default_c_grid(), 16).unwrap();
        assert!((sp.c - 1.0).abs() < 1e-12);
        assert_eq!(sp.sigma, vec![0, 1]);
        let scaled: Vec<Vec<f64>> = sp
            .sigma
            .iter()
            .zip(&sp.mu)
            .map(|(&i, &m)| cert.tuple[i].iter().map(|v| m * v).collect())
            .collect();
        let cons = s.summing_constraint(&scaled, 1.0, 16).unwrap().value;
        assert!((cons - 1.0 / sp.c).abs() < 1e-9);
        let mass: f64 = sp.sigma.iter().zip(&sp.mu).map(|(&i, m)| sp.weights[i] * m).sum();
        assert!((mass - sp.c).abs() < 1e-9);
    }

    #[test]
    fn singleton() {
        let s = Space::l2(2).unwrap();
        let f = LatticeExpr::generator(vec![1.0, 0.0]).abs();
        let tuple = vec![vec![0.9, 0.0], vec![0.0, 0.1], vec![0.0, -0.05]];
        let raw = Certificate::evaluate(&s, &f, tuple, 1.0, 16).unwrap();
        let cert = raw.normalized(&s, &f, 16).unwrap();
        let sp = sparsify_certificate(&s, &f, &cert, 1, &default_c_grid(), 16).unwrap();
        assert_eq!(sp.sigma, vec![0]);
        assert!(sp.c * sp.c <= sp.best_value + 1e-12);
    }

    #[test]
    fn random_split_delta_chain() {
        let s = Space::l2(2).unwrap();
        let x = [0.6, -0.8];
        let f = LatticeExpr::delta(&s, &x).unwrap();
        // 40 positive multiples of the norming functional x/‖x‖, summing to it
        let star: Vec<f64> = x.iter().map(|v| v / s.primal_norm(&x).unwrap()).collect();
        let mut r = sampling::rng(3);
        let w: Vec<f64> = (0..40).map(|_| rand::Rng::random_range(&mut r, 0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        let tuple: Vec<Vec<f64>> = w.iter().map(|t| star.iter().map(|v| v * t / total).collect()).collect();
        // 40 members exceed the sign-enumeration cutoff; the ascent is exact for parallel functionals
        let cert = Certificate::evaluate(&s, &f, tuple, 1.0, 16)
            .unwrap()
            .normalized(&s, &f, 16)
            .unwrap();
        let sp = sparsify_certificate(&s, &f, &cert, 10, &default_c_grid(), 16).unwrap();
        assert!(sp.sigma.len() <= 10);
        let norm = s.primal_norm(&x).unwrap();
        assert!(sp.achieved_value >= sp.c * sp.c * norm - 1e-9);
        assert!(sp.achieved_value <= norm + 1e-9);
    }

    #[test]
    fn infeasible_grid_reports_best() {
        let s = Space::l1(2).unwrap();
        let f = parse_expr("join(abs(delta [1,0]),abs(delta [0,1]))", None).unwrap();
        let cert = Certificate::evaluate(&s, &f, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0, 16).unwrap();
        let err = sparsify_certificate(&s, &f, &cert, 1, &[0.9], 16).unwrap_err();
        match err {
            Error::NoFeasibleSparsification { best_c } => assert!((best_c - 0.5f64.sqrt()).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let s = Space::l1(2).unwrap();
        let f = LatticeExpr::generator(vec![1.0, 0.0]);
        let cert = Certificate::evaluate(&s, &f, vec![vec![2.0, 0.0]], 1.0, 16).unwrap();
        assert!(sparsify_certificate(&s, &f, &cert, 1, &[0.5], 16).is_err());
    }
}
