use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_exponent, p_sum, ratio};
use crate::error::{check_dim, Error, Result};
use crate::homfun::HomFn;
use crate::sampling;
use crate::spaces::Space;

/// Default cap on the number of tuples the oracle may enumerate.
pub const DEFAULT_ORACLE_BUDGET: usize = 50_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub tuple: Vec<Vec<f64>>,
    pub net_size: usize,
    pub tuples: usize,
}

/// Brute-force lower bound of `‖f‖_{FBL^{(p)}_k}` over tuples built from the
/// `η`-net of the dual sphere.
///
/// The first member ranges over the net; the remaining members range over
/// net points times scales `{0, η/4, …, 1}`. Since the ratio is scale-free,
/// this covers every tuple whose largest member has been rescaled to norm 1.
pub fn oracle_norm_net(
    space: &Space,
    f: &dyn HomFn,
    p: f64,
    k: usize,
    eta: f64,
    max_tuples: usize,
) -> Result<OracleResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_exponent(p)?;
    check_dim(space.dim(), f.dim())?;
    let net = space.sphere_net(eta)?;
    let n = space.dim();
    let steps = (4.0 / eta).ceil() as usize;
    let scales: Vec<f64> = (0..=steps).map(|j| j as f64 / steps as f64).collect();
    let per_member = net.len().saturating_mul(scales.len());
    let total = (1..k).try_fold(net.len(), |acc, _| acc.checked_mul(per_member));
    let total = match total {
        Some(t) if t <= max_tuples => t,
        _ => {
            return Err(Error::BudgetExceeded {
                size: total.unwrap_or(usize::MAX),
                budget: max_tuples,
            })
        }
    };
    let fvals: Vec<f64> = net.iter().map(|y| f.value(y)).collect();
    if fvals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Unbounded);
    }
    let rest = (k - 1) as u32;
    let inner_count = per_member.pow(rest);

    let best = (0..net.len())
        .into_par_iter()
        .map(|first| {
            let mut flat = vec![0.0; k * n];
            let mut vals = vec![0.0; k];
            flat[..n].copy_from_slice(&net[first]);
            vals[0] = fvals[first];
            let mut best = (f64::NEG_INFINITY, 0usize);
            for code in 0..inner_count {
                let mut c = code;
                for m in 1..k {
                    let choice = c % per_member;
                    c /= per_member;
                    let (y, t) = (choice / scales.len(), scales[choice % scales.len()]);
                    for (dst, src) in flat[m * n..(m + 1) * n].iter_mut().zip(&net[y]) {
                        *dst = t * src;
                    }
                    vals[m] = t * fvals[y];
                }
                let objective = p_sum(vals.iter().copied(), p);
                let r = if objective == 0.0 {
                    0.0
                } else {
                    let cons = space.summing_flat(&flat, k, p, usize::MAX, false).value;
                    ratio(objective, cons, p)
                };
                if r > best.0 {
                    best = (r, code);
                }
            }
            (best.0, first, best.1)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, 0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });

    let (value, first, code) = best;
    let mut tuple = vec![net[first].clone()];
    let mut c = code;
    for _ in 1..k {
        let choice = c % per_member;
        c /= per_member;
        let t = scales[choice % scales.len()];
        tuple.push(net[choice / scales.len()].iter().map(|v| t * v).collect());
    }
    Ok(OracleResult {
        value: value.max(0.0),
        tuple,
        net_size: net.len(),
        tuples: total,
    })
}

/// Largest difference quotient `|f(x*) − f(y*)| / ‖x* − y*‖_{E*}` over seeded
/// pairs of dual-sphere points, both nearby and far apart.
pub fn sampled_lipschitz(space: &Space, f: &dyn HomFn, samples: usize, seed: u64) -> f64 {
    let pts = sampling::validation_sample(space, samples, seed);
    let mut r = sampling::rng_for(seed, 7);
    let mut best = 0.0f64;
    for (i, x) in pts.iter().enumerate() {
        let fx = f.value(x);
        for radius in [0.3, 0.03, 0.003] {
            let d = sampling::dual_sphere_point(space, &mut r);
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + radius * b).collect();
            let q = (f.value(&y) - fx).abs() / space.dual_distance(x, &y);
            best = best.max(q);
        }
        let z = &pts[(i * 7 + 3) % pts.len()];
        let dist = space.dual_distance(x, z);
        if dist > 0.0 {
            best = best.max((f.value(z) - fx).abs() / dist);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homfun::{from_fn, parse_expr, LatticeExpr};

    #[test]
    fn join_matches_two() {
        let s = Space::l1(2).unwrap();
        let f = parse_expr("join(abs(delta [1,0]),abs(delta [0,1]))", None).unwrap();
        let o = oracle_norm_net(&s, &f, 1.0, 2, 0.05, DEFAULT_ORACLE_BUDGET).unwrap();
        assert!((o.value - 2.0).abs() <= 2.0 * 0.05 * 1.0, "{}", o.value);
    }

    #[test]
    fn one_dimensional() {
        let s = Space::l2(1).unwrap();
        let f = from_fn(1, "|t|", |x| x[0].abs());
        for k in 1..=3 {
            let o = oracle_norm_net(&s, f.as_ref(), 1.0, k, 0.05, DEFAULT_ORACLE_BUDGET).unwrap();
            assert!((o.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_on_l2() {
        let s = Space::l2(2).unwrap();
        let f = LatticeExpr::generator(vec![1.0, 0.0]);
        let o = oracle_norm_net(&s, &f, 1.0, 1, 0.05, DEFAULT_ORACLE_BUDGET).unwrap();
        assert!((o.value - 1.0).abs() <= 0.05);
        assert!(o.value <= 1.0 + 1e-12);
    }

    #[test]
    fn budget_enforced() {
        let s = Space::l2(3).unwrap();
        let f = LatticeExpr::generator(vec![1.0, 0.0, 0.0]);
        let err = oracle_norm_net(&s, &f, 1.0, 3, 0.05, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 1000, .. }));
    }

    #[test]
    fn lipschitz_of_delta() {
        let s = Space::l2(2).unwrap();
        let f = LatticeExpr::generator(vec![3.0, 4.0]);
        let l = sampled_lipschitz(&s, &f, 200, 1);
        assert!(l <= 5.0 + 1e-9);
        assert!(l > 4.0);
    }
}
