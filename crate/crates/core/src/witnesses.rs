//! Finite dyadic and summing-basis witnesses for `L_1[0,1]` and `c_0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::homfun::{DirectedFamily, HomFn, LatticeExpr};
use crate::spaces::Space;

pub const MAX_LEVEL: u32 = 8;

/// Level-`m` step functions on `[0,1]` as weighted `ℓ_1^{2^m}`, weights `2^{-m}`.
///
/// A functional `ψ ∈ L_∞` that is constant on the blocks acts through the
/// dual coordinates `x*_i = 2^{-m} ψ_i`.
#[derive(Clone, Debug)]
pub struct DyadicModel {
    level: u32,
    space: Space,
}

impl DyadicModel {
    pub fn new(level: u32) -> Result<DyadicModel> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::InvalidArgument(format!(
                "dyadic level {level} outside 1..={MAX_LEVEL}"
            )));
        }
        let n = 1usize << level;
        let space = Space::weighted_l1(vec![(n as f64).recip(); n])?;
        Ok(DyadicModel { level, space })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        1 << self.level
    }

    /// Indicator of `I_{n,j} = [(j−1)/2^n, j/2^n]`, `1 ≤ j ≤ 2^n`.
    pub fn generator(&self, n: u32, j: usize) -> Result<Vec<f64>> {
        if n > self.level || j == 0 || j > 1 << n {
            return Err(Error::InvalidArgument(format!("no dyadic block ({n}, {j})")));
        }
        let width = 1usize << (self.level - n);
        let mut y = vec![0.0; self.dim()];
        y[(j - 1) * width..j * width].fill(1.0);
        Ok(y)
    }

    /// `f_n = Σ_j |δ_{y_{n,j}}|`.
    pub fn f(&self, n: u32) -> Result<LatticeExpr> {
        let terms: Vec<LatticeExpr> = (1..=1usize << n)
            .map(|j| Ok(LatticeExpr::generator(self.generator(n, j)?).abs()))
            .collect::<Result<_>>()?;
        Ok(LatticeExpr::sum_all(&terms).expect("at least one block"))
    }

    /// Dual coordinates of the step functional `ψ`.
    pub fn functional(&self, psi: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim(self.dim(), psi.len())?;
        let w = (self.dim() as f64).recip();
        Ok(psi.iter().map(|v| v * w).collect())
    }
}

/// The model and the increasing family `f_1 ≤ … ≤ f_m`.
pub fn l1_dyadic_family(m: u32) -> Result<(DyadicModel, DirectedFamily, Vec<LatticeExpr>)> {
    let model = DyadicModel::new(m)?;
    let exprs: Vec<LatticeExpr> = (1..=m).map(|n| model.f(n)).collect::<Result<_>>()?;
    let family = DirectedFamily::new(
        model.space(),
        exprs.iter().cloned().map(LatticeExpr::into_fn).collect(),
    )?;
    Ok((model, family, exprs))
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitCheck {
    pub level: u32,
    /// `f_n(x*)`.
    pub lhs: f64,
    /// `‖ψ‖_{L_1}`, the integral of the step function `|ψ|`.
    pub rhs: f64,
    pub equal: bool,
    /// `f_0(x*), …, f_n(x*)`.
    pub chain: Vec<f64>,
    pub nondecreasing: bool,
}

/// Checks `f_n(x*) = ‖ψ‖_{L_1}` for a step functional `ψ` constant on the
/// level-`n` blocks, and that `f_0(x*) ≤ … ≤ f_n(x*)`.
pub fn l1_limit_check(model: &DyadicModel, psi: &[f64], n: u32) -> Result<LimitCheck> {
    let x = model.functional(psi)?;
    if n > model.level() {
        return Err(Error::InvalidArgument(format!(
            "level {n} above the model level {}",
            model.level()
        )));
    }
    let width = 1usize << (model.level() - n);
    for block in psi.chunks(width) {
        if block.iter().any(|v| *v != block[0]) {
            return Err(Error::NotBlockConstant { level: n as usize });
        }
    }
    let chain: Vec<f64> = (0..=n)
        .map(|j| Ok(model.f(j)?.value(&x)))
        .collect::<Result<_>>()?;
    let lhs = *chain.last().expect("n + 1 entries");
    let rhs = psi.iter().map(|v| v.abs()).sum::<f64>() / model.dim() as f64;
    Ok(LimitCheck {
        level: n,
        lhs,
        rhs,
        equal: lhs == rhs,
        nondecreasing: chain.windows(2).all(|w| w[0] <= w[1]),
        chain,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct C0Demo {
    pub n: usize,
    pub least_upper_bound: Vec<f64>,
    pub bound_norm: f64,
    pub member_norms: Vec<f64>,
    pub sup_member_norm: f64,
    /// `t(j) = max_{i ≥ j} |u_i|` for the least upper bound `u`.
    pub tail_profile: Vec<f64>,
    pub dominates: bool,
    pub minimal: bool,
    pub note: String,
}

/// Summing vectors `s_n = e_1 + … + e_n` in `(R^N, ‖·‖_∞)` and their
/// coordinatewise least upper bound.
pub fn c0_summing_demo(n: usize) -> Result<C0Demo> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let members: Vec<Vec<f64>> = (1..=n)
        .map(|k| (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect())
        .collect();
    let sup_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lub: Vec<f64> = (0..n)
        .map(|i| members.iter().map(|s| s[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let member_norms: Vec<f64> = members.iter().map(|s| sup_norm(s)).collect();
    let mut tail_profile = vec![0.0; n];
    let mut running = 0.0f64;
    for i in (0..n).rev() {
        running = running.max(lub[i].abs());
        tail_profile[i] = running;
    }
    let dominates = members.iter().all(|s| s.iter().zip(&lub).all(|(a, b)| a <= b));
    // every coordinate of the bound is attained by some member
    let minimal = (0..n).all(|i| members.iter().any(|s| s[i] == lub[i]));
    Ok(C0Demo {
        n,
        bound_norm: sup_norm(&lub),
        sup_member_norm: member_norms.iter().copied().fold(0.0, f64::max),
        least_upper_bound: lub,
        member_norms,
        tail_profile,
        dominates,
        minimal,
        note: "finite diagnostic: the tail of the bound does not decay, so the \
               family has no upper bound in c0 as N grows"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fblnorm::{fbl_norm_k, Budget, Certificate};
    use crate::sampling;

    #[test]
    fn generator_norms() {
        let model = DyadicModel::new(3).unwrap();
        for n in 0..=3 {
            let total: f64 = (1..=1usize << n)
                .map(|j| model.space().primal_norm(&model.generator(n, j).unwrap()).unwrap())
                .sum();
            assert_eq!(total, 1.0);
            let y = model.generator(n, 1).unwrap();
            assert_eq!(model.space().primal_norm(&y).unwrap(), 0.5f64.powi(n as i32));
        }
        assert!(model.generator(2, 5).is_err());
        assert!(DyadicModel::new(0).is_err());
        assert!(DyadicModel::new(9).is_err());
    }

    #[test]
    fn level_one_witness() {
        let (model, family, _) = l1_dyadic_family(1).unwrap();
        let x = vec![0.5, 0.5];
        assert_eq!(model.space().dual_norm(&x).unwrap(), 1.0);
        let cert = Certificate::evaluate(
            model.space(),
            family.members()[0].as_ref(),
            vec![x],
            1.0,
            16,
        )
        .unwrap();
        assert!((cert.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn family_increasing() {
        let (model, family, _) = l1_dyadic_family(3).unwrap();
        for x in sampling::dual_sphere_points(model.space(), 100, 3) {
            let v: Vec<f64> = family.members().iter().map(|f| f.value(&x)).collect();
            assert!(v.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        }
    }

    #[test]
    fn norms_near_one() {
        let (model, family, _) = l1_dyadic_family(3).unwrap();
        let budget = Budget::default().with_starts(8);
        for f in family.members() {
            let c = fbl_norm_k(model.space(), f.as_ref(), 1.0, 2, &budget).unwrap();
            assert!(c.value <= 1.0 + 1e-9 && c.value >= 0.995, "{}", c.value);
        }
    }

    #[test]
    fn limit_identity_examples() {
        let model = DyadicModel::new(3).unwrap();
        let ones = vec![1.0; 8];
        for n in 0..=3 {
            let r = l1_limit_check(&model, &ones, n).unwrap();
            assert!(r.equal && r.lhs == 1.0);
        }
        let rad = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        let r = l1_limit_check(&model, &rad, 1).unwrap();
        assert_eq!(r.chain, vec![0.0, 1.0]);
        assert!(r.equal && r.nondecreasing);
        let r = l1_limit_check(&model, &[0.0; 8], 2).unwrap();
        assert!(r.equal && r.lhs == 0.0);
        assert!(matches!(
            l1_limit_check(&model, &rad, 0),
            Err(Error::NotBlockConstant { level: 0 })
        ));
    }

    #[test]
    fn c0_examples() {
        let d = c0_summing_demo(3).unwrap();
        assert_eq!(d.least_upper_bound, vec![1.0; 3]);
        assert_eq!(d.tail_profile, vec![1.0; 3]);
        assert_eq!(d.bound_norm, 1.0);
        assert!(d.dominates && d.minimal);
        let d = c0_summing_demo(1).unwrap();
        assert_eq!(d.tail_profile, vec![1.0]);
        assert!(c0_summing_demo(0).is_err());
    }
}
