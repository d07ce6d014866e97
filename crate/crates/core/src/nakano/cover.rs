use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fblnorm::{fbl_norm_k, sampled_lipschitz, Budget, Certificate};
use crate::homfun::HomFn;
use crate::sampling;
use crate::spaces::Space;

const SPHERE_TOL: f64 = 1e-9;
const MAX_INDEXED_DIM: usize = 8;
const SIGN_SAMPLES: usize = 4096;
const LIP_SAMPLES: usize = 512;
const LIP_SAFETY: f64 = 1.5;

fn ramp(d: f64, delta: f64) -> f64 {
    ((2.0 * delta - d) / delta).clamp(0.0, 1.0)
}

/// `x* ↦ ‖x*‖ · M · clamp((2δ − d(x*/‖x*‖, y*)) / δ, 0, 1)`.
#[derive(Clone, Debug)]
pub struct Bump {
    space: Space,
    center: Vec<f64>,
    delta: f64,
    height: f64,
}

impl Bump {
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn height(&self) -> f64 {
        self.height
    }
}

/// A bump of height `M` on the `δ`-cap around `y*`, vanishing off the `2δ`-cap.
pub fn bump(space: &Space, center: &[f64], delta: f64, height: f64) -> Result<Bump> {
    check_dim(space.dim(), center.len())?;
    let norm = space.dual_norm_unchecked(center);
    if (norm - 1.0).abs() > SPHERE_TOL {
        return Err(Error::NotOnSphere { norm });
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {delta} must be positive")));
    }
    if !(height >= 0.0 && height.is_finite()) {
        return Err(Error::InvalidArgument(format!("height {height} must be nonnegative")));
    }
    Ok(Bump {
        space: space.clone(),
        center: center.to_vec(),
        delta,
        height,
    })
}

impl HomFn for Bump {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let nx = self.space.dual_norm_unchecked(x);
        if nx == 0.0 {
            return 0.0;
        }
        let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a / nx - b).collect();
        nx * self.height * ramp(self.space.dual_norm_unchecked(&diff), self.delta)
    }

    fn describe(&self) -> String {
        format!("bump(y={:?}, delta={}, M={})", self.center, self.delta, self.height)
    }
}

/// `g = ⋁_i bump_i` over a `δ`-net, with a grid index of the centers.
#[derive(Clone, Debug)]
pub struct CoverBound {
    space: Space,
    delta: f64,
    centers: Vec<Vec<f64>>,
    heights: Vec<f64>,
    cell: Vec<f64>,
    index: Option<HashMap<Vec<i64>, Vec<usize>>>,
}

impl CoverBound {
    fn new(space: &Space, delta: f64, centers: Vec<Vec<f64>>, heights: Vec<f64>) -> CoverBound {
        let n = space.dim();
        // dual distance < 2δ forces |x_j − y_j| < 2δ ‖e_j‖_E
        let cell: Vec<f64> = space.unit_scales().iter().map(|s| 2.0 * delta * s).collect();
        let index = (n <= MAX_INDEXED_DIM).then(|| {
            let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
            for (i, y) in centers.iter().enumerate() {
                if heights[i] > 0.0 {
                    map.entry(cell_of(y, &cell)).or_default().push(i);
                }
            }
            map
        });
        CoverBound {
            space: space.clone(),
            delta,
            centers,
            heights,
            cell,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    fn sphere_value(&self, u: &[f64]) -> f64 {
        let mut best = 0.0f64;
        let visit = |i: usize| {
            let h = self.heights[i];
            if h <= best {
                return;
            }
            let diff: Vec<f64> = u.iter().zip(&self.centers[i]).map(|(a, b)| a - b).collect();
            let v = h * ramp(self.space.dual_norm_unchecked(&diff), self.delta);
            best = best.max(v);
        };
        self.for_each_candidate(u, visit);
        best
    }

    /// Calls `visit` on every center that may lie within one cell of `u`.
    fn for_each_candidate(&self, u: &[f64], mut visit: impl FnMut(usize)) {
        let Some(map) = &self.index else {
            (0..self.centers.len()).for_each(visit);
            return;
        };
        let n = u.len();
        let base = cell_of(u, &self.cell);
        let mut offset = vec![-1i64; n];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(ids) = map.get(&key) {
                ids.iter().for_each(|&i| visit(i));
            }
            let mut j = 0;
            while j < n {
                offset[j] += 1;
                if offset[j] <= 1 {
                    break;
                }
                offset[j] = -1;
                j += 1;
            }
            if j == n {
                return;
            }
        }
    }
}

fn cell_of(y: &[f64], cell: &[f64]) -> Vec<i64> {
    y.iter().zip(cell).map(|(v, c)| (v / c).floor() as i64).collect()
}

impl HomFn for CoverBound {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let nx = self.space.dual_norm_unchecked(x);
        if nx == 0.0 || self.centers.is_empty() {
            return 0.0;
        }
        let u: Vec<f64> = x.iter().map(|v| v / nx).collect();
        nx * self.sphere_value(&u)
    }

    fn describe(&self) -> String {
        format!("cover bound ({} bumps, delta={})", self.centers.len(), self.delta)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverReport {
    /// Estimate of `‖f‖_{FBL_k}` the radii were chosen from.
    pub f_norm_k: f64,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// Spacing of the net used to estimate the cap suprema.
    pub rho: f64,
    pub lipschitz: f64,
    /// True when the Lipschitz constant came from the expression structure.
    pub lipschitz_rigorous: bool,
    pub bumps: usize,
    /// `‖f‖_k (1 + k(4δ + ρ)) + kLρ`, the guaranteed bound on `‖g‖_{FBL_k}`
    /// when `f_norm_k` and `lipschitz` are exact.
    pub norm_bound: f64,
    pub certificate: Certificate,
}

/// Builds `g ≥ f` with `‖g‖_{FBL_k} ≤ (1 + ε) ‖f‖_{FBL_k}` from bumps over a
/// `δ`-net of the dual sphere (`p = 1`).
///
/// Each height is the maximum of `f` over a `ρ`-net restricted to the
/// `(2δ + ρ)`-cap plus `Lρ`. The radii are
/// `δ = (ε/2) N / (k (4N + 1))` and `ρ = (ε/2) N / (k (N + L))`, `N ≈ ‖f‖_k`.
pub fn cover_upper_bound(
    space: &Space,
    f: &dyn HomFn,
    k: usize,
    eps: f64,
    budget: &Budget,
) -> Result<(CoverBound, CoverReport)> {
    check_dim(space.dim(), f.dim())?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be positive")));
    }
    let sample = sampling::validation_sample(space, SIGN_SAMPLES, budget.seed);
    let mut min = f64::INFINITY;
    for x in &sample {
        let v = f.value(x);
        if !v.is_finite() {
            return Err(Error::Unbounded);
        }
        min = min.min(v);
    }
    if min < -1e-12 {
        return Err(Error::Negative { value: min });
    }

    let cert = fbl_norm_k(space, f, 1.0, k, budget)?;
    let nk = cert.value;
    let (lipschitz, rigorous) = match f.lipschitz_bound(space) {
        Some(l) => (l, true),
        None => (
            LIP_SAFETY * sampled_lipschitz(space, f, LIP_SAMPLES, budget.seed),
            false,
        ),
    };
    if nk == 0.0 {
        let g = CoverBound::new(space, 1.0, Vec::new(), Vec::new());
        let report = CoverReport {
            f_norm_k: 0.0,
            k,
            eps,
            delta: 0.0,
            rho: 0.0,
            lipschitz,
            lipschitz_rigorous: rigorous,
            bumps: 0,
            norm_bound: 0.0,
            certificate: cert,
        };
        return Ok((g, report));
    }
    let kf = k as f64;
    let delta = 0.5 * eps * nk / (kf * (4.0 * nk + 1.0));
    let rho = 0.5 * eps * nk / (kf * (nk + lipschitz));

    let centers = space.sphere_net(delta)?;
    let fine = space.sphere_net(rho)?;
    let fine_vals: Vec<f64> = fine.iter().map(|z| f.value(z)).collect();
    let reach = 2.0 * delta + rho;
    let heights: Vec<f64> = {
        let probe = CoverBound::new(space, 0.5 * reach, fine.clone(), vec![1.0; fine.len()]);
        centers
            .par_iter()
            .map(|y| {
                let m = probe.points_within(y, reach)
                    .into_iter()
                    .map(|j| fine_vals[j])
                    .fold(0.0f64, f64::max);
                m + lipschitz * rho
            })
            .collect()
    };
    let norm_bound = nk * (1.0 + kf * (4.0 * delta + rho)) + kf * lipschitz * rho;
    let g = CoverBound::new(space, delta, centers, heights);
    let report = CoverReport {
        f_norm_k: nk,
        k,
        eps,
        delta,
        rho,
        lipschitz,
        lipschitz_rigorous: rigorous,
        bumps: g.len(),
        norm_bound,
        certificate: cert,
    };
    Ok((g, report))
}

impl CoverBound {
    /// Indices of centers within dual distance `r ≤ 2δ` of `u`.
    fn points_within(&self, u: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut check = |i: usize| {
            if self.space.dual_distance(u, &self.centers[i]) <= r {
                out.push(i);
            }
        };
        self.for_each_candidate(u, |i| check(i));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homfun::{parse_expr, LatticeExpr};

    #[test]
    fn bump_examples() {
        let s = Space::l2(2).unwrap();
        let b = bump(&s, &[1.0, 0.0], 0.2, 3.0).unwrap();
        assert_eq!(b.value(&[1.0, 0.0]), 3.0);
        assert_eq!(b.value(&[2.0, 0.0]), 6.0);
        // points on the sphere at chord distance d from (1, 0)
        let at = |d: f64| {
            let t = 2.0 * (d / 2.0).asin();
            [t.cos(), t.sin()]
        };
        assert!(b.value(&at(0.4)).abs() < 1e-12);
        assert!((b.value(&at(0.3)) - 1.5).abs() < 1e-9);
        assert_eq!(b.value(&[0.0, 0.0]), 0.0);
        assert!(matches!(bump(&s, &[2.0, 0.0], 0.2, 1.0), Err(Error::NotOnSphere { .. })));
    }

    #[test]
    fn index_matches_brute_force() {
        let s = Space::l1(2).unwrap();
        let delta = 0.05;
        let net = s.sphere_net(delta).unwrap();
        let heights: Vec<f64> = (0..net.len()).map(|i| 1.0 + (i % 7) as f64).collect();
        let g = CoverBound::new(&s, delta, net.clone(), heights.clone());
        let mut brute = g.clone();
        brute.index = None;
        for x in sampling::dual_sphere_points(&s, 500, 3) {
            assert_eq!(g.value(&x), brute.value(&x));
        }
    }

    #[test]
    fn zero_function() {
        let s = Space::l2(2).unwrap();
        let f = LatticeExpr::zero(2);
        let (g, rep) = cover_upper_bound(&s, &f, 2, 0.1, &Budget::default().with_starts(4)).unwrap();
        assert!(g.is_empty());
        assert_eq!(rep.f_norm_k, 0.0);
        assert_eq!(g.value(&[0.3, 0.4]), 0.0);
    }

    #[test]
    fn negative_rejected() {
        let s = Space::l2(2).unwrap();
        let f = LatticeExpr::generator(vec![1.0, 0.0]);
        assert!(matches!(
            cover_upper_bound(&s, &f, 1, 0.1, &Budget::default()),
            Err(Error::Negative { .. })
        ));
    }

    #[test]
    fn dominates_and_bounded() {
        let s = Space::l2(2).unwrap();
        let f = parse_expr("abs(delta [1,0])", None).unwrap();
        let budget = Budget::default().with_starts(8);
        let (g, rep) = cover_upper_bound(&s, &f, 2, 0.1, &budget).unwrap();
        assert!(rep.lipschitz_rigorous);
        assert!(rep.norm_bound <= 1.1 * rep.f_norm_k + 1e-12);
        for x in sampling::dual_sphere_points(&s, 2000, 5) {
            assert!(g.value(&x) >= f.value(&x));
        }
        let gn = fbl_norm_k(&s, &g, 1.0, 2, &budget).unwrap();
        assert!(gn.value <= 1.1 * rep.f_norm_k + 1e-6, "{}", gn.value);
    }
}
