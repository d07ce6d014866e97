use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gphi::PhiVector;
use crate::error::{check_dim, Error, Result};
use crate::homfun::HomFn;
use crate::lp::{Cmp, DenseLp, Sense};
use crate::sampling;
use crate::spaces::Space;

/// Default number of seeded constraint directions.
pub const DEFAULT_SAMPLES: usize = 4096;
const MAX_ROUNDS: usize = 20;
const CUTS_PER_ROUND: usize = 64;
const DENSE_CHECK: usize = 20_000;
const REFINE_POINTS: usize = 16;
const FACE_GRID: usize = 16;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MajorantReport {
    pub phi: Vec<f64>,
    /// `Σ_a φ_a`, the norm of `g_φ` raised to the power `p`.
    pub sum: f64,
    pub p: f64,
    pub constraints: usize,
    pub rounds: usize,
    /// Largest `h / g_φ − 1` found before the final inflation.
    pub max_violation: f64,
    /// Factor applied to `g_φ` so that it dominates `h` on every point checked.
    pub inflation: f64,
    /// Whether `h(x*) ≤ h(y*)` held for sampled `|x*| ≤ |y*|`.
    pub monotone_on_samples: bool,
}

/// Cube-surface parametrization `u = w ∘ v`, `max |v_a| = 1`.
struct Problem<'a> {
    h: &'a dyn HomFn,
    weights: Vec<f64>,
    p: f64,
}

impl Problem<'_> {
    fn target(&self, v: &[f64]) -> Result<f64> {
        let u: Vec<f64> = v.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        let t = self.h.value(&u);
        if !t.is_finite() {
            return Err(Error::Unbounded);
        }
        if t < -1e-12 {
            return Err(Error::Negative { value: t });
        }
        Ok(t.max(0.0).powf(self.p))
    }

    fn row(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|a| a.abs().powf(self.p)).collect()
    }

    /// `(h / g_φ)^p` at `v`; infinite where `g_φ` vanishes but `h` does not.
    fn excess(&self, phi: &[f64], v: &[f64]) -> Result<f64> {
        let t = self.target(v)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let g: f64 = self.row(v).iter().zip(phi).map(|(a, b)| a * b).sum();
        Ok(if g > 0.0 { t / g } else { f64::INFINITY })
    }

    /// Local pattern search on the face containing `v` for the worst excess.
    fn refine(&self, phi: &[f64], v: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = v.len();
        let face = (0..n)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .expect("non-empty");
        let mut x = v.to_vec();
        let mut best = self.excess(phi, &x)?;
        let mut step = 0.05;
        while step > 1e-7 {
            let mut moved = false;
            for j in (0..n).filter(|&j| j != face) {
                for dir in [1.0, -1.0] {
                    let old = x[j];
                    x[j] = (old + dir * step).clamp(-1.0, 1.0);
                    let e = self.excess(phi, &x)?;
                    if e > best {
                        best = e;
                        moved = true;
                        break;
                    }
                    x[j] = old;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        Ok((x, best))
    }
}

fn cube_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let face = rng.random_range(0..n);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    (0..n)
        .map(|j| if j == face { sign } else { rng.random_range(-1.0..=1.0) })
        .collect()
}

fn structured_points(n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            pts.push(e);
        }
    }
    if n <= 12 {
        for mask in 0..1usize << n {
            pts.push((0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect());
        }
    }
    if n <= 3 {
        let grid: Vec<f64> = (0..=FACE_GRID)
            .map(|j| -1.0 + 2.0 * j as f64 / FACE_GRID as f64)
            .collect();
        for face in 0..n {
            for s in [1.0, -1.0] {
                let others: Vec<usize> = (0..n).filter(|&j| j != face).collect();
                let count = grid.len().pow(others.len() as u32);
                for code in 0..count {
                    let mut v = vec![0.0; n];
                    v[face] = s;
                    let mut c = code;
                    for &j in &others {
                        v[j] = grid[c % grid.len()];
                        c /= grid.len();
                    }
                    pts.push(v);
                }
            }
        }
    }
    pts
}

fn solve(problem: &Problem, rows: &[(Vec<f64>, f64)], n: usize) -> Result<Vec<f64>> {
    let mut lp = DenseLp::new(Sense::Minimize, vec![1.0; n]);
    for (r, t) in rows {
        if *t > 0.0 {
            lp.add_row(r.clone(), Cmp::Ge, *t);
        }
    }
    let _ = problem;
    let sol = lp.solve().map_err(|e| match e {
        Error::LpInfeasible { .. } => Error::LpInfeasible { violations: rows.len() },
        other => other,
    })?;
    Ok(sol.x.into_iter().map(|v| v.max(0.0)).collect())
}

/// Smallest `φ ≥ 0` (by `Σ φ_a`) found with `g_φ ≥ h` on the dual sphere of
/// `ℓ_1^n` or weighted `ℓ_1`, via a cutting-plane LP over seeded directions.
///
/// After the LP rounds, `g_φ` is inflated by the largest remaining ratio
/// `h / g_φ` over every point examined, so `g_φ ≥ h` holds on all of them.
pub fn maximal_majorant(
    space: &Space,
    h: &dyn HomFn,
    p: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<(PhiVector, MajorantReport)> {
    check_dim(space.dim(), h.dim())?;
    let weights = space.l1_weights().ok_or_else(|| {
        Error::Unsupported(format!("maximal majorants need an ℓ1-type space, got {space}"))
    })?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent {p} must be finite and ≥ 1")));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
    }
    let n = space.dim();
    let problem = Problem { h, weights, p };
    let mut rng = sampling::rng_for(seed, 31);

    let mut pool = structured_points(n);
    pool.extend((0..samples).map(|_| cube_point(&mut rng, n)));
    let targets: Vec<f64> = pool.iter().map(|v| problem.target(v)).collect::<Result<_>>()?;

    let monotone_on_samples = {
        let mut ok = true;
        for (v, t) in pool.iter().zip(&targets).take(512) {
            let shrunk: Vec<f64> = v.iter().map(|a| a * rng.random_range(0.0..=1.0)).collect();
            if problem.target(&shrunk)?.powf(1.0 / p) > t.powf(1.0 / p) + 1e-12 {
                ok = false;
                break;
            }
        }
        ok
    };

    if targets.iter().all(|t| *t == 0.0) {
        let phi = vec![0.0; n];
        let report = MajorantReport {
            phi: phi.clone(),
            sum: 0.0,
            p,
            constraints: 0,
            rounds: 0,
            max_violation: 0.0,
            inflation: 1.0,
            monotone_on_samples,
        };
        return Ok((PhiVector::finite(phi, p)?, report));
    }

    let structured = structured_points(n).len().min(2 * n + (1 << n.min(12)));
    let mut rows: Vec<(Vec<f64>, f64)> = pool[..structured]
        .iter()
        .zip(&targets)
        .map(|(v, t)| (problem.row(v), *t))
        .collect();
    let mut phi = solve(&problem, &rows, n)?;
    let mut rounds = 0;
    let mut examined: Vec<Vec<f64>> = pool.clone();
    let dense: Vec<Vec<f64>> = {
        let mut r = sampling::rng_for(seed, 32);
        (0..DENSE_CHECK).map(|_| cube_point(&mut r, n)).collect()
    };

    while rounds < MAX_ROUNDS {
        rounds += 1;
        let mut scored: Vec<(f64, usize)> = pool
            .iter()
            .enumerate()
            .map(|(i, v)| Ok((problem.excess(&phi, v)?, i)))
            .collect::<Result<_>>()?;
        scored.retain(|(e, _)| *e > 1.0 + tol);
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut added = 0;
        for &(_, i) in scored.iter().take(CUTS_PER_ROUND) {
            rows.push((problem.row(&pool[i]), targets[i]));
            added += 1;
        }
        // worst points of an independent dense set, refined locally
        let mut dense_scored: Vec<(f64, usize)> = dense
            .iter()
            .enumerate()
            .map(|(i, v)| Ok((problem.excess(&phi, v)?, i)))
            .collect::<Result<_>>()?;
        dense_scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(e, i) in dense_scored.iter().take(REFINE_POINTS) {
            if e <= 1.0 + tol && added > 0 {
                break;
            }
            let (v, ev) = problem.refine(&phi, &dense[i])?;
            if ev > 1.0 + tol {
                let t = problem.target(&v)?;
                rows.push((problem.row(&v), t));
                pool.push(v.clone());
                examined.push(v);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
        phi = solve(&problem, &rows, n)?;
    }
    examined.extend(dense);

    let mut worst = 0.0f64;
    for v in &examined {
        worst = worst.max(problem.excess(&phi, v)?);
    }
    if !worst.is_finite() {
        return Err(Error::LpInfeasible { violations: 1 });
    }
    let inflation = worst.max(1.0);
    let max_violation = worst.powf(1.0 / p) - 1.0;
    phi.iter_mut().for_each(|v| *v *= inflation);
    let sum = phi.iter().sum();
    let report = MajorantReport {
        phi: phi.clone(),
        sum,
        p,
        constraints: rows.len(),
        rounds,
        max_violation: max_violation.max(0.0),
        inflation: inflation.powf(1.0 / p),
        monotone_on_samples,
    };
    Ok((PhiVector::finite(phi, p)?, report))
}
