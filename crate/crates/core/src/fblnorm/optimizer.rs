use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_exponent, p_sum, ratio, Budget, Certificate};
use crate::error::{check_dim, Error, Result};
use crate::homfun::HomFn;
use crate::lp::{Cmp, DenseLp, Sense};
use crate::sampling::{self, SeededRng};
use crate::spaces::Space;

const INITIAL_STEP: f64 = 0.25;
const START_SAMPLE: usize = 256;
const LP_SEED_PER_DIM: usize = 500;
const LP_SEED_MAX: usize = 4000;
const LP_SEED_MAX_EXTREME: usize = 256;

struct Search<'a> {
    space: &'a Space,
    f: &'a dyn HomFn,
    p: f64,
    k: usize,
    n: usize,
    k_exact: usize,
    scales: Vec<f64>,
}

impl Search<'_> {
    fn ratio(&self, flat: &[f64], fvals: &[f64]) -> f64 {
        let objective = p_sum(fvals.iter().copied(), self.p);
        if objective == 0.0 {
            return 0.0;
        }
        let c = self
            .space
            .summing_flat(flat, self.k, self.p, self.k_exact, false)
            .value;
        ratio(objective, c, self.p)
    }

    fn row_value(&self, flat: &[f64], i: usize) -> Result<f64> {
        let v = self.f.value(&flat[i * self.n..(i + 1) * self.n]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Unbounded)
        }
    }

    fn all_values(&self, flat: &[f64]) -> Result<Vec<f64>> {
        (0..self.k).map(|i| self.row_value(flat, i)).collect()
    }

    fn normalize(&self, flat: &mut [f64], fvals: &mut [f64]) {
        let m = flat
            .chunks_exact(self.n)
            .map(|row| self.space.dual_norm_unchecked(row))
            .fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            flat.iter_mut().for_each(|v| *v /= m);
            fvals.iter_mut().for_each(|v| *v /= m);
        }
    }

    /// Coordinate pattern search with random-direction polling, maximizing the ratio.
    fn run(&self, mut flat: Vec<f64>, budget: &Budget, rng: &mut SeededRng) -> Result<(f64, Vec<f64>)> {
        let (k, n) = (self.k, self.n);
        let mut fvals = self.all_values(&flat)?;
        let mut r = self.ratio(&flat, &fvals);
        let mut step = INITIAL_STEP;
        let better = |nr: f64, r: f64| nr > r + 1e-14 * r.max(f64::MIN_POSITIVE);
        for _ in 0..budget.iters {
            if step < budget.min_step {
                break;
            }
            self.normalize(&mut flat, &mut fvals);
            r = self.ratio(&flat, &fvals);
            let mut improved = false;
            for i in 0..k {
                for j in 0..n {
                    let idx = i * n + j;
                    let old = flat[idx];
                    let old_f = fvals[i];
                    for dir in [1.0, -1.0] {
                        flat[idx] = old + dir * step * self.scales[j];
                        fvals[i] = self.row_value(&flat, i)?;
                        let nr = self.ratio(&flat, &fvals);
                        if better(nr, r) {
                            r = nr;
                            improved = true;
                            break;
                        }
                        flat[idx] = old;
                        fvals[i] = old_f;
                    }
                }
            }
            if !improved {
                let mut trial = flat.clone();
                for _ in 0..2 * k * n {
                    let d = sampling::gaussian_vec(rng, k * n);
                    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    for (idx, (t, (x, dv))) in trial.iter_mut().zip(flat.iter().zip(&d)).enumerate() {
                        *t = x + step * self.scales[idx % n] * dv / dmax;
                    }
                    let tv = self.all_values(&trial)?;
                    let nr = self.ratio(&trial, &tv);
                    if better(nr, r) {
                        r = nr;
                        flat.copy_from_slice(&trial);
                        fvals = tv;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((r, flat))
    }
}

fn pad_warm(warm: &Certificate, f: &dyn HomFn, k: usize, n: usize) -> Option<Vec<f64>> {
    if warm.tuple.iter().any(|x| x.len() != n) || warm.tuple.is_empty() {
        return None;
    }
    let mut rows: Vec<&Vec<f64>> = warm.tuple.iter().collect();
    if rows.len() > k {
        // keep the k rows with the largest |f|, lowest index first on ties
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| f.value(rows[b]).abs().total_cmp(&f.value(rows[a]).abs()).then(a.cmp(&b)));
        order.truncate(k);
        order.sort_unstable();
        rows = order.into_iter().map(|i| &warm.tuple[i]).collect();
    }
    let mut flat: Vec<f64> = rows.into_iter().flatten().copied().collect();
    flat.resize(k * n, 0.0);
    Some(flat)
}

/// For a polytope ball, `max Σ_v μ_v |f(v)|^p` subject to
/// `Σ_v μ_v |⟨v, e⟩|^p ≤ 1` at every extreme point `e`, over sampled sphere
/// points `v`. A basic solution uses at most one point per extreme pair; the
/// `k` heaviest give the tuple `μ_v^{1/p} v`.
fn lp_seed(space: &Space, f: &dyn HomFn, p: f64, k: usize, budget: &Budget) -> Option<Vec<f64>> {
    let ext = space.half_extreme_points()?;
    if ext.len() > LP_SEED_MAX_EXTREME {
        return None;
    }
    let n = space.dim();
    let mut pts = sampling::validation_sample(space, (LP_SEED_PER_DIM * n).min(LP_SEED_MAX), budget.seed ^ 0x1b);
    if n <= 10 {
        for mask in 0..1usize << n {
            let v: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let d = space.dual_norm_unchecked(&v);
            pts.push(v.into_iter().map(|x| x / d).collect());
        }
    }
    let t: Vec<f64> = pts.iter().map(|v| f.value(v).abs().powf(p)).collect();
    if t.iter().any(|x| !x.is_finite()) || t.iter().all(|x| *x == 0.0) {
        return None;
    }
    let mut lp = DenseLp::new(Sense::Maximize, t.clone());
    for e in ext {
        let row: Vec<f64> = pts
            .iter()
            .map(|v| crate::spaces::dot(v, e).abs().powf(p))
            .collect();
        lp.add_row(row, Cmp::Le, 1.0);
    }
    let sol = lp.solve().ok()?;
    let mut support: Vec<usize> = (0..pts.len()).filter(|&i| sol.x[i] > 1e-12).collect();
    support.sort_by(|&a, &b| (sol.x[b] * t[b]).total_cmp(&(sol.x[a] * t[a])).then(a.cmp(&b)));
    support.truncate(k);
    if support.is_empty() {
        return None;
    }
    let mut flat: Vec<f64> = support
        .iter()
        .flat_map(|&i| {
            let c = sol.x[i].powf(1.0 / p);
            pts[i].iter().map(move |x| c * x)
        })
        .collect();
    flat.resize(k * n, 0.0);
    Some(flat)
}

fn starts(
    space: &Space,
    f: &dyn HomFn,
    p: f64,
    k: usize,
    budget: &Budget,
    warm: Option<&Certificate>,
) -> Vec<Vec<f64>> {
    let n = space.dim();
    let mut out = Vec::with_capacity(budget.starts);
    if let Some(flat) = warm.and_then(|w| pad_warm(w, f, k, n)) {
        out.push(flat);
    }
    if let Some(flat) = lp_seed(space, f, p, k, budget) {
        out.push(flat);
    }
    let sample = sampling::validation_sample(space, START_SAMPLE, budget.seed);
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| {
        f.value(&sample[b])
            .abs()
            .total_cmp(&f.value(&sample[a]).abs())
            .then(a.cmp(&b))
    });
    out.push(
        (0..k)
            .flat_map(|i| sample[order[i % order.len()]].clone())
            .collect(),
    );
    // normalized +e_{i mod n}
    out.push(
        (0..k)
            .flat_map(|i| sample[2 * (i % n)].clone())
            .collect(),
    );
    let mut idx = 0u64;
    while out.len() < budget.starts.max(1) {
        let mut r = sampling::rng_for(budget.seed, 1_000_000 + idx);
        let flat: Vec<f64> = (0..k)
            .flat_map(|_| {
                let t: f64 = r.random_range(0.1..=1.0);
                sampling::dual_sphere_point(space, &mut r)
                    .into_iter()
                    .map(move |v| t * v)
            })
            .collect();
        out.push(flat);
        idx += 1;
    }
    out.truncate(budget.starts.max(1));
    out
}

/// Lower bound of `‖f‖_{FBL^{(p)}_k[E]}` with its certificate.
pub fn fbl_norm_k(space: &Space, f: &dyn HomFn, p: f64, k: usize, budget: &Budget) -> Result<Certificate> {
    fbl_norm_k_warm(space, f, p, k, budget, None)
}

/// As [`fbl_norm_k`], with an extra start taken from `warm` (padded with zero
/// functionals or trimmed to `k` members). The result is never below the warm
/// start's value.
pub fn fbl_norm_k_warm(
    space: &Space,
    f: &dyn HomFn,
    p: f64,
    k: usize,
    budget: &Budget,
    warm: Option<&Certificate>,
) -> Result<Certificate> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_exponent(p)?;
    check_dim(space.dim(), f.dim())?;
    budget.validate()?;
    let search = Search {
        space,
        f,
        p,
        k,
        n: space.dim(),
        k_exact: budget.k_exact,
        scales: space.unit_scales().to_vec(),
    };
    let starts = starts(space, f, p, k, budget, warm);
    let results: Vec<(f64, Vec<f64>)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, flat)| {
            let mut r = sampling::rng_for(budget.seed, i as u64);
            search.run(flat, budget, &mut r)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, (r, _)) in results.iter().enumerate() {
        if *r > results[best].0 {
            best = i;
        }
    }
    let tuple: Vec<Vec<f64>> = results[best].1.chunks_exact(space.dim()).map(<[f64]>::to_vec).collect();
    let cert = Certificate::evaluate(space, f, tuple, p, budget.k_exact)?;
    match warm {
        Some(w) if w.p == p && w.value > cert.value && w.tuple.len() <= k => Ok(w.clone()),
        _ => Ok(cert),
    }
}

/// Outcome of the doubling schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// First `k` of the plateau (or the last `k` tried when no plateau was found).
    pub k_used: usize,
    pub plateau: bool,
    /// `(k, ‖f‖_k)` for every `k` tried.
    pub history: Vec<(usize, f64)>,
    pub certificate: Certificate,
}

fn relative_increase(prev: f64, next: f64) -> f64 {
    if next <= prev {
        0.0
    } else if prev <= 0.0 {
        f64::INFINITY
    } else {
        (next - prev) / prev
    }
}

/// Estimates `‖f‖_{FBL^{(p)}[E]}` by `k = 1, 2, 4, …` up to `budget.k_max`,
/// stopping once two consecutive relative increases fall below `eps`.
pub fn fbl_norm(space: &Space, f: &dyn HomFn, p: f64, eps: f64, budget: &Budget) -> Result<NormEstimate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be positive")));
    }
    budget.validate()?;
    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut best: Option<Certificate> = None;
    let mut k = 1;
    loop {
        let cert = fbl_norm_k_warm(space, f, p, k, budget, best.as_ref())?;
        history.push((k, cert.value));
        best = Some(cert);
        let h = history.len();
        if h >= 3
            && relative_increase(history[h - 3].1, history[h - 2].1) < eps
            && relative_increase(history[h - 2].1, history[h - 1].1) < eps
        {
            return Ok(NormEstimate {
                value: history[h - 1].1,
                k_used: history[h - 3].0,
                plateau: true,
                history,
                certificate: best.expect("at least one run"),
            });
        }
        if k * 2 > budget.k_max {
            let last = history[h - 1];
            return Ok(NormEstimate {
                value: last.1,
                k_used: last.0,
                plateau: false,
                history,
                certificate: best.expect("at least one run"),
            });
        }
        k *= 2;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub k: usize,
    pub norm: f64,
    /// `‖f‖_{k_max} / ‖f‖_k`, with `0/0 = 1`.
    pub ratio: f64,
}

/// `‖f‖_k` along an increasing list of `k`, warm-started so the values are nondecreasing.
pub fn lambda_probe(
    space: &Space,
    f: &dyn HomFn,
    p: f64,
    k_list: &[usize],
    budget: &Budget,
) -> Result<Vec<ProbeRow>> {
    if k_list.is_empty() {
        return Err(Error::InvalidArgument("empty k list".into()));
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("k list must be strictly increasing".into()));
    }
    let mut norms = Vec::with_capacity(k_list.len());
    let mut warm: Option<Certificate> = None;
    for &k in k_list {
        let cert = fbl_norm_k_warm(space, f, p, k, budget, warm.as_ref())?;
        norms.push(cert.value);
        warm = Some(cert);
    }
    let top = *norms.last().expect("non-empty");
    Ok(k_list
        .iter()
        .zip(&norms)
        .map(|(&k, &norm)| ProbeRow {
            k,
            norm,
            ratio: if norm == 0.0 {
                if top == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                top / norm
            },
        })
        .collect())
}
