//! Seeded random sampling helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spaces::Space;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a seeded computation.
pub fn rng_for(seed: u64, index: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A point on the dual unit sphere of `space`, from a normalized Gaussian direction.
pub fn dual_sphere_point<R: Rng>(space: &Space, rng: &mut R) -> Vec<f64> {
    loop {
        let g = gaussian_vec(rng, space.dim());
        let n = space.dual_norm_unchecked(&g);
        if n > 1e-12 {
            return g.into_iter().map(|v| v / n).collect();
        }
    }
}

pub fn dual_sphere_points(space: &Space, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| dual_sphere_point(space, &mut r)).collect()
}

/// Default validation set: seeded sphere samples plus every normalized ±e_i.
pub fn validation_sample(space: &Space, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = space.dim();
    let mut out = Vec::with_capacity(count + 2 * n);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            let norm = space.dual_norm_unchecked(&e);
            e[i] /= norm;
            out.push(e);
        }
    }
    out.extend(dual_sphere_points(space, count, seed));
    out
}

/// A point in the primal unit ball (not uniform; radius drawn uniformly).
pub fn primal_ball_point<R: Rng>(space: &Space, rng: &mut R) -> Vec<f64> {
    loop {
        let g = gaussian_vec(rng, space.dim());
        let n = space.primal_norm_unchecked(&g);
        if n > 1e-12 {
            let r: f64 = rng.random();
            return g.into_iter().map(|v| v * r / n).collect();
        }
    }
}
