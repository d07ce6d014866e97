#![allow(dead_code)]

use fblab_core::homfun::{directify_exprs, LatticeExpr};
use fblab_core::sampling::{gaussian_vec, rng_for, SeededRng};
use fblab_core::Space;
use rand::Rng;

/// Random expression with at most `depth` nodes on any root-to-leaf path.
pub fn random_expr(rng: &mut SeededRng, dim: usize, depth: usize) -> LatticeExpr {
    if depth <= 1 || rng.random_range(0..4) == 0 {
        return LatticeExpr::generator(gaussian_vec(rng, dim));
    }
    match rng.random_range(0..5) {
        0 => random_expr(rng, dim, depth - 1).abs(),
        1 => random_expr(rng, dim, depth - 1).scale(rng.random_range(-2.0..2.0)),
        2 => random_expr(rng, dim, depth - 1).join(&random_expr(rng, dim, depth - 1)),
        3 => random_expr(rng, dim, depth - 1).meet(&random_expr(rng, dim, depth - 1)),
        _ => random_expr(rng, dim, depth - 1).add(&random_expr(rng, dim, depth - 1)),
    }
}

/// Nonnegative random expression: `|e|` with `e` of depth `depth − 1`.
pub fn random_positive(rng: &mut SeededRng, dim: usize, depth: usize) -> LatticeExpr {
    random_expr(rng, dim, depth - 1).abs()
}

/// Ten expressions over `ℓ_1^2` followed by ten over `ℓ_2^2`, all of depth ≤ 3.
pub fn corpus() -> Vec<(Space, LatticeExpr)> {
    let mut out = Vec::new();
    for (s, space) in [Space::l1(2).unwrap(), Space::l2(2).unwrap()].into_iter().enumerate() {
        let mut rng = rng_for(2024, s as u64);
        for _ in 0..10 {
            out.push((space.clone(), random_expr(&mut rng, 2, 3)));
        }
    }
    out
}

/// Running joins of `len` random nonnegative expressions.
pub fn random_family(dim: usize, len: usize, seed: u64) -> Vec<LatticeExpr> {
    let mut rng = rng_for(seed, 7);
    let items: Vec<LatticeExpr> = (0..len).map(|_| random_positive(&mut rng, dim, 3)).collect();
    directify_exprs(&items).unwrap()
}

/// Embeds `x` into coordinates `offset..offset + x.len()` of `R^dim`.
pub fn pad(x: &[f64], offset: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[offset..offset + x.len()].copy_from_slice(x);
    v
}

pub fn rng(seed: u64) -> SeededRng {
    rng_for(seed, 0)
}

/// The same expression acting on coordinates `offset..` of `R^dim`.
pub fn lift(e: &LatticeExpr, offset: usize, dim: usize) -> LatticeExpr {
    use fblab_core::homfun::Node;
    match e.node() {
        Node::Generator(x) => LatticeExpr::generator(pad(x, offset, dim)),
        Node::Scale(c, a) => lift(a, offset, dim).scale(*c),
        Node::Abs(a) => lift(a, offset, dim).abs(),
        Node::Sum(a, b) => lift(a, offset, dim).add(&lift(b, offset, dim)),
        Node::Join(a, b) => lift(a, offset, dim).join(&lift(b, offset, dim)),
        Node::Meet(a, b) => lift(a, offset, dim).meet(&lift(b, offset, dim)),
        Node::PowerSum { p, terms } => LatticeExpr::power_sum(
            *p,
            terms.iter().map(|(c, t)| (*c, lift(t, offset, dim))).collect(),
        ),
    }
}
