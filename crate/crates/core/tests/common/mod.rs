#![allow(dead_code)]

use nlbd_core::xor_multipartite::{MultipartiteXorBox, XorGame};
use nlbd_core::CorrelatorForm;
use rand::Rng;

/// Correlator `E` with marginals `a`, `b` is valid iff `|a+b|-1 <= E <= 1-|a-b|`.
pub fn correlator_range(a: f64, b: f64) -> (f64, f64) {
    ((a + b).abs() - 1.0, 1.0 - (a - b).abs())
}

pub fn random_valid_form(rng: &mut impl Rng) -> CorrelatorForm {
    let alice = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
    let bob = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
    let mut corr = [0.0; 4];
    for (xy, c) in corr.iter_mut().enumerate() {
        let (lo, hi) = correlator_range(alice[xy >> 1], bob[xy & 1]);
        *c = lo + (hi - lo) * rng.random::<f64>();
    }
    CorrelatorForm::from_parts(alice, bob, corr)
}

/// `(α, β, δ, ε)` of a valid symmetric-family box.
pub fn random_symmetric(rng: &mut impl Rng) -> (f64, f64, f64, f64) {
    loop {
        let alpha: f64 = rng.random_range(-1.0..=1.0);
        let beta: f64 = rng.random_range(-1.0..=1.0);
        let ranges = [
            correlator_range(alpha, alpha),
            correlator_range(alpha, beta),
            correlator_range(beta, alpha),
        ];
        let lo = ranges.iter().map(|r| r.0).fold(f64::MIN, f64::max);
        let hi = ranges.iter().map(|r| r.1).fold(f64::MAX, f64::min);
        if lo > hi {
            continue;
        }
        let (elo, ehi) = correlator_range(beta, beta);
        let delta = lo + (hi - lo) * rng.random::<f64>();
        let eps = elo + (ehi - elo) * rng.random::<f64>();
        return (alpha, beta, delta, eps);
    }
}

pub fn random_game(rng: &mut impl Rng, n: usize) -> XorGame {
    XorGame::new(n, (0..1 << n).map(|_| rng.random_bool(0.5)).collect()).unwrap()
}

/// Trivial-marginal `n`-player box with uniform random biases.
pub fn random_xor_box(rng: &mut impl Rng, n: usize) -> MultipartiteXorBox {
    let game = random_game(rng, n);
    let delta = (0..1 << n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    MultipartiteXorBox::new(game, delta).unwrap()
}
