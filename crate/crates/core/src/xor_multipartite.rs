//! n-player XOR games and their trivial-marginal boxes.
//!
//! Bit strings over the players are packed into integers with player 1 in
//! the most significant position, so for two players `xy = 2x + y` agrees
//! with the bipartite layout.

use crate::box_core::BipartiteBox;
use crate::error::{Error, Result};

/// Largest `n·m` accepted by [`simulate_parity`].
pub const PARITY_ENUMERATION_BUDGET: usize = 24;

/// An XOR game: win iff the parity of the outputs equals `f(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorGame {
    n: usize,
    f: Vec<bool>,
}

impl XorGame {
    pub fn new(n: usize, f: Vec<bool>) -> Result<Self> {
        if !(1..=16).contains(&n) {
            return Err(Error::ArityMismatch(format!("player count {n} out of range")));
        }
        if f.len() != 1 << n {
            return Err(Error::ArityMismatch(format!(
                "truth table for {n} players needs {} entries, got {}",
                1 << n,
                f.len()
            )));
        }
        Ok(XorGame { n, f })
    }

    /// CHSH: two players, `f(x, y) = x·y`.
    pub fn chsh() -> Self {
        XorGame {
            n: 2,
            f: vec![false, false, false, true],
        }
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn inputs(&self) -> usize {
        1 << self.n
    }

    pub fn f(&self, x: usize) -> bool {
        self.f[x]
    }

    pub fn truth_table(&self) -> &[bool] {
        &self.f
    }

    /// `(-1)^f(x)`.
    pub fn sign(&self, x: usize) -> f64 {
        if self.f[x] {
            -1.0
        } else {
            1.0
        }
    }

    /// `Σ_x (-1)^f(x) w_x`.
    pub fn signed_sum(&self, w: impl IntoIterator<Item = f64>) -> f64 {
        w.into_iter().enumerate().map(|(x, v)| self.sign(x) * v).sum()
    }
}

/// Box with trivial marginals: on input `x` every even-parity output string
/// has probability `(1 + δ_x) / 2^n`, every odd one `(1 - δ_x) / 2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteXorBox {
    pub game: XorGame,
    pub delta: Vec<f64>,
}

impl MultipartiteXorBox {
    pub fn new(game: XorGame, delta: Vec<f64>) -> Result<Self> {
        if delta.len() != game.inputs() {
            return Err(Error::ArityMismatch(format!(
                "{} biases for {} inputs",
                delta.len(),
                game.inputs()
            )));
        }
        Ok(MultipartiteXorBox { game, delta })
    }

    pub fn players(&self) -> usize {
        self.game.players()
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        let n = self.players();
        let scale = 1.0 / (1u64 << n) as f64;
        if a.count_ones().is_multiple_of(2) {
            scale * (1.0 + self.delta[x])
        } else {
            scale * (1.0 - self.delta[x])
        }
    }

    pub fn to_multiparty(&self) -> MultipartyBox {
        let k = self.game.inputs();
        let mut p = vec![0.0; k * k];
        for x in 0..k {
            for a in 0..k {
                p[x * k + a] = self.prob(x, a);
            }
        }
        MultipartyBox { n: self.players(), p }
    }
}

/// Σ_x (-1)^f(x) δ_x
pub fn xor_value(b: &MultipartiteXorBox) -> f64 {
    b.game.signed_sum(b.delta.iter().copied())
}

/// Value of the parity wiring over `m` copies: Σ_x (-1)^f(x) δ_x^m.
pub fn parity_distill_value(b: &MultipartiteXorBox, m: u32) -> f64 {
    b.game.signed_sum(b.delta.iter().map(|d| d.powi(m as i32)))
}

/// Every player outputs the parity of her `m` bits; the resulting box is
/// computed by enumerating all `2^(n·m)` outcome tuples on each input.
pub fn simulate_parity(b: &MultipartiteXorBox, m: usize) -> Result<MultipartiteXorBox> {
    let dist = simulate_parity_distribution(b, m)?;
    let delta = (0..b.game.inputs()).map(|x| dist.parity_bias(x)).collect();
    MultipartiteXorBox::new(b.game.clone(), delta)
}

/// Full output distribution of the parity wiring, before reading off the
/// per-input biases.
pub fn simulate_parity_distribution(b: &MultipartiteXorBox, m: usize) -> Result<MultipartyBox> {
    let n = b.players();
    if m == 0 {
        return Err(Error::ArityMismatch("parity over zero copies".into()));
    }
    if n * m > PARITY_ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "parity enumeration n·m",
            needed: (n * m) as u128,
            limit: PARITY_ENUMERATION_BUDGET as u128,
        });
    }
    let k = b.game.inputs();
    let mut p = vec![0.0; k * k];
    for x in 0..k {
        let row: Vec<f64> = (0..k).map(|a| b.prob(x, a)).collect();
        let out = &mut p[x * k..(x + 1) * k];
        // each player's parity over her bits is the XOR of the outcome strings
        enumerate_parity(&row, m, 1.0, 0, out);
    }
    Ok(MultipartyBox { n, p })
}

fn enumerate_parity(row: &[f64], copies_left: usize, prob: f64, acc: usize, out: &mut [f64]) {
    if copies_left == 0 {
        out[acc] += prob;
        return;
    }
    for (a, &pa) in row.iter().enumerate() {
        enumerate_parity(row, copies_left - 1, prob * pa, acc ^ a, out);
    }
}

/// General n-party box with binary inputs and outputs, `p[x·2^n + a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartyBox {
    pub n: usize,
    pub p: Vec<f64>,
}

impl MultipartyBox {
    pub fn new(n: usize, p: Vec<f64>) -> Result<Self> {
        let k = 1usize << n;
        if p.len() != k * k {
            return Err(Error::ArityMismatch(format!(
                "{n}-party box needs {} entries, got {}",
                k * k,
                p.len()
            )));
        }
        Ok(MultipartyBox { n, p })
    }

    pub fn inputs(&self) -> usize {
        1 << self.n
    }

    pub fn row(&self, x: usize) -> &[f64] {
        let k = self.inputs();
        &self.p[x * k..(x + 1) * k]
    }

    /// `P(⊕a = 0 | x) - P(⊕a = 1 | x)`.
    pub fn parity_bias(&self, x: usize) -> f64 {
        self.row(x)
            .iter()
            .enumerate()
            .map(|(a, &v)| if a.count_ones().is_multiple_of(2) { v } else { -v })
            .sum()
    }

    /// Σ_x (-1)^f(x) · parity bias on x.
    pub fn xor_value(&self, game: &XorGame) -> f64 {
        game.signed_sum((0..self.inputs()).map(|x| self.parity_bias(x)))
    }

    /// `P(a_player = 0 | x)`; `player` counts from 0.
    pub fn output_zero_prob(&self, player: usize, x: usize) -> f64 {
        let shift = self.n - 1 - player;
        self.row(x)
            .iter()
            .enumerate()
            .filter(|(a, _)| (a >> shift) & 1 == 0)
            .map(|(_, &v)| v)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &MultipartyBox) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_bipartite(&self) -> Result<BipartiteBox> {
        if self.n != 2 {
            return Err(Error::ArityMismatch(format!(
                "expected a 2-party box, got {} parties",
                self.n
            )));
        }
        let mut p = [[0.0; 4]; 4];
        for (xy, row) in p.iter_mut().enumerate() {
            row.copy_from_slice(self.row(xy));
        }
        Ok(BipartiteBox::new(p))
    }
}

impl From<&BipartiteBox> for MultipartyBox {
    fn from(b: &BipartiteBox) -> Self {
        MultipartyBox {
            n: 2,
            p: b.p.iter().flatten().copied().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chsh_box(delta: [f64; 4]) -> MultipartiteXorBox {
        MultipartiteXorBox::new(XorGame::chsh(), delta.to_vec()).unwrap()
    }

    #[test]
    fn chsh_values() {
        let d = 0.7;
        assert!((xor_value(&chsh_box([d, d, d, -d])) - 4.0 * d).abs() < 1e-12);
        let eps = 0.3;
        assert!((xor_value(&chsh_box([1.0, 1.0, 1.0, eps])) - (3.0 - eps)).abs() < 1e-12);
        let g = XorGame::new(3, vec![false, true, true, false, true, false, false, true]).unwrap();
        assert_eq!(xor_value(&MultipartiteXorBox::new(g, vec![0.0; 8]).unwrap()), 0.0);
    }

    #[test]
    fn parity_values() {
        let eps = 0.3;
        let b = chsh_box([1.0, 1.0, 1.0, eps]);
        assert!((parity_distill_value(&b, 2) - (3.0 - eps * eps)).abs() < 1e-12);
        assert_eq!(parity_distill_value(&b, 1), xor_value(&b));
        let d = 0.6;
        let iso = chsh_box([d, d, d, -d]);
        assert!((parity_distill_value(&iso, 2) - 2.0 * d * d).abs() < 1e-12);
    }

    #[test]
    fn simulated_parity_squares_biases() {
        let b = chsh_box([1.0, 1.0, 1.0, 0.3]);
        let out = simulate_parity(&b, 2).unwrap();
        for (got, want) in out.delta.iter().zip([1.0, 1.0, 1.0, 0.09]) {
            assert!((got - want).abs() < 1e-12);
        }
        let g = XorGame::new(3, vec![false, false, false, true, false, true, true, true]).unwrap();
        let delta = vec![0.9, -0.2, 0.5, 0.1, -0.7, 0.33, 1.0, -1.0];
        let b = MultipartiteXorBox::new(g, delta.clone()).unwrap();
        let out = simulate_parity(&b, 2).unwrap();
        for (got, d) in out.delta.iter().zip(&delta) {
            assert!((got - d * d).abs() < 1e-12);
        }
        for (got, d) in simulate_parity(&b, 1).unwrap().delta.iter().zip(&delta) {
            assert!((got - d).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_output_has_trivial_marginals() {
        let b = chsh_box([0.9, 0.8, -0.1, -0.6]);
        let dist = simulate_parity_distribution(&b, 3).unwrap();
        for x in 0..4 {
            for player in 0..2 {
                assert!((dist.output_zero_prob(player, x) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let b = chsh_box([1.0; 4]);
        assert!(matches!(
            simulate_parity(&b, 13),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn bad_tables_are_rejected() {
        assert!(XorGame::new(2, vec![false; 3]).is_err());
        assert!(MultipartiteXorBox::new(XorGame::chsh(), vec![0.0; 3]).is_err());
    }
}
