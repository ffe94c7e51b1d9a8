//! Fourier analysis of the players' output functions.
//!
//! Player `j` sees an `m`-bit string `s` (bit `i` is her output from box `i`)
//! and answers 0 exactly when `f_j(s) = +1`. Over trivial-marginal boxes with
//! even-parity bias `δ`, the probability that the final outputs have even
//! parity only depends on the Walsh spectra of the `f_j`:
//!
//! ```text
//! R(δ) = ½ (1 + Σ_z δ^|z| Π_j f̂_j(z))
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::xor_multipartite::XorGame;

/// A ±1-valued function on `{0,1}^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmOutputFunction {
    m: usize,
    table: Vec<i8>,
}

impl PmOutputFunction {
    pub fn new(m: usize, table: Vec<i8>) -> Result<Self> {
        if table.len() != 1 << m {
            return Err(Error::ArityMismatch(format!(
                "table of length {} for arity {m}",
                table.len()
            )));
        }
        if table.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::ArityMismatch("table values must be +1 or -1".into()));
        }
        Ok(PmOutputFunction { m, table })
    }

    /// From output bits: bit 0 maps to +1, bit 1 to -1.
    pub fn from_output_bits(m: usize, bits: &[bool]) -> Result<Self> {
        Self::new(m, bits.iter().map(|&b| if b { -1 } else { 1 }).collect())
    }

    /// From the low `2^m` bits of a packed truth table.
    pub fn from_packed(m: usize, packed: u64) -> Self {
        assert!(m <= 6, "packed tables hold at most 64 entries");
        let table = (0..1usize << m)
            .map(|s| if (packed >> s) & 1 == 1 { -1 } else { 1 })
            .collect();
        PmOutputFunction { m, table }
    }

    pub fn parity(m: usize) -> Self {
        let table = (0..1usize << m)
            .map(|s: usize| if s.count_ones().is_multiple_of(2) { 1 } else { -1 })
            .collect();
        PmOutputFunction { m, table }
    }

    pub fn constant(m: usize) -> Self {
        PmOutputFunction {
            m,
            table: vec![1; 1 << m],
        }
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &[i8] {
        &self.table
    }
}

/// Coefficients `f̂(z) = 2^-m Σ_s (-1)^(z·s) f(s)`, indexed by `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    pub m: usize,
    pub coeff: Vec<f64>,
}

impl FourierSpectrum {
    pub fn parseval_sum(&self) -> f64 {
        self.coeff.iter().map(|c| c * c).sum()
    }

    /// `z,coefficient` lines; `z` is written as an `m`-character bit string
    /// with bit `m-1` first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,coefficient\n");
        for (z, c) in self.coeff.iter().enumerate() {
            let bits: String = (0..self.m)
                .rev()
                .map(|i| if (z >> i) & 1 == 1 { '1' } else { '0' })
                .collect();
            let _ = writeln!(out, "{bits},{}", crate::format::fmt_sig(*c));
        }
        out
    }
}

/// Fast Walsh–Hadamard transform, `O(m·2^m)`.
pub fn walsh_transform(f: &PmOutputFunction) -> FourierSpectrum {
    let mut v: Vec<f64> = f.table.iter().map(|&t| t as f64).collect();
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for i in block..block + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / len as f64;
    v.iter_mut().for_each(|c| *c *= scale);
    FourierSpectrum { m: f.m, coeff: v }
}

/// Direct `O(4^m)` summation of the same coefficients.
pub fn walsh_transform_direct(f: &PmOutputFunction) -> FourierSpectrum {
    let len = f.table.len();
    let coeff = (0..len)
        .map(|z| {
            let sum: f64 = f
                .table
                .iter()
                .enumerate()
                .map(|(s, &t)| {
                    if (z & s).count_ones().is_multiple_of(2) {
                        t as f64
                    } else {
                        -(t as f64)
                    }
                })
                .sum();
            sum / len as f64
        })
        .collect();
    FourierSpectrum { m: f.m, coeff }
}

fn common_arity(spectra: &[FourierSpectrum]) -> Result<usize> {
    let first = spectra
        .first()
        .ok_or_else(|| Error::ArityMismatch("no spectra".into()))?;
    if let Some(s) = spectra.iter().find(|s| s.m != first.m || s.coeff.len() != 1 << first.m) {
        return Err(Error::ArityMismatch(format!(
            "spectra of arity {} and {}",
            first.m, s.m
        )));
    }
    Ok(first.m)
}

fn product_of_coefficients(spectra: &[FourierSpectrum], z: usize) -> f64 {
    spectra.iter().map(|s| s.coeff[z]).product()
}

/// Probability that the players' outputs have even parity when each of the
/// `m` boxes has even-parity bias `delta`.
pub fn even_parity_prob(spectra: &[FourierSpectrum], delta: f64) -> Result<f64> {
    let m = common_arity(spectra)?;
    let sum: f64 = (0..1usize << m)
        .map(|z| delta.powi(z.count_ones() as i32) * product_of_coefficients(spectra, z))
        .sum();
    Ok(0.5 * (1.0 + sum))
}

/// Game value of an input-independent non-adaptive wiring, via
/// `V = Σ_z Π_j f̂_j(z) · Σ_x (-1)^f(x) δ_x^|z|`.
pub fn nonadaptive_value_fourier(
    spectra: &[FourierSpectrum],
    game: &XorGame,
    delta: &[f64],
) -> Result<f64> {
    let m = common_arity(spectra)?;
    if spectra.len() != game.players() {
        return Err(Error::ArityMismatch(format!(
            "{} spectra for {} players",
            spectra.len(),
            game.players()
        )));
    }
    if delta.len() != game.inputs() {
        return Err(Error::ArityMismatch(format!(
            "{} biases for {} inputs",
            delta.len(),
            game.inputs()
        )));
    }
    let moments = signed_moments(game, delta, m);
    Ok((0..1usize << m)
        .map(|z| product_of_coefficients(spectra, z) * moments[z.count_ones() as usize])
        .sum())
}

/// `S_k = Σ_x (-1)^f(x) δ_x^k` for `k = 0..=m`.
pub fn signed_moments(game: &XorGame, delta: &[f64], m: usize) -> Vec<f64> {
    (0..=m)
        .map(|k| game.signed_sum(delta.iter().map(|d| d.powi(k as i32))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityBound {
    pub value: f64,
    /// Number of copies the parity wiring should use to attain `value`.
    pub copies: usize,
}

/// `max_{1≤k≤m} |S_k|`, with the smallest maximizing `k`.
pub fn parity_bound(game: &XorGame, delta: &[f64], m: usize) -> ParityBound {
    best_moment(&signed_moments(game, delta, m), 1)
}

/// Like [`parity_bound`] but also admits `k = 0`, the value `|Σ_x (-1)^f(x)|`
/// reached by a constant output strategy. Without this term the bound fails
/// whenever a deterministic local strategy beats every parity wiring.
pub fn parity_bound_with_constant_term(game: &XorGame, delta: &[f64], m: usize) -> ParityBound {
    best_moment(&signed_moments(game, delta, m), 0)
}

fn best_moment(moments: &[f64], from: usize) -> ParityBound {
    let mut best = ParityBound {
        value: f64::NEG_INFINITY,
        copies: from,
    };
    for (k, s) in moments.iter().enumerate().skip(from) {
        if s.abs() > best.value {
            best = ParityBound {
                value: s.abs(),
                copies: k,
            };
        }
    }
    best
}
