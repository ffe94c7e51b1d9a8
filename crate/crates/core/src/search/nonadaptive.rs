//! Exhaustive non-adaptive search.
//!
//! For a fixed choice of tables for players `0..n-1`, the value is linear in
//! the last player's ±1 outputs, so her best table is read off sign by sign.
//! Ties between her options go to output 0, which yields the smallest
//! encoding for that prefix; prefixes are then merged by (value, encoding).

use rayon::prelude::*;

use super::{in_pool, Candidate, Protocol, SearchClass, SearchResult, PROTOCOL_BUDGET};
use crate::box_core::{BipartiteBox, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::wirings::{NonAdaptiveProtocol, ENUMERATION_BUDGET};
use crate::xor_multipartite::{MultipartyBox, XorGame};

/// Best value of `game` over non-adaptive wirings of `m` copies of `b`.
pub fn enumerate_nonadaptive_max(
    b: &MultipartyBox,
    game: &XorGame,
    m: usize,
    input_dependent: bool,
    threads: usize,
) -> Result<SearchResult> {
    let n = game.players();
    if b.n != n {
        return Err(Error::ArityMismatch(format!(
            "{}-party box for a {n}-player game",
            b.n
        )));
    }
    if m == 0 {
        return Err(Error::ArityMismatch("search over zero copies".into()));
    }
    if n * m > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "non-adaptive enumeration n·m",
            needed: (n * m) as u128,
            limit: ENUMERATION_BUDGET as u128,
        });
    }
    // table bits per player
    let width = (1usize << m) << input_dependent as usize;
    let class_bits = n * width;
    if class_bits > PROTOCOL_BUDGET.trailing_zeros() as usize {
        return Err(Error::BudgetExceeded {
            what: "non-adaptive protocol count",
            needed: 1u128.checked_shl(class_bits as u32).unwrap_or(u128::MAX),
            limit: PROTOCOL_BUDGET as u128,
        });
    }
    let class = if input_dependent {
        SearchClass::NonAdaptiveInputDependent
    } else {
        SearchClass::NonAdaptiveInputFree
    };
    let kernel = Kernel::new(b, game, m, input_dependent);
    let prefixes = 1u64 << (width * (n - 1));
    let best = in_pool(threads, || {
        // static partition of the prefix range
        let parts = prefixes.min(1024);
        (0..parts)
            .into_par_iter()
            .map(|i| {
                let mut scratch = kernel.scratch();
                (prefixes * i / parts..prefixes * (i + 1) / parts)
                    .map(|q| kernel.best_for_prefix(q, &mut scratch))
                    .fold(Candidate::NONE, Candidate::best)
            })
            .reduce(|| Candidate::NONE, Candidate::best)
    });
    let code = num_bigint::BigUint::from(best.code);
    Ok(SearchResult {
        best_value: best.value,
        best_protocol: Protocol::NonAdaptive(NonAdaptiveProtocol::from_encoding(n, m, &code)?),
        examined: 1u64 << class_bits,
        class,
    })
}

/// CHSH convenience wrapper; the box must be valid.
pub fn enumerate_nonadaptive_max_chsh(
    b: &BipartiteBox,
    m: usize,
    input_dependent: bool,
    threads: usize,
) -> Result<SearchResult> {
    let report = b.validate(DEFAULT_TOL);
    if !report.is_valid() {
        return Err(Error::InvalidBox(report));
    }
    enumerate_nonadaptive_max(&MultipartyBox::from(b), &XorGame::chsh(), m, input_dependent, threads)
}

struct Kernel {
    n: usize,
    m: usize,
    input_dependent: bool,
    // signed joint distribution of the players' outcome strings, per input:
    // tensor[x][s_0 … s_{n-1}] with player 0 in the high bits
    tensor: Vec<Vec<f64>>,
}

struct Scratch {
    prefix_sign: Vec<f64>,
    coef: Vec<f64>,
}

impl Kernel {
    fn new(b: &MultipartyBox, game: &XorGame, m: usize, input_dependent: bool) -> Self {
        let n = game.players();
        let strings = 1usize << (n * m);
        let tensor = (0..game.inputs())
            .map(|x| {
                let row = b.row(x);
                let sign = game.sign(x);
                (0..strings)
                    .map(|idx| {
                        (0..m)
                            .map(|copy| {
                                let a = (0..n).fold(0, |a, j| {
                                    let sj = idx >> (m * (n - 1 - j));
                                    (a << 1) | ((sj >> copy) & 1)
                                });
                                row[a]
                            })
                            .product::<f64>()
                            * sign
                    })
                    .collect()
            })
            .collect();
        Kernel {
            n,
            m,
            input_dependent,
            tensor,
        }
    }

    fn width(&self) -> usize {
        (1 << self.m) << self.input_dependent as usize
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            prefix_sign: vec![0.0; 1 << (self.m * (self.n - 1))],
            coef: vec![0.0; 2 << self.m],
        }
    }

    /// Canonical per-player code, always spanning both input bits.
    fn expand(&self, code: u64) -> u64 {
        if self.input_dependent {
            code
        } else {
            code | (code << (1 << self.m))
        }
    }

    fn table_bit(&self, code: u64, v: usize, s: usize) -> bool {
        (self.expand(code) >> ((v << self.m) + s)) & 1 == 1
    }

    fn best_for_prefix(&self, q: u64, scratch: &mut Scratch) -> Candidate {
        let (n, m) = (self.n, self.m);
        let width = self.width();
        let mask = (1u64 << width) - 1;
        let smask = (1usize << m) - 1;
        let codes: Vec<u64> = (0..n - 1).map(|j| (q >> (width * j)) & mask).collect();
        let last = 1usize << m;
        scratch.coef.iter_mut().for_each(|c| *c = 0.0);
        for (x, tensor) in self.tensor.iter().enumerate() {
            for (qs, sign) in scratch.prefix_sign.iter_mut().enumerate() {
                let mut flip = false;
                for (j, &code) in codes.iter().enumerate() {
                    let xj = (x >> (n - 1 - j)) & 1;
                    let sj = (qs >> (m * (n - 2 - j))) & smask;
                    flip ^= self.table_bit(code, xj, sj);
                }
                *sign = if flip { -1.0 } else { 1.0 };
            }
            let v = if self.input_dependent { x & 1 } else { 0 };
            let coef = &mut scratch.coef[v * last..(v + 1) * last];
            for (qs, &sign) in scratch.prefix_sign.iter().enumerate() {
                let block = &tensor[qs * last..(qs + 1) * last];
                for (c, &t) in coef.iter_mut().zip(block) {
                    *c += sign * t;
                }
            }
        }
        let used = if self.input_dependent { 2 * last } else { last };
        let mut value = 0.0;
        let mut last_code = 0u64;
        for (i, &c) in scratch.coef[..used].iter().enumerate() {
            value += c.abs();
            if c < 0.0 {
                last_code |= 1 << i;
            }
        }
        let span = 2 << m;
        let code = codes
            .iter()
            .chain(std::iter::once(&last_code))
            .enumerate()
            .fold(0u64, |acc, (j, &c)| acc | (self.expand(c) << (span * j)));
        Candidate { value, code }
    }
}
