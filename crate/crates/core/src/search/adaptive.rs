//! Exhaustive search over two-copy adaptive wirings.
//!
//! A player's wiring is four independent *slot* choices, one per (input,
//! first output) pair. A choice `c ∈ 0..8` packs the second-box input (bit 0)
//! and the final output after second-box output 0 (bit 1) and 1 (bit 2).
//! Given Alice's wiring, Bob's slots contribute independently to both the
//! value and the output box, so only Alice's 4096 wirings are enumerated.

use rayon::prelude::*;

use super::{in_pool, Candidate, Protocol, SearchClass, SearchResult};
use crate::box_core::{BipartiteBox, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::wirings::{AdaptiveTwoCopyProtocol, ADAPTIVE_CLASS_SIZE};

const SLOTS: usize = 4;
const CHOICES: usize = 8;

fn slot_choice(code: u32, k: usize) -> usize {
    let u = (code >> k) & 1;
    let f0 = (code >> (4 + 2 * k)) & 1;
    let f1 = (code >> (5 + 2 * k)) & 1;
    (u | (f0 << 1) | (f1 << 2)) as usize
}

/// Bits a slot choice sets in a player's 12-bit code.
fn slot_bits(c: usize, k: usize) -> u32 {
    let c = c as u32;
    ((c & 1) << k) | (((c >> 1) & 1) << (4 + 2 * k)) | (((c >> 2) & 1) << (5 + 2 * k))
}

fn choice_input(c: usize) -> usize {
    c & 1
}

fn choice_output(c: usize, out2: usize) -> usize {
    (c >> (1 + out2)) & 1
}

fn require_valid(b: &BipartiteBox) -> Result<()> {
    let report = b.validate(DEFAULT_TOL);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidBox(report))
    }
}

/// Best CHSH value over adaptive wirings of two copies of `b`.
pub fn adaptive_search_max(b: &BipartiteBox, threads: usize) -> Result<SearchResult> {
    adaptive_search_max_pair(b, b, threads)
}

/// As [`adaptive_search_max`] with `box1` used first and `box2` second.
pub fn adaptive_search_max_pair(box1: &BipartiteBox, box2: &BipartiteBox, threads: usize) -> Result<SearchResult> {
    require_valid(box1)?;
    require_valid(box2)?;

    // k[cA][cB]: correlator of the final outputs given the second-box inputs
    let mut k = [[0.0; CHOICES]; CHOICES];
    for (ca, row) in k.iter_mut().enumerate() {
        for (cb, v) in row.iter_mut().enumerate() {
            let (u, w) = (choice_input(ca), choice_input(cb));
            for a2 in 0..2 {
                for b2 in 0..2 {
                    let s = choice_output(ca, a2) ^ choice_output(cb, b2);
                    let p = box2.prob(u, w, a2, b2);
                    *v += if s == 0 { p } else { -p };
                }
            }
        }
    }
    // weight[kA][kB]: signed first-box probability of reaching the two slots
    let mut weight = [[0.0; SLOTS]; SLOTS];
    for (ka, row) in weight.iter_mut().enumerate() {
        for (kb, w) in row.iter_mut().enumerate() {
            let (x, a1) = (ka >> 1, ka & 1);
            let (y, b1) = (kb >> 1, kb & 1);
            let p = box1.prob(x, y, a1, b1);
            *w = if x & y == 1 { -p } else { p };
        }
    }

    let best = in_pool(threads, || {
        (0u32..1 << 12)
            .into_par_iter()
            .map(|alice| {
                let ca: [usize; SLOTS] = std::array::from_fn(|s| slot_choice(alice, s));
                let mut value = 0.0;
                let mut bob = 0u32;
                for kb in 0..SLOTS {
                    let mut best = (f64::NEG_INFINITY, 0u32);
                    for cb in 0..CHOICES {
                        let g: f64 = (0..SLOTS).map(|ka| weight[ka][kb] * k[ca[ka]][cb]).sum();
                        let bits = slot_bits(cb, kb);
                        if g > best.0 || (g == best.0 && bits < best.1) {
                            best = (g, bits);
                        }
                    }
                    value += best.0;
                    bob |= best.1;
                }
                Candidate {
                    value,
                    code: u64::from(alice | (bob << 12)),
                }
            })
            .reduce(|| Candidate::NONE, Candidate::best)
    });
    Ok(SearchResult {
        best_value: best.value,
        best_protocol: Protocol::Adaptive(AdaptiveTwoCopyProtocol::from_encoding(best.code as u32)?),
        examined: ADAPTIVE_CLASS_SIZE,
        class: SearchClass::Adaptive2,
    })
}

/// One matching constraint: wiring `first` then `second` must give `target`.
#[derive(Debug, Clone, Copy)]
pub struct MatchCase {
    pub first: BipartiteBox,
    pub second: BipartiteBox,
    pub target: BipartiteBox,
}

/// Smallest-encoding adaptive wiring whose output matches every case
/// entrywise within `tol`, if any.
pub fn adaptive_search_matching(
    cases: &[MatchCase],
    tol: f64,
    threads: usize,
) -> Result<Option<AdaptiveTwoCopyProtocol>> {
    for c in cases {
        require_valid(&c.first)?;
        require_valid(&c.second)?;
    }
    let best = in_pool(threads, || {
        (0u32..1 << 12)
            .into_par_iter()
            .filter_map(|alice| {
                let mut bob = 0;
                for y in 0..2 {
                    bob |= smallest_bob_half(cases, alice, y, tol)?;
                }
                Some(alice | (bob << 12))
            })
            // Bob holds the high bits
            .min_by_key(|&code| (code >> 12, code & 0xfff))
    });
    best.map(AdaptiveTwoCopyProtocol::from_encoding).transpose()
}

/// Smallest bits for Bob's two slots with input `y` that reproduce every
/// target row with that `y`.
fn smallest_bob_half(cases: &[MatchCase], alice: u32, y: usize, tol: f64) -> Option<u32> {
    let ca: [usize; SLOTS] = std::array::from_fn(|s| slot_choice(alice, s));
    let mut best: Option<u32> = None;
    for c0 in 0..CHOICES {
        for c1 in 0..CHOICES {
            let cb = [c0, c1];
            let ok = cases.iter().all(|case| {
                (0..2).all(|x| {
                    let mut row = [0.0; 4];
                    for a1 in 0..2 {
                        for b1 in 0..2 {
                            let p1 = case.first.prob(x, y, a1, b1);
                            let (sa, sb) = (ca[2 * x + a1], cb[b1]);
                            for a2 in 0..2 {
                                for b2 in 0..2 {
                                    let p2 = case.second.prob(choice_input(sa), choice_input(sb), a2, b2);
                                    let a = choice_output(sa, a2);
                                    let b = choice_output(sb, b2);
                                    row[2 * a + b] += p1 * p2;
                                }
                            }
                        }
                    }
                    row.iter()
                        .zip(&case.target.p[2 * x + y])
                        .all(|(got, want)| (got - want).abs() <= tol)
                })
            });
            if ok {
                let bits = slot_bits(c0, 2 * y) | slot_bits(c1, 2 * y + 1);
                best = Some(best.map_or(bits, |b| b.min(bits)));
            }
        }
    }
    best
}
