//! Exact rational search over two-copy non-adaptive wirings of a bipartite
//! box, used to certify the floating-point search.
//!
//! Every protocol is evaluated exactly; nothing is shared with the fast
//! kernel beyond the encoding.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Protocol, SearchResult};
use crate::box_core::BipartiteBox;
use crate::error::{Error, Result};
use crate::wirings::NonAdaptiveProtocol;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub value: BigRational,
    pub protocol: NonAdaptiveProtocol,
    pub examined: u64,
}

/// Exact CHSH maximum over non-adaptive wirings of two copies of `b`. The
/// box entries are read as the exact rationals their `f64`s represent.
pub fn exact_nonadaptive_max(b: &BipartiteBox, input_dependent: bool) -> Result<ExactResult> {
    let report = b.validate(crate::box_core::DEFAULT_TOL);
    if !report.is_valid() {
        return Err(Error::InvalidBox(report));
    }
    let p: Vec<BigRational> = b
        .p
        .iter()
        .flatten()
        .map(|&v| BigRational::from_float(v).expect("validated entries are finite"))
        .collect();
    // joint[xy][s_a][s_b] with bit i of s the player's output on copy i
    let mut joint = vec![vec![vec![BigRational::zero(); 4]; 4]; 4];
    for (xy, per_input) in joint.iter_mut().enumerate() {
        for ab1 in 0..4 {
            for ab2 in 0..4 {
                let sa = (ab1 >> 1) | ((ab2 >> 1) << 1);
                let sb = (ab1 & 1) | ((ab2 & 1) << 1);
                let term = &p[4 * xy + ab1] * &p[4 * xy + ab2];
                if xy == 3 {
                    per_input[sa][sb] -= term;
                } else {
                    per_input[sa][sb] += term;
                }
            }
        }
    }
    let options: Vec<u8> = if input_dependent {
        (0..=255).collect()
    } else {
        (0..16u8).map(|t| t | (t << 4)).collect()
    };
    let sign = |code: u8, v: usize, s: usize| (code >> (4 * v + s)) & 1 == 1;

    let mut best: Option<(BigRational, u16)> = None;
    for &alice in &options {
        // partial[xy][s_b]: Alice's signs applied, Bob's pending
        let partial: Vec<Vec<BigRational>> = joint
            .iter()
            .enumerate()
            .map(|(xy, per_input)| {
                (0..4)
                    .map(|sb| {
                        per_input.iter().enumerate().fold(BigRational::zero(), |acc, (sa, row)| {
                            if sign(alice, xy >> 1, sa) {
                                acc - &row[sb]
                            } else {
                                acc + &row[sb]
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        for &bob in &options {
            let mut value = BigRational::zero();
            for (xy, row) in partial.iter().enumerate() {
                for (sb, t) in row.iter().enumerate() {
                    if sign(bob, xy & 1, sb) {
                        value -= t;
                    } else {
                        value += t;
                    }
                }
            }
            let code = u16::from(alice) | (u16::from(bob) << 8);
            let better = match &best {
                None => true,
                Some((v, c)) => value > *v || (value == *v && code < *c),
            };
            if better {
                best = Some((value, code));
            }
        }
    }
    let (value, code) = best.expect("the class is never empty");
    Ok(ExactResult {
        value,
        protocol: NonAdaptiveProtocol::from_encoding(2, 2, &BigUint::from(code))?,
        examined: (options.len() * options.len()) as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `|float maximum - exact maximum|`.
    pub value_gap: f64,
    /// Exact value of the protocol the float search returned, minus the
    /// exact maximum (zero when that protocol is optimal).
    pub protocol_gap: BigRational,
    pub same_protocol: bool,
}

impl Certificate {
    pub fn certifies(&self, tol: f64) -> bool {
        self.value_gap <= tol && self.protocol_gap.is_zero()
    }
}

/// Compares a floating-point search on `b` with the exact search.
pub fn certify(b: &BipartiteBox, float: &SearchResult, exact: &ExactResult) -> Result<Certificate> {
    let Protocol::NonAdaptive(proto) = &float.best_protocol else {
        return Err(Error::ArityMismatch("only non-adaptive results can be certified".into()));
    };
    if proto.players() != 2 || proto.copies() != 2 {
        return Err(Error::ArityMismatch("exact certification covers n = 2, m = 2".into()));
    }
    let exact_value = exact_protocol_value(b, proto);
    let value_gap = (float.best_value - to_f64(&exact.value)).abs();
    Ok(Certificate {
        value_gap,
        protocol_gap: (exact_value - &exact.value).abs(),
        same_protocol: proto == &exact.protocol,
    })
}

fn exact_protocol_value(b: &BipartiteBox, proto: &NonAdaptiveProtocol) -> BigRational {
    let q = |v: f64| BigRational::from_float(v).expect("finite");
    let mut value = BigRational::zero();
    for xy in 0..4 {
        let (x, y) = (xy >> 1, xy & 1);
        for ab1 in 0..4 {
            for ab2 in 0..4 {
                let sa = (ab1 >> 1) | ((ab2 >> 1) << 1);
                let sb = (ab1 & 1) | ((ab2 & 1) << 1);
                let even = proto.output(0, x, sa) == proto.output(1, y, sb);
                let term = q(b.p[xy][ab1]) * q(b.p[xy][ab2]);
                if even ^ (xy == 3) {
                    value += term;
                } else {
                    value -= term;
                }
            }
        }
    }
    value
}

fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
