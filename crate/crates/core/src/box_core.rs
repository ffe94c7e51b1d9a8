//! Bipartite no-signalling boxes with binary inputs and outputs.
//!
//! A box is stored as the 4×4 table `p[xy][ab]`, with inputs and outputs both
//! ordered `00, 01, 10, 11`. The equivalent correlator form carries the four
//! local marginals and the four correlators:
//!
//! ```text
//! p(ab|xy) = ¼ (1 + (-1)^a E_x + (-1)^b E_y + (-1)^(a⊕b) E_xy)
//! ```
//!
//! Construction from correlators is total. Whether the result is a valid
//! box is a separate question answered by [`validate_box`].

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance used for validity checks unless the caller supplies one.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Correlator/marginal parametrization of a bipartite box.
///
/// `alpha`/`beta` are Alice's output biases `p(a=0|x) - p(a=1|x)` for
/// `x = 0, 1`, `gamma`/`omega` are Bob's for `y = 0, 1`, and `d1, d2, d3, eps`
/// are the correlators on inputs `00, 01, 10, 11`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelatorForm {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub eps: f64,
}

impl CorrelatorForm {
    pub fn from_parts(alice: [f64; 2], bob: [f64; 2], correlators: [f64; 4]) -> Self {
        CorrelatorForm {
            alpha: alice[0],
            beta: alice[1],
            gamma: bob[0],
            omega: bob[1],
            d1: correlators[0],
            d2: correlators[1],
            d3: correlators[2],
            eps: correlators[3],
        }
    }

    pub fn alice_marginal(&self, x: usize) -> f64 {
        [self.alpha, self.beta][x]
    }

    pub fn bob_marginal(&self, y: usize) -> f64 {
        [self.gamma, self.omega][y]
    }

    /// Correlator on input `xy`, indexed `2x + y`.
    pub fn correlator(&self, xy: usize) -> f64 {
        self.correlators()[xy]
    }

    pub fn correlators(&self) -> [f64; 4] {
        [self.d1, self.d2, self.d3, self.eps]
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.alpha, self.beta, self.gamma, self.omega, self.d1, self.d2, self.d3, self.eps,
        ]
    }

    pub fn to_box(&self) -> BipartiteBox {
        box_from_correlators(self)
    }

    pub fn chsh_value(&self) -> f64 {
        chsh_value(self)
    }

    /// Largest absolute field difference.
    pub fn max_abs_diff(&self, other: &CorrelatorForm) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Conditional distribution `p[xy][ab]` of a two-party box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteBox {
    pub p: [[f64; 4]; 4],
}

impl BipartiteBox {
    pub fn new(p: [[f64; 4]; 4]) -> Self {
        BipartiteBox { p }
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[2 * x + y][2 * a + b]
    }

    pub fn uniform() -> Self {
        BipartiteBox { p: [[0.25; 4]; 4] }
    }

    /// The PR box: `a ⊕ b = x·y` with uniform marginals.
    pub fn pr_box() -> Self {
        box_from_correlators(&CorrelatorForm::from_parts(
            [0.0; 2],
            [0.0; 2],
            [1.0, 1.0, 1.0, -1.0],
        ))
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        validate_box(self, tol)
    }

    /// Correlator form read off the table without any validity check.
    pub fn correlator_form(&self) -> CorrelatorForm {
        let row = |xy: usize| self.p[xy];
        let corr = |xy: usize| {
            let r = row(xy);
            r[0] + r[3] - r[1] - r[2]
        };
        // marginals are read from the y = 0 (resp. x = 0) rows; for a
        // no-signalling box the choice does not matter
        let alice = |x: usize| {
            let r = row(2 * x);
            r[0] + r[1] - r[2] - r[3]
        };
        let bob = |y: usize| {
            let r = row(y);
            r[0] + r[2] - r[1] - r[3]
        };
        CorrelatorForm::from_parts([alice(0), alice(1)], [bob(0), bob(1)], [0, 1, 2, 3].map(corr))
    }

    pub fn correlators(&self) -> [f64; 4] {
        self.correlator_form().correlators()
    }

    /// CHSH value `E00 + E01 + E10 - E11` of the table as given.
    pub fn chsh_value(&self) -> f64 {
        let e = self.correlators();
        e[0] + e[1] + e[2] - e[3]
    }

    pub fn max_abs_diff(&self, other: &BipartiteBox) -> f64 {
        self.p
            .iter()
            .flatten()
            .zip(other.p.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn box_from_correlators(c: &CorrelatorForm) -> BipartiteBox {
    let mut p = [[0.0; 4]; 4];
    for x in 0..2 {
        for y in 0..2 {
            let ex = c.alice_marginal(x);
            let ey = c.bob_marginal(y);
            let exy = c.correlator(2 * x + y);
            for a in 0..2 {
                for b in 0..2 {
                    let sa = sign(a);
                    let sb = sign(b);
                    p[2 * x + y][2 * a + b] = 0.25 * (1.0 + sa * ex + sb * ey + sa * sb * exy);
                }
            }
        }
    }
    BipartiteBox { p }
}

pub fn correlators_from_box(b: &BipartiteBox) -> Result<CorrelatorForm> {
    let report = validate_box(b, DEFAULT_TOL);
    if !report.is_valid() {
        return Err(Error::InvalidBox(report));
    }
    Ok(b.correlator_form())
}

/// CHSH value `d1 + d2 + d3 - eps`; marginals do not enter.
pub fn chsh_value(c: &CorrelatorForm) -> f64 {
    c.d1 + c.d2 + c.d3 - c.eps
}

#[inline]
fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    NonFinite { xy: usize, ab: usize },
    Negativity { xy: usize, ab: usize },
    Normalization { xy: usize },
    /// Alice's marginal on input `x` depends on Bob's input.
    SignallingToAlice { x: usize },
    /// Bob's marginal on input `y` depends on Alice's input.
    SignallingToBob { y: usize },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits = |i: usize| format!("{}{}", i >> 1, i & 1);
        match *self {
            Constraint::NonFinite { xy, ab } => write!(f, "non-finite p({}|{})", bits(ab), bits(xy)),
            Constraint::Negativity { xy, ab } => write!(f, "negative p({}|{})", bits(ab), bits(xy)),
            Constraint::Normalization { xy } => write!(f, "normalization of row {}", bits(xy)),
            Constraint::SignallingToAlice { x } => write!(f, "no-signalling p(a|x={x}) varies with y"),
            Constraint::SignallingToBob { y } => write!(f, "no-signalling p(b|y={y}) varies with x"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    /// Negative entries report the entry itself; the other constraints
    /// report an absolute deviation.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} ({})", v.constraint, v.magnitude)?;
        }
        Ok(())
    }
}

/// Checks positivity, normalization and no-signalling in both directions.
pub fn validate_box(b: &BipartiteBox, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    for xy in 0..4 {
        for ab in 0..4 {
            let v = b.p[xy][ab];
            if !v.is_finite() {
                violations.push(Violation {
                    constraint: Constraint::NonFinite { xy, ab },
                    magnitude: f64::NAN,
                });
            } else if v < -tol {
                violations.push(Violation {
                    constraint: Constraint::Negativity { xy, ab },
                    magnitude: v,
                });
            }
        }
        let dev = (b.p[xy].iter().sum::<f64>() - 1.0).abs();
        if dev > tol {
            violations.push(Violation {
                constraint: Constraint::Normalization { xy },
                magnitude: dev,
            });
        }
    }
    for x in 0..2 {
        let alice0 = |y: usize| b.prob(x, y, 0, 0) + b.prob(x, y, 0, 1);
        let dev = (alice0(0) - alice0(1)).abs();
        if dev > tol {
            violations.push(Violation {
                constraint: Constraint::SignallingToAlice { x },
                magnitude: dev,
            });
        }
    }
    for y in 0..2 {
        let bob0 = |x: usize| b.prob(x, y, 0, 0) + b.prob(x, y, 1, 0);
        let dev = (bob0(0) - bob0(1)).abs();
        if dev > tol {
            violations.push(Violation {
                constraint: Constraint::SignallingToBob { y },
                magnitude: dev,
            });
        }
    }
    ValidationReport { violations }
}

/// The named box families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedBox {
    /// Trivial marginals, correlators `(δ, δ, δ, -δ)`.
    Isotropic { delta: f64 },
    /// All four marginals `α`, correlators `(1, 1, 1, ε)`.
    Correlated { alpha: f64, eps: f64 },
    /// `α = γ`, `β = ω`, correlators `(δ, δ, δ, ε)`.
    Symmetric {
        alpha: f64,
        beta: f64,
        delta: f64,
        eps: f64,
    },
    General(CorrelatorForm),
}

impl NamedBox {
    pub fn correlator_form(&self) -> CorrelatorForm {
        match *self {
            NamedBox::Isotropic { delta } => {
                CorrelatorForm::from_parts([0.0; 2], [0.0; 2], [delta, delta, delta, -delta])
            }
            NamedBox::Correlated { alpha, eps } => {
                CorrelatorForm::from_parts([alpha; 2], [alpha; 2], [1.0, 1.0, 1.0, eps])
            }
            NamedBox::Symmetric {
                alpha,
                beta,
                delta,
                eps,
            } => CorrelatorForm::from_parts([alpha, beta], [alpha, beta], [delta, delta, delta, eps]),
            NamedBox::General(c) => c,
        }
    }

    pub fn to_box(&self) -> BipartiteBox {
        self.correlator_form().to_box()
    }
}

/// Builds a named family member from a kind string and its parameters:
/// `isotropic(δ)`, `correlated(α, ε)`, `symmetric(α, β, δ, ε)` or
/// `general(α, β, γ, ω, d1, d2, d3, ε)`.
pub fn make_named_box(kind: &str, params: &[f64]) -> Result<CorrelatorForm> {
    let expect = |n: usize| -> Result<()> {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::ArityMismatch(format!(
                "`{kind}` takes {n} parameters, got {}",
                params.len()
            )))
        }
    };
    let named = match kind {
        "isotropic" => {
            expect(1)?;
            NamedBox::Isotropic { delta: params[0] }
        }
        "correlated" => {
            expect(2)?;
            NamedBox::Correlated {
                alpha: params[0],
                eps: params[1],
            }
        }
        "symmetric" => {
            expect(4)?;
            NamedBox::Symmetric {
                alpha: params[0],
                beta: params[1],
                delta: params[2],
                eps: params[3],
            }
        }
        "general" => {
            expect(8)?;
            let p = params;
            NamedBox::General(CorrelatorForm::from_parts(
                [p[0], p[1]],
                [p[2], p[3]],
                [p[4], p[5], p[6], p[7]],
            ))
        }
        other => return Err(Error::UnknownKind(other.to_string())),
    };
    Ok(named.correlator_form())
}
