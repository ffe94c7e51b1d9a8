//! Replacing an adaptive two-copy wiring of isotropic boxes by the parity
//! wiring of two different boxes.
//!
//! For each input `xy`, the probability `q_xy(δ)` of output `00` is a
//! polynomial of degree at most two in the isotropic bias. Splitting the
//! correlator polynomial into affine factors `c₁δ + c₀` gives per-box
//! correlators whose product, which is what parity produces, is the adaptive
//! correlator.

use std::fmt;

use nalgebra::DMatrix;

use crate::box_core::{BipartiteBox, CorrelatorForm, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::wirings::{apply_adaptive, apply_nonadaptive, parity_protocol, AdaptiveTwoCopyProtocol};

/// Interpolation nodes for two copies.
pub const SAMPLE_POINTS: [f64; 3] = [0.0, 0.5, 1.0];

/// Biases at which constructed boxes are validated and certified.
pub fn check_points() -> impl Iterator<Item = f64> {
    (0..=10).map(|i| i as f64 / 10.0)
}

const ROOT_TOL: f64 = 1e-9;

/// Real polynomial in δ, coefficients from the constant term up.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPolynomial {
    coeffs: Vec<f64>,
}

impl DeltaPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        DeltaPolynomial { coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree after dropping coefficients below `tol`; `None` for zero.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.abs() > tol)
    }

    pub fn eval(&self, delta: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * delta + c)
    }

    pub fn mul(&self, other: &DeltaPolynomial) -> DeltaPolynomial {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return DeltaPolynomial::new(Vec::new());
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        DeltaPolynomial::new(out)
    }

    /// `scale·p + shift`.
    pub fn affine_map(&self, scale: f64, shift: f64) -> DeltaPolynomial {
        let mut c: Vec<f64> = self.coeffs.iter().map(|v| v * scale).collect();
        if c.is_empty() {
            c.push(0.0);
        }
        c[0] += shift;
        DeltaPolynomial::new(c)
    }

    pub fn max_coeff_diff(&self, other: &DeltaPolynomial) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0.0);
                let b = other.coeffs.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Exact interpolation through `points` with distinct abscissae, by
    /// Newton divided differences.
    pub fn interpolate(points: &[(f64, f64)]) -> DeltaPolynomial {
        let n = points.len();
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let mut dd: Vec<f64> = points.iter().map(|p| p.1).collect();
        for level in 1..n {
            for i in (level..n).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
            }
        }
        // Horner on the Newton form
        let mut poly = DeltaPolynomial::new(vec![dd[n - 1]]);
        for i in (0..n - 1).rev() {
            poly = poly.mul(&DeltaPolynomial::new(vec![-xs[i], 1.0])).affine_map(1.0, dd[i]);
        }
        poly
    }
}

impl fmt::Display for DeltaPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| match k {
                0 => format!("{c}"),
                1 => format!("{c}·δ"),
                _ => format!("{c}·δ^{k}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

fn isotropic(delta: f64) -> BipartiteBox {
    CorrelatorForm::from_parts([0.0; 2], [0.0; 2], [delta, delta, delta, -delta]).to_box()
}

/// `P(ab | xy)` of the adaptive wiring on two isotropic boxes, as a
/// polynomial in δ.
pub fn interpolate_output(proto: &AdaptiveTwoCopyProtocol, xy: usize, ab: usize) -> Result<DeltaPolynomial> {
    let points = SAMPLE_POINTS
        .iter()
        .map(|&d| {
            let iso = isotropic(d);
            Ok((d, apply_adaptive(&iso, &iso, proto)?.p[xy][ab]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaPolynomial::interpolate(&points))
}

/// `q_xy(δ) = P(00 | xy)`.
pub fn interpolate_qxy(proto: &AdaptiveTwoCopyProtocol, xy: usize) -> Result<DeltaPolynomial> {
    interpolate_output(proto, xy, 0)
}

/// `c1·δ + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFactor {
    pub c1: f64,
    pub c0: f64,
}

impl AffineFactor {
    pub fn eval(&self, delta: f64) -> f64 {
        self.c1 * delta + self.c0
    }

    pub fn as_polynomial(&self) -> DeltaPolynomial {
        DeltaPolynomial::new(vec![self.c0, self.c1])
    }

    /// Largest `|value|` on `[0, 1]`.
    pub fn sup_norm(&self) -> f64 {
        self.c0.abs().max(self.eval(1.0).abs())
    }

    fn flipped(self) -> Self {
        AffineFactor {
            c1: -self.c1,
            c0: -self.c0,
        }
    }
}

impl fmt::Display for AffineFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·δ + {}", self.c1, self.c0)
    }
}

/// Per-input affine factors, one list of `n` factors per `xy`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFactorization {
    pub factors: [Vec<AffineFactor>; 4],
}

impl AffineFactorization {
    pub fn product(&self, xy: usize) -> DeltaPolynomial {
        self.factors[xy]
            .iter()
            .fold(DeltaPolynomial::new(vec![1.0]), |acc, f| acc.mul(&f.as_polynomial()))
    }

    pub fn copies(&self) -> usize {
        self.factors[0].len()
    }
}

fn real_roots(r: &DeltaPolynomial, degree: usize) -> Result<Vec<f64>> {
    let c = r.coefficients();
    match degree {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-c[0] / c[1]]),
        2 => {
            let (a, b, c0) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * c0;
            if disc < -ROOT_TOL * (b * b + (4.0 * a * c0).abs()).max(1.0) {
                return Err(Error::NoRealFactorization);
            }
            let sq = disc.max(0.0).sqrt();
            // avoids cancellation in the smaller root
            let q = -0.5 * (b + b.signum() * sq);
            if q == 0.0 {
                return Ok(vec![0.0, 0.0]);
            }
            Ok(vec![q / a, c0 / q])
        }
        _ => {
            let lead = c[degree];
            let mut companion = DMatrix::<f64>::zeros(degree, degree);
            for i in 1..degree {
                companion[(i, i - 1)] = 1.0;
            }
            for i in 0..degree {
                companion[(i, degree - 1)] = -c[i] / lead;
            }
            companion
                .complex_eigenvalues()
                .iter()
                .map(|z| {
                    if z.im.abs() > ROOT_TOL.sqrt() {
                        Err(Error::NoRealFactorization)
                    } else {
                        Ok(z.re)
                    }
                })
                .collect()
        }
    }
}

/// Splits `r` into `n` affine factors mapping `[0, 1]` into `[-1, 1]`,
/// each factor positive at δ = 1 where the signs allow.
pub fn affine_factorize(r: &DeltaPolynomial, n: usize) -> Result<Vec<AffineFactor>> {
    affine_factorize_oriented(r, n, 1.0)
}

/// As [`affine_factorize`], orienting root factors so their sign at δ = 1
/// (or their slope, for a root at 1) is `sign`.
///
/// Each root `ρ` becomes a factor `k(δ - ρ)` with `|k| = u / max(|ρ|, |1 - ρ|)`
/// and every factor peaks at `u = P^(1/n)`, where `P` is the smallest
/// achievable product of peaks. Degree below `n` is padded with constant
/// factors `u`. If the oriented product has the wrong sign, the first root
/// factor is negated.
pub fn affine_factorize_oriented(r: &DeltaPolynomial, n: usize, sign: f64) -> Result<Vec<AffineFactor>> {
    let Some(degree) = r.degree(1e-12) else {
        let mut out = vec![AffineFactor { c1: 0.0, c0: 0.0 }];
        out.extend(std::iter::repeat_n(AffineFactor { c1: 0.0, c0: 1.0 }, n.saturating_sub(1)));
        return Ok(out);
    };
    if degree > n {
        return Err(Error::ArityMismatch(format!(
            "degree {degree} polynomial split into {n} factors"
        )));
    }
    let lead = r.coefficients()[degree];
    let mut roots = real_roots(r, degree)?;
    roots.sort_by(|a, b| b.total_cmp(a));
    let peaks: Vec<f64> = roots.iter().map(|rho| rho.abs().max((1.0 - rho).abs())).collect();
    let needed = lead.abs() * peaks.iter().product::<f64>();
    if needed > 1.0 + ROOT_TOL {
        return Err(Error::RangeInfeasible { needed });
    }
    let u = needed.powf(1.0 / n as f64);
    let mut factors: Vec<AffineFactor> = roots
        .iter()
        .zip(&peaks)
        .map(|(&rho, &peak)| {
            let k = u / peak;
            let f = AffineFactor { c1: k, c0: -k * rho };
            let at_one = f.eval(1.0);
            let s = if at_one.abs() > ROOT_TOL { at_one.signum() } else { f.c1.signum() };
            if s == sign {
                f
            } else {
                f.flipped()
            }
        })
        .collect();
    factors.extend(std::iter::repeat_n(AffineFactor { c1: 0.0, c0: u }, n - degree));
    let product_lead: f64 = factors.iter().map(|f| if f.c1 != 0.0 { f.c1 } else { f.c0 }).product();
    if product_lead.signum() != lead.signum() {
        factors[0] = factors[0].flipped();
    }
    Ok(factors)
}

/// Correlator of the adaptive output on `xy`, as a polynomial in δ.
pub fn correlator_polynomial(proto: &AdaptiveTwoCopyProtocol, xy: usize) -> Result<DeltaPolynomial> {
    let parts = (0..4)
        .map(|ab| interpolate_output(proto, xy, ab))
        .collect::<Result<Vec<_>>>()?;
    let combined = (0..3)
        .map(|k| {
            parts
                .iter()
                .enumerate()
                .map(|(ab, p)| {
                    let c = p.coefficients().get(k).copied().unwrap_or(0.0);
                    if ab == 0 || ab == 3 {
                        c
                    } else {
                        -c
                    }
                })
                .sum()
        })
        .collect();
    Ok(DeltaPolynomial::new(combined))
}

/// `(−1)^{xy}`: the sign the isotropic box itself carries on `xy`.
fn preferred_sign(xy: usize) -> f64 {
    if xy == 3 {
        -1.0
    } else {
        1.0
    }
}

/// Deviations between the parity-wired constructed boxes and the adaptive
/// output over [`check_points`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceCertificate {
    /// Largest entrywise deviation over the full output distribution.
    pub distribution: f64,
    /// Largest deviation of `P(00 | xy)` alone.
    pub p00: f64,
}

impl fmt::Display for EquivalenceCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "distribution={:e} p00={:e}", self.distribution, self.p00)
    }
}

/// Boxes `N_1 … N_n` as functions of δ, with the evidence they work.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentBoxes {
    pub factorization: AffineFactorization,
    /// `alice[i][x]`, the marginal `E_x` of box `i`.
    pub alice: Vec<[f64; 2]>,
    pub bob: Vec<[f64; 2]>,
    pub certificate: EquivalenceCertificate,
}

impl EquivalentBoxes {
    pub fn forms_at(&self, delta: f64) -> Vec<CorrelatorForm> {
        (0..self.factorization.copies())
            .map(|i| {
                let e = std::array::from_fn(|xy| self.factorization.factors[xy][i].eval(delta));
                CorrelatorForm::from_parts(self.alice[i], self.bob[i], e)
            })
            .collect()
    }

    pub fn boxes_at(&self, delta: f64) -> Vec<BipartiteBox> {
        self.forms_at(delta).iter().map(CorrelatorForm::to_box).collect()
    }
}

fn split_marginal(t: f64) -> [f64; 2] {
    let root = t.abs().sqrt();
    [root, t.signum() * root]
}

fn factorize_all(proto: &AdaptiveTwoCopyProtocol, correlators: bool) -> Result<AffineFactorization> {
    let factors = (0..4)
        .map(|xy| {
            let r = if correlators {
                correlator_polynomial(proto, xy)?
            } else {
                interpolate_qxy(proto, xy)?.affine_map(4.0, -1.0)
            };
            affine_factorize_oriented(&r, 2, preferred_sign(xy))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AffineFactorization {
        factors: factors.try_into().expect("four inputs"),
    })
}

fn certify(proto: &AdaptiveTwoCopyProtocol, eq: &EquivalentBoxes) -> Result<EquivalenceCertificate> {
    let mut cert = EquivalenceCertificate {
        distribution: 0.0,
        p00: 0.0,
    };
    for delta in check_points() {
        let boxes = eq.boxes_at(delta);
        for b in &boxes {
            let report = b.validate(DEFAULT_TOL);
            if !report.is_valid() {
                return Err(Error::InvalidConstructedBox { delta, report });
            }
        }
        let wired = apply_nonadaptive(&boxes, &parity_protocol(2, boxes.len()))?;
        let iso = isotropic(delta);
        let target = apply_adaptive(&iso, &iso, proto)?;
        cert.distribution = cert.distribution.max(wired.max_abs_diff(&target));
        for xy in 0..4 {
            cert.p00 = cert.p00.max((wired.p[xy][0] - target.p[xy][0]).abs());
        }
    }
    Ok(cert)
}

/// Boxes whose parity wiring reproduces the full adaptive output: the
/// correlators are factored and the output marginals split as
/// `√|t|, sign(t)·√|t|`.
pub fn build_equivalent_boxes(proto: &AdaptiveTwoCopyProtocol) -> Result<EquivalentBoxes> {
    let factorization = factorize_all(proto, true)?;
    // output marginals do not depend on δ; read them at δ = 1
    let out = correlate(proto, 1.0)?;
    let split_a = [split_marginal(out.alpha), split_marginal(out.beta)];
    let split_b = [split_marginal(out.gamma), split_marginal(out.omega)];
    let alice = (0..2).map(|i| [split_a[0][i], split_a[1][i]]).collect();
    let bob = (0..2).map(|i| [split_b[0][i], split_b[1][i]]).collect();
    let mut eq = EquivalentBoxes {
        factorization,
        alice,
        bob,
        certificate: EquivalenceCertificate {
            distribution: f64::NAN,
            p00: f64::NAN,
        },
    };
    eq.certificate = certify(proto, &eq)?;
    Ok(eq)
}

/// Boxes with trivial marginals whose correlators factor `4q_xy − 1`; their
/// parity wiring matches the adaptive `P(00 | xy)`, and the full
/// distribution only when the adaptive output has trivial marginals.
pub fn build_p00_equivalent_boxes(proto: &AdaptiveTwoCopyProtocol) -> Result<EquivalentBoxes> {
    let factorization = factorize_all(proto, false)?;
    let mut eq = EquivalentBoxes {
        factorization,
        alice: vec![[0.0; 2]; 2],
        bob: vec![[0.0; 2]; 2],
        certificate: EquivalenceCertificate {
            distribution: f64::NAN,
            p00: f64::NAN,
        },
    };
    eq.certificate = certify(proto, &eq)?;
    Ok(eq)
}

fn correlate(proto: &AdaptiveTwoCopyProtocol, delta: f64) -> Result<CorrelatorForm> {
    let iso = isotropic(delta);
    Ok(apply_adaptive(&iso, &iso, proto)?.correlator_form())
}
