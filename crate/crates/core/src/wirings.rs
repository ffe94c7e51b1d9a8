//! Local wirings of several boxes into one.
//!
//! Non-adaptive wirings feed every box the players' original inputs and let
//! each player post-process her `m` output bits with a truth table chosen by
//! her own input. Two-copy adaptive wirings let a player choose her input to
//! the second box from her own input and her first-box output.
//!
//! All distributions are computed exactly by enumerating box outcomes.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::box_core::{BipartiteBox, CorrelatorForm, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::xor_multipartite::MultipartyBox;

/// Largest `n·m` (players × copies) enumerated per input.
pub const ENUMERATION_BUDGET: usize = 24;

/// Per-player, per-input output tables over `m` box outputs.
///
/// Table index `s` packs the player's outputs with box `i` in bit `i`.
/// The canonical encoding packs all tables into one integer: player-major,
/// then own input bit, then `s` ascending, starting at bit 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonAdaptiveProtocol {
    n: usize,
    m: usize,
    // tables[2 * player + input][s]
    tables: Vec<Vec<bool>>,
}

impl NonAdaptiveProtocol {
    pub fn new(n: usize, m: usize, tables: Vec<Vec<bool>>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::ArityMismatch("need at least one player and one box".into()));
        }
        if tables.len() != 2 * n || tables.iter().any(|t| t.len() != 1 << m) {
            return Err(Error::ArityMismatch(format!(
                "{n} players with {m} boxes need {} tables of {} entries",
                2 * n,
                1 << m
            )));
        }
        Ok(NonAdaptiveProtocol { n, m, tables })
    }

    /// Every player uses `per_player[j]` regardless of her input.
    pub fn input_free(n: usize, m: usize, per_player: Vec<Vec<bool>>) -> Result<Self> {
        if per_player.len() != n {
            return Err(Error::ArityMismatch(format!(
                "{} tables for {n} players",
                per_player.len()
            )));
        }
        let tables = per_player.into_iter().flat_map(|t| [t.clone(), t]).collect();
        Self::new(n, m, tables)
    }

    /// Builds the protocol from an output rule `rule(player, input, s)`.
    pub fn from_fn(n: usize, m: usize, rule: impl Fn(usize, usize, usize) -> bool) -> Self {
        let tables = (0..2 * n)
            .map(|t| (0..1usize << m).map(|s| rule(t / 2, t % 2, s)).collect())
            .collect();
        NonAdaptiveProtocol { n, m, tables }
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn copies(&self) -> usize {
        self.m
    }

    pub fn output(&self, player: usize, input: usize, s: usize) -> bool {
        self.tables[2 * player + input][s]
    }

    pub fn table(&self, player: usize, input: usize) -> &[bool] {
        &self.tables[2 * player + input]
    }

    pub fn is_input_free(&self) -> bool {
        self.tables.chunks(2).all(|pair| pair[0] == pair[1])
    }

    pub fn encoding(&self) -> BigUint {
        let mut code = BigUint::zero();
        for (bit, v) in self.tables.iter().flatten().enumerate() {
            if *v {
                code.set_bit(bit as u64, true);
            }
        }
        code
    }

    pub fn from_encoding(n: usize, m: usize, code: &BigUint) -> Result<Self> {
        let width = 2 * n * (1usize << m);
        if code.bits() > width as u64 {
            return Err(Error::ArityMismatch(format!(
                "encoding has {} bits, protocol holds {width}",
                code.bits()
            )));
        }
        Ok(Self::from_fn(n, m, |j, v, s| {
            code.bit(((2 * j + v) * (1 << m) + s) as u64)
        }))
    }
}

impl fmt::Display for NonAdaptiveProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "proto=nonadaptive;n={};m={};tables={:x}",
            self.n,
            self.m,
            self.encoding()
        )
    }
}

impl FromStr for NonAdaptiveProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields = protocol_fields(s, "nonadaptive")?;
        let num = |key: &str| -> Result<usize> {
            let v = field(&fields, key)?;
            v.parse()
                .map_err(|_| Error::parse(1, format!("`{key}={v}` is not a count")))
        };
        let (n, m) = (num("n")?, num("m")?);
        if n == 0 || m == 0 || n > 16 || m > 16 {
            return Err(Error::parse(1, "player or box count out of range"));
        }
        Self::from_encoding(n, m, &parse_hex(field(&fields, "tables")?)?)
    }
}

fn protocol_fields<'a>(s: &'a str, want: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let fields: Vec<(&str, &str)> = s
        .trim()
        .split(';')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(1, format!("expected key=value, got `{kv}`")))
        })
        .collect::<Result<_>>()?;
    match field(&fields, "proto")? {
        p if p == want => Ok(fields),
        other => Err(Error::parse(1, format!("expected proto={want}, got proto={other}"))),
    }
}

fn field<'a>(fields: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::parse(1, format!("missing `{key}`")))
}

fn parse_hex(s: &str) -> Result<BigUint> {
    let s = s.trim_start_matches("0x");
    BigUint::parse_bytes(s.as_bytes(), 16)
        .ok_or_else(|| Error::parse(1, format!("`{s}` is not hexadecimal")))
}

/// Every player outputs the XOR of her `m` bits.
pub fn parity_protocol(n: usize, m: usize) -> NonAdaptiveProtocol {
    NonAdaptiveProtocol::from_fn(n, m, |_, _, s| s.count_ones() % 2 == 1)
}

/// Two players, two boxes, each player outputs the OR of her two bits.
pub fn or_protocol() -> NonAdaptiveProtocol {
    NonAdaptiveProtocol::from_fn(2, 2, |_, _, s| s != 0)
}

/// Output distribution of a non-adaptive wiring of `boxes` (one per copy,
/// not necessarily identical), for any number of players.
pub fn apply_nonadaptive_multi(
    boxes: &[MultipartyBox],
    proto: &NonAdaptiveProtocol,
) -> Result<MultipartyBox> {
    let n = proto.players();
    let m = proto.copies();
    if boxes.len() != m {
        return Err(Error::ArityMismatch(format!(
            "protocol wires {m} boxes, got {}",
            boxes.len()
        )));
    }
    if let Some(b) = boxes.iter().find(|b| b.n != n) {
        return Err(Error::ArityMismatch(format!(
            "{}-party box in a {n}-player protocol",
            b.n
        )));
    }
    if n * m > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "non-adaptive enumeration n·m",
            needed: (n * m) as u128,
            limit: ENUMERATION_BUDGET as u128,
        });
    }
    let k = 1usize << n;
    let mask = k - 1;
    let mut p = vec![0.0; k * k];
    let mut s = vec![0usize; n];
    for x in 0..k {
        let rows: Vec<&[f64]> = boxes.iter().map(|b| b.row(x)).collect();
        let out = &mut p[x * k..(x + 1) * k];
        for idx in 0..1usize << (n * m) {
            let mut prob = 1.0;
            s.iter_mut().for_each(|v| *v = 0);
            for (copy, row) in rows.iter().enumerate() {
                let a = (idx >> (n * copy)) & mask;
                prob *= row[a];
                for (j, sj) in s.iter_mut().enumerate() {
                    *sj |= ((a >> (n - 1 - j)) & 1) << copy;
                }
            }
            if prob == 0.0 {
                continue;
            }
            let mut a_out = 0;
            for (j, &sj) in s.iter().enumerate() {
                let xj = (x >> (n - 1 - j)) & 1;
                if proto.output(j, xj, sj) {
                    a_out |= 1 << (n - 1 - j);
                }
            }
            out[a_out] += prob;
        }
    }
    Ok(MultipartyBox { n, p })
}

fn require_valid(b: &BipartiteBox) -> Result<()> {
    let report = b.validate(DEFAULT_TOL);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidBox(report))
    }
}

/// Two-player non-adaptive wiring of valid bipartite boxes.
pub fn apply_nonadaptive(boxes: &[BipartiteBox], proto: &NonAdaptiveProtocol) -> Result<BipartiteBox> {
    if proto.players() != 2 {
        return Err(Error::ArityMismatch(format!(
            "{}-player protocol applied to bipartite boxes",
            proto.players()
        )));
    }
    boxes.iter().try_for_each(require_valid)?;
    let multi: Vec<MultipartyBox> = boxes.iter().map(MultipartyBox::from).collect();
    let out = apply_nonadaptive_multi(&multi, proto)?.to_bipartite()?;
    debug_assert!(out.validate(1e-7).is_valid(), "wiring produced {out:?}");
    Ok(out)
}

/// One player's part of a two-copy adaptive wiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AdaptivePlayer {
    /// Second-box input, indexed `2·input + out1`.
    pub second_input: [bool; 4],
    /// Final output, indexed `4·input + 2·out1 + out2`.
    pub output: [bool; 8],
}

impl AdaptivePlayer {
    pub fn second_input(&self, input: usize, out1: usize) -> usize {
        self.second_input[2 * input + out1] as usize
    }

    pub fn output(&self, input: usize, out1: usize, out2: usize) -> usize {
        self.output[4 * input + 2 * out1 + out2] as usize
    }

    /// 12-bit code: second-input map in bits 0–3, output map in bits 4–11.
    pub fn encoding(&self) -> u32 {
        let mut code = 0;
        for (i, &b) in self.second_input.iter().chain(&self.output).enumerate() {
            code |= (b as u32) << i;
        }
        code
    }

    pub fn from_encoding(code: u32) -> Self {
        let bit = |i: usize| (code >> i) & 1 == 1;
        AdaptivePlayer {
            second_input: std::array::from_fn(bit),
            output: std::array::from_fn(|i| bit(4 + i)),
        }
    }

    pub fn from_fn(
        second_input: impl Fn(usize, usize) -> bool,
        output: impl Fn(usize, usize, usize) -> bool,
    ) -> Self {
        AdaptivePlayer {
            second_input: std::array::from_fn(|i| second_input(i >> 1, i & 1)),
            output: std::array::from_fn(|i| output(i >> 2, (i >> 1) & 1, i & 1)),
        }
    }
}

/// Two-copy adaptive wiring; player 0 is Alice, player 1 is Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AdaptiveTwoCopyProtocol {
    pub players: [AdaptivePlayer; 2],
}

/// Number of distinct two-copy adaptive wirings.
pub const ADAPTIVE_CLASS_SIZE: u64 = 1 << 24;

impl AdaptiveTwoCopyProtocol {
    pub fn new(alice: AdaptivePlayer, bob: AdaptivePlayer) -> Self {
        AdaptiveTwoCopyProtocol {
            players: [alice, bob],
        }
    }

    /// 24-bit code, Alice in the low 12 bits.
    pub fn encoding(&self) -> u32 {
        self.players[0].encoding() | (self.players[1].encoding() << 12)
    }

    pub fn from_encoding(code: u32) -> Result<Self> {
        if u64::from(code) >= ADAPTIVE_CLASS_SIZE {
            return Err(Error::ArityMismatch(format!(
                "adaptive encoding {code:#x} exceeds 24 bits"
            )));
        }
        Ok(Self::new(
            AdaptivePlayer::from_encoding(code & 0xfff),
            AdaptivePlayer::from_encoding(code >> 12),
        ))
    }

    /// Second box gets the original inputs, output is the first box's.
    pub fn identity() -> Self {
        let p = AdaptivePlayer::from_fn(|x, _| x == 1, |_, o1, _| o1 == 1);
        Self::new(p, p)
    }

    /// Second box gets the original inputs, output is the XOR of both boxes.
    pub fn parity() -> Self {
        let p = AdaptivePlayer::from_fn(|x, _| x == 1, |_, o1, o2| (o1 ^ o2) == 1);
        Self::new(p, p)
    }

    /// The smallest-encoding wiring whose output on two isotropic boxes of
    /// bias δ equals [`bs_output_box`]`(δ)`.
    pub fn brunner_skrzypczyk() -> Self {
        Self::from_encoding(BRUNNER_SKRZYPCZYK_ENCODING).expect("24-bit constant")
    }
}

/// Found by exhaustive matching against [`bs_output_box`]; the search is
/// re-run in the test suite.
pub const BRUNNER_SKRZYPCZYK_ENCODING: u32 = 0x56466b;

impl fmt::Display for AdaptiveTwoCopyProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "proto=adaptive2;tables={:06x}", self.encoding())
    }
}

impl FromStr for AdaptiveTwoCopyProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields = protocol_fields(s, "adaptive2")?;
        parse_adaptive_hex(field(&fields, "tables")?)
    }
}

/// Parses the bare hex encoding of an adaptive wiring.
pub fn parse_adaptive_hex(hex: &str) -> Result<AdaptiveTwoCopyProtocol> {
    let code = parse_hex(hex)?;
    if code.bits() > 24 {
        return Err(Error::parse(1, format!("`{hex}` exceeds 24 bits")));
    }
    let code = code.iter_u32_digits().next().unwrap_or(0);
    AdaptiveTwoCopyProtocol::from_encoding(code)
}

/// Output of the adaptive wiring on `box1` followed by `box2`.
pub fn apply_adaptive(
    box1: &BipartiteBox,
    box2: &BipartiteBox,
    proto: &AdaptiveTwoCopyProtocol,
) -> Result<BipartiteBox> {
    require_valid(box1)?;
    require_valid(box2)?;
    let [alice, bob] = &proto.players;
    let mut p = [[0.0; 4]; 4];
    for x in 0..2 {
        for y in 0..2 {
            let row = &mut p[2 * x + y];
            for a1 in 0..2 {
                for b1 in 0..2 {
                    let p1 = box1.prob(x, y, a1, b1);
                    let (u, v) = (alice.second_input(x, a1), bob.second_input(y, b1));
                    for a2 in 0..2 {
                        for b2 in 0..2 {
                            let a = alice.output(x, a1, a2);
                            let b = bob.output(y, b1, b2);
                            row[2 * a + b] += p1 * box2.prob(u, v, a2, b2);
                        }
                    }
                }
            }
        }
    }
    let out = BipartiteBox::new(p);
    debug_assert!(out.validate(1e-7).is_valid(), "wiring produced {out:?}");
    Ok(out)
}

/// The two-copy adaptive output on isotropic boxes of bias `delta`, as a
/// closed-form matrix.
pub fn bs_output_box(delta: f64) -> BipartiteBox {
    let d2 = delta * delta;
    let row = [1.0 + d2, 1.0 - d2, 1.0 - d2, 1.0 + d2].map(|v| v / 4.0);
    let lo = (2.0 - d2 - delta) / 2.0;
    let hi = (2.0 + d2 + delta) / 2.0;
    let last = [lo, hi, hi, lo].map(|v| v / 4.0);
    BipartiteBox::new([row, row, row, last])
}

/// Free parameters of the two-copy adaptive closed form; only the
/// combination `b - a + 2d` enters it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AllcockParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl AllcockParams {
    pub fn combination(&self) -> f64 {
        self.b - self.a + 2.0 * self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormValues {
    pub v_or: f64,
    pub v_a: f64,
    pub v_or_and: f64,
}

/// Closed-form distilled values for the symmetric family.
pub fn closed_form_values(alpha: f64, beta: f64, delta: f64, eps: f64, allcock: &AllcockParams) -> ClosedFormValues {
    let v_or = 0.25 * (3.0 * delta * delta - eps * eps) + 0.5 * (3.0 * delta - eps)
        + (beta + 2.0 * delta - 2.0) * alpha
        + (delta - eps) * beta
        - 0.5 * (alpha * alpha + beta * beta - 1.0);
    ClosedFormValues {
        v_or,
        v_a: allcock_value(delta, eps, allcock.combination()),
        v_or_and: 2.0 * alpha * alpha + 0.25 * eps * eps - 0.5 * eps - 0.75 * delta * delta + 1.5 * delta
            - 0.5,
    }
}

fn allcock_base(delta: f64, eps: f64) -> f64 {
    11.0 * delta * delta + 2.0 * delta - 2.0 * eps * delta - 2.0 * eps - eps * eps
}

/// `V_A` as a function of the combination `b - a + 2d`.
pub fn allcock_value(delta: f64, eps: f64, combination: f64) -> f64 {
    0.25 * (allcock_base(delta, eps) + combination * (delta - eps))
}

/// Solves `V_A(δ, ε, X) = value` for `X = b - a + 2d`; `None` when `δ = ε`.
pub fn fit_allcock_combination(delta: f64, eps: f64, value: f64) -> Option<f64> {
    let slope = delta - eps;
    (slope.abs() > 1e-15).then(|| (4.0 * value - allcock_base(delta, eps)) / slope)
}

/// OR-wiring value on two correlated boxes.
pub fn correlated_or_value(alpha: f64, eps: f64) -> f64 {
    2.75 - 0.25 * eps * eps - 0.5 * eps + alpha * (1.0 - eps)
}

/// Correlator form of the parity wiring of boxes with the given forms:
/// every marginal and correlator multiplies.
pub fn parity_of_correlator_forms(forms: &[CorrelatorForm]) -> CorrelatorForm {
    let mut acc = CorrelatorForm::from_parts([1.0; 2], [1.0; 2], [1.0; 4]);
    for c in forms {
        acc.alpha *= c.alpha;
        acc.beta *= c.beta;
        acc.gamma *= c.gamma;
        acc.omega *= c.omega;
        acc.d1 *= c.d1;
        acc.d2 *= c.d2;
        acc.d3 *= c.d3;
        acc.eps *= c.eps;
    }
    acc
}
