//! Text formats: box files and fixed-precision number output.
//!
//! Box files are line based, `#` starts a comment, and the first record is
//! `kind=…`:
//!
//! ```text
//! kind=correlators
//! alpha=0.5
//! beta=0.5, gamma=0.5, omega=0.5
//! d1=1
//! d2=1
//! d3=1
//! eps=0.01
//! ```
//!
//! `kind=matrix` takes `row00=p,p,p,p` … `row11=…` (outputs `00,01,10,11`),
//! and `kind=xor` takes `n=…`, `f=<2^n bits>`, `delta=<2^n reals>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::box_core::{BipartiteBox, CorrelatorForm};
use crate::error::{Error, Result};
use crate::xor_multipartite::{MultipartiteXorBox, XorGame};

/// Significant digits used for every number written by this crate.
pub const SIG_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };

    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if !(-7..=15).contains(&exp) {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        let _ = write!(out, "e{exp}");
    } else if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(digits);
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            out.push_str(digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

/// A parsed box file.
#[derive(Debug, Clone, PartialEq)]
pub enum BoxFile {
    Correlators(CorrelatorForm),
    Matrix(BipartiteBox),
    Xor(MultipartiteXorBox),
}

impl BoxFile {
    /// The bipartite box, if the file describes one.
    pub fn bipartite(&self) -> Option<BipartiteBox> {
        match self {
            BoxFile::Correlators(c) => Some(c.to_box()),
            BoxFile::Matrix(b) => Some(*b),
            BoxFile::Xor(_) => None,
        }
    }
}

/// Raw `key=value` records of a box file, in file order.
#[derive(Debug, Clone)]
pub struct Records {
    pub kind: String,
    pub kind_line: usize,
    fields: BTreeMap<String, (usize, String)>,
}

impl Records {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut fields = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(line_no, format!("expected key=value, got `{line}`")));
            };
            let key = key.trim();
            if kind.is_none() {
                if key != "kind" {
                    return Err(Error::parse(line_no, "first record must be kind=…"));
                }
                kind = Some((value.trim().to_string(), line_no));
                continue;
            }
            // `a=1, b=2` on one line; a comma not followed by `key=` belongs
            // to the value (matrix rows, delta lists)
            for (k, v) in split_pairs(key, value) {
                if fields.insert(k.clone(), (line_no, v)).is_some() {
                    return Err(Error::parse(line_no, format!("duplicate key `{k}`")));
                }
            }
        }
        let (kind, kind_line) = kind.ok_or_else(|| Error::parse(0, "missing kind=… record"))?;
        Ok(Records {
            kind,
            kind_line,
            fields,
        })
    }

    pub fn take(&mut self, key: &str) -> Result<(usize, String)> {
        self.fields
            .remove(key)
            .ok_or_else(|| Error::parse(self.kind_line, format!("missing `{key}`")))
    }

    pub fn finish(self) -> Result<()> {
        match self.fields.into_iter().next() {
            Some((k, (line, _))) => Err(Error::parse(line, format!("unexpected key `{k}`"))),
            None => Ok(()),
        }
    }
}

fn split_pairs(first_key: &str, rest: &str) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    let mut key = first_key.to_string();
    let mut value = String::new();
    for piece in rest.split(',') {
        match piece.split_once('=') {
            Some((k, v)) if !value.is_empty() => {
                pairs.push((key, value.trim().to_string()));
                key = k.trim().to_string();
                value = v.to_string();
            }
            _ => {
                if !value.is_empty() {
                    value.push(',');
                }
                value.push_str(piece);
            }
        }
    }
    pairs.push((key, value.trim().to_string()));
    pairs
}

fn parse_f64(line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("`{s}` is not a decimal number")))
}

fn parse_list(line: usize, s: &str, len: usize) -> Result<Vec<f64>> {
    let vals = s
        .split(',')
        .map(|v| parse_f64(line, v))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != len {
        return Err(Error::parse(line, format!("expected {len} values, got {}", vals.len())));
    }
    Ok(vals)
}

pub const CORRELATOR_KEYS: [&str; 8] = ["alpha", "beta", "gamma", "omega", "d1", "d2", "d3", "eps"];
pub const ROW_KEYS: [&str; 4] = ["row00", "row01", "row10", "row11"];

pub fn parse_box_file(text: &str) -> Result<BoxFile> {
    let mut rec = Records::parse(text)?;
    let parsed = match rec.kind.as_str() {
        "correlators" => {
            let mut v = [0.0; 8];
            for (slot, key) in v.iter_mut().zip(CORRELATOR_KEYS) {
                let (line, s) = rec.take(key)?;
                *slot = parse_f64(line, &s)?;
            }
            BoxFile::Correlators(CorrelatorForm::from_parts(
                [v[0], v[1]],
                [v[2], v[3]],
                [v[4], v[5], v[6], v[7]],
            ))
        }
        "matrix" => {
            let mut p = [[0.0; 4]; 4];
            for (row, key) in p.iter_mut().zip(ROW_KEYS) {
                let (line, s) = rec.take(key)?;
                row.copy_from_slice(&parse_list(line, &s, 4)?);
            }
            BoxFile::Matrix(BipartiteBox::new(p))
        }
        "xor" => {
            let (line, n) = rec.take("n")?;
            let n: usize = n
                .parse()
                .map_err(|_| Error::parse(line, format!("`{n}` is not a player count")))?;
            if !(1..=16).contains(&n) {
                return Err(Error::parse(line, format!("player count {n} out of range")));
            }
            let (line, f) = rec.take("f")?;
            let table = f
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::parse(line, format!("`{c}` in truth table"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let game = XorGame::new(n, table).map_err(|e| Error::parse(line, e.to_string()))?;
            let (line, d) = rec.take("delta")?;
            let delta = parse_list(line, &d, 1 << n)?;
            BoxFile::Xor(MultipartiteXorBox::new(game, delta)?)
        }
        other => return Err(Error::UnknownKind(other.to_string())),
    };
    rec.finish()?;
    Ok(parsed)
}

pub fn write_correlators(c: &CorrelatorForm) -> String {
    let mut out = String::from("kind=correlators\n");
    for (key, v) in CORRELATOR_KEYS.iter().zip(c.to_array()) {
        let _ = writeln!(out, "{key}={}", fmt_sig(v));
    }
    out
}

pub fn write_matrix(b: &BipartiteBox) -> String {
    let mut out = String::from("kind=matrix\n");
    for (key, row) in ROW_KEYS.iter().zip(&b.p) {
        let vals: Vec<String> = row.iter().map(|&v| fmt_sig(v)).collect();
        let _ = writeln!(out, "{key}={}", vals.join(","));
    }
    out
}

pub fn write_xor(b: &MultipartiteXorBox) -> String {
    let f: String = b
        .game
        .truth_table()
        .iter()
        .map(|&v| if v { '1' } else { '0' })
        .collect();
    let delta: Vec<String> = b.delta.iter().map(|&v| fmt_sig(v)).collect();
    format!("kind=xor\nn={}\nf={f}\ndelta={}\n", b.players(), delta.join(","))
}
