//! Grid scans of the symmetric family `(α, β, δ, ε)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::{cc_threshold, in_pool};
use crate::box_core::{CorrelatorForm, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::wirings::{allcock_value, apply_nonadaptive_multi, or_protocol, parity_protocol, AllcockParams};
use crate::xor_multipartite::MultipartyBox;

/// Largest number of grid cells a scan will evaluate.
pub const GRID_BUDGET: u64 = 10_000_000;

pub const CSV_HEADER: [&str; 11] = [
    "alpha",
    "beta",
    "delta",
    "eps",
    "valid",
    "V",
    "V_parity",
    "V_OR",
    "V_A_fit",
    "winner",
    "collapses_cc",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WiringLabel {
    /// The undistilled box.
    None,
    Parity,
    Or,
    Allcock,
}

impl fmt::Display for WiringLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WiringLabel::None => "none",
            WiringLabel::Parity => "parity",
            WiringLabel::Or => "or",
            WiringLabel::Allcock => "allcock",
        })
    }
}

impl FromStr for WiringLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "v" => Ok(WiringLabel::None),
            "parity" | "xor" => Ok(WiringLabel::Parity),
            "or" => Ok(WiringLabel::Or),
            "allcock" | "a" => Ok(WiringLabel::Allcock),
            other => Err(Error::parse(1, format!("unknown protocol label `{other}`"))),
        }
    }
}

/// How the free parameters of the adaptive closed form follow the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllcockMapping {
    Fixed(AllcockParams),
    /// `a = b = c = 0`, `d = -α`: the choice that reproduces the
    /// correlated-family tables.
    DFromAlpha,
}

impl AllcockMapping {
    pub fn params(&self, alpha: f64) -> AllcockParams {
        match self {
            AllcockMapping::Fixed(p) => *p,
            AllcockMapping::DFromAlpha => AllcockParams {
                d: -alpha,
                ..AllcockParams::default()
            },
        }
    }
}

impl FromStr for AllcockMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" => Ok(AllcockMapping::Fixed(AllcockParams::default())),
            "neg-alpha" => Ok(AllcockMapping::DFromAlpha),
            list => {
                let v: Vec<f64> = list
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(1, format!("bad parameter list `{list}`")))?;
                match v[..] {
                    [a, b, c, d] => Ok(AllcockMapping::Fixed(AllcockParams { a, b, c, d })),
                    _ => Err(Error::parse(1, "expected zero, neg-alpha or a,b,c,d")),
                }
            }
        }
    }
}

/// Inclusive arithmetic range `start, start + step, … ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ScanRange {
    pub fn single(v: f64) -> Self {
        ScanRange {
            start: v,
            stop: v,
            step: 1.0,
        }
    }

    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let ok = [start, stop, step].iter().all(|v| v.is_finite()) && step > 0.0 && stop >= start;
        if !ok {
            return Err(Error::parse(1, format!("bad range {start}:{stop}:{step}")));
        }
        Ok(ScanRange { start, stop, step })
    }

    pub fn len(&self) -> u64 {
        ((self.stop - self.start) / self.step + 1e-9).floor() as u64 + 1
    }

    /// Ranges always hold their start point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Points are `start + i·step`, so long ranges do not accumulate error.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.start + i as f64 * self.step)
    }
}

impl FromStr for ScanRange {
    type Err = Error;

    /// `a:b:step` or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let nums: Vec<f64> = s
            .split(':')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(1, format!("bad range `{s}`")))?;
        match nums[..] {
            [v] => Ok(ScanRange::single(v)),
            [a, b, step] => ScanRange::new(a, b, step),
            _ => Err(Error::parse(1, format!("expected a:b:step or a value, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub alpha: ScanRange,
    /// `None` sets `β = α` in every cell.
    pub beta: Option<ScanRange>,
    pub delta: ScanRange,
    pub eps: ScanRange,
}

impl ScanGrid {
    pub fn cells(&self) -> u64 {
        let beta = self.beta.map_or(1, |b| b.len());
        self.alpha.len() * beta * self.delta.len() * self.eps.len()
    }

    fn points(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::new();
        for alpha in self.alpha.values() {
            let betas: Vec<f64> = match &self.beta {
                Some(r) => r.values().collect(),
                None => vec![alpha],
            };
            for &beta in &betas {
                for delta in self.delta.values() {
                    for eps in self.eps.values() {
                        out.push([alpha, beta, delta, eps]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub eps: f64,
    pub valid: bool,
    pub v: f64,
    pub v_parity: f64,
    pub v_or: f64,
    pub v_a_fit: f64,
    pub winner: WiringLabel,
    pub collapses_cc: bool,
}

impl RegionRow {
    pub fn value(&self, label: WiringLabel) -> f64 {
        match label {
            WiringLabel::None => self.v,
            WiringLabel::Parity => self.v_parity,
            WiringLabel::Or => self.v_or,
            WiringLabel::Allcock => self.v_a_fit,
        }
    }
}

/// Evaluates every cell of `grid`. The undistilled value always competes;
/// `labels` adds distilled values in priority order, and a later label wins
/// only with a strictly larger value. Invalid cells are evaluated as well.
pub fn region_scan(
    grid: &ScanGrid,
    labels: &[WiringLabel],
    mapping: AllcockMapping,
    threads: usize,
) -> Result<Vec<RegionRow>> {
    let cells = grid.cells();
    if cells > GRID_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "scan grid cells",
            needed: cells as u128,
            limit: GRID_BUDGET as u128,
        });
    }
    let mut contenders = vec![WiringLabel::None];
    contenders.extend(labels.iter().filter(|l| **l != WiringLabel::None));
    let parity = parity_protocol(2, 2);
    let or = or_protocol();
    let threshold = cc_threshold();
    let points = grid.points();
    in_pool(threads, || {
        points
            .par_iter()
            .map(|&[alpha, beta, delta, eps]| {
                let form = CorrelatorForm::from_parts([alpha, beta], [alpha, beta], [delta, delta, delta, eps]);
                let b = form.to_box();
                let mb = MultipartyBox::from(&b);
                let pair = [mb.clone(), mb];
                let value = |proto| -> Result<f64> {
                    Ok(apply_nonadaptive_multi(&pair, proto)?.to_bipartite()?.chsh_value())
                };
                let mut row = RegionRow {
                    alpha,
                    beta,
                    delta,
                    eps,
                    valid: b.validate(DEFAULT_TOL).is_valid(),
                    v: form.chsh_value(),
                    v_parity: value(&parity)?,
                    v_or: value(&or)?,
                    v_a_fit: allcock_value(delta, eps, mapping.params(alpha).combination()),
                    winner: WiringLabel::None,
                    collapses_cc: false,
                };
                let mut best = row.v;
                for &label in &contenders[1..] {
                    if row.value(label) > best {
                        best = row.value(label);
                        row.winner = label;
                    }
                }
                row.collapses_cc = row.valid && best > threshold;
                Ok(row)
            })
            .collect()
    })
}

/// Writes rows as CSV with 12 significant digits.
pub fn write_csv<W: Write>(rows: &[RegionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_sig(r.alpha),
            fmt_sig(r.beta),
            fmt_sig(r.delta),
            fmt_sig(r.eps),
            r.valid.to_string(),
            fmt_sig(r.v),
            fmt_sig(r.v_parity),
            fmt_sig(r.v_or),
            fmt_sig(r.v_a_fit),
            r.winner.to_string(),
            r.collapses_cc.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Smallest and largest `ε` among valid rows won by OR.
pub fn or_interval(rows: &[RegionRow]) -> Option<(f64, f64)> {
    rows.iter()
        .filter(|r| r.valid && r.winner == WiringLabel::Or)
        .fold(None, |acc, r| match acc {
            None => Some((r.eps, r.eps)),
            Some((lo, hi)) => Some((lo.min(r.eps), hi.max(r.eps))),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_sweep(alpha: f64) -> ScanGrid {
        ScanGrid {
            alpha: ScanRange::single(alpha),
            beta: None,
            delta: ScanRange::single(1.0),
            eps: ScanRange::new(-1.0, 1.0, 1e-4).unwrap(),
        }
    }

    fn interval(alpha: f64) -> (f64, f64) {
        let rows = region_scan(
            &eps_sweep(alpha),
            &[WiringLabel::Parity, WiringLabel::Or],
            AllcockMapping::DFromAlpha,
            0,
        )
        .unwrap();
        or_interval(&rows).unwrap()
    }

    #[test]
    fn or_region_at_one_half() {
        let (lo, hi) = interval(0.5);
        assert!(lo.abs() < 1e-9);
        assert!((hi - 1.0 / 3.0).abs() < 2e-4);
    }

    #[test]
    fn or_region_at_035() {
        let (lo, hi) = interval(0.35);
        assert!((lo + 0.3).abs() < 1e-3);
        assert!((hi - 0.133).abs() < 1e-3);
    }

    #[test]
    fn trivial_marginals_favor_parity() {
        let grid = ScanGrid {
            alpha: ScanRange::single(0.0),
            beta: None,
            delta: ScanRange::single(1.0),
            eps: ScanRange::new(0.01, 1.0, 0.01).unwrap(),
        };
        let rows = region_scan(&grid, &[WiringLabel::Parity, WiringLabel::Or], AllcockMapping::DFromAlpha, 0).unwrap();
        for r in rows.iter().filter(|r| r.valid && r.eps < 1.0 - 1e-9) {
            assert_eq!(r.winner, WiringLabel::Parity, "eps = {}", r.eps);
        }
    }

    #[test]
    fn ranges() {
        let r: ScanRange = "0:1:0.1".parse().unwrap();
        assert_eq!(r.len(), 11);
        assert_eq!(r.values().last(), Some(1.0));
        assert_eq!("0.5".parse::<ScanRange>().unwrap().len(), 1);
        assert!("1:0:0.1".parse::<ScanRange>().is_err());
        assert!("0:1:0".parse::<ScanRange>().is_err());
        assert!("x".parse::<ScanRange>().is_err());
    }

    #[test]
    fn csv_output() {
        let grid = ScanGrid {
            alpha: ScanRange::single(0.5),
            beta: None,
            delta: ScanRange::single(1.0),
            eps: ScanRange::single(0.01),
        };
        let rows = region_scan(&grid, &[WiringLabel::Parity, WiringLabel::Or], AllcockMapping::DFromAlpha, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "alpha,beta,delta,eps,valid,V,V_parity,V_OR,V_A_fit,winner,collapses_cc\n\
             0.5,0.5,1,0.01,true,2.99,2.9999,3.239975,2.992475,or,false\n"
        );
    }

    #[test]
    fn invalid_cells_are_marked_not_skipped() {
        let grid = ScanGrid {
            alpha: ScanRange::single(0.5),
            beta: None,
            delta: ScanRange::single(1.0),
            eps: ScanRange::single(-0.1),
        };
        let rows = region_scan(&grid, &[WiringLabel::Or], AllcockMapping::DFromAlpha, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].valid);
        assert!(!rows[0].collapses_cc);
    }

    #[test]
    fn labels_and_mappings_parse() {
        assert_eq!("OR".parse::<WiringLabel>().unwrap(), WiringLabel::Or);
        assert!("and".parse::<WiringLabel>().is_err());
        assert_eq!("neg-alpha".parse::<AllcockMapping>().unwrap().params(0.3).d, -0.3);
        let AllcockMapping::Fixed(p) = "0.01,0.01,0.01,0.01".parse().unwrap() else { panic!() };
        assert!((p.combination() - 0.02).abs() < 1e-15);
        assert!("1,2".parse::<AllcockMapping>().is_err());
    }

    #[test]
    fn budget() {
        let grid = ScanGrid {
            alpha: ScanRange::new(0.0, 1.0, 1e-4).unwrap(),
            beta: None,
            delta: ScanRange::single(1.0),
            eps: ScanRange::new(0.0, 1.0, 1e-4).unwrap(),
        };
        assert!(matches!(
            region_scan(&grid, &[], AllcockMapping::DFromAlpha, 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
