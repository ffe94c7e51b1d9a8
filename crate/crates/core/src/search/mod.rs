//! Exhaustive searches over wiring classes, grid scans of the symmetric
//! family, and reproduction of the published tables.
//!
//! Every search is deterministic: workers get a static slice of the protocol
//! range and results merge by value, ties going to the smaller canonical
//! encoding. The merge is associative and commutative, so the thread count
//! never changes the answer.

use std::cmp::Ordering;
use std::fmt;

use crate::wirings::{AdaptiveTwoCopyProtocol, NonAdaptiveProtocol};

pub mod adaptive;
pub mod exact;
pub mod nonadaptive;
pub mod region;
pub mod tables;

pub use adaptive::{adaptive_search_matching, adaptive_search_max, adaptive_search_max_pair};
pub use exact::{certify, exact_nonadaptive_max, Certificate, ExactResult};
pub use nonadaptive::{enumerate_nonadaptive_max, enumerate_nonadaptive_max_chsh};
pub use region::{or_interval, region_scan, write_csv, AllcockMapping, RegionRow, ScanGrid, ScanRange, WiringLabel};
pub use tables::{reproduce_tables, CellDiff, TableReport, TableRowReport};

/// Largest protocol class any exhaustive search will enumerate.
pub const PROTOCOL_BUDGET: u64 = 1 << 32;

/// CHSH value beyond which communication complexity becomes trivial.
pub fn cc_threshold() -> f64 {
    4.0 * (2.0f64 / 3.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchClass {
    NonAdaptiveInputFree,
    NonAdaptiveInputDependent,
    Adaptive2,
}

impl fmt::Display for SearchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchClass::NonAdaptiveInputFree => "nonadaptive-input-free",
            SearchClass::NonAdaptiveInputDependent => "nonadaptive-input-dep",
            SearchClass::Adaptive2 => "adaptive2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Protocol {
    NonAdaptive(NonAdaptiveProtocol),
    Adaptive(AdaptiveTwoCopyProtocol),
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::NonAdaptive(p) => p.fmt(f),
            Protocol::Adaptive(p) => p.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_value: f64,
    pub best_protocol: Protocol,
    pub examined: u64,
    pub class: SearchClass,
}

/// A candidate during a search: value and canonical encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub value: f64,
    pub code: u64,
}

impl Candidate {
    pub const NONE: Candidate = Candidate {
        value: f64::NEG_INFINITY,
        code: u64::MAX,
    };

    fn rank(&self, other: &Candidate) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.code.cmp(&self.code))
    }

    pub fn best(self, other: Candidate) -> Candidate {
        if other.rank(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 means rayon's default).
pub(crate) fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to start worker threads")
        .install(f)
}
