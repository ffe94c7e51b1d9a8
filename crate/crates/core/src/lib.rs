//! Nonlocal boxes with binary inputs and outputs, the local wirings that
//! distill them, and exhaustive searches over wiring classes.
//!
//! Bipartite boxes are stored as `p[xy][ab]` with `xy = 2x + y` and
//! `ab = 2a + b`. Everything is computed by exact enumeration of box
//! outcomes; nothing is sampled.

pub mod box_core;
pub mod equivalence;
pub mod error;
pub mod format;
pub mod fourier_bound;
pub mod search;
pub mod wirings;
pub mod xor_multipartite;

pub use box_core::{
    box_from_correlators, chsh_value, correlators_from_box, make_named_box, validate_box,
    BipartiteBox, CorrelatorForm, ValidationReport, DEFAULT_TOL,
};
pub use error::{Error, Result};
