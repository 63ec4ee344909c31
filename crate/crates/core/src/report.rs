//! Helpers shared by serialisable reports.

use crate::{CVec, C64};

/// `[re, im]` pairs of a complex vector.
pub fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

/// Inverse of [`pairs`].
pub fn from_pairs(p: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(p.len(), p.iter().map(|x| C64::new(x[0], x[1])))
}

/// Maps non-finite values to `None` so that JSON output stays valid.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
