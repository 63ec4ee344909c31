//! Maximum-principle evidence that the polynomial hull of a circle in the domain
//! `{|z|² + |1/z|² + |w|² < 3}` reaches the inner boundary point of its annulus.

use crate::error::{ExposeError, Result};
use crate::sampling::{complex_gaussian, stream_rng};
use crate::{C64, TOOL_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Samples on the circle `{|z| = ρ₀, w = 0}`.
pub const CIRCLE_SAMPLES: usize = 4096;

/// Radii `(φ⁻¹, φ)` of the annulus `{|z|² + 1/|z|² < 3}`, with `φ` the golden ratio.
pub fn annulus_radii() -> (f64, f64) {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    (1.0 / golden, golden)
}

/// `|z|² + |1/z|² + |w|² − 3`.
pub fn defining_function(z: C64, w: C64) -> f64 {
    z.norm_sqr() + 1.0 / z.norm_sqr() + w.norm_sqr() - 3.0
}

/// Polynomial `Σ c_{jk} z^j w^k` of total degree at most `degree`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiPoly {
    /// `(j, k, re, im)`.
    pub terms: Vec<(u32, u32, f64, f64)>,
}

impl BiPoly {
    pub fn constant(c: f64) -> Self {
        BiPoly { terms: vec![(0, 0, c, 0.0)] }
    }

    pub fn random(degree: u32, seed: u64, index: u64) -> Self {
        let mut rng = stream_rng(seed, index);
        let mut terms = Vec::new();
        for j in 0..=degree {
            for k in 0..=degree - j {
                let c = complex_gaussian(&mut rng);
                terms.push((j, k, c.re, c.im));
            }
        }
        BiPoly { terms }
    }

    pub fn eval(&self, z: C64, w: C64) -> C64 {
        self.terms.iter().map(|&(j, k, re, im)| C64::new(re, im) * z.powu(j) * w.powu(k)).sum()
    }
}

/// Outcome of the maximum-principle sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullReport {
    pub tool_version: String,
    pub rho0: f64,
    pub poly_count: usize,
    pub degree: u32,
    pub seed: u64,
    pub circle_samples: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Largest value of the defining function on the sampled circle (negative: inside).
    pub circle_max_rho: f64,
    /// Defining function at the inner boundary point.
    pub point_rho: f64,
    pub violations: usize,
    /// Largest `|q(p, 0)| / max_circle |q|`.
    pub tightest_ratio: f64,
    pub label: String,
}

/// Ratio `|q(p, 0)| / max |q|` over the sampled circle of radius `rho0`.
pub fn hull_ratio(q: &BiPoly, rho0: f64, p: f64) -> f64 {
    let zero = C64::new(0.0, 0.0);
    let max = (0..CIRCLE_SAMPLES)
        .map(|k| q.eval(C64::from_polar(rho0, 2.0 * PI * k as f64 / CIRCLE_SAMPLES as f64), zero).norm())
        .fold(0.0, f64::max);
    q.eval(C64::new(p, 0.0), zero).norm() / max
}

/// Draws `poly_count` random polynomials and checks `|q(p, 0)| ≤ max_{|z|=ρ₀} |q(z, 0)|` at
/// `p = (φ⁻¹, 0)`.
pub fn hull_evidence_demo(rho0: f64, poly_count: usize, degree: u32, seed: u64) -> Result<HullReport> {
    let (inner, outer) = annulus_radii();
    if !(rho0 > inner && rho0 < outer) {
        return Err(ExposeError::InvalidInput(format!("rho0 must lie in ({inner}, {outer}), got {rho0}")));
    }
    let zero = C64::new(0.0, 0.0);
    let circle_max_rho = (0..CIRCLE_SAMPLES)
        .map(|k| defining_function(C64::from_polar(rho0, 2.0 * PI * k as f64 / CIRCLE_SAMPLES as f64), zero))
        .fold(f64::NEG_INFINITY, f64::max);
    let ratios: Vec<f64> = (0..poly_count as u64)
        .into_par_iter()
        .map(|i| hull_ratio(&BiPoly::random(degree, seed, i), rho0, inner))
        .collect();
    let violations = ratios.iter().filter(|&&r| !(r <= 1.0)).count();
    Ok(HullReport {
        tool_version: TOOL_VERSION.to_string(),
        rho0,
        poly_count,
        degree,
        seed,
        circle_samples: CIRCLE_SAMPLES,
        inner_radius: inner,
        outer_radius: outer,
        circle_max_rho,
        point_rho: defining_function(C64::new(inner, 0.0), zero),
        violations,
        tightest_ratio: ratios.iter().copied().fold(0.0, f64::max),
        label: "evidence".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_solve_quadratic() {
        let (a, b) = annulus_radii();
        // x + 1/x = 3 in x = r².
        let disc = 5f64.sqrt();
        assert!((a - ((3.0 - disc) / 2.0).sqrt()).abs() < 1e-12);
        assert!((b - ((3.0 + disc) / 2.0).sqrt()).abs() < 1e-12);
        assert!(defining_function(C64::new(a, 0.0), C64::new(0.0, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn simple_polynomials() {
        let (p, _) = annulus_radii();
        assert_eq!(hull_ratio(&BiPoly::constant(1.0), 1.0, p), 1.0);
        let z = BiPoly { terms: vec![(1, 0, 1.0, 0.0)] };
        assert!((hull_ratio(&z, 1.0, p) - p).abs() < 1e-12);
    }

    #[test]
    fn demo_has_no_violations() {
        let r = hull_evidence_demo(1.0, 50, 8, 3).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.circle_max_rho < 0.0 && r.point_rho.abs() < 1e-12);
        assert!(hull_evidence_demo(0.5, 1, 1, 0).is_err());
    }
}
