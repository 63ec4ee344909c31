//! Boundary-value tables on the unit circle and trapezoidal Cauchy-integral evaluation.

use crate::error::{ExposeError, Result};
use crate::C64;
use std::f64::consts::PI;

pub const DEFAULT_NODES: usize = 2048;

/// Samples `f(ω_k)` at `ω_k = e^{2πik/N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTable {
    pub values: Vec<C64>,
}

/// Interior value, derivative and a heuristic error scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CauchyValue {
    pub value: C64,
    pub derivative: C64,
    pub error_bound: f64,
}

impl BoundaryTable {
    pub fn from_fn(nodes: usize, f: impl Fn(C64) -> C64) -> Self {
        BoundaryTable { values: (0..nodes).map(|k| f(node(k, nodes))).collect() }
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn node(&self, k: usize) -> C64 {
        node(k, self.values.len())
    }

    /// Angular node spacing `2π/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.values.len() as f64
    }

    /// Required distance of evaluation points from the circle.
    pub fn margin(&self) -> f64 {
        2.0 * self.spacing()
    }

    /// Discrete total variation of the boundary values.
    pub fn variation(&self) -> f64 {
        let n = self.values.len();
        (0..n).map(|k| (self.values[(k + 1) % n] - self.values[k]).norm()).sum()
    }

    /// Largest deviation from conjugation symmetry `f(ω̄) = conj f(ω)`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n).map(|k| (self.values[(n - k) % n] - self.values[k].conj()).norm()).fold(0.0, f64::max)
    }
}

fn node(k: usize, n: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// Evaluation without the margin check.
pub fn cauchy_eval_unchecked(table: &BoundaryTable, z: C64) -> (C64, C64) {
    let n = table.nodes() as f64;
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for (k, fk) in table.values.iter().enumerate() {
        let w = table.node(k);
        let inv = C64::new(1.0, 0.0) / (w - z);
        let t = fk * w * inv;
        v += t;
        d += t * inv;
    }
    (v / n, d / n)
}

/// `f(z) = (1/N) Σ f_k ω_k/(ω_k − z)`, `f'(z) = (1/N) Σ f_k ω_k/(ω_k − z)²`.
pub fn cauchy_eval(table: &BoundaryTable, z: C64) -> Result<CauchyValue> {
    if table.nodes() == 0 {
        return Err(ExposeError::EmptyData("boundary table has no nodes".into()));
    }
    let limit = 1.0 - table.margin();
    if z.norm() > limit {
        return Err(ExposeError::TooCloseToBoundary { modulus: z.norm(), limit });
    }
    let (value, derivative) = cauchy_eval_unchecked(table, z);
    let error_bound = table.spacing().powi(2) * table.variation();
    Ok(CauchyValue { value, derivative, error_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_reproduced() {
        let t = BoundaryTable::from_fn(DEFAULT_NODES, |w| w * w);
        let z = C64::new(0.3, 0.1);
        let r = cauchy_eval(&t, z).unwrap();
        assert!((r.value - z * z).norm() < 1e-10);
        assert!((r.derivative - z * 2.0).norm() < 1e-10);
    }

    #[test]
    fn identity_derivative_is_one() {
        let t = BoundaryTable::from_fn(DEFAULT_NODES, |w| w);
        for z in [C64::new(0.0, 0.0), C64::new(0.5, -0.4), C64::new(-0.9, 0.0)] {
            assert!((cauchy_eval(&t, z).unwrap().derivative - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn exponential() {
        let t = BoundaryTable::from_fn(DEFAULT_NODES, |w| w.exp());
        let r = cauchy_eval(&t, C64::new(0.5, 0.0)).unwrap();
        assert!((r.value - 0.5f64.exp()).norm() < 1e-10);
    }

    #[test]
    fn margin_enforced() {
        let t = BoundaryTable::from_fn(64, |w| w);
        assert!(matches!(cauchy_eval(&t, C64::new(0.9, 0.0)), Err(ExposeError::TooCloseToBoundary { .. })));
    }
}
