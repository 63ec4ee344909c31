//! One-complex-variable engine: disk automorphisms, Cauchy evaluation, constrained polynomial
//! fitting, Riemann maps and the welded dumbbell pair.

pub mod cauchy;
pub mod dumbbell;
pub mod mobius;
pub mod polyfit;
pub mod riemann;

pub use cauchy::{cauchy_eval, BoundaryTable, CauchyValue};
pub use dumbbell::{dumbbell_pair, translation_defect, DumbbellPair, DumbbellRegion, WeldedMap};
pub use mobius::{mobius_dichotomy_check, mobius_fuzz, Dichotomy, DiskAutomorphism, MobiusFuzzReport};
pub use polyfit::{polyfit_constrained, ArnoldiPoly, Constraint, PolyFit};
pub use riemann::{riemann_map, Region, RiemannMap, RiemannOptions};

use crate::error::{ExposeError, Result};
use crate::C64;

/// A holomorphic function of one complex variable.
#[derive(Clone, Debug)]
pub enum OneVarMap {
    Identity,
    /// `a z + b`.
    Affine { a: C64, b: C64 },
    /// `Σ c_k z^k`.
    Monomial { coeffs: Vec<C64> },
    Arnoldi(ArnoldiPoly),
    /// Boundary values on the unit circle, evaluated by the Cauchy integral.
    Table(BoundaryTable),
    Welded(WeldedMap),
    Mobius(DiskAutomorphism),
    /// `w ↦ sum − inner(−w)`.
    Reflected { inner: Box<OneVarMap>, sum: C64 },
    /// `second(first(z))`.
    Composed { first: Box<OneVarMap>, second: Box<OneVarMap> },
    /// `left(z)(1 − σ(z)) + right(z) σ(z)` with `σ(z) = 1/(1 + e^{−rate (z − center)})`; poles lie
    /// on the line `Re z = center`.
    Blend { rate: f64, center: f64, left: Box<OneVarMap>, right: Box<OneVarMap> },
}

/// `σ(x) = 1/(1 + e^{−x})` and `σ'(x)`, stable for large `|Re x|`.
pub fn logistic_deriv(x: C64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    let s = if x.re >= 0.0 {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    };
    (s, s * (one - s))
}

impl OneVarMap {
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            OneVarMap::Identity => z,
            OneVarMap::Affine { a, b } => a * z + b,
            OneVarMap::Monomial { coeffs } => coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c),
            OneVarMap::Arnoldi(p) => p.eval(z),
            OneVarMap::Table(t) => cauchy::cauchy_eval_unchecked(t, z).0,
            OneVarMap::Welded(w) => w.eval(z),
            OneVarMap::Mobius(m) => m.eval(z),
            OneVarMap::Reflected { inner, sum } => sum - inner.eval(-z),
            OneVarMap::Composed { first, second } => second.eval(first.eval(z)),
            OneVarMap::Blend { rate, center, left, right } => {
                let (sg, _) = logistic_deriv((z - center) * rate);
                left.eval(z) * (C64::new(1.0, 0.0) - sg) + right.eval(z) * sg
            }
        }
    }

    /// Value and complex derivative.
    pub fn eval_deriv(&self, z: C64) -> (C64, C64) {
        match self {
            OneVarMap::Identity => (z, C64::new(1.0, 0.0)),
            OneVarMap::Affine { a, b } => (a * z + b, *a),
            OneVarMap::Monomial { coeffs } => {
                let mut v = C64::new(0.0, 0.0);
                let mut d = C64::new(0.0, 0.0);
                for c in coeffs.iter().rev() {
                    d = d * z + v;
                    v = v * z + c;
                }
                (v, d)
            }
            OneVarMap::Arnoldi(p) => p.eval_deriv(z),
            OneVarMap::Table(t) => cauchy::cauchy_eval_unchecked(t, z),
            OneVarMap::Welded(w) => w.eval_deriv(z),
            OneVarMap::Mobius(m) => (m.eval(z), m.deriv(z)),
            OneVarMap::Reflected { inner, sum } => {
                let (v, d) = inner.eval_deriv(-z);
                (sum - v, d)
            }
            OneVarMap::Composed { first, second } => {
                let (u, du) = first.eval_deriv(z);
                let (v, dv) = second.eval_deriv(u);
                (v, dv * du)
            }
            OneVarMap::Blend { rate, center, left, right } => {
                let (sg, dsg) = logistic_deriv((z - center) * rate);
                let (l, dl) = left.eval_deriv(z);
                let (r, dr) = right.eval_deriv(z);
                let one = C64::new(1.0, 0.0);
                (l * (one - sg) + r * sg, dl * (one - sg) + dr * sg + (r - l) * dsg * rate)
            }
        }
    }

    /// Evaluation that refuses table points inside the Cauchy margin.
    pub fn try_eval(&self, z: C64) -> Result<C64> {
        match self {
            OneVarMap::Table(t) => Ok(cauchy_eval(t, z)?.value),
            _ => {
                let v = self.eval(z);
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(ExposeError::InvalidInput(format!("map is not finite at {z}")))
                }
            }
        }
    }

    /// Whether `f(z̄) = conj f(z)` holds by construction.
    pub fn real_symmetric(&self) -> bool {
        let real = |c: &C64| c.im == 0.0;
        match self {
            OneVarMap::Identity | OneVarMap::Welded(_) | OneVarMap::Mobius(_) => true,
            OneVarMap::Affine { a, b } => real(a) && real(b),
            OneVarMap::Monomial { coeffs } => coeffs.iter().all(real),
            OneVarMap::Arnoldi(p) => p.real_symmetric,
            OneVarMap::Table(t) => t.symmetry_defect() < 1e-12,
            OneVarMap::Reflected { inner, sum } => inner.real_symmetric() && real(sum),
            OneVarMap::Composed { first, second } => first.real_symmetric() && second.real_symmetric(),
            OneVarMap::Blend { left, right, .. } => left.real_symmetric() && right.real_symmetric(),
        }
    }
}

/// `index,re,im` CSV of a complex sequence.
pub fn points_to_csv(points: &[C64]) -> String {
    let mut out = String::from("index,re,im\n");
    for (k, p) in points.iter().enumerate() {
        out.push_str(&format!("{k},{:.17e},{:.17e}\n", p.re, p.im));
    }
    out
}

/// Parses the `index,re,im` CSV format; the header line is optional.
pub fn points_from_csv(text: &str) -> Result<Vec<C64>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("index") || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(ExposeError::Parse(format!("line {}: expected 3 fields", line_no + 1)));
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| ExposeError::Parse(format!("line {}: {e}", line_no + 1)))
        };
        out.push(C64::new(parse(fields[1])?, parse(fields[2])?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_horner() {
        let m = OneVarMap::Monomial { coeffs: vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(3.0, 0.0)] };
        let z = C64::new(0.5, -0.25);
        let (v, d) = m.eval_deriv(z);
        assert!((v - (1.0 + C64::new(0.0, 2.0) * z + 3.0 * z * z)).norm() < 1e-15);
        assert!((d - (C64::new(0.0, 2.0) + 6.0 * z)).norm() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![C64::new(1.0, -2.5), C64::new(1e-20, 3.0)];
        assert_eq!(points_from_csv(&points_to_csv(&pts)).unwrap(), pts);
        assert!(points_from_csv("0,1.0").is_err());
    }

    #[test]
    fn blend_derivative() {
        let f = OneVarMap::Blend {
            rate: 40.0,
            center: 1.25,
            left: Box::new(OneVarMap::Identity),
            right: Box::new(OneVarMap::Affine { a: C64::new(1.0 / 3.0, 0.0), b: C64::new(2.0, 0.0) }),
        };
        for z in [C64::new(0.3, 0.2), C64::new(1.2, 0.01), C64::new(3.5, -1.0)] {
            let h = 1e-6;
            let fd = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
            assert!((fd - f.eval_deriv(z).1).norm() < 1e-6 * (1.0 + fd.norm()));
        }
        assert!((f.eval(C64::new(0.5, 0.9)) - C64::new(0.5, 0.9)).norm() < 1e-4);
        assert!(f.real_symmetric());
    }

    #[test]
    fn table_matches_polynomial() {
        let poly = OneVarMap::Monomial { coeffs: vec![C64::new(0.1, 0.0), C64::new(1.0, 0.0), C64::new(-0.2, 0.1)] };
        let table = OneVarMap::Table(BoundaryTable::from_fn(cauchy::DEFAULT_NODES, |w| poly.eval(w)));
        for z in [C64::new(0.2, 0.1), C64::new(-0.7, 0.3)] {
            assert!((table.eval(z) - poly.eval(z)).norm() < 1e-8);
        }
    }
}
