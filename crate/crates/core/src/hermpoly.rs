//! Real-valued Hermitian polynomials `ρ = Σ c_{αβ} z^α z̄^β` with exact first and second
//! derivatives.

use crate::error::{ExposeError, Result};
use crate::{CMat, CVec, RMat, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Largest exponent accepted for a single variable when parsing.
pub const MAX_DEGREE_PER_VAR: u8 = 8;

/// Relative tolerance for matching a term with its conjugate partner.
pub const PARTNER_TOL: f64 = 1e-12;

/// One monomial `coeff · z^alpha · z̄^beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub alpha: Vec<u8>,
    pub beta: Vec<u8>,
    pub coeff: C64,
}

impl Term {
    pub fn new(alpha: Vec<u8>, beta: Vec<u8>, coeff: C64) -> Self {
        Term { alpha, beta, coeff }
    }

    fn key(&self) -> (Vec<u8>, Vec<u8>) {
        (self.alpha.clone(), self.beta.clone())
    }
}

/// A single problem found by [`HermitianPolynomial::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Dimension { term: usize },
    ZeroCoefficient { term: usize },
    Duplicate { first: usize, second: usize },
    OutOfOrder { term: usize },
    MissingPartner { term: usize },
    PartnerMismatch { term: usize, partner: usize },
    NonRealDiagonal { term: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension { term } => write!(f, "term {term}: multi-index length differs from n"),
            Violation::ZeroCoefficient { term } => write!(f, "term {term}: zero coefficient"),
            Violation::Duplicate { first, second } => {
                write!(f, "terms {first} and {second}: duplicate (alpha, beta)")
            }
            Violation::OutOfOrder { term } => write!(f, "term {term}: not in canonical order"),
            Violation::MissingPartner { term } => write!(f, "term {term}: missing Hermitian partner"),
            Violation::PartnerMismatch { term, partner } => {
                write!(f, "terms {term} and {partner}: coefficients are not conjugate")
            }
            Violation::NonRealDiagonal { term } => {
                write!(f, "term {term}: alpha = beta with non-real coefficient")
            }
        }
    }
}

/// Outcome of validation: empty `violations` means ok.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Second-order jet of a real function at a point.
///
/// `real_hess` uses the block coordinate order `[x_1..x_n, y_1..y_n]` with `z = x + iy`.
#[derive(Clone, Debug)]
pub struct Jet2 {
    pub value: f64,
    pub dbar_grad: CVec,
    pub holo_hess: CMat,
    pub levi: CMat,
    pub real_hess: RMat,
}

impl Jet2 {
    /// Real gradient `[∂ρ/∂x; ∂ρ/∂y] = [2 Re g; -2 Im g]`.
    pub fn real_grad(&self) -> nalgebra::DVector<f64> {
        let n = self.dbar_grad.len();
        nalgebra::DVector::from_fn(2 * n, |i, _| {
            if i < n {
                2.0 * self.dbar_grad[i].re
            } else {
                -2.0 * self.dbar_grad[i - n].im
            }
        })
    }
}

/// Real Hessian in `[x; y]` order from the holomorphic Hessian and the Levi matrix.
pub fn real_hessian_from(holo: &CMat, levi: &CMat) -> RMat {
    let n = holo.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let h = holo[(i, j)];
            let l = levi[(i, j)];
            r[(i, j)] = 2.0 * h.re + 2.0 * l.re;
            r[(i + n, j + n)] = -2.0 * h.re + 2.0 * l.re;
            r[(i, j + n)] = -2.0 * h.im + 2.0 * l.im;
            r[(j + n, i)] = r[(i, j + n)];
        }
    }
    r
}

/// A canonical, Hermitian-symmetric polynomial in `n` complex variables.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPolynomial {
    n: usize,
    terms: Vec<Term>,
}

type TermMap = BTreeMap<(Vec<u8>, Vec<u8>), C64>;

fn merge_terms(terms: impl IntoIterator<Item = Term>) -> TermMap {
    let mut map = TermMap::new();
    for t in terms {
        *map.entry(t.key()).or_insert(C64::new(0.0, 0.0)) += t.coeff;
    }
    map.retain(|_, c| *c != C64::new(0.0, 0.0));
    map
}

impl HermitianPolynomial {
    /// Canonicalises `terms`, enforces the per-variable degree cap and checks symmetry.
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        if n == 0 {
            return Err(ExposeError::InvalidPolynomial("n must be positive".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if t.alpha.len() != n || t.beta.len() != n {
                return Err(ExposeError::InvalidPolynomial(format!(
                    "term {k}: multi-index length differs from n = {n}"
                )));
            }
            if t.alpha.iter().chain(&t.beta).any(|&d| d > MAX_DEGREE_PER_VAR) {
                return Err(ExposeError::InvalidPolynomial(format!(
                    "term {k}: exponent exceeds the cap of {MAX_DEGREE_PER_VAR}"
                )));
            }
            if !t.coeff.re.is_finite() || !t.coeff.im.is_finite() {
                return Err(ExposeError::InvalidPolynomial(format!("term {k}: non-finite coefficient")));
            }
        }
        let poly = Self::from_map(n, merge_terms(terms));
        let report = poly.validate();
        if !report.is_ok() {
            let msg: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            return Err(ExposeError::InvalidPolynomial(msg.join("; ")));
        }
        Ok(poly.symmetrized())
    }

    /// Wraps a raw term list without any checking; intended for exercising [`Self::validate`].
    pub fn from_raw_terms(n: usize, terms: Vec<Term>) -> Self {
        HermitianPolynomial { n, terms }
    }

    fn from_map(n: usize, map: TermMap) -> Self {
        let terms = map.into_iter().map(|((a, b), c)| Term::new(a, b, c)).collect();
        HermitianPolynomial { n, terms }
    }

    fn symmetrized(&self) -> Self {
        let map: TermMap = self.terms.iter().map(|t| (t.key(), t.coeff)).collect();
        let mut out = TermMap::new();
        for ((a, b), c) in &map {
            let partner = map.get(&(b.clone(), a.clone())).copied().unwrap_or(c.conj());
            out.insert((a.clone(), b.clone()), (c + partner.conj()) * 0.5);
        }
        out.retain(|_, c| *c != C64::new(0.0, 0.0));
        Self::from_map(self.n, out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Symmetry and canonical-form check; violations name term indices.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n;
        let mut index: BTreeMap<(Vec<u8>, Vec<u8>), usize> = BTreeMap::new();
        for (k, t) in self.terms.iter().enumerate() {
            if t.alpha.len() != n || t.beta.len() != n {
                violations.push(Violation::Dimension { term: k });
                continue;
            }
            if t.coeff == C64::new(0.0, 0.0) {
                violations.push(Violation::ZeroCoefficient { term: k });
            }
            if let Some(&first) = index.get(&t.key()) {
                violations.push(Violation::Duplicate { first, second: k });
            } else {
                index.insert(t.key(), k);
            }
            if k > 0 {
                let prev = &self.terms[k - 1];
                if prev.alpha.len() == n && prev.beta.len() == n && prev.key() >= t.key() && prev.key() != t.key() {
                    violations.push(Violation::OutOfOrder { term: k });
                }
            }
        }
        for (k, t) in self.terms.iter().enumerate() {
            if t.alpha.len() != n || t.beta.len() != n {
                continue;
            }
            let scale = PARTNER_TOL * t.coeff.norm().max(1.0);
            if t.alpha == t.beta {
                if t.coeff.im.abs() > scale {
                    violations.push(Violation::NonRealDiagonal { term: k });
                }
                continue;
            }
            match index.get(&(t.beta.clone(), t.alpha.clone())) {
                None => violations.push(Violation::MissingPartner { term: k }),
                Some(&p) => {
                    if k < p && (self.terms[p].coeff - t.coeff.conj()).norm() > scale {
                        violations.push(Violation::PartnerMismatch { term: k, partner: p });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.alpha.iter().chain(&t.beta))
            .copied()
            .max()
            .unwrap_or(0) as usize
    }

    fn power_table(&self, z: &[C64]) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
        let d = self.max_degree();
        let mut pz = Vec::with_capacity(z.len());
        let mut pzb = Vec::with_capacity(z.len());
        for &zi in z {
            let mut row = Vec::with_capacity(d + 1);
            let mut acc = C64::new(1.0, 0.0);
            for _ in 0..=d {
                row.push(acc);
                acc *= zi;
            }
            pzb.push(row.iter().map(|c| c.conj()).collect());
            pz.push(row);
        }
        (pz, pzb)
    }

    /// Complex value of the term sum; the imaginary part is round-off only.
    pub fn eval_complex(&self, z: &[C64]) -> C64 {
        assert_eq!(z.len(), self.n, "point dimension differs from polynomial dimension");
        let (pz, pzb) = self.power_table(z);
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            let mut m = t.coeff;
            for i in 0..self.n {
                m *= pz[i][t.alpha[i] as usize] * pzb[i][t.beta[i] as usize];
            }
            acc += m;
        }
        acc
    }

    /// Value of ρ at `z`.
    pub fn eval(&self, z: &[C64]) -> f64 {
        self.eval_complex(z).re
    }

    /// Value with a dimension check.
    pub fn try_eval(&self, z: &[C64]) -> Result<f64> {
        if z.len() != self.n {
            return Err(ExposeError::DimensionMismatch { expected: self.n, got: z.len() });
        }
        Ok(self.eval(z))
    }

    /// Exact value, Wirtinger gradient, holomorphic Hessian, Levi matrix and real Hessian.
    pub fn eval_jet(&self, z: &[C64]) -> Result<Jet2> {
        let n = self.n;
        if z.len() != n {
            return Err(ExposeError::DimensionMismatch { expected: n, got: z.len() });
        }
        let (pz, pzb) = self.power_table(z);
        let zero = C64::new(0.0, 0.0);
        let mono = |t: &Term, da: &[usize], db: &[usize]| -> C64 {
            let mut m = t.coeff;
            for i in 0..n {
                let a = t.alpha[i] as usize;
                let b = t.beta[i] as usize;
                if a < da[i] || b < db[i] {
                    return zero;
                }
                m *= pz[i][a - da[i]] * pzb[i][b - db[i]];
            }
            m
        };
        let mut value = zero;
        let mut grad = CVec::zeros(n);
        let mut holo = CMat::zeros(n, n);
        let mut levi = CMat::zeros(n, n);
        let mut da = vec![0usize; n];
        let mut db = vec![0usize; n];
        for t in &self.terms {
            value += mono(t, &da, &db);
            for i in 0..n {
                let ai = t.alpha[i] as f64;
                if ai == 0.0 {
                    continue;
                }
                da[i] += 1;
                grad[i] += mono(t, &da, &db) * ai;
                for j in 0..n {
                    let aj = t.alpha[j] as f64 - if i == j { 1.0 } else { 0.0 };
                    if aj > 0.0 {
                        da[j] += 1;
                        holo[(i, j)] += mono(t, &da, &db) * (ai * aj);
                        da[j] -= 1;
                    }
                    let bj = t.beta[j] as f64;
                    if bj > 0.0 {
                        db[j] += 1;
                        levi[(i, j)] += mono(t, &da, &db) * (ai * bj);
                        db[j] -= 1;
                    }
                }
                da[i] -= 1;
            }
        }
        let holo = (&holo + holo.transpose()) * C64::new(0.5, 0.0);
        let levi = (&levi + levi.adjoint()) * C64::new(0.5, 0.0);
        let real_hess = real_hessian_from(&holo, &levi);
        Ok(Jet2 { value: value.re, dbar_grad: grad, holo_hess: holo, levi, real_hess })
    }

    /// The polynomial `w ↦ ρ(A w + b)`.
    pub fn affine_pullback(&self, a: &CMat, b: &CVec) -> Self {
        let n = self.n;
        let m = a.ncols();
        let zero_idx = vec![0u8; m];
        // Linear forms for z_i and z̄_i in the new variables.
        let mut lin: Vec<TermMap> = Vec::with_capacity(n);
        let mut linbar: Vec<TermMap> = Vec::with_capacity(n);
        for i in 0..n {
            let mut l = TermMap::new();
            let mut lb = TermMap::new();
            if b[i] != C64::new(0.0, 0.0) {
                l.insert((zero_idx.clone(), zero_idx.clone()), b[i]);
                lb.insert((zero_idx.clone(), zero_idx.clone()), b[i].conj());
            }
            for j in 0..m {
                if a[(i, j)] != C64::new(0.0, 0.0) {
                    let mut e = zero_idx.clone();
                    e[j] = 1;
                    l.insert((e.clone(), zero_idx.clone()), a[(i, j)]);
                    lb.insert((zero_idx.clone(), e), a[(i, j)].conj());
                }
            }
            lin.push(l);
            linbar.push(lb);
        }
        let mul = |x: &TermMap, y: &TermMap| -> TermMap {
            let mut out = TermMap::new();
            for ((a1, b1), c1) in x {
                for ((a2, b2), c2) in y {
                    let a: Vec<u8> = a1.iter().zip(a2).map(|(p, q)| p + q).collect();
                    let b: Vec<u8> = b1.iter().zip(b2).map(|(p, q)| p + q).collect();
                    *out.entry((a, b)).or_insert(C64::new(0.0, 0.0)) += c1 * c2;
                }
            }
            out
        };
        let mut total = TermMap::new();
        for t in &self.terms {
            let mut acc = TermMap::new();
            acc.insert((zero_idx.clone(), zero_idx.clone()), t.coeff);
            for i in 0..n {
                for _ in 0..t.alpha[i] {
                    acc = mul(&acc, &lin[i]);
                }
                for _ in 0..t.beta[i] {
                    acc = mul(&acc, &linbar[i]);
                }
            }
            for (k, c) in acc {
                *total.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
            }
        }
        let scale = self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max).max(1.0);
        total.retain(|_, c| c.norm() > 1e-15 * scale);
        Self::from_map(m, total).symmetrized()
    }

    /// The polynomial `d ↦ ρ(p + d)`.
    pub fn translated(&self, p: &[C64]) -> Self {
        let a = CMat::identity(self.n, self.n);
        self.affine_pullback(&a, &CVec::from_column_slice(p))
    }

    /// The same polynomial with its constant term removed.
    pub fn without_constant(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.alpha.iter().chain(&t.beta).any(|&d| d > 0))
            .cloned()
            .collect();
        HermitianPolynomial { n: self.n, terms }
    }

    /// The terms of total degree at least `min_degree`.
    pub fn higher_order(&self, min_degree: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.alpha.iter().chain(&t.beta).map(|&d| d as usize).sum::<usize>() >= min_degree)
            .cloned()
            .collect();
        HermitianPolynomial { n: self.n, terms }
    }

    /// Parses the JSON defining-function format.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PolyFile = serde_json::from_str(s).map_err(|e| ExposeError::Parse(e.to_string()))?;
        file.into_poly()
    }

    pub fn to_file(&self) -> PolyFile {
        PolyFile {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| TermFile {
                    alpha: t.alpha.iter().map(|&d| d as u32).collect(),
                    beta: t.beta.iter().map(|&d| d as u32).collect(),
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("polynomial serialises")
    }

    /// `Σ |z_i|² − radius²`.
    pub fn sphere(n: usize, radius: f64) -> Self {
        let mut b = PolyBuilder::new(n);
        for i in 0..n {
            b = b.abs_sq(i, 1.0);
        }
        b.constant(-radius * radius).build().expect("sphere is valid")
    }
}

/// Serialized form of a single term.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermFile {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Serialized form of a defining function.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolyFile {
    pub n: usize,
    pub terms: Vec<TermFile>,
}

impl PolyFile {
    pub fn into_poly(self) -> Result<HermitianPolynomial> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.into_iter().enumerate() {
            let conv = |v: &[u32]| -> Result<Vec<u8>> {
                v.iter()
                    .map(|&d| {
                        if d > MAX_DEGREE_PER_VAR as u32 {
                            Err(ExposeError::InvalidPolynomial(format!(
                                "term {k}: exponent {d} exceeds the cap of {MAX_DEGREE_PER_VAR}"
                            )))
                        } else {
                            Ok(d as u8)
                        }
                    })
                    .collect()
            };
            terms.push(Term::new(conv(&t.alpha)?, conv(&t.beta)?, C64::new(t.re, t.im)));
        }
        HermitianPolynomial::new(self.n, terms)
    }
}

/// Incremental construction of real polynomials from real building blocks.
#[derive(Clone, Debug)]
pub struct PolyBuilder {
    n: usize,
    terms: Vec<Term>,
}

impl PolyBuilder {
    pub fn new(n: usize) -> Self {
        PolyBuilder { n, terms: Vec::new() }
    }

    fn unit(&self, i: usize, k: u8) -> Vec<u8> {
        let mut v = vec![0u8; self.n];
        v[i] = k;
        v
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.terms.push(Term::new(vec![0; self.n], vec![0; self.n], C64::new(c, 0.0)));
        self
    }

    /// Adds `c·|z_i|²`.
    pub fn abs_sq(mut self, i: usize, c: f64) -> Self {
        let e = self.unit(i, 1);
        self.terms.push(Term::new(e.clone(), e, C64::new(c, 0.0)));
        self
    }

    /// Adds `Re(c · z^alpha · z̄^beta)`.
    pub fn re_part(mut self, alpha: Vec<u8>, beta: Vec<u8>, c: C64) -> Self {
        if alpha == beta {
            self.terms.push(Term::new(alpha, beta, C64::new(c.re, 0.0)));
        } else {
            self.terms.push(Term::new(alpha.clone(), beta.clone(), c * 0.5));
            self.terms.push(Term::new(beta, alpha, c.conj() * 0.5));
        }
        self
    }

    /// Adds `c·Re(z_i^k)`.
    pub fn re_power(self, i: usize, k: u8, c: f64) -> Self {
        let a = self.unit(i, k);
        let z = vec![0; self.n];
        self.re_part(a, z, C64::new(c, 0.0))
    }

    pub fn build(self) -> Result<HermitianPolynomial> {
        HermitianPolynomial::new(self.n, self.terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_domain_poly() -> HermitianPolynomial {
        PolyBuilder::new(2)
            .re_power(1, 1, 2.0)
            .re_power(0, 2, 3.0)
            .abs_sq(0, 1.0)
            .abs_sq(1, 1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn abs_square_validates() {
        let p = HermitianPolynomial::from_raw_terms(1, vec![Term::new(vec![1], vec![1], c(1.0, 0.0))]);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn lone_holomorphic_square_lacks_partner() {
        let p = HermitianPolynomial::from_raw_terms(1, vec![Term::new(vec![2], vec![0], c(1.0, 0.0))]);
        let r = p.validate();
        assert_eq!(r.violations, vec![Violation::MissingPartner { term: 0 }]);
        assert!(r.violations[0].to_string().contains("missing Hermitian partner"));
    }

    #[test]
    fn real_part_of_square_validates() {
        let p = HermitianPolynomial::from_raw_terms(
            1,
            vec![Term::new(vec![0], vec![2], c(0.5, 0.0)), Term::new(vec![2], vec![0], c(0.5, 0.0))],
        );
        assert!(p.validate().is_ok());
    }

    #[test]
    fn duplicate_and_order_are_flagged() {
        let t = Term::new(vec![1], vec![1], c(1.0, 0.0));
        let p = HermitianPolynomial::from_raw_terms(1, vec![t.clone(), t]);
        assert!(p.validate().violations.contains(&Violation::Duplicate { first: 0, second: 1 }));
        let p = HermitianPolynomial::from_raw_terms(
            1,
            vec![Term::new(vec![1], vec![1], c(1.0, 0.0)), Term::new(vec![0], vec![0], c(1.0, 0.0))],
        );
        assert!(p.validate().violations.contains(&Violation::OutOfOrder { term: 1 }));
    }

    #[test]
    fn new_merges_and_drops_zeros() {
        let p = HermitianPolynomial::new(
            1,
            vec![
                Term::new(vec![1], vec![1], c(1.0, 0.0)),
                Term::new(vec![1], vec![1], c(-1.0, 0.0)),
                Term::new(vec![0], vec![0], c(2.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(p.terms().len(), 1);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn degree_cap_rejected() {
        let e = vec![9u8];
        assert!(HermitianPolynomial::new(1, vec![Term::new(e.clone(), e, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn sphere_jet_at_origin() {
        let p = HermitianPolynomial::sphere(3, 1.0);
        let j = p.eval_jet(&[c(0.0, 0.0); 3]).unwrap();
        assert_eq!(j.value, -1.0);
        assert!(j.dbar_grad.iter().all(|g| g.norm() == 0.0));
        assert!(j.holo_hess.iter().all(|g| g.norm() == 0.0));
        assert!((j.levi.clone() - CMat::identity(3, 3)).camax() == 0.0);
    }

    #[test]
    fn test_domain_jet_at_origin() {
        let j = test_domain_poly().eval_jet(&[c(0.0, 0.0); 2]).unwrap();
        assert!((j.dbar_grad[0]).norm() < 1e-15);
        assert!((j.dbar_grad[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((j.holo_hess[(0, 0)] - c(3.0, 0.0)).norm() < 1e-15);
        assert!(j.holo_hess[(1, 1)].norm() < 1e-15 && j.holo_hess[(0, 1)].norm() < 1e-15);
        assert!((j.levi.clone() - CMat::identity(2, 2)).camax() < 1e-15);
        // Im z₁ direction: 2 - 6.
        assert!((j.real_hess[(2, 2)] + 4.0).abs() < 1e-14);
        assert!((j.real_hess[(0, 0)] - 8.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            test_domain_poly().eval_jet(&[c(0.0, 0.0)]),
            Err(ExposeError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn pullback_matches_composition() {
        let p = test_domain_poly();
        let a = CMat::from_row_slice(2, 2, &[c(0.6, 0.1), c(-0.2, 0.3), c(0.1, 0.0), c(0.9, -0.4)]);
        let b = CVec::from_vec(vec![c(0.2, -0.1), c(-0.3, 0.05)]);
        let q = p.affine_pullback(&a, &b);
        assert!(q.validate().is_ok());
        let w = CVec::from_vec(vec![c(0.31, -0.7), c(0.12, 0.44)]);
        let z = &a * &w + &b;
        assert!((q.eval(w.as_slice()) - p.eval(z.as_slice())).abs() < 1e-13);
    }

    #[test]
    fn json_round_trip() {
        let p = test_domain_poly();
        let back = HermitianPolynomial::from_json_str(&p.to_json_string()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn json_reports_term_index() {
        let s = r#"{"n":1,"terms":[{"alpha":[1],"beta":[1],"re":1.0},{"alpha":[2],"beta":[0],"re":1.0,"im":0.0}]}"#;
        let err = HermitianPolynomial::from_json_str(s).unwrap_err().to_string();
        assert!(err.contains("term 1"), "{err}");
    }
}
