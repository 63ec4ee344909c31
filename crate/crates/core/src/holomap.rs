//! Holomorphic scalar expressions and compositions of holomorphic map primitives, each with
//! an analytic Jacobian and an increment evaluator `F(p + d) − F(p)`.

use crate::error::{ExposeError, Result};
use crate::linalg::cnorm;
use crate::onevar::OneVarMap;
use crate::{CMat, CVec, C64};
use serde::{Deserialize, Serialize};

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `b^e` by repeated squaring.
pub fn pow_u64(b: C64, mut e: u64) -> C64 {
    let mut acc = one();
    let mut base = b;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        e >>= 1;
        if e > 0 {
            base *= base;
        }
    }
    acc
}

/// Holomorphic scalar expression tree in `n` complex variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ScalarExpr {
    Const { value: C64 },
    Coord { index: usize },
    /// `Σ coeffs_i z_i + constant`.
    Linear { coeffs: Vec<C64>, constant: C64 },
    /// `Σ q_ij z_i z_j` (row-major `q`).
    Quadratic { q: Vec<Vec<C64>> },
    Sum { terms: Vec<ScalarExpr> },
    Product { factors: Vec<ScalarExpr> },
    Scale { factor: C64, inner: Box<ScalarExpr> },
    Exp { inner: Box<ScalarExpr> },
    Power { base: Box<ScalarExpr>, exponent: u64 },
    /// `inner(A z + offset)` with row-major `A`.
    Pullback { inner: Box<ScalarExpr>, matrix: Vec<Vec<C64>>, offset: Vec<C64> },
    /// `weight · quad(z) · Σ_j base(z)^{exponents_j}` with increasing exponents.
    PeakSeries { quad: Box<ScalarExpr>, base: Box<ScalarExpr>, exponents: Vec<u64>, weight: f64 },
}

impl ScalarExpr {
    pub fn constant(value: C64) -> Self {
        ScalarExpr::Const { value }
    }

    pub fn exp(inner: ScalarExpr) -> Self {
        ScalarExpr::Exp { inner: Box::new(inner) }
    }

    pub fn quadratic(q: &CMat) -> Self {
        ScalarExpr::Quadratic { q: (0..q.nrows()).map(|i| (0..q.ncols()).map(|j| q[(i, j)]).collect()).collect() }
    }

    pub fn linear(coeffs: Vec<C64>, constant: C64) -> Self {
        ScalarExpr::Linear { coeffs, constant }
    }

    pub fn pullback(inner: ScalarExpr, a: &CMat, offset: &CVec) -> Self {
        ScalarExpr::Pullback {
            inner: Box::new(inner),
            matrix: (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect(),
            offset: offset.iter().copied().collect(),
        }
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.eval_grad_opt(z, false).0
    }

    /// Value and holomorphic gradient `(∂/∂z_i)`.
    pub fn eval_grad(&self, z: &[C64]) -> (C64, Vec<C64>) {
        let (v, g) = self.eval_grad_opt(z, true);
        (v, g.expect("gradient requested"))
    }

    fn eval_grad_opt(&self, z: &[C64], want: bool) -> (C64, Option<Vec<C64>>) {
        let n = z.len();
        let zeros = || vec![zero(); n];
        match self {
            ScalarExpr::Const { value } => (*value, want.then(zeros)),
            ScalarExpr::Coord { index } => {
                let g = want.then(|| {
                    let mut g = zeros();
                    g[*index] = one();
                    g
                });
                (z[*index], g)
            }
            ScalarExpr::Linear { coeffs, constant } => {
                let v = coeffs.iter().zip(z).map(|(a, x)| a * x).sum::<C64>() + constant;
                (v, want.then(|| coeffs.clone()))
            }
            ScalarExpr::Quadratic { q } => {
                let mut v = zero();
                let mut g = zeros();
                for i in 0..n {
                    for j in 0..n {
                        let c = q[i][j];
                        if c == zero() {
                            continue;
                        }
                        v += c * z[i] * z[j];
                        if want {
                            g[i] += c * z[j];
                            g[j] += c * z[i];
                        }
                    }
                }
                (v, want.then_some(g))
            }
            ScalarExpr::Sum { terms } => {
                let mut v = zero();
                let mut g = zeros();
                for t in terms {
                    let (tv, tg) = t.eval_grad_opt(z, want);
                    v += tv;
                    if let Some(tg) = tg {
                        for (a, b) in g.iter_mut().zip(tg) {
                            *a += b;
                        }
                    }
                }
                (v, want.then_some(g))
            }
            ScalarExpr::Product { factors } => {
                let parts: Vec<(C64, Option<Vec<C64>>)> = factors.iter().map(|f| f.eval_grad_opt(z, want)).collect();
                let v = parts.iter().map(|p| p.0).product::<C64>();
                let g = want.then(|| {
                    let mut g = zeros();
                    for (k, (_, pg)) in parts.iter().enumerate() {
                        let others: C64 =
                            parts.iter().enumerate().filter(|(m, _)| *m != k).map(|(_, p)| p.0).product();
                        for (a, b) in g.iter_mut().zip(pg.as_ref().unwrap()) {
                            *a += others * b;
                        }
                    }
                    g
                });
                (v, g)
            }
            ScalarExpr::Scale { factor, inner } => {
                let (v, g) = inner.eval_grad_opt(z, want);
                (factor * v, g.map(|g| g.into_iter().map(|x| factor * x).collect()))
            }
            ScalarExpr::Exp { inner } => {
                let (v, g) = inner.eval_grad_opt(z, want);
                let e = v.exp();
                (e, g.map(|g| g.into_iter().map(|x| e * x).collect()))
            }
            ScalarExpr::Power { base, exponent } => {
                let (b, g) = base.eval_grad_opt(z, want);
                if *exponent == 0 {
                    return (one(), want.then(zeros));
                }
                let pm1 = pow_u64(b, exponent - 1);
                let d = pm1 * (*exponent as f64);
                (pm1 * b, g.map(|g| g.into_iter().map(|x| d * x).collect()))
            }
            ScalarExpr::Pullback { inner, matrix, offset } => {
                let y: Vec<C64> = matrix
                    .iter()
                    .zip(offset)
                    .map(|(row, o)| row.iter().zip(z).map(|(a, x)| a * x).sum::<C64>() + o)
                    .collect();
                let (v, gy) = inner.eval_grad_opt(&y, want);
                let g = gy.map(|gy| {
                    (0..n).map(|j| matrix.iter().zip(&gy).map(|(row, gi)| gi * row[j]).sum::<C64>()).collect()
                });
                (v, g)
            }
            ScalarExpr::PeakSeries { quad, base, exponents, weight } => {
                let (qv, qg) = quad.eval_grad_opt(z, want);
                // For an exponential base the powers are formed as `exp(N p)`, which keeps full
                // relative accuracy for large `N`.
                let (s0, s1, bg) = match base.as_ref() {
                    ScalarExpr::Exp { inner } => {
                        let (p, pg) = inner.eval_grad_opt(z, want);
                        let (e0, e1) = exp_sums(p, exponents);
                        (e0, e1, pg)
                    }
                    other => {
                        let (b, bg) = other.eval_grad_opt(z, want);
                        let (s0, s1) = peak_sums(b, exponents);
                        (s0, s1, bg)
                    }
                };
                let v = qv * s0 * *weight;
                let g = want.then(|| {
                    let qg = qg.unwrap();
                    let bg = bg.unwrap();
                    qg.iter().zip(&bg).map(|(dq, db)| (dq * s0 + qv * s1 * db) * *weight).collect()
                });
                (v, g)
            }
        }
    }
}

/// `(Σ_j b^{N_j}, Σ_j N_j b^{N_j − 1})` for increasing `N_j`, stopping once powers underflow.
pub fn peak_sums(b: C64, exponents: &[u64]) -> (C64, C64) {
    let mut s0 = zero();
    let mut s1 = zero();
    let mut prev = 0u64;
    let mut pm1 = C64::new(f64::NAN, 0.0);
    for (k, &nj) in exponents.iter().enumerate() {
        if nj == 0 {
            s0 += one();
            prev = 0;
            continue;
        }
        pm1 = if k == 0 || prev == 0 { pow_u64(b, nj - 1) } else { pm1 * pow_u64(b, nj - prev) };
        prev = nj;
        let p = pm1 * b;
        s0 += p;
        s1 += pm1 * (nj as f64);
        if pm1 == zero() {
            break;
        }
    }
    (s0, s1)
}

/// `(Σ_j e^{N_j p}, Σ_j N_j e^{N_j p})` for increasing `N_j`, stopping once terms underflow.
pub fn exp_sums(p: C64, exponents: &[u64]) -> (C64, C64) {
    let mut s0 = zero();
    let mut s1 = zero();
    for &nj in exponents {
        let n = nj as f64;
        let e = (p * n).exp();
        s0 += e;
        s1 += e * n;
        if e == zero() && p.re < 0.0 {
            break;
        }
    }
    (s0, s1)
}

/// A single holomorphic map primitive on `C^n`.
#[derive(Clone, Debug)]
pub enum MapPrimitive {
    /// `z ↦ A (z − center) + offset`.
    Affine { matrix: CMat, center: CVec, offset: CVec },
    /// `z ↦ (z', z_n + φ(z))`.
    Shear { phi: ScalarExpr },
    /// `z ↦ z` with coordinate `coord` replaced by `f(z_coord)`.
    OneVar { coord: usize, map: OneVarMap },
    /// `z ↦ (h(z_n)·z', f(z_n))`.
    FiberScale { scale: OneVarMap, last: OneVarMap },
    /// `z ↦ inner(t z) / t`.
    Isotopy { t: f64, inner: Box<HolomorphicMapExpr> },
}

impl MapPrimitive {
    fn eval(&self, z: &CVec) -> CVec {
        let n = z.len();
        match self {
            MapPrimitive::Affine { matrix, center, offset } => matrix * (z - center) + offset,
            MapPrimitive::Shear { phi } => {
                let mut out = z.clone();
                out[n - 1] += phi.eval(z.as_slice());
                out
            }
            MapPrimitive::OneVar { coord, map } => {
                let mut out = z.clone();
                out[*coord] = map.eval(z[*coord]);
                out
            }
            MapPrimitive::FiberScale { scale, last } => {
                let h = scale.eval(z[n - 1]);
                let mut out = z * h;
                out[n - 1] = last.eval(z[n - 1]);
                out
            }
            MapPrimitive::Isotopy { t, inner } => {
                let inv = C64::new(1.0 / t, 0.0);
                inner.eval(&(z * C64::new(*t, 0.0))) * inv
            }
        }
    }

    fn eval_jac(&self, z: &CVec) -> (CVec, CMat) {
        let n = z.len();
        match self {
            MapPrimitive::Affine { matrix, .. } => (self.eval(z), matrix.clone()),
            MapPrimitive::Shear { phi } => {
                let (v, g) = phi.eval_grad(z.as_slice());
                let mut out = z.clone();
                out[n - 1] += v;
                let mut j = CMat::identity(n, n);
                for (k, gk) in g.into_iter().enumerate() {
                    j[(n - 1, k)] += gk;
                }
                (out, j)
            }
            MapPrimitive::OneVar { coord, map } => {
                let (v, d) = map.eval_deriv(z[*coord]);
                let mut out = z.clone();
                out[*coord] = v;
                let mut j = CMat::identity(n, n);
                j[(*coord, *coord)] = d;
                (out, j)
            }
            MapPrimitive::FiberScale { scale, last } => {
                let (h, dh) = scale.eval_deriv(z[n - 1]);
                let (f, df) = last.eval_deriv(z[n - 1]);
                let mut out = z * h;
                out[n - 1] = f;
                let mut j = CMat::zeros(n, n);
                for i in 0..n - 1 {
                    j[(i, i)] = h;
                    j[(i, n - 1)] = dh * z[i];
                }
                j[(n - 1, n - 1)] = df;
                (out, j)
            }
            MapPrimitive::Isotopy { t, inner } => {
                let (v, j) = inner.eval_jacobian(&(z * C64::new(*t, 0.0)));
                (v * C64::new(1.0 / t, 0.0), j)
            }
        }
    }

    /// `(P(p), P(p + d) − P(p))` with the difference formed without cancellation where the
    /// primitive allows it.
    fn eval_increment(&self, p: &CVec, d: &CVec) -> (CVec, CVec) {
        let n = p.len();
        match self {
            MapPrimitive::Affine { matrix, .. } => (self.eval(p), matrix * d),
            MapPrimitive::Shear { phi } => {
                let base = phi.eval(p.as_slice());
                let moved = phi.eval((p + d).as_slice());
                let mut out = p.clone();
                out[n - 1] += base;
                let mut delta = d.clone();
                delta[n - 1] += moved - base;
                (out, delta)
            }
            MapPrimitive::OneVar { coord, map } => {
                let base = map.eval(p[*coord]);
                let moved = map.eval(p[*coord] + d[*coord]);
                let mut out = p.clone();
                out[*coord] = base;
                let mut delta = d.clone();
                delta[*coord] = moved - base;
                (out, delta)
            }
            MapPrimitive::FiberScale { .. } => {
                let a = self.eval(p);
                let b = self.eval(&(p + d));
                let delta = &b - &a;
                (a, delta)
            }
            MapPrimitive::Isotopy { t, inner } => {
                let tc = C64::new(*t, 0.0);
                let (v, dv) = inner.eval_increment(&(p * tc), &(d * tc));
                let inv = C64::new(1.0 / t, 0.0);
                (v * inv, dv * inv)
            }
        }
    }
}

impl MapPrimitive {
    /// Propagates an increment given as `l + r`, where `l` is carried by the Jacobian at `p`
    /// and `r` collects the nonlinear remainder. Returns `(P(p), l', r')`.
    fn split_increment(&self, p: &CVec, l: &CVec, r: &CVec) -> (CVec, CVec, CVec) {
        let n = p.len();
        match self {
            MapPrimitive::Affine { matrix, .. } => (self.eval(p), matrix * l, matrix * r),
            MapPrimitive::Shear { phi } => {
                let (v0, g) = phi.eval_grad(p.as_slice());
                let d = l + r;
                let moved = phi.eval((p + &d).as_slice());
                let dot = |x: &CVec| g.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<C64>();
                let flat = v0 == zero() && g.iter().all(|x| *x == zero());
                let rem = if flat { moved } else { moved - v0 - dot(&d) };
                let mut out = p.clone();
                out[n - 1] += v0;
                let mut nl = l.clone();
                nl[n - 1] += dot(l);
                let mut nr = r.clone();
                nr[n - 1] += dot(r) + rem;
                (out, nl, nr)
            }
            MapPrimitive::OneVar { coord, map } => {
                let k = *coord;
                let (v0, d0) = map.eval_deriv(p[k]);
                let d = l[k] + r[k];
                let rem = map.eval(p[k] + d) - v0 - d0 * d;
                let mut out = p.clone();
                out[k] = v0;
                let mut nl = l.clone();
                nl[k] = d0 * l[k];
                let mut nr = r.clone();
                nr[k] = d0 * r[k] + rem;
                (out, nl, nr)
            }
            MapPrimitive::FiberScale { .. } => {
                let (a, j) = self.eval_jac(p);
                let total = self.eval(&(p + l + r)) - &a;
                let nl = &j * l;
                let nr = total - &nl;
                (a, nl, nr)
            }
            MapPrimitive::Isotopy { t, inner } => {
                let tc = C64::new(*t, 0.0);
                let inv = C64::new(1.0 / t, 0.0);
                let (v, nl, nr) = inner.split_increment_from(&(p * tc), &(l * tc), &(r * tc));
                (v * inv, nl * inv, nr * inv)
            }
        }
    }
}

/// Composition `stages[k-1] ∘ … ∘ stages[0]` acting on `C^dim`.
#[derive(Clone, Debug)]
pub struct HolomorphicMapExpr {
    pub dim: usize,
    pub stages: Vec<MapPrimitive>,
}

/// Newton inversion controls.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

impl HolomorphicMapExpr {
    pub fn identity(dim: usize) -> Self {
        HolomorphicMapExpr { dim, stages: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.stages.is_empty()
    }

    /// Appends `p` so that it is applied after the current stages.
    pub fn then(mut self, p: MapPrimitive) -> Self {
        self.stages.push(p);
        self
    }

    /// `other ∘ self`.
    pub fn followed_by(mut self, other: &HolomorphicMapExpr) -> Self {
        self.stages.extend(other.stages.iter().cloned());
        self
    }

    pub fn eval(&self, z: &CVec) -> CVec {
        let mut x = z.clone();
        for s in &self.stages {
            x = s.eval(&x);
        }
        x
    }

    /// Value and Jacobian by the chain rule over the stages.
    pub fn eval_jacobian(&self, z: &CVec) -> (CVec, CMat) {
        let mut x = z.clone();
        let mut j = CMat::identity(self.dim, self.dim);
        for s in &self.stages {
            let (nx, js) = s.eval_jac(&x);
            j = js * j;
            x = nx;
        }
        (x, j)
    }

    /// `(F(p), F(p + d) − F(p))` propagated stage by stage.
    pub fn eval_increment(&self, p: &CVec, d: &CVec) -> (CVec, CVec) {
        let mut x = p.clone();
        let mut dx = d.clone();
        for s in &self.stages {
            let (nx, ndx) = s.eval_increment(&x, &dx);
            x = nx;
            dx = ndx;
        }
        (x, dx)
    }

    /// `(F(p), J(p) d, R)` with `F(p + d) − F(p) = J(p) d + R`; the remainder is formed
    /// without cancellation wherever a stage is flat at its base point.
    pub fn split_increment(&self, p: &CVec, d: &CVec) -> (CVec, CVec, CVec) {
        self.split_increment_from(p, d, &CVec::zeros(d.len()))
    }

    fn split_increment_from(&self, p: &CVec, l: &CVec, r: &CVec) -> (CVec, CVec, CVec) {
        let mut x = p.clone();
        let mut l = l.clone();
        let mut r = r.clone();
        for s in &self.stages {
            let (nx, nl, nr) = s.split_increment(&x, &l, &r);
            x = nx;
            l = nl;
            r = nr;
        }
        (x, l, r)
    }

    /// Solves `F(base + d) − F(base) = target` for `d` by Newton's method.
    pub fn invert_increment(&self, base: &CVec, target: &CVec) -> Result<CVec> {
        let mut d = target.clone();
        let scale = cnorm(target.as_slice()).max(f64::MIN_POSITIVE);
        let mut res = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let (_, inc) = self.eval_increment(base, &d);
            let r = &inc - target;
            res = cnorm(r.as_slice()) / scale;
            if res < NEWTON_TOL * 1e-3 {
                return Ok(d);
            }
            let (_, j) = self.eval_jacobian(&(base + &d));
            let step = j.lu().solve(&r).ok_or(ExposeError::NewtonDivergence(res))?;
            d -= &step;
            if cnorm(step.as_slice()) <= NEWTON_TOL * cnorm(d.as_slice()).max(scale) {
                let (_, inc) = self.eval_increment(base, &d);
                res = cnorm((&inc - target).as_slice()) / scale;
                if res < 1e-8 {
                    return Ok(d);
                }
            }
        }
        if res < 1e-8 {
            Ok(d)
        } else {
            Err(ExposeError::NewtonDivergence(res))
        }
    }

    /// Solves `F(z) = y` starting from `start`.
    pub fn invert(&self, y: &CVec, start: &CVec) -> Result<CVec> {
        let (fs, _) = self.eval_jacobian(start);
        let d = self.invert_increment(start, &(y - fs))?;
        Ok(start + d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_expr() -> ScalarExpr {
        ScalarExpr::PeakSeries {
            quad: Box::new(ScalarExpr::Quadratic { q: vec![vec![c(1.5, 0.0), c(0.1, 0.2)], vec![c(0.1, 0.2), c(0.0, 0.3)]] }),
            base: Box::new(ScalarExpr::exp(ScalarExpr::linear(vec![c(0.3, 0.1), c(-0.5, 0.2)], c(0.0, 0.0)))),
            exponents: vec![1, 2, 4, 8],
            weight: 0.25,
        }
    }

    #[test]
    fn pow_matches_powi() {
        let b = c(0.9, 0.3);
        for e in [0u64, 1, 2, 7, 31, 64] {
            assert!((pow_u64(b, e) - b.powi(e as i32)).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_gradient_matches_differences() {
        let e = sample_expr();
        let z = [c(0.2, -0.1), c(-0.3, 0.25)];
        let (_, g) = e.eval_grad(&z);
        let h = 1e-6;
        for k in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += h;
            zm[k] -= h;
            let fd = (e.eval(&zp) - e.eval(&zm)) / (2.0 * h);
            assert!((fd - g[k]).norm() < 1e-8 * (1.0 + g[k].norm()));
        }
    }

    #[test]
    fn serde_round_trip() {
        let e = sample_expr();
        let s = serde_json::to_string(&e).unwrap();
        let back: ScalarExpr = serde_json::from_str(&s).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn affine_shear_chain_and_inverse() {
        let a = CMat::from_row_slice(2, 2, &[c(0.8, 0.1), c(0.2, 0.0), c(-0.1, 0.3), c(1.1, -0.2)]);
        let center = CVec::from_vec(vec![c(0.1, 0.0), c(0.0, -0.2)]);
        let map = HolomorphicMapExpr::identity(2)
            .then(MapPrimitive::Affine { matrix: a.clone(), center: center.clone(), offset: CVec::zeros(2) })
            .then(MapPrimitive::Shear { phi: sample_expr() });
        let z = CVec::from_vec(vec![c(0.3, 0.2), c(-0.1, 0.4)]);
        let (v, j) = map.eval_jacobian(&z);
        assert!((v.clone() - map.eval(&z)).norm() < 1e-15);
        let h = 1e-6;
        for k in 0..2 {
            let mut e = CVec::zeros(2);
            e[k] = c(h, 0.0);
            let fd = (map.eval(&(&z + &e)) - map.eval(&(&z - &e))) / c(2.0 * h, 0.0);
            assert!((fd - j.column(k)).norm() < 1e-8);
        }
        let back = map.invert(&v, &CVec::zeros(2)).unwrap();
        assert!((back - z).norm() < 1e-10);
    }

    #[test]
    fn increment_at_tiny_steps() {
        let map = HolomorphicMapExpr::identity(2).then(MapPrimitive::Shear { phi: sample_expr() });
        let p = CVec::zeros(2);
        let d = CVec::from_vec(vec![c(1e-19, 0.0), c(0.0, 2e-19)]);
        let (_, inc) = map.eval_increment(&p, &d);
        assert!((inc - &d).norm() < 1e-30);
    }
}
