//! Independent finite-difference oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use expose_core::hermpoly::PolyBuilder;
use expose_core::holomap::MapPrimitive;
use expose_core::onevar::OneVarMap;
use expose_core::{CMat, CVec, HermitianPolynomial, HolomorphicMapExpr, LocalDomain, RMat, ScalarExpr, Term, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the polydisk of radius `r`.
pub fn polydisk_point<R: Rng>(rng: &mut R, n: usize, r: f64) -> CVec {
    CVec::from_fn(n, |_, _| {
        let rad = r * rng.gen::<f64>().sqrt();
        C64::from_polar(rad, 2.0 * std::f64::consts::PI * rng.gen::<f64>())
    })
}

/// `2Re z₂ + 3Re(z₁²) + |z₁|² + |z₂|²`.
pub fn nonconvex_rho() -> HermitianPolynomial {
    PolyBuilder::new(2).re_power(1, 1, 2.0).re_power(0, 2, 3.0).abs_sq(0, 1.0).abs_sq(1, 1.0).build().unwrap()
}

pub fn nonconvex_domain(radius: f64) -> LocalDomain {
    LocalDomain::new(nonconvex_rho(), CVec::zeros(2), radius).unwrap()
}

pub fn unit_ball(n: usize) -> LocalDomain {
    LocalDomain::new(HermitianPolynomial::sphere(n, 1.0), CVec::zeros(n), 2.0).unwrap()
}

pub fn north(n: usize) -> CVec {
    let mut z = CVec::zeros(n);
    z[n - 1] = c(1.0, 0.0);
    z
}

/// Real coordinates `[x; y]` to complex.
fn shifted(z: &CVec, k: usize, h: f64) -> CVec {
    let n = z.len();
    let mut w = z.clone();
    if k < n {
        w[k].re += h;
    } else {
        w[k - n].im += h;
    }
    w
}

/// Real gradient of `f` in `[x; y]` order by central differences.
pub fn fd_real_gradient(f: &dyn Fn(&CVec) -> f64, z: &CVec, h: f64) -> Vec<f64> {
    (0..2 * z.len()).map(|k| (f(&shifted(z, k, h)) - f(&shifted(z, k, -h))) / (2.0 * h)).collect()
}

/// Real Hessian of `f` in `[x; y]` order by the four-point stencil.
pub fn fd_real_hessian(f: &dyn Fn(&CVec) -> f64, z: &CVec, h: f64) -> RMat {
    let d = 2 * z.len();
    RMat::from_fn(d, d, |i, j| {
        let pp = f(&shifted(&shifted(z, i, h), j, h));
        let pm = f(&shifted(&shifted(z, i, h), j, -h));
        let mp = f(&shifted(&shifted(z, i, -h), j, h));
        let mm = f(&shifted(&shifted(z, i, -h), j, -h));
        (pp - pm - mp + mm) / (4.0 * h * h)
    })
}

/// `∂f/∂z_i = ½(∂_x − i∂_y) f` from a real gradient.
pub fn wirtinger_from_real(g: &[f64]) -> Vec<C64> {
    let n = g.len() / 2;
    (0..n).map(|i| c(0.5 * g[i], -0.5 * g[i + n])).collect()
}

/// `(∂²f/∂z_i∂z_j, ∂²f/∂z_i∂z̄_j)` from a real Hessian.
pub fn wirtinger_hessians(h: &RMat) -> (CMat, CMat) {
    let n = h.nrows() / 2;
    let holo = CMat::from_fn(n, n, |i, j| {
        c(0.25 * (h[(i, j)] - h[(i + n, j + n)]), -0.25 * (h[(i, j + n)] + h[(i + n, j)]))
    });
    let levi = CMat::from_fn(n, n, |i, j| {
        c(0.25 * (h[(i, j)] + h[(i + n, j + n)]), 0.25 * (h[(i, j + n)] - h[(i + n, j)]))
    });
    (holo, levi)
}

/// Complex Jacobian `∂F_i/∂z_j` by central differences along the real axes.
pub fn fd_jacobian(f: &dyn Fn(&CVec) -> CVec, z: &CVec, h: f64) -> CMat {
    let n = z.len();
    let m = f(z).len();
    let mut j = CMat::zeros(m, n);
    for k in 0..n {
        let col = (f(&shifted(z, k, h)) - f(&shifted(z, k, -h))) / c(2.0 * h, 0.0);
        j.set_column(k, &col);
    }
    j
}

/// `max_j ‖∂F/∂z̄_j‖` by central differences.
pub fn fd_conj_wirtinger(f: &dyn Fn(&CVec) -> CVec, z: &CVec, h: f64) -> f64 {
    let n = z.len();
    (0..n)
        .map(|k| {
            let dx = (f(&shifted(z, k, h)) - f(&shifted(z, k, -h))) / c(2.0 * h, 0.0);
            let dy = (f(&shifted(z, k + n, h)) - f(&shifted(z, k + n, -h))) / c(2.0 * h, 0.0);
            ((dx + dy * c(0.0, 1.0)) * c(0.5, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// `max |a − b| / max(1, max |b|)` entrywise.
pub fn rel_err_c(a: &CMat, b: &CMat) -> f64 {
    let scale = b.iter().map(|x| x.norm()).fold(1.0, f64::max);
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale
}

pub fn rel_err_r(a: &RMat, b: &RMat) -> f64 {
    let scale = b.iter().map(|x| x.abs()).fold(1.0, f64::max);
    (a - b).amax() / scale
}

/// Random Hermitian polynomial: each drawn `(α, β, c)` is added with its partner `(β, α, c̄)`.
pub fn random_poly<R: Rng>(rng: &mut R, n: usize, terms: usize, max_deg: u8, max_coeff: f64) -> HermitianPolynomial {
    let mut out = Vec::new();
    for _ in 0..terms {
        let alpha: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=max_deg)).collect();
        let beta: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=max_deg)).collect();
        let coeff = c(rng.gen_range(-max_coeff..max_coeff), rng.gen_range(-max_coeff..max_coeff)) * 0.5;
        out.push(Term::new(alpha.clone(), beta.clone(), coeff));
        out.push(Term::new(beta, alpha, coeff.conj()));
    }
    HermitianPolynomial::new(n, out).unwrap()
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize, spread: f64) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        c(d + spread * rng.gen_range(-1.0..1.0), spread * rng.gen_range(-1.0..1.0))
    })
}

fn random_vec<R: Rng>(rng: &mut R, n: usize, spread: f64) -> CVec {
    CVec::from_fn(n, |_, _| c(spread * rng.gen_range(-1.0..1.0), spread * rng.gen_range(-1.0..1.0)))
}

fn random_monomial<R: Rng>(rng: &mut R, degree: usize, spread: f64) -> OneVarMap {
    let mut coeffs: Vec<C64> = (0..=degree).map(|_| c(spread * rng.gen_range(-1.0..1.0), spread * rng.gen_range(-1.0..1.0))).collect();
    coeffs[1] += c(1.0, 0.0);
    OneVarMap::Monomial { coeffs }
}

/// A random scalar expression mixing every node type except `PeakSeries`.
pub fn random_scalar<R: Rng>(rng: &mut R, n: usize) -> ScalarExpr {
    let q = {
        let a = random_matrix(rng, n, 0.5);
        (&a + a.transpose()) * c(0.5, 0.0)
    };
    let lin = ScalarExpr::linear((0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(), c(0.1, 0.0));
    ScalarExpr::Sum {
        terms: vec![
            ScalarExpr::Product { factors: vec![ScalarExpr::quadratic(&q), ScalarExpr::exp(lin.clone())] },
            ScalarExpr::Scale {
                factor: c(0.3, -0.2),
                inner: Box::new(ScalarExpr::Power { base: Box::new(ScalarExpr::Coord { index: n - 1 }), exponent: 3 }),
            },
            ScalarExpr::pullback(lin, &random_matrix(rng, n, 0.3), &random_vec(rng, n, 0.2)),
        ],
    }
}

/// A random composition of every primitive kind, near the identity on the unit polydisk.
pub fn random_map<R: Rng>(rng: &mut R, n: usize) -> HolomorphicMapExpr {
    let peak = ScalarExpr::exp(ScalarExpr::linear((0..n).map(|_| c(rng.gen_range(-0.5..0.5), 0.0)).collect(), c(0.0, 0.0)));
    let q = random_matrix(rng, n, 0.3);
    let inner = HolomorphicMapExpr::identity(n).then(MapPrimitive::Shear { phi: random_scalar(rng, n) });
    HolomorphicMapExpr::identity(n)
        .then(MapPrimitive::Affine { matrix: random_matrix(rng, n, 0.2), center: random_vec(rng, n, 0.1), offset: random_vec(rng, n, 0.1) })
        .then(MapPrimitive::Shear {
            phi: ScalarExpr::PeakSeries {
                quad: Box::new(ScalarExpr::quadratic(&q)),
                base: Box::new(peak),
                exponents: vec![1, 2, 4, 8],
                weight: 0.25,
            },
        })
        .then(MapPrimitive::OneVar { coord: 0, map: random_monomial(rng, 3, 0.1) })
        .then(MapPrimitive::FiberScale { scale: random_monomial(rng, 2, 0.1), last: random_monomial(rng, 3, 0.1) })
        .then(MapPrimitive::Isotopy { t: rng.gen_range(0.3..1.0), inner: Box::new(inner) })
}

/// Richardson-extrapolated real gradient, `O(h⁴)`.
pub fn fd_real_gradient_r(f: &dyn Fn(&CVec) -> f64, z: &CVec, h: f64) -> Vec<f64> {
    let a = fd_real_gradient(f, z, h);
    let b = fd_real_gradient(f, z, h / 2.0);
    a.iter().zip(&b).map(|(a, b)| (4.0 * b - a) / 3.0).collect()
}

/// Richardson-extrapolated real Hessian, `O(h⁴)`.
pub fn fd_real_hessian_r(f: &dyn Fn(&CVec) -> f64, z: &CVec, h: f64) -> RMat {
    (fd_real_hessian(f, z, h / 2.0) * 4.0 - fd_real_hessian(f, z, h)) / 3.0
}

/// Richardson-extrapolated complex Jacobian, `O(h⁴)`.
pub fn fd_jacobian_r(f: &dyn Fn(&CVec) -> CVec, z: &CVec, h: f64) -> CMat {
    (fd_jacobian(f, z, h / 2.0) * c(4.0, 0.0) - fd_jacobian(f, z, h)) / c(3.0, 0.0)
}
