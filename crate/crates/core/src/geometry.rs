//! Local domains `{ρ < 0} ∩ B_R(c)`, boundary sampling, normal-form charts at boundary
//! points and curvature certificates.

use crate::error::{ExposeError, Result};
use crate::hermpoly::{HermitianPolynomial, PolyFile};
use crate::linalg::{complex_frame, min_eig_hermitian, min_eig_sym, real_complement};
use crate::sampling::{stream_rng, uniform_in_ball, unit_direction};
use crate::{CMat, CVec, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Boundary membership tolerance.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Gradient degeneracy threshold.
pub const GRADIENT_TOL: f64 = 1e-9;
/// Residual accepted for sampled boundary points.
pub const SAMPLE_TOL: f64 = 1e-10;

const WITNESS_SEED: u64 = 0x5eed_0001;
const WITNESS_TRIES: usize = 4096;
const RAY_STEPS: usize = 256;
const TARGET_TRIES: usize = 64;

/// Defining function plus chart ball.
#[derive(Clone, Debug)]
pub struct LocalDomain {
    pub rho: HermitianPolynomial,
    pub chart_center: CVec,
    pub chart_radius: f64,
    witness: CVec,
}

impl LocalDomain {
    /// Builds the domain and locates an interior witness; fails when none is found.
    pub fn new(rho: HermitianPolynomial, chart_center: CVec, chart_radius: f64) -> Result<Self> {
        if chart_center.len() != rho.n() {
            return Err(ExposeError::DimensionMismatch { expected: rho.n(), got: chart_center.len() });
        }
        if !(chart_radius > 0.0 && chart_radius.is_finite()) {
            return Err(ExposeError::InvalidInput(format!("chart radius must be positive, got {chart_radius}")));
        }
        let mut best = chart_center.clone();
        let mut best_val = rho.eval(best.as_slice());
        let mut rng = stream_rng(WITNESS_SEED, 0);
        for _ in 0..WITNESS_TRIES {
            let p = uniform_in_ball(&mut rng, &chart_center, 0.7 * chart_radius);
            let v = rho.eval(p.as_slice());
            if v < best_val {
                best_val = v;
                best = p;
            }
        }
        if best_val >= 0.0 {
            return Err(ExposeError::EmptyDomain);
        }
        Ok(LocalDomain { rho, chart_center, chart_radius, witness: best })
    }

    pub fn n(&self) -> usize {
        self.rho.n()
    }

    pub fn witness(&self) -> &CVec {
        &self.witness
    }

    pub fn in_chart(&self, z: &[C64]) -> bool {
        crate::linalg::cdist(z, self.chart_center.as_slice()) <= self.chart_radius
    }

    /// Open domain membership.
    pub fn contains(&self, z: &[C64]) -> bool {
        self.in_chart(z) && self.rho.eval(z) < 0.0
    }

    /// Closure membership (chart ball closed, `ρ ≤ 0`).
    pub fn in_closure(&self, z: &[C64]) -> bool {
        self.in_chart(z) && self.rho.eval(z) <= 0.0
    }

    /// `count` uniform samples of the domain, deterministic in `seed`.
    pub fn sample_interior(&self, count: usize, seed: u64) -> Result<Vec<CVec>> {
        let mut rng = stream_rng(seed, u64::MAX);
        let mut out = Vec::with_capacity(count);
        let mut tries = 0usize;
        while out.len() < count {
            tries += 1;
            if tries > 1000 * count.max(1) && out.len() * 1000 < tries {
                return Err(ExposeError::EmptyDomain);
            }
            let p = uniform_in_ball(&mut rng, &self.chart_center, self.chart_radius);
            if self.rho.eval(p.as_slice()) < 0.0 {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: DomainFile = serde_json::from_str(s).map_err(|e| ExposeError::Parse(e.to_string()))?;
        f.into_domain()
    }

    pub fn to_file(&self) -> DomainFile {
        DomainFile {
            rho: self.rho.to_file(),
            chart_center: self.chart_center.iter().map(|c| [c.re, c.im]).collect(),
            chart_radius: self.chart_radius,
        }
    }
}

/// Serialized domain; complex numbers are `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DomainFile {
    pub rho: PolyFile,
    pub chart_center: Vec<[f64; 2]>,
    pub chart_radius: f64,
}

impl DomainFile {
    pub fn into_domain(self) -> Result<LocalDomain> {
        let rho = self.rho.into_poly()?;
        let center = CVec::from_iterator(self.chart_center.len(), self.chart_center.iter().map(|p| C64::new(p[0], p[1])));
        LocalDomain::new(rho, center, self.chart_radius)
    }
}

enum RayOutcome {
    Hit(CVec),
    Miss,
}

fn directional_derivative(rho: &HermitianPolynomial, z: &CVec, d: &CVec) -> f64 {
    let j = rho.eval_jet(z.as_slice()).expect("dimension checked");
    2.0 * j.dbar_grad.iter().zip(d.iter()).map(|(g, v)| g * v).sum::<C64>().re
}

fn cast_ray(domain: &LocalDomain, seed: u64, index: u64) -> RayOutcome {
    let mut rng = stream_rng(seed, index);
    for _ in 0..TARGET_TRIES {
        let q = uniform_in_ball(&mut rng, &domain.chart_center, domain.chart_radius);
        if domain.rho.eval(q.as_slice()) >= 0.0 {
            let off = &q - &domain.witness;
            let len = off.norm();
            if len > 0.0 {
                return march(domain, &(off / C64::new(len, 0.0)), Some(len));
            }
        }
    }
    let d = unit_direction(&mut rng, domain.n());
    match march(domain, &d, None) {
        RayOutcome::Miss => march(domain, &(-d), None),
        hit => hit,
    }
}

fn march(domain: &LocalDomain, d: &CVec, limit: Option<f64>) -> RayOutcome {
    let rho = &domain.rho;
    let w = &domain.witness;
    let t_max = match limit {
        Some(t) => t,
        None => {
            let off = w - &domain.chart_center;
            let b = off.iter().zip(d.iter()).map(|(o, v)| (o.conj() * v).re).sum::<f64>();
            let cq = off.norm_squared() - domain.chart_radius * domain.chart_radius;
            -b + (b * b - cq).max(0.0).sqrt()
        }
    };
    let at = |t: f64| -> CVec { w + d * C64::new(t, 0.0) };
    let mut lo = 0.0;
    let mut hi = f64::NAN;
    for k in 1..=RAY_STEPS {
        let t = t_max * k as f64 / RAY_STEPS as f64;
        if rho.eval(at(t).as_slice()) >= 0.0 {
            hi = t;
            break;
        }
        lo = t;
    }
    if hi.is_nan() {
        return RayOutcome::Miss;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho.eval(at(mid).as_slice()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..4 {
        let p = at(t);
        let val = rho.eval(p.as_slice());
        let der = directional_derivative(rho, &p, d);
        if der.abs() < GRADIENT_TOL {
            break;
        }
        let next = t - val / der;
        if !(next.is_finite()) || (next - t).abs() > 1e-6 * (1.0 + t_max) {
            break;
        }
        t = next;
    }
    let p = at(t);
    let jet = rho.eval_jet(p.as_slice()).expect("dimension checked");
    if jet.value.abs() >= SAMPLE_TOL || jet.dbar_grad.norm() <= GRADIENT_TOL || !domain.in_chart(p.as_slice()) {
        return RayOutcome::Miss;
    }
    RayOutcome::Hit(p)
}

/// `count` boundary points found along random rays from the interior witness.
///
/// Each ray aims at a random chart point outside the domain, falling back to a random
/// direction and its opposite. Rays are cast in batches; hits are kept in ray-index order so
/// the result depends only on `seed`. Fails when more than half of the rays miss the boundary.
pub fn boundary_sample(domain: &LocalDomain, count: usize, seed: u64) -> Result<Vec<CVec>> {
    if count == 0 {
        return Err(ExposeError::InvalidInput("count must be at least 1".into()));
    }
    let mut hits = Vec::with_capacity(count);
    let mut rays = 0usize;
    let mut misses = 0usize;
    while hits.len() < count {
        let batch = (count - hits.len()).max(16);
        let start = rays as u64;
        let outcomes: Vec<RayOutcome> =
            (0..batch as u64).into_par_iter().map(|k| cast_ray(domain, seed, start + k)).collect();
        for o in outcomes {
            rays += 1;
            match o {
                RayOutcome::Hit(p) => {
                    if hits.len() < count {
                        hits.push(p)
                    }
                }
                RayOutcome::Miss => misses += 1,
            }
        }
        if 2 * misses > rays {
            return Err(ExposeError::RayMiss { misses, rays });
        }
    }
    Ok(hits)
}

/// Normal-form chart at a boundary point.
///
/// In `w = U*(z − ζ)/s` the defining function `ρ̂(w) = ρ(ζ + sUw)/normalizer` expands as
/// `Re(w_n + Σ q_ij w_i w_j) + Σ levi_ij w_i w̄_j + O(|w|³)`.
#[derive(Clone, Debug)]
pub struct BoundaryChart {
    pub zeta: CVec,
    pub unitary: CMat,
    pub q_form: CMat,
    pub levi: CMat,
    pub scale: f64,
    pub normalizer: f64,
    pub strongly_pseudoconvex: bool,
}

impl BoundaryChart {
    pub fn n(&self) -> usize {
        self.zeta.len()
    }

    /// `w = U*(z − ζ)/s`.
    pub fn to_chart(&self, z: &[C64]) -> CVec {
        let d = CVec::from_column_slice(z) - &self.zeta;
        self.unitary.adjoint() * d / C64::new(self.scale, 0.0)
    }

    /// `z = ζ + sUw`.
    pub fn from_chart(&self, w: &[C64]) -> CVec {
        &self.zeta + &self.unitary * CVec::from_column_slice(w) * C64::new(self.scale, 0.0)
    }

    /// Normalized defining function in chart coordinates.
    pub fn rho_hat(&self, rho: &HermitianPolynomial, w: &[C64]) -> f64 {
        rho.eval(self.from_chart(w).as_slice()) / self.normalizer
    }

    /// `Σ q_ij w_i w_j`.
    pub fn quadratic(&self, w: &[C64]) -> C64 {
        let v = CVec::from_column_slice(w);
        (v.transpose() * &self.q_form * &v)[(0, 0)]
    }

    /// Second-order model `Re(w_n + Q(w)) + ℒ(w)`.
    pub fn model(&self, w: &[C64]) -> f64 {
        let v = CVec::from_column_slice(w);
        let n = w.len();
        let levi = (v.transpose() * &self.levi * v.map(|c| c.conj()))[(0, 0)].re;
        w[n - 1].re + self.quadratic(w).re + levi
    }
}

/// [`normalize_at_scaled`] with unit scale.
pub fn normalize_at(domain: &LocalDomain, zeta: &CVec) -> Result<BoundaryChart> {
    normalize_at_scaled(domain, zeta, 1.0)
}

/// Translate to `ζ`, rotate the complex normal to `e_n`, rescale by `s` and divide by the
/// normal derivative so that `dρ̂(0) = Re dw_n`.
pub fn normalize_at_scaled(domain: &LocalDomain, zeta: &CVec, scale: f64) -> Result<BoundaryChart> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(ExposeError::InvalidInput(format!("scale must be positive, got {scale}")));
    }
    let jet = domain.rho.eval_jet(zeta.as_slice())?;
    if jet.value.abs() >= BOUNDARY_TOL {
        return Err(ExposeError::NotOnBoundary(jet.value.abs()));
    }
    let gnorm = jet.dbar_grad.norm();
    if gnorm < GRADIENT_TOL {
        return Err(ExposeError::DegenerateGradient(gnorm));
    }
    let normal = jet.dbar_grad.map(|c| c.conj());
    let u = complex_frame(&normal);
    let normalizer = 2.0 * scale * gnorm;
    let factor = C64::new(scale * scale / normalizer, 0.0);
    let q = u.transpose() * &jet.holo_hess * &u * factor;
    let q = (&q + q.transpose()) * C64::new(0.5, 0.0);
    let levi = u.transpose() * &jet.levi * u.map(|c| c.conj()) * factor;
    let levi = (&levi + levi.adjoint()) * C64::new(0.5, 0.0);
    let n = domain.n();
    let strongly_pseudoconvex = n == 1 || min_eig_hermitian(&levi.view((0, 0), (n - 1, n - 1)).into_owned()) > 0.0;
    Ok(BoundaryChart {
        zeta: zeta.clone(),
        unitary: u,
        q_form: q,
        levi,
        scale,
        normalizer,
        strongly_pseudoconvex,
    })
}

/// Smallest eigenvalue of the Levi form on the complex tangent space at `z`.
pub fn restricted_levi_min(rho: &HermitianPolynomial, z: &CVec) -> Result<f64> {
    let jet = rho.eval_jet(z.as_slice())?;
    let n = rho.n();
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let gnorm = jet.dbar_grad.norm();
    if gnorm < GRADIENT_TOL {
        return Err(ExposeError::DegenerateGradient(gnorm));
    }
    let u = complex_frame(&jet.dbar_grad.map(|c| c.conj()));
    let b = u.columns(0, n - 1).into_owned();
    let m = b.transpose() * &jet.levi * b.map(|c| c.conj());
    Ok(min_eig_hermitian(&m))
}

/// Minimum over `samples` of the restricted Levi eigenvalue; positive means strongly
/// pseudoconvex at every sample. Degenerate samples contribute `-inf`.
pub fn certify_pseudoconvexity(domain: &LocalDomain, samples: &[CVec]) -> f64 {
    samples
        .iter()
        .map(|z| restricted_levi_min(&domain.rho, z).unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the real Hessian of `ρ` on the real tangent hyperplane at `zeta`.
pub fn certify_convexity_at(domain: &LocalDomain, zeta: &CVec) -> Result<f64> {
    convexity_of(&domain.rho, zeta)
}

/// [`certify_convexity_at`] for a bare polynomial.
pub fn convexity_of(rho: &HermitianPolynomial, zeta: &CVec) -> Result<f64> {
    let jet = rho.eval_jet(zeta.as_slice())?;
    let g = jet.real_grad();
    if jet.dbar_grad.norm() < GRADIENT_TOL {
        return Err(ExposeError::DegenerateGradient(jet.dbar_grad.norm()));
    }
    let b = real_complement(&g);
    Ok(min_eig_sym(&(b.transpose() * &jet.real_hess * &b)))
}
