//! Convexifying maps `z_n ↦ z_n + Σ_j (1/M) Q(z) f(z)^{N_j}` in a boundary chart, their
//! parameter planner, parametric families and numerical verification.

use crate::error::{ExposeError, Result};
use crate::geometry::{normalize_at_scaled, BoundaryChart, LocalDomain};
use crate::hermpoly::{real_hessian_from, HermitianPolynomial};
use crate::holomap::{HolomorphicMapExpr, MapPrimitive, ScalarExpr, NEWTON_MAX_ITER, NEWTON_TOL};
use crate::linalg::{angle_between, cdist, cnorm, complex_linear_as_real, min_eig_sym, op_norm, real_complement};
use crate::peak::{make_peak_family, PeakFunction};
use crate::sampling::{ball_lattice, stream_rng, uniform_in_ball};
use crate::{CMat, CVec, RMat, C64};
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

/// Exponents may not exceed this value.
pub const MAX_EXPONENT: u64 = 1 << 60;
/// Points of the dense radial check.
pub const RADIAL_SAMPLES: usize = 10_000;
/// Default inner radius, as a fraction of the chart radius, below which the aggregate
/// derivative bound is reported but not required.
pub const DEFAULT_CORE_FRACTION: f64 = 1.0 / 32.0;
/// Random pairs drawn by the collision search.
pub const COLLISION_PAIRS: usize = 100_000;
const COLLISION_IMAGE_TOL: f64 = 1e-10;
const COLLISION_SOURCE_TOL: f64 = 1e-6;
const FD_AGREEMENT: f64 = 1e-7;

/// `M = ⌈2/(ε e c)⌉ + 1`.
pub fn term_count(eps: f64, decay_c: f64) -> usize {
    (2.0 / (eps * E * decay_c)).ceil() as usize + 1
}

/// Maximiser and maximum of `σ(x) = x e^{−cx}`: `(1/c, 1/(ce))`.
pub fn bump_maximum(c: f64) -> (f64, f64) {
    (1.0 / c, 1.0 / (c * E))
}

/// Derivative bound of one term `Q f^N` at radius `x`:
/// `‖q‖ (2x + G N x²) e^{−N c x²}` with `G` bounding `|∇ log f|`.
pub fn bump_bound(q_norm: f64, growth: f64, n: u64, c: f64, x: f64) -> f64 {
    let nf = n as f64;
    q_norm * (2.0 * x + growth * nf * x * x) * (-nf * c * x * x).exp()
}

/// Value bound of one term: `‖q‖ x² e^{−N c x²}`.
pub fn bump_value(q_norm: f64, n: u64, c: f64, x: f64) -> f64 {
    let nf = n as f64;
    q_norm * x * x * (-nf * c * x * x).exp()
}

/// Planned parameters. Radii are in the original coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureParams {
    pub eps: f64,
    pub m: usize,
    pub exponents: Vec<u64>,
    pub radii: Vec<f64>,
    pub decay_c: f64,
    /// Chart scale `s`.
    pub scale: f64,
    /// Radius of the region covered by the bounds.
    pub region_radius: f64,
    /// `‖q‖_op` of the chart quadratic form.
    pub q_norm: f64,
    /// Bound on `|∇ log f|` in chart coordinates.
    pub log_gradient: f64,
    /// Inner radius of the certified band.
    pub core_radius: f64,
    /// `sup (1/M) Σ_j B_j` over the certified band.
    pub radial_bound: f64,
    /// `sup s (1/M) Σ_j ‖q‖ x² e^{−N_j c x²}` over the certified band.
    pub value_bound: f64,
    /// `sup (1/M) Σ_j B_j` over the whole region including the core.
    pub full_radial_bound: f64,
    /// Per term, `sup B_j` outside `[r_{j+1}, r_j]`.
    pub annulus_spills: Vec<f64>,
    /// `ε/(2M)`.
    pub annulus_target: f64,
}

impl ExposureParams {
    /// `1/√(N_j c)`, the radius where the `j`-th bump peaks.
    pub fn bump_peaks(&self) -> Vec<f64> {
        self.exponents.iter().map(|&n| 1.0 / (n as f64 * self.decay_c).sqrt()).collect()
    }

    /// Whether every per-annulus spill is below `ε/(2M)`.
    pub fn per_annulus_ok(&self) -> bool {
        self.annulus_spills.iter().all(|&s| s < self.annulus_target)
    }

    /// Violated structural invariants, by description.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.m as f64 > 2.0 / (self.eps * E * self.decay_c)) {
            out.push(format!("M = {} does not exceed 2/(eps e c)", self.m));
        }
        if self.exponents.len() != self.m || self.radii.len() != self.m {
            out.push("exponent or radius count differs from M".into());
        }
        if self.exponents.windows(2).any(|w| w[0] >= w[1]) {
            out.push("exponents not strictly increasing".into());
        }
        if self.radii.windows(2).any(|w| w[0] <= w[1]) || self.radii.iter().any(|&r| !(r > 0.0)) {
            out.push("radii not strictly decreasing and positive".into());
        }
        for (j, x) in self.bump_peaks().into_iter().enumerate() {
            let hi = self.radii[j];
            let lo = self.radii.get(j + 1).copied().unwrap_or(0.0);
            if !(x >= lo && x <= hi) {
                out.push(format!("bump peak {j} outside its annulus"));
            }
        }
        out
    }
}

/// Planner controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    /// Region radius in original coordinates.
    pub radius: f64,
    pub core_fraction: f64,
    /// Bound on `|∇ log f|` in chart coordinates.
    pub log_gradient: f64,
    pub samples: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions { radius: 1.0, core_fraction: DEFAULT_CORE_FRACTION, log_gradient: 1.0, samples: RADIAL_SAMPLES }
    }
}

/// [`plan_parameters_with`] under default options.
pub fn plan_parameters(decay_c: f64, eps: f64, chart: &BoundaryChart) -> Result<ExposureParams> {
    plan_parameters_with(decay_c, eps, chart, &PlanOptions::default())
}

/// Chooses `M`, doubling exponents `N_j = N_1 2^{j−1}` and radii. `N_1` is the smallest power
/// of two for which the aggregate derivative bound stays below `ε` and the value bound below
/// `ε` on the band between the core radius and the region radius.
pub fn plan_parameters_with(decay_c: f64, eps: f64, chart: &BoundaryChart, opts: &PlanOptions) -> Result<ExposureParams> {
    plan_radial(decay_c, eps, op_norm(&chart.q_form), chart.scale, opts)
}

fn radial_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

fn plan_radial(decay_c: f64, eps: f64, q_norm: f64, scale: f64, opts: &PlanOptions) -> Result<ExposureParams> {
    if !(decay_c > 0.0 && decay_c.is_finite()) {
        return Err(ExposeError::UncertifiedPeak);
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ExposeError::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if !(opts.radius > 0.0 && scale > 0.0) {
        return Err(ExposeError::InvalidInput("radius and scale must be positive".into()));
    }
    let m = term_count(eps, decay_c);
    if m > 61 {
        return Err(ExposeError::NonConvergence(format!("M = {m} doubling exponents exceed 2^60")));
    }
    let c = decay_c * scale * scale;
    let g = opts.log_gradient;
    let r_w = opts.radius / scale;
    let core = opts.core_fraction * r_w;
    let band = radial_grid(core, r_w, opts.samples);
    let weight = 1.0 / m as f64;
    let aggregate = |exps: &[u64], x: f64| weight * exps.iter().map(|&n| bump_bound(q_norm, g, n, c, x)).sum::<f64>();
    let value = |exps: &[u64], x: f64| scale * weight * exps.iter().map(|&n| bump_value(q_norm, n, c, x)).sum::<f64>();
    let mut n1: u64 = 1;
    loop {
        let exponents: Vec<u64> = (0..m).map(|j| n1 << j).collect();
        if *exponents.last().unwrap() > MAX_EXPONENT {
            return Err(ExposeError::NonConvergence(format!(
                "no exponent plan below 2^60 meets eps = {eps} with M = {m}"
            )));
        }
        let radial_bound = band.par_iter().map(|&x| aggregate(&exponents, x)).reduce(|| 0.0, f64::max);
        let value_bound = band.par_iter().map(|&x| value(&exponents, x)).reduce(|| 0.0, f64::max);
        if radial_bound < eps && value_bound < eps {
            let peaks: Vec<f64> = exponents.iter().map(|&n| 1.0 / (n as f64 * c).sqrt()).collect();
            let mut radii_w = Vec::with_capacity(m);
            radii_w.push(2.0 * peaks[0]);
            for j in 1..m {
                radii_w.push((peaks[j - 1] * peaks[j]).sqrt());
            }
            let smallest = peaks[m - 1] * 1e-3;
            let mut probe = radial_grid(0.0, r_w, opts.samples);
            probe.extend(log_grid(smallest, r_w.max(2.0 * radii_w[0]), opts.samples));
            probe.extend(radii_w.iter().copied());
            probe.extend(peaks.iter().copied());
            let full_radial_bound = probe
                .par_iter()
                .filter(|&&x| x <= r_w)
                .map(|&x| aggregate(&exponents, x))
                .reduce(|| 0.0, f64::max);
            let annulus_spills: Vec<f64> = (0..m)
                .map(|j| {
                    let hi = radii_w[j];
                    let lo = if j + 1 < m { radii_w[j + 1] } else { 0.0 };
                    probe
                        .iter()
                        .chain([lo, hi].iter())
                        .filter(|&&x| x <= r_w && (x >= hi || x <= lo))
                        .map(|&x| bump_bound(q_norm, g, exponents[j], c, x))
                        .fold(0.0, f64::max)
                })
                .collect();
            return Ok(ExposureParams {
                eps,
                m,
                exponents,
                radii: radii_w.iter().map(|r| r * scale).collect(),
                decay_c,
                scale,
                region_radius: opts.radius,
                q_norm,
                log_gradient: g,
                core_radius: core * scale,
                radial_bound,
                value_bound,
                full_radial_bound,
                annulus_spills,
                annulus_target: eps / (2.0 * m as f64),
            });
        }
        n1 = n1.checked_mul(2).ok_or_else(|| ExposeError::NonConvergence("exponent overflow".into()))?;
    }
}

/// Upper bound for `|∇ log f|` on the ball of `radius` about the origin, from the expression
/// structure where possible and by sampling otherwise.
pub fn log_gradient_bound(expr: &ScalarExpr, n: usize, radius: f64) -> f64 {
    fn grad_bound(e: &ScalarExpr, radius: f64) -> Option<f64> {
        match e {
            ScalarExpr::Const { .. } => Some(0.0),
            ScalarExpr::Coord { .. } => Some(1.0),
            ScalarExpr::Linear { coeffs, .. } => Some(cnorm(coeffs)),
            ScalarExpr::Quadratic { q } => {
                let m = CMat::from_fn(q.len(), q.len(), |i, j| q[i][j] + q[j][i]);
                Some(op_norm(&m) * radius)
            }
            ScalarExpr::Sum { terms } => terms.iter().map(|t| grad_bound(t, radius)).sum(),
            ScalarExpr::Scale { factor, inner } => grad_bound(inner, radius).map(|b| factor.norm() * b),
            ScalarExpr::Pullback { inner, matrix, offset } => {
                let a = CMat::from_fn(matrix.len(), matrix[0].len(), |i, j| matrix[i][j]);
                let na = op_norm(&a);
                grad_bound(inner, na * radius + cnorm(offset)).map(|b| na * b)
            }
            _ => None,
        }
    }
    if let ScalarExpr::Exp { inner } = expr {
        if let Some(b) = grad_bound(inner, radius) {
            return b;
        }
    }
    let mut rng = stream_rng(0x10_6e, 0);
    let center = CVec::zeros(n);
    let mut best: f64 = 0.0;
    for _ in 0..2048 {
        let p = uniform_in_ball(&mut rng, &center, radius);
        let (v, g) = expr.eval_grad(p.as_slice());
        if v.norm() > 0.0 {
            best = best.max(cnorm(&g) / v.norm());
        }
    }
    1.5 * best
}

/// Builder controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexifyOptions {
    pub scale: f64,
    pub core_fraction: f64,
    pub samples: usize,
}

impl Default for ConvexifyOptions {
    fn default() -> Self {
        ConvexifyOptions { scale: 1.0, core_fraction: DEFAULT_CORE_FRACTION, samples: RADIAL_SAMPLES }
    }
}

fn region_radius(domain: &LocalDomain, zeta: &CVec) -> f64 {
    domain.chart_radius + cdist(zeta.as_slice(), domain.chart_center.as_slice())
}

fn assemble(chart: &BoundaryChart, peak_w: ScalarExpr, params: &ExposureParams) -> HolomorphicMapExpr {
    let n = chart.n();
    if chart.q_form.iter().all(|c| *c == C64::new(0.0, 0.0)) {
        return HolomorphicMapExpr::identity(n);
    }
    let phi = ScalarExpr::PeakSeries {
        quad: Box::new(ScalarExpr::quadratic(&chart.q_form)),
        base: Box::new(peak_w),
        exponents: params.exponents.clone(),
        weight: 1.0 / params.m as f64,
    };
    let s = C64::new(chart.scale, 0.0);
    HolomorphicMapExpr::identity(n)
        .then(MapPrimitive::Affine {
            matrix: chart.unitary.adjoint() / s,
            center: chart.zeta.clone(),
            offset: CVec::zeros(n),
        })
        .then(MapPrimitive::Shear { phi })
        .then(MapPrimitive::Affine { matrix: &chart.unitary * s, center: CVec::zeros(n), offset: chart.zeta.clone() })
}

/// [`build_convexifier_with`] under default options.
pub fn build_convexifier(
    domain: &LocalDomain,
    zeta: &CVec,
    peak: &PeakFunction,
    eps: f64,
) -> Result<(HolomorphicMapExpr, ExposureParams)> {
    build_convexifier_with(domain, zeta, peak, eps, &ConvexifyOptions::default())
}

/// `F = chart⁻¹ ∘ shear ∘ chart` with the shear adding `(1/M) Σ_j Q(w) f(w)^{N_j}` to `w_n`.
pub fn build_convexifier_with(
    domain: &LocalDomain,
    zeta: &CVec,
    peak: &PeakFunction,
    eps: f64,
    opts: &ConvexifyOptions,
) -> Result<(HolomorphicMapExpr, ExposureParams)> {
    if !(peak.decay_c > 0.0) {
        return Err(ExposeError::UncertifiedPeak);
    }
    if cdist(peak.zeta.as_slice(), zeta.as_slice()) > 1e-12 {
        return Err(ExposeError::InvalidInput("peak point differs from zeta".into()));
    }
    let chart = normalize_at_scaled(domain, zeta, opts.scale)?;
    let radius = region_radius(domain, zeta);
    let peak_w = peak.in_chart(&chart);
    let plan_opts = PlanOptions {
        radius,
        core_fraction: opts.core_fraction,
        log_gradient: log_gradient_bound(&peak_w, domain.n(), radius / opts.scale),
        samples: opts.samples,
    };
    let params = plan_parameters_with(peak.decay_c, eps, &chart, &plan_opts)?;
    Ok((assemble(&chart, peak_w, &params), params))
}

/// Convex-peak convexifiers at several boundary points sharing one plan.
#[derive(Clone, Debug)]
pub struct FamilyConvexifier {
    pub maps: Vec<HolomorphicMapExpr>,
    pub params: ExposureParams,
    pub decay_c: f64,
    /// Sup-grid distances between maps at consecutive points.
    pub pair_distances: Vec<f64>,
    /// Distances between consecutive points.
    pub zeta_spacing: Vec<f64>,
    /// Largest ratio of map distance to point spacing.
    pub lipschitz: f64,
    pub grid_points: usize,
}

/// Per-axis lattice density of the continuity check.
pub const FAMILY_GRID: usize = 6;

pub fn build_family_convexifier(domain: &LocalDomain, zetas: &[CVec], eps: f64) -> Result<FamilyConvexifier> {
    let (peaks, shared) = make_peak_family(domain, zetas)?;
    let charts: Vec<BoundaryChart> = zetas
        .iter()
        .enumerate()
        .map(|(index, z)| {
            normalize_at_scaled(domain, z, 1.0).map_err(|e| ExposeError::FamilyMember { index, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let radius = zetas.iter().map(|z| region_radius(domain, z)).fold(0.0, f64::max);
    let peaks_w: Vec<ScalarExpr> = peaks.iter().zip(&charts).map(|(p, c)| p.in_chart(c)).collect();
    let q_norm = charts.iter().map(|c| op_norm(&c.q_form)).fold(0.0, f64::max);
    let growth = peaks_w.iter().map(|e| log_gradient_bound(e, domain.n(), radius)).fold(0.0, f64::max);
    let opts = PlanOptions { radius, log_gradient: growth, ..PlanOptions::default() };
    let params = plan_radial(shared, eps, q_norm, 1.0, &opts)?;
    let maps: Vec<HolomorphicMapExpr> =
        charts.iter().zip(peaks_w).map(|(c, p)| assemble(c, p, &params)).collect();
    let grid: Vec<CVec> = ball_lattice(&domain.chart_center, domain.chart_radius, FAMILY_GRID)
        .into_iter()
        .filter(|z| domain.in_closure(z.as_slice()))
        .collect();
    let mut pair_distances = Vec::new();
    let mut zeta_spacing = Vec::new();
    let mut lipschitz: f64 = 0.0;
    for k in 1..maps.len() {
        let d = grid
            .par_iter()
            .map(|z| cdist(maps[k - 1].eval(z).as_slice(), maps[k].eval(z).as_slice()))
            .reduce(|| 0.0, f64::max);
        let h = cdist(zetas[k - 1].as_slice(), zetas[k].as_slice());
        if h > 0.0 {
            lipschitz = lipschitz.max(d / h);
        }
        pair_distances.push(d);
        zeta_spacing.push(h);
    }
    Ok(FamilyConvexifier {
        maps,
        params,
        decay_c: shared,
        pair_distances,
        zeta_spacing,
        lipschitz,
        grid_points: grid.len(),
    })
}

/// Verification lattice: `per_axis` nodes per real axis on the ball of `radius` about the
/// chart centre; `seed` drives the collision search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub per_axis: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Numerical certificate for a map near a boundary point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub eps: f64,
    pub c0_dist: f64,
    pub c1_dist: f64,
    pub kappa: f64,
    pub convexity_eig: f64,
    pub tangency_err: f64,
    /// `|F(ζ) − ζ|`.
    pub fixed_point_err: f64,
    /// `‖J_F(ζ) − I‖`.
    pub jacobian_err: f64,
    pub grid: GridSpec,
    pub grid_points: usize,
    pub collision_pairs: usize,
    pub collisions: usize,
    /// Smallest `|F(a) − F(b)| / |a − b|` over the sampled pairs.
    pub min_pair_ratio: f64,
    pub injectivity_certified: bool,
    /// Finite-difference step of the accepted Hessian estimate.
    pub fd_step: f64,
    pub fd_converged: bool,
}

/// Solves `J₀ δ + R(d₀ + δ) = 0` at `base`, so that `F(base + d₀ + δ) − F(base) = J₀ d₀`.
fn inverse_correction(map: &HolomorphicMapExpr, base: &CVec, j0: &CMat, d0: &CVec) -> Result<CVec> {
    let mut delta = CVec::zeros(d0.len());
    let mut last = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let d = d0 + &delta;
        let (_, _, rem) = map.split_increment(base, &d);
        let res = j0 * &delta + rem;
        let (_, j) = map.eval_jacobian(&(base + &d));
        let step = j.lu().solve(&res).ok_or(ExposeError::NewtonDivergence(cnorm(res.as_slice())))?;
        delta -= &step;
        let sn = cnorm(step.as_slice());
        if !sn.is_finite() {
            return Err(ExposeError::NewtonDivergence(sn));
        }
        if sn <= NEWTON_TOL * cnorm(delta.as_slice()) || sn == 0.0 {
            return Ok(delta);
        }
        last = sn / cnorm(d0.as_slice()).max(f64::MIN_POSITIVE);
    }
    if last < 1e-8 {
        Ok(delta)
    } else {
        Err(ExposeError::NewtonDivergence(last))
    }
}

fn real_direction(n: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(n);
    if k < n {
        v[k] = C64::new(1.0, 0.0);
    } else {
        v[k - n] = C64::new(0.0, 1.0);
    }
    v
}

/// Real Hessian of `ρ ∘ F⁻¹` at `F(ζ)` in the coordinates `d₀ = J₀⁻¹ v`, estimated by second
/// differences of the part of order two and higher.
fn pushed_hessian_at_step(
    map: &HolomorphicMapExpr,
    zeta: &CVec,
    j0: &CMat,
    grad: &CVec,
    rest: &HermitianPolynomial,
    h: f64,
) -> Result<RMat> {
    let n = zeta.len();
    let m = 2 * n;
    let second = |dir: &CVec| -> Result<f64> {
        let delta = inverse_correction(map, zeta, j0, dir)?;
        let lin = 2.0 * grad.iter().zip(delta.iter()).map(|(g, d)| g * d).sum::<C64>().re;
        let d = dir + &delta;
        let v = lin + rest.eval(d.as_slice());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExposeError::NewtonDivergence(f64::INFINITY))
        }
    };
    let hc = C64::new(h, 0.0);
    let mut hess = RMat::zeros(m, m);
    for k in 0..m {
        let ek = real_direction(n, k) * hc;
        let plus = second(&(&ek * C64::new(2.0, 0.0)))?;
        let minus = second(&(&ek * C64::new(-2.0, 0.0)))?;
        hess[(k, k)] = (plus + minus) / (4.0 * h * h);
        for l in 0..k {
            let el = real_direction(n, l) * hc;
            let pp = second(&(&ek + &el))?;
            let pm = second(&(&ek - &el))?;
            let mp = second(&(-&ek + &el))?;
            let mm = second(&(-&ek - &el))?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(k, l)] = v;
            hess[(l, k)] = v;
        }
    }
    Ok(hess)
}

/// Minimum restricted eigenvalue of the real Hessian of `ρ ∘ F⁻¹` at `F(ζ)` and the angle
/// between the real gradients of `ρ` at `ζ` and of `ρ ∘ F⁻¹` at `F(ζ)`.
/// Returns `(eig, angle, step, converged)`.
pub fn pushed_convexity(domain: &LocalDomain, map: &HolomorphicMapExpr, zeta: &CVec) -> Result<(f64, f64, f64, bool)> {
    let n = domain.n();
    let jet = domain.rho.eval_jet(zeta.as_slice())?;
    let (_, j0) = map.eval_jacobian(zeta);
    let j0_inv = j0.clone().try_inverse().ok_or_else(|| ExposeError::IllConditioned("Jacobian at zeta is singular".into()))?;
    // Wirtinger gradient of v ↦ ρ(ζ + J₀⁻¹ v).
    let pushed_grad = (jet.dbar_grad.transpose() * &j0_inv).transpose();
    let real_grad = |g: &CVec| DVector::from_fn(2 * n, |i, _| if i < n { 2.0 * g[i].re } else { -2.0 * g[i - n].im });
    let g_rho = real_grad(&jet.dbar_grad);
    let g_push = real_grad(&pushed_grad);
    let angle = angle_between(&g_rho, &g_push);
    let rest = domain.rho.translated(zeta.as_slice()).higher_order(2);
    let k = complex_linear_as_real(&j0_inv);
    let mut prev: Option<RMat> = None;
    let mut accepted: Option<(RMat, f64, bool)> = None;
    for e in 3..=30 {
        let h = 10f64.powi(-e);
        let Ok(hd) = pushed_hessian_at_step(map, zeta, &j0, &jet.dbar_grad, &rest, h) else {
            prev = None;
            continue;
        };
        if let Some(p) = &prev {
            let diff = (&hd - p).abs().max();
            if diff <= FD_AGREEMENT * (1.0 + hd.abs().max()) {
                accepted = Some((hd, h, true));
                break;
            }
        }
        accepted = Some((hd.clone(), h, false));
        prev = Some(hd);
    }
    let (hd, step, converged) = accepted.ok_or(ExposeError::NewtonDivergence(f64::NAN))?;
    let hv = k.transpose() * hd * &k;
    let basis = real_complement(&g_push);
    Ok((min_eig_sym(&(basis.transpose() * hv * &basis)), angle, step, converged))
}

/// Restricted real-Hessian eigenvalue of `ρ ∘ F⁻¹` for the chart convexifier, from the
/// second-order data alone: `∂²(ρ ∘ F⁻¹) = ∂²ρ − Σ_k ∂ρ_k ∂²F_k` with
/// `∂²F_k = (2/s) U_kn Ū q U*`.
pub fn analytic_convexity(domain: &LocalDomain, zeta: &CVec, scale: f64) -> Result<f64> {
    let chart = normalize_at_scaled(domain, zeta, scale)?;
    let n = domain.n();
    let jet = domain.rho.eval_jet(zeta.as_slice())?;
    let u = &chart.unitary;
    let core = u.map(|c| c.conj()) * &chart.q_form * u.adjoint() * C64::new(2.0 / scale, 0.0);
    let mut holo = jet.holo_hess.clone();
    for k in 0..n {
        holo -= &core * (jet.dbar_grad[k] * u[(k, n - 1)]);
    }
    let hess = real_hessian_from(&holo, &jet.levi);
    let basis = real_complement(&jet.real_grad());
    Ok(min_eig_sym(&(basis.transpose() * hess * &basis)))
}

/// Grid sup distances, contraction constant, collision search, pushed-forward convexity and
/// tangency of `map` near `zeta`.
pub fn verify_map(
    map: &HolomorphicMapExpr,
    domain: &LocalDomain,
    zeta: &CVec,
    eps: f64,
    grid: &GridSpec,
) -> Result<VerificationReport> {
    if zeta.len() != domain.n() || map.dim != domain.n() {
        return Err(ExposeError::DimensionMismatch { expected: domain.n(), got: zeta.len() });
    }
    let points: Vec<CVec> = ball_lattice(&domain.chart_center, grid.radius, grid.per_axis)
        .into_iter()
        .filter(|z| domain.in_closure(z.as_slice()))
        .collect();
    if points.is_empty() {
        return Err(ExposeError::EmptyDomain);
    }
    let eye = CMat::identity(domain.n(), domain.n());
    let evaluated: Vec<(CVec, f64, f64)> = points
        .par_iter()
        .map(|z| {
            let (fz, j) = map.eval_jacobian(z);
            let c0 = cdist(fz.as_slice(), z.as_slice());
            let c1 = op_norm(&(j - &eye));
            (fz, c0, c1)
        })
        .collect();
    let mut c0_dist: f64 = 0.0;
    let mut c1_dist: f64 = 0.0;
    for (fz, c0, c1) in &evaluated {
        if !(c0.is_finite() && c1.is_finite()) || fz.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(ExposeError::NonConvergence("map is not finite on the verification grid".into()));
        }
        c0_dist = c0_dist.max(*c0);
        c1_dist = c1_dist.max(*c1);
    }
    let kappa = c1_dist;

    let pairs: Vec<(usize, usize)> = {
        let mut rng = stream_rng(grid.seed, 0xc011);
        let np = points.len();
        (0..COLLISION_PAIRS).map(|_| (rng.gen_range(0..np), rng.gen_range(0..np))).collect()
    };
    let (collisions, min_pair_ratio) = pairs
        .par_iter()
        .map(|&(a, b)| {
            let src = cdist(points[a].as_slice(), points[b].as_slice());
            if src <= COLLISION_SOURCE_TOL {
                return (0usize, f64::INFINITY);
            }
            let img = cdist(evaluated[a].0.as_slice(), evaluated[b].0.as_slice());
            ((img < COLLISION_IMAGE_TOL) as usize, img / src)
        })
        .reduce(|| (0, f64::INFINITY), |x, y| (x.0 + y.0, x.1.min(y.1)));

    let (fzeta, jzeta) = map.eval_jacobian(zeta);
    let fixed_point_err = cdist(fzeta.as_slice(), zeta.as_slice());
    let jacobian_err = op_norm(&(jzeta - &eye));
    let (convexity_eig, tangency_err, fd_step, fd_converged) = pushed_convexity(domain, map, zeta)?;
    Ok(VerificationReport {
        eps,
        c0_dist,
        c1_dist,
        kappa,
        convexity_eig,
        tangency_err,
        fixed_point_err,
        jacobian_err,
        grid: *grid,
        grid_points: points.len(),
        collision_pairs: COLLISION_PAIRS,
        collisions,
        min_pair_ratio: if min_pair_ratio.is_finite() { min_pair_ratio } else { 1.0 },
        injectivity_certified: kappa < 1.0 && collisions == 0,
        fd_step,
        fd_converged,
    })
}

/// Boundary point of `domain` reached from the chart point `w` by moving along `Re w_n`.
fn boundary_above(domain: &LocalDomain, chart: &BoundaryChart, w: &CVec) -> Option<CVec> {
    let n = chart.n();
    let mut w = w.clone();
    for _ in 0..NEWTON_MAX_ITER {
        let z = chart.from_chart(w.as_slice());
        let jet = domain.rho.eval_jet(z.as_slice()).ok()?;
        // d/dt ρ(z + t s U e_n) = 2 Re(∂ρ · s U e_n).
        let dir = chart.unitary.column(n - 1) * C64::new(chart.scale, 0.0);
        let slope = 2.0 * jet.dbar_grad.iter().zip(dir.iter()).map(|(g, d)| g * d).sum::<C64>().re;
        if slope.abs() < 1e-300 {
            return None;
        }
        let step = jet.value / slope;
        w[n - 1] -= C64::new(step, 0.0);
        if step.abs() <= 1e-15 * (1.0 + w[n - 1].norm()) {
            return Some(chart.from_chart(w.as_slice()));
        }
    }
    None
}

/// `sup ‖J_F − I‖` at boundary points whose tangential chart radius is a multiple of a bump
/// peak, over several phases and every tangential axis. These radii fall between the nodes of
/// a coarse lattice, where the planned terms are largest.
pub fn boundary_c1_probe(map: &HolomorphicMapExpr, domain: &LocalDomain, zeta: &CVec, params: &ExposureParams) -> Result<f64> {
    let chart = normalize_at_scaled(domain, zeta, params.scale)?;
    let n = chart.n();
    let eye = CMat::identity(n, n);
    let mut probes = Vec::new();
    for peak in params.bump_peaks() {
        let x = peak / params.scale;
        for mult in [0.5, 0.75, 1.0, 1.5, 2.0] {
            for axis in 0..n.saturating_sub(1) {
                for k in 0..8 {
                    let mut w = CVec::zeros(n);
                    w[axis] = C64::from_polar(mult * x, PI * k as f64 / 8.0);
                    probes.push(w);
                }
            }
        }
    }
    let worst = probes
        .par_iter()
        .filter_map(|w| boundary_above(domain, &chart, w))
        .filter(|z| domain.in_closure(z.as_slice()) || domain.in_chart(z.as_slice()))
        .map(|z| {
            let (_, j) = map.eval_jacobian(&z);
            let v = op_norm(&(j - &eye));
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Normal heights `Re w_n` of the boundary before and after `map` above the tangential chart
/// points `x·e₁` (label `real`) and `i x·e₁` (label `imag`), as `(x, before, after)` in
/// original units. Points whose boundary solve fails are skipped.
pub fn boundary_heights(
    map: &HolomorphicMapExpr,
    domain: &LocalDomain,
    zeta: &CVec,
    scale: f64,
    xs: &[f64],
) -> Result<Vec<(&'static str, Vec<(f64, f64, f64)>)>> {
    let chart = normalize_at_scaled(domain, zeta, scale)?;
    let n = chart.n();
    if n < 2 {
        return Err(ExposeError::InvalidInput("slices need a tangential direction".into()));
    }
    let mut out = Vec::new();
    for (label, dir) in [("real", C64::new(1.0, 0.0)), ("imag", C64::new(0.0, 1.0))] {
        let mut rows = Vec::with_capacity(xs.len());
        for &x in xs {
            let mut w = CVec::zeros(n);
            w[0] = dir * (x / scale);
            let Some(z) = boundary_above(domain, &chart, &w) else { continue };
            let wb = chart.to_chart(z.as_slice());
            let wa = chart.to_chart(map.eval(&z).as_slice());
            rows.push(((wa[0] * dir.conj()).re * scale, wb[n - 1].re * scale, wa[n - 1].re * scale));
        }
        if rows.is_empty() {
            return Err(ExposeError::EmptyData(format!("no boundary points on the {label} slice")));
        }
        out.push((label, rows));
    }
    Ok(out)
}

/// Boundary curves `(x, Re w_n)` before and after `map` on both slices, for `x` up to the
/// outermost planned radius.
pub fn boundary_slices(
    map: &HolomorphicMapExpr,
    domain: &LocalDomain,
    zeta: &CVec,
    params: &ExposureParams,
    samples: usize,
) -> Result<Vec<(String, Vec<C64>)>> {
    let room = domain.chart_radius - cdist(zeta.as_slice(), domain.chart_center.as_slice());
    let half = (0.75 * room).min(params.radii.first().copied().unwrap_or(room));
    let xs: Vec<f64> = (0..=samples).map(|k| -half + 2.0 * half * k as f64 / samples as f64).collect();
    let mut out = Vec::new();
    for (label, rows) in boundary_heights(map, domain, zeta, params.scale, &xs)? {
        out.push((format!("before_{label}"), rows.iter().map(|r| C64::new(r.0, r.1)).collect()));
        out.push((format!("after_{label}"), rows.iter().map(|r| C64::new(r.0, r.2)).collect()));
    }
    Ok(out)
}

/// Normalized heights `(log₁₀ x, Re w_n / x²)` before and after `map` on both slices, for `x`
/// log-spaced from the outermost planned radius down to a tenth of the innermost bump peak.
/// Removing the quadratic term moves the `after` profile to the Levi value.
pub fn boundary_profiles(
    map: &HolomorphicMapExpr,
    domain: &LocalDomain,
    zeta: &CVec,
    params: &ExposureParams,
    samples: usize,
) -> Result<Vec<(String, Vec<C64>)>> {
    let room = domain.chart_radius - cdist(zeta.as_slice(), domain.chart_center.as_slice());
    let hi = (0.75 * room).min(params.radii.first().copied().unwrap_or(room)).log10();
    let lo = (0.1 * params.bump_peaks().last().copied().unwrap_or(room) * params.scale).log10().min(hi - 1.0);
    let xs: Vec<f64> = (0..=samples).map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / samples as f64)).collect();
    let mut out = Vec::new();
    for (label, rows) in boundary_heights(map, domain, zeta, params.scale, &xs)? {
        let prof = |h: f64, x: f64| h / (x * x);
        out.push((format!("before_{label}"), rows.iter().map(|r| C64::new(r.0.log10(), prof(r.1, r.0))).collect()));
        out.push((format!("after_{label}"), rows.iter().map(|r| C64::new(r.0.log10(), prof(r.2, r.0))).collect()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermpoly::PolyBuilder;
    use crate::peak::make_levi_peak;

    fn nonconvex(radius: f64) -> LocalDomain {
        let rho = PolyBuilder::new(2).re_power(1, 1, 2.0).re_power(0, 2, 3.0).abs_sq(0, 1.0).abs_sq(1, 1.0).build().unwrap();
        LocalDomain::new(rho, CVec::zeros(2), radius).unwrap()
    }

    #[test]
    fn term_count_example() {
        assert_eq!(term_count(0.1, 0.5), 16);
        assert_eq!(term_count(10.0, 0.5), 2);
        let (x, v) = bump_maximum(0.5);
        assert_eq!(x, 2.0);
        assert!((v - 2.0 / E).abs() < 1e-15);
    }

    #[test]
    fn plan_invariants_hold() {
        let d = nonconvex(0.2);
        let chart = normalize_at_scaled(&d, &CVec::zeros(2), 1.0).unwrap();
        let opts = PlanOptions { radius: 0.2, log_gradient: 1.6, ..PlanOptions::default() };
        let p = plan_parameters_with(0.5, 0.1, &chart, &opts).unwrap();
        assert_eq!(p.m, 16);
        assert!(p.invariant_violations().is_empty(), "{:?}", p.invariant_violations());
        assert!(p.radial_bound < 0.1 && p.value_bound < 0.1);
        let loose = plan_parameters_with(0.5, 10.0, &chart, &opts).unwrap();
        assert_eq!(loose.m, 2);
    }

    #[test]
    fn identity_on_ball() {
        let d = LocalDomain::new(HermitianPolynomial::sphere(2, 1.0), CVec::zeros(2), 2.0).unwrap();
        let zeta = CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let peak = crate::peak::make_convex_peak(&d, &zeta).unwrap();
        let (map, _) = build_convexifier(&d, &zeta, &peak, 0.1).unwrap();
        assert!(map.is_identity());
        let rep = verify_map(&map, &d, &zeta, 0.1, &GridSpec { per_axis: 6, radius: 2.0, seed: 1 }).unwrap();
        assert_eq!(rep.c0_dist, 0.0);
        assert_eq!(rep.c1_dist, 0.0);
        assert!((rep.convexity_eig - 2.0).abs() < 1e-6, "{}", rep.convexity_eig);
        assert_eq!(rep.tangency_err, 0.0);
    }

    #[test]
    fn analytic_removes_q() {
        let d = nonconvex(0.2);
        assert!((analytic_convexity(&d, &CVec::zeros(2), 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(crate::geometry::certify_convexity_at(&d, &CVec::zeros(2)).unwrap() < 0.0);
    }

    #[test]
    fn convexifier_fixes_point() {
        let d = nonconvex(0.2);
        let zeta = CVec::zeros(2);
        let peak = make_levi_peak(&d, &zeta).unwrap();
        let (map, params) = build_convexifier(&d, &zeta, &peak, 0.05).unwrap();
        assert_eq!(params.m, term_count(0.05, peak.decay_c));
        let (fz, j) = map.eval_jacobian(&zeta);
        assert!(fz.norm() < 1e-12);
        assert!((j - CMat::identity(2, 2)).norm() < 1e-12);
        let (eig, angle, _, converged) = pushed_convexity(&d, &map, &zeta).unwrap();
        assert!(converged);
        assert!((eig - 2.0).abs() < 1e-4, "{eig}");
        assert!(angle < 1e-8);
    }

    #[test]
    fn fold_is_not_contracting() {
        let rho = PolyBuilder::new(2).abs_sq(0, 1.0).abs_sq(1, 1.0).constant(-1.0).build().unwrap();
        let d = LocalDomain::new(rho, CVec::zeros(2), 1.0).unwrap();
        let fold = HolomorphicMapExpr::identity(2).then(MapPrimitive::Shear {
            phi: ScalarExpr::Scale { factor: C64::new(3.0, 0.0), inner: Box::new(ScalarExpr::Power { base: Box::new(ScalarExpr::Coord { index: 1 }), exponent: 2 }) },
        });
        let zeta = CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let rep = verify_map(&fold, &d, &zeta, 0.1, &GridSpec { per_axis: 8, radius: 1.0, seed: 2 }).unwrap();
        assert!(rep.kappa >= 1.0);
        assert!(!rep.injectivity_certified);
    }
}
