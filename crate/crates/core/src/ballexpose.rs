//! Exposing maps of the closed unit ball along a dumbbell, their scaling isotopies, property
//! checks and the fibre-scaling rescalers between dumbbell configurations.

use crate::error::{ExposeError, Result};
use crate::holomap::{HolomorphicMapExpr, MapPrimitive};
use crate::linalg::op_norm;
use crate::onevar::dumbbell::upper_image_boundary;
use crate::onevar::polyfit::{polyfit_constrained_with, Constraint, FitOptions};
use crate::onevar::{dumbbell_pair, DiskAutomorphism, DumbbellPair, OneVarMap};
use crate::report::pairs;
use crate::sampling::{ball_lattice, stream_rng, uniform_in_ball};
use crate::{CMat, CVec, C64, TOOL_VERSION};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Configuration on which the exposer is built directly.
pub const BASE_R: f64 = 1.5;
pub const BASE_S: f64 = 3.0;
/// Dumbbell centres for the base configuration: `a = 0`, `b = s + r − 1`.
pub const BASE_A: f64 = 0.0;
pub const BASE_B: f64 = 3.5;
/// Membership tolerance of the containment checks.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Boundary samples per disk in the rescaler fit and its error check.
pub const RESCALE_SAMPLES: usize = 400;

/// Target ball `B_r(p_s)`, neighbourhood size `ε`, fidelity `ν` and tube half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallDumbbellConfig {
    pub r: f64,
    pub s: f64,
    pub eps: f64,
    pub nu: u32,
    pub tube_c: f64,
}

impl Default for BallDumbbellConfig {
    fn default() -> Self {
        BallDumbbellConfig { r: BASE_R, s: BASE_S, eps: 0.2, nu: 2, tube_c: 0.3 }
    }
}

impl BallDumbbellConfig {
    /// `δ(ν) = 0.3·2^{−ν}`.
    pub fn delta(&self) -> f64 {
        0.3 * 0.5f64.powi(self.nu as i32)
    }

    pub fn with_nu(&self, nu: u32) -> Self {
        BallDumbbellConfig { nu, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.s > self.r + 1.0) {
            return Err(ExposeError::InvalidInput(format!("need s > r + 1 > 1, got r = {}, s = {}", self.r, self.s)));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(ExposeError::InvalidInput(format!("eps must lie in (0, 0.5), got {}", self.eps)));
        }
        if !(self.tube_c > 0.0 && self.delta() > 0.0) {
            return Err(ExposeError::InvalidInput("tube width and delta must be positive".into()));
        }
        Ok(())
    }

    fn is_base(&self) -> bool {
        self.r == BASE_R && self.s == BASE_S
    }

    /// Distance from `z` to the segment `[p₁, p_{s−r}]`.
    pub fn tube_distance(&self, z: &CVec) -> f64 {
        let n = z.len();
        let w = z[n - 1];
        let x = w.re.clamp(1.0, self.s - self.r);
        let head: f64 = z.iter().take(n - 1).map(|c| c.norm_sqr()).sum();
        (head + (w - C64::new(x, 0.0)).norm_sqr()).sqrt()
    }

    /// Distance from `z` to the point `(0, …, 0, x)`.
    pub fn axis_distance(z: &CVec, x: f64) -> f64 {
        let n = z.len();
        let head: f64 = z.iter().take(n - 1).map(|c| c.norm_sqr()).sum();
        (head + (z[n - 1] - C64::new(x, 0.0)).norm_sqr()).sqrt()
    }

    /// Membership in `V ∪ B_r(p_s) ∪ B_tol(p_{s+r})`.
    pub fn in_target(&self, z: &CVec, tol: f64) -> bool {
        self.tube_distance(z) < self.tube_c + tol
            || Self::axis_distance(z, self.s) <= self.r + tol
            || Self::axis_distance(z, self.s + self.r) <= tol
    }

    /// Membership in `U = V ∪ B_r(p_s) ∪ {dist(·, B̄) ≤ ε}`.
    pub fn in_neighbourhood(&self, z: &CVec, tol: f64) -> bool {
        self.in_target(z, tol) || z.norm() <= 1.0 + self.eps + tol
    }
}

/// Fibre-scaling map `z ↦ (h(z_n)·z', f(z_n))` between two dumbbell configurations.
#[derive(Clone, Debug)]
pub struct Rescaler {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub h: OneVarMap,
    pub f: OneVarMap,
    pub report: RescaleReport,
}

/// Fit errors of a [`Rescaler`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub method: RescaleMethod,
    /// `sup |f(z) − z|` and `sup |h(z) − 1|` over the closed unit disk.
    pub near_f_error: f64,
    pub near_h_error: f64,
    /// `sup |f(z) − ψ(z)|` and `sup |h(z) − r₂/r₁|` over the far disk.
    pub far_f_error: f64,
    pub far_h_error: f64,
    /// `|f(s₁+r₁) − (s₂+r₂)|`, `|f'(s₁+r₁) − r₂/r₁|`, `|h(s₁+r₁) − r₂/r₁|`.
    pub jet_value_error: f64,
    pub jet_derivative_error: f64,
    pub jet_scale_error: f64,
    pub fit_residual: f64,
}

impl Rescaler {
    pub fn map(&self, n: usize) -> HolomorphicMapExpr {
        HolomorphicMapExpr::identity(n).then(MapPrimitive::FiberScale { scale: self.h.clone(), last: self.f.clone() })
    }

    /// The affine target on the far ball, acting on the last coordinate.
    pub fn far_target(&self, w: C64) -> C64 {
        let (r1, s1) = self.from;
        let (r2, s2) = self.to;
        C64::new(s2, 0.0) + (w - s1) * (r2 / r1)
    }
}

fn circle(center: f64, radius: f64, count: usize) -> Vec<C64> {
    (0..count).map(|k| C64::new(center, 0.0) + C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / count as f64)).collect()
}

/// How the rescaler's one-variable functions are built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RescaleMethod {
    /// Logistic blend between the two targets, holomorphic off the line through the middle of
    /// the gap between the disks.
    Blend,
    /// Constrained least-squares polynomials of the given degree.
    Polynomial { degree: usize },
}

/// Blend error target on the disks.
pub const BLEND_TARGET: f64 = 1e-12;

/// [`rescale_map_with`] using the logistic blend.
pub fn rescale_map(from: (f64, f64), to: (f64, f64)) -> Result<Rescaler> {
    rescale_map_with(from, to, RescaleMethod::Blend)
}

fn blend_pair(from: (f64, f64), to: (f64, f64)) -> (OneVarMap, OneVarMap) {
    let (r1, s1) = from;
    let (r2, s2) = to;
    let ratio = r2 / r1;
    let gap = s1 - r1 - 1.0;
    let center = 1.0 + gap / 2.0;
    let rate = 2.0 * (1.0 / BLEND_TARGET).ln() / gap;
    let c = |x: f64| C64::new(x, 0.0);
    let h = OneVarMap::Blend {
        rate,
        center,
        left: Box::new(OneVarMap::Affine { a: c(0.0), b: c(1.0) }),
        right: Box::new(OneVarMap::Affine { a: c(0.0), b: c(ratio) }),
    };
    let f = OneVarMap::Blend {
        rate,
        center,
        left: Box::new(OneVarMap::Identity),
        right: Box::new(OneVarMap::Affine { a: c(ratio), b: c(s2 - ratio * s1) }),
    };
    (h, f)
}

fn polynomial_pair(from: (f64, f64), to: (f64, f64), degree: usize) -> Result<(OneVarMap, OneVarMap, f64)> {
    let (r1, s1) = from;
    let (r2, s2) = to;
    let ratio = r2 / r1;
    let psi = |w: C64| C64::new(s2, 0.0) + (w - s1) * ratio;
    let samples = RESCALE_SAMPLES.max(degree + 1);
    let near = circle(0.0, 1.0, samples);
    let far = circle(s1, r1, samples);
    let points: Vec<C64> = near.iter().chain(far.iter()).copied().collect();
    let f_values: Vec<C64> = near.iter().copied().chain(far.iter().map(|&w| psi(w))).collect();
    let h_values: Vec<C64> =
        near.iter().map(|_| C64::new(1.0, 0.0)).chain(far.iter().map(|_| C64::new(ratio, 0.0))).collect();
    let tip = C64::new(s1 + r1, 0.0);
    let opts = FitOptions { degree, real_symmetric: true };
    let f_fit = polyfit_constrained_with(&points, &f_values, &[Constraint::jet(tip, psi(tip), C64::new(ratio, 0.0))], opts)?;
    let h_fit = polyfit_constrained_with(&points, &h_values, &[Constraint::value(tip, C64::new(ratio, 0.0))], opts)?;
    Ok((OneVarMap::Arnoldi(h_fit.poly), OneVarMap::Arnoldi(f_fit.poly), f_fit.residual.max(h_fit.residual)))
}

/// Builds `h ≈ 1`, `f ≈ id` on the unit disk and `h ≈ r₂/r₁`, `f ≈ ψ(z) = s₂ + (r₂/r₁)(z − s₁)`
/// on the disk of radius `r₁` about `s₁`, matching `ψ` to first order at `s₁ + r₁`.
/// Configurations are `(r, s)`.
pub fn rescale_map_with(from: (f64, f64), to: (f64, f64), method: RescaleMethod) -> Result<Rescaler> {
    let (r1, s1) = from;
    let (r2, s2) = to;
    for (r, s) in [from, to] {
        if !(r > 0.0 && s > r + 1.0) {
            return Err(ExposeError::InvalidInput(format!("need s > r + 1, got r = {r}, s = {s}")));
        }
    }
    let ratio = r2 / r1;
    let psi = |w: C64| C64::new(s2, 0.0) + (w - s1) * ratio;
    let (h, f, fit_residual) = match method {
        RescaleMethod::Blend => {
            let (h, f) = blend_pair(from, to);
            (h, f, 0.0)
        }
        RescaleMethod::Polynomial { degree } => polynomial_pair(from, to, degree)?,
    };

    // Maximum principle: the boundary sup bounds the disk sup.
    let sup = |pts: &[C64], err: &(dyn Fn(C64) -> f64 + Sync)| pts.par_iter().map(|&w| err(w)).reduce(|| 0.0, f64::max);
    let near_check = circle(0.0, 1.0, 8 * RESCALE_SAMPLES);
    let far_check = circle(s1, r1, 8 * RESCALE_SAMPLES);
    let tip = C64::new(s1 + r1, 0.0);
    let (fv, fd) = f.eval_deriv(tip);
    let report = RescaleReport {
        from,
        to,
        method,
        near_f_error: sup(&near_check, &|w| (f.eval(w) - w).norm()),
        near_h_error: sup(&near_check, &|w| (h.eval(w) - 1.0).norm()),
        far_f_error: sup(&far_check, &|w| (f.eval(w) - psi(w)).norm()),
        far_h_error: sup(&far_check, &|w| (h.eval(w) - ratio).norm()),
        jet_value_error: (fv - psi(tip)).norm(),
        jet_derivative_error: (fd - ratio).norm(),
        jet_scale_error: (h.eval(tip) - ratio).norm(),
        fit_residual,
    };
    Ok(Rescaler { from, to, h, f, report })
}

/// `φ_ν(z) = (z', f_ν(z_n))`, followed by a rescaler when the configuration is not the base one.
#[derive(Clone, Debug)]
pub struct BallExposer {
    pub config: BallDumbbellConfig,
    pub n: usize,
    pub pair: DumbbellPair,
    pub rescaler: Option<Rescaler>,
    pub map: HolomorphicMapExpr,
}

impl BallExposer {
    pub fn eval(&self, z: &CVec) -> CVec {
        self.map.eval(z)
    }

    /// The last-coordinate map.
    pub fn last(&self, w: C64) -> C64 {
        let v = self.pair.f.eval(w);
        match &self.rescaler {
            Some(r) => r.f.eval(v),
            None => v,
        }
    }

    /// Derivative of the last-coordinate map at 0.
    pub fn last_derivative_at_zero(&self) -> C64 {
        let (v, d) = self.pair.f.eval_deriv(C64::new(0.0, 0.0));
        match &self.rescaler {
            Some(r) => r.f.eval_deriv(v).1 * d,
            None => d,
        }
    }

    /// `p₁ ↦` this point.
    pub fn exposing_value(&self) -> C64 {
        self.last(C64::new(1.0, 0.0))
    }

    pub fn automorphism(&self) -> DiskAutomorphism {
        self.pair.automorphism
    }
}

pub fn build_exposer(config: &BallDumbbellConfig, n: usize) -> Result<BallExposer> {
    config.validate()?;
    if n < 1 {
        return Err(ExposeError::InvalidInput("dimension must be positive".into()));
    }
    let pair = dumbbell_pair(BASE_A, BASE_B, config.delta())?;
    let mut map = HolomorphicMapExpr::identity(n).then(MapPrimitive::OneVar { coord: n - 1, map: pair.f.clone() });
    let rescaler = if config.is_base() {
        None
    } else {
        let r = rescale_map((BASE_R, BASE_S), (config.r, config.s))?;
        map = map.then(MapPrimitive::FiberScale { scale: r.h.clone(), last: r.f.clone() });
        Some(r)
    };
    Ok(BallExposer { config: *config, n, pair, rescaler, map })
}

/// `φ_{ν,t}(z) = φ_ν(t z)/t`; `t = 1` returns `φ_ν` itself.
pub fn isotopy_at(phi: &BallExposer, t: f64) -> Result<HolomorphicMapExpr> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(ExposeError::InvalidInput(format!("isotopy parameter must lie in (0, 1], got {t}")));
    }
    if t == 1.0 {
        return Ok(phi.map.clone());
    }
    Ok(HolomorphicMapExpr::identity(phi.n).then(MapPrimitive::Isotopy { t, inner: Box::new(phi.map.clone()) }))
}

/// Measured `t → 0` limit of `φ_{ν,t}(z)` against the linear map `(z', f'(0) z_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotopyLimit {
    pub t_values: [f64; 2],
    /// Linear extrapolation of the last coordinate to `t = 0`.
    pub extrapolated: [f64; 2],
    pub predicted: [f64; 2],
    pub error: f64,
    pub derivative_at_zero: [f64; 2],
}

/// Evaluates the isotopy at the two parameters and extrapolates linearly to `t = 0`.
pub fn isotopy_limit(phi: &BallExposer, z: &CVec, t_values: [f64; 2]) -> Result<IsotopyLimit> {
    let n = phi.n;
    let v1 = isotopy_at(phi, t_values[0])?.eval(z)[n - 1];
    let v2 = isotopy_at(phi, t_values[1])?.eval(z)[n - 1];
    let (t1, t2) = (t_values[0], t_values[1]);
    let extrapolated = v2 - (v1 - v2) * (t2 / (t1 - t2));
    let d0 = phi.last_derivative_at_zero();
    let predicted = d0 * z[n - 1];
    Ok(IsotopyLimit {
        t_values,
        extrapolated: [extrapolated.re, extrapolated.im],
        predicted: [predicted.re, predicted.im],
        error: (extrapolated - predicted).norm(),
        derivative_at_zero: [d0.re, d0.im],
    })
}

/// Grid densities for [`verify_exposer`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposerGrid {
    /// Lattice density on `B_ε(p₁)` for the containment checks.
    pub per_axis: usize,
    /// Lattice density on the unit ball for the convergence, smoothness and contraction checks.
    pub ball_per_axis: usize,
    pub t_values: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ExposerGrid {
    fn default() -> Self {
        ExposerGrid {
            per_axis: 50,
            ball_per_axis: 14,
            t_values: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0],
            tolerance: MEMBERSHIP_TOL,
            seed: 0,
        }
    }
}

/// A point that failed a containment check and its image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub point: Vec<[f64; 2]>,
    pub image: Vec<[f64; 2]>,
}

/// Per-fidelity results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuReport {
    pub nu: u32,
    pub delta: f64,
    pub r_value: f64,
    pub one_minus_r: f64,
    pub log_one_minus_r: f64,
    /// (i) `sup |∂_t φ_{ν,t}(z)|` by central differences on the interior `t` grid.
    pub t_derivative_sup: f64,
    /// (ii) `sup ‖φ_{ν,t}(z) − z‖` over the ball minus `B_ε(p₁)` and the `t` grid.
    pub identity_sup: f64,
    /// (iii) `|f_ν(1) − (s + r)|`.
    pub endpoint_error: f64,
    /// `|f_ν(0)|`, the last coordinate of `φ_ν` on `{z_n = 0}`.
    pub origin_error: f64,
    /// (iv) containment of `φ_ν(B_ε(p₁) ∩ B̄)`.
    pub iv_points: usize,
    pub iv_violations: usize,
    /// (v) containment of `φ_{ν,t}(B_ε(p₁) ∩ B̄)` in `U` over the `t` grid.
    pub v_points: usize,
    pub v_violations: usize,
    pub witnesses: Vec<Witness>,
    /// Grid points with `Re m(z_n) > 0` and those whose `(z', m(z_n))` leave `B̄ ∖ B_ε(p₋₁)`.
    pub mechanism_points: usize,
    pub mechanism_violations: usize,
    /// `sup ‖J − I‖` of `φ_{ν,t}` on the ball, per `t`; infinite where the Jacobian overflows.
    pub kappa: Vec<f64>,
    pub injectivity_certified: Vec<bool>,
    /// The welded map's own injectivity certificate (simple image boundary, winding 1).
    pub boundary_injective: bool,
    pub t0_limit: IsotopyLimit,
    pub isotopy_endpoint_exact: bool,
}

/// Dichotomy mechanism over a sweep of automorphism parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSweep {
    pub r: f64,
    pub points: usize,
    pub violations: usize,
}

/// Report over a list of fidelities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposerReport {
    pub tool_version: String,
    pub config: BallDumbbellConfig,
    pub n: usize,
    pub grid: ExposerGrid,
    pub per_nu: Vec<NuReport>,
    pub identity_sup_decreasing: bool,
    pub mechanism_sweep: Vec<MechanismSweep>,
    pub ok: bool,
}

fn finite_or_inf(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::INFINITY
    }
}

/// `(z', m(z_n))` in `B̄ ∖ B_ε(p₋₁)` whenever `Re m(z_n) > 0`, over the points.
fn mechanism(points: &[CVec], m: &DiskAutomorphism, eps: f64, tol: f64) -> (usize, usize) {
    points
        .par_iter()
        .map(|z| {
            let n = z.len();
            let w = m.eval(z[n - 1]);
            if !(w.re > 0.0) {
                return (0, 0);
            }
            let mut y = z.clone();
            y[n - 1] = w;
            let inside = y.norm() <= 1.0 + tol && BallDumbbellConfig::axis_distance(&y, -1.0) >= eps - tol;
            (1, (!inside) as usize)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

const MAX_WITNESSES: usize = 8;

fn verify_one(phi: &BallExposer, grid: &ExposerGrid, near: &[CVec], ball: &[CVec]) -> Result<NuReport> {
    let cfg = &phi.config;
    let n = phi.n;
    let tol = grid.tolerance;
    let mut witnesses = Vec::new();
    let mut record = |t: f64, z: &CVec, img: &CVec| {
        if witnesses.len() < MAX_WITNESSES {
            witnesses.push(Witness { t, point: pairs(z.as_slice()), image: pairs(img.as_slice()) });
        }
    };

    // (iv)
    let images: Vec<CVec> = near.par_iter().map(|z| phi.eval(z)).collect();
    let mut iv_violations = 0;
    for (z, img) in near.iter().zip(&images) {
        if !cfg.in_target(img, tol) {
            iv_violations += 1;
            record(1.0, z, img);
        }
    }

    // (v)
    let mut v_violations = 0;
    for &t in &grid.t_values {
        let map = isotopy_at(phi, t)?;
        let bad: Vec<(CVec, CVec)> = near
            .par_iter()
            .filter_map(|z| {
                let img = map.eval(z);
                (!cfg.in_neighbourhood(&img, tol)).then(|| (z.clone(), img))
            })
            .collect();
        v_violations += bad.len();
        for (z, img) in bad.iter().take(MAX_WITNESSES) {
            record(t, z, img);
        }
    }

    // (ii), (i) and contraction on the unit ball.
    let outside: Vec<&CVec> = ball
        .iter()
        .filter(|z| BallDumbbellConfig::axis_distance(z, 1.0) >= cfg.eps)
        .collect();
    let mut identity_sup: f64 = 0.0;
    let mut kappa = Vec::new();
    let eye = CMat::identity(n, n);
    for &t in &grid.t_values {
        let map = isotopy_at(phi, t)?;
        let d = outside.par_iter().map(|z| finite_or_inf((map.eval(z) - *z).norm())).reduce(|| 0.0, f64::max);
        identity_sup = identity_sup.max(d);
        let k = ball
            .par_iter()
            .map(|z| {
                let (_, j) = map.eval_jacobian(z);
                finite_or_inf(op_norm(&(j - &eye)))
            })
            .reduce(|| 0.0, f64::max);
        kappa.push(k);
    }
    let h = 1e-6;
    let mut t_derivative_sup: f64 = 0.0;
    for &t in grid.t_values.iter().filter(|&&t| t - h > 0.0 && t + h < 1.0) {
        let (lo, hi) = (isotopy_at(phi, t - h)?, isotopy_at(phi, t + h)?);
        let d = ball
            .par_iter()
            .map(|z| finite_or_inf((hi.eval(z) - lo.eval(z)).norm() / (2.0 * h)))
            .reduce(|| 0.0, f64::max);
        t_derivative_sup = t_derivative_sup.max(d);
    }

    let m = phi.automorphism();
    let (mechanism_points, mechanism_violations) = mechanism(near, &m, cfg.eps, tol);

    let mut rng = stream_rng(grid.seed, phi.config.nu as u64);
    let probe = uniform_in_ball(&mut rng, &CVec::zeros(n), 1.0);
    let t0_limit = isotopy_limit(phi, &probe, [1e-2, 1e-4])?;
    let isotopy_endpoint_exact = (0..100).all(|_| {
        let z = uniform_in_ball(&mut rng, &CVec::zeros(n), 1.0);
        isotopy_at(phi, 1.0).map(|m| m.eval(&z) == phi.eval(&z)).unwrap_or(false)
    });

    Ok(NuReport {
        nu: cfg.nu,
        delta: cfg.delta(),
        r_value: phi.pair.r_value,
        one_minus_r: phi.pair.one_minus_r,
        log_one_minus_r: phi.pair.log_one_minus_r,
        t_derivative_sup,
        identity_sup,
        endpoint_error: (phi.exposing_value() - (cfg.s + cfg.r)).norm(),
        origin_error: phi.last(C64::new(0.0, 0.0)).norm(),
        iv_points: near.len(),
        iv_violations,
        v_points: near.len() * grid.t_values.len(),
        v_violations,
        witnesses,
        mechanism_points,
        mechanism_violations,
        injectivity_certified: kappa.iter().map(|&k| k < 1.0).collect(),
        kappa,
        boundary_injective: phi.pair.diagnostics.injective,
        t0_limit,
        isotopy_endpoint_exact,
    })
}

/// Checks properties (i)–(v) of the exposers at each fidelity in `nus`.
pub fn verify_exposer(config: &BallDumbbellConfig, n: usize, nus: &[u32], grid: &ExposerGrid) -> Result<ExposerReport> {
    if nus.len() < 2 {
        return Err(ExposeError::InvalidInput("need at least two fidelity values".into()));
    }
    config.validate()?;
    let mut p1 = CVec::zeros(n);
    p1[n - 1] = C64::new(1.0, 0.0);
    let near: Vec<CVec> =
        ball_lattice(&p1, config.eps, grid.per_axis).into_iter().filter(|z| z.norm() <= 1.0).collect();
    let ball = ball_lattice(&CVec::zeros(n), 1.0, grid.ball_per_axis);
    let mut per_nu = Vec::with_capacity(nus.len());
    for &nu in nus {
        let phi = build_exposer(&config.with_nu(nu), n)?;
        per_nu.push(verify_one(&phi, grid, &near, &ball)?);
    }
    let identity_sup_decreasing = per_nu.windows(2).all(|w| w[1].identity_sup < w[0].identity_sup);
    let mechanism_sweep = [0.5, 0.9, 0.99, 0.999]
        .iter()
        .map(|&r| {
            let m = DiskAutomorphism::new(r)?;
            let (points, violations) = mechanism(&near, &m, config.eps, grid.tolerance);
            Ok(MechanismSweep { r, points, violations })
        })
        .collect::<Result<Vec<_>>>()?;
    let ok = identity_sup_decreasing
        && mechanism_sweep.iter().all(|m| m.violations == 0)
        && per_nu.iter().all(|r| {
            r.iv_violations == 0
                && r.v_violations == 0
                && r.mechanism_violations == 0
                && r.endpoint_error < 1e-8
                && r.t_derivative_sup.is_finite()
        });
    Ok(ExposerReport {
        tool_version: TOOL_VERSION.to_string(),
        config: *config,
        n,
        grid: grid.clone(),
        per_nu,
        identity_sup_decreasing,
        mechanism_sweep,
        ok,
    })
}

/// Images under the last-coordinate map of the unit circle, resolved in strip coordinates,
/// and of radial segments at `rays` equally spaced angles.
pub fn image_curves(phi: &BallExposer, rays: usize, samples: usize) -> Vec<(String, Vec<C64>)> {
    let post = |v: C64| match &phi.rescaler {
        Some(r) => r.f.eval(v),
        None => v,
    };
    let upper = upper_image_boundary(&phi.pair.welded);
    let mut circle_image: Vec<C64> = upper.iter().map(|&w| post(w)).collect();
    circle_image.extend(upper[1..upper.len() - 1].iter().rev().map(|w| post(w.conj())));
    let mut out = vec![("unit_circle".to_string(), circle_image)];
    for k in 0..rays {
        let dir = C64::from_polar(1.0, 2.0 * PI * k as f64 / rays as f64);
        let seg = (0..=samples).map(|i| phi.last(dir * (i as f64 / samples as f64))).collect();
        out.push((format!("ray_{k}"), seg));
    }
    out
}

/// CSV with columns `curve,index,re,im`.
pub fn image_curves_csv(curves: &[(String, Vec<C64>)]) -> String {
    let mut s = String::from("curve,index,re,im\n");
    for (name, pts) in curves {
        for (i, p) in pts.iter().enumerate() {
            s.push_str(&format!("{name},{i},{:.17e},{:.17e}\n", p.re, p.im));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exposer_basics() {
        let phi = build_exposer(&BallDumbbellConfig::default(), 2).unwrap();
        assert_eq!(phi.exposing_value(), C64::new(4.5, 0.0));
        assert!(phi.last(C64::new(0.0, 0.0)).norm() < 1e-8);
        let z = CVec::from_vec(vec![C64::new(0.3, -0.1), C64::new(0.2, 0.4)]);
        assert_eq!(phi.eval(&z)[0], z[0]);
        let half = isotopy_at(&phi, 0.5).unwrap().eval(&z);
        let direct = phi.eval(&(&z * C64::new(0.5, 0.0))) * C64::new(2.0, 0.0);
        assert!((half - direct).norm() < 1e-15);
        assert!(isotopy_at(&phi, 0.0).is_err());
    }

    #[test]
    fn membership_shapes() {
        let c = BallDumbbellConfig::default();
        let on_axis = |x: f64| CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(x, 0.0)]);
        assert!(c.in_target(&on_axis(1.2), 0.0));
        assert!(c.in_target(&on_axis(4.0), 0.0));
        assert!(!c.in_target(&on_axis(0.5), 0.0));
        assert!(c.in_neighbourhood(&on_axis(0.5), 0.0));
        assert!(!c.in_neighbourhood(&on_axis(-1.3), 0.0));
    }

    #[test]
    fn identity_rescaler() {
        for method in [RescaleMethod::Blend, RescaleMethod::Polynomial { degree: 40 }] {
            let r = rescale_map_with((1.5, 3.0), (1.5, 3.0), method).unwrap();
            assert!(r.report.near_f_error < 1e-10 && r.report.far_f_error < 1e-10);
            assert!(r.report.near_h_error < 1e-10 && r.report.far_h_error < 1e-10);
        }
    }

    #[test]
    fn shrinking_rescaler() {
        let r = rescale_map((1.5, 3.0), (0.5, 3.0)).unwrap();
        let rep = &r.report;
        assert!(rep.far_f_error < 1e-4 && rep.near_f_error < 1e-4, "{rep:?}");
        assert!(rep.jet_value_error < 1e-14 && rep.jet_derivative_error < 1e-14);
        let z = CVec::from_vec(vec![C64::new(0.1, 0.0), C64::new(3.2, 0.3)]);
        let img = r.map(2).eval(&z);
        assert!((img[0] - z[0] / 3.0).norm() < 1e-10);
    }

    #[test]
    fn rescaled_exposer_hits_target() {
        let cfg = BallDumbbellConfig { r: 0.5, s: 3.0, ..BallDumbbellConfig::default() };
        let phi = build_exposer(&cfg, 2).unwrap();
        assert!((phi.exposing_value() - 3.5).norm() < 1e-8);
    }
}
