//! Peak functions with sampled Gaussian decay certificates.

use crate::error::{ExposeError, Result};
use crate::geometry::{boundary_sample, certify_convexity_at, BoundaryChart, LocalDomain};
use crate::hermpoly::PolyBuilder;
use crate::holomap::ScalarExpr;
use crate::report::pairs;
use crate::{CMat, CVec, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative safety margin applied to the measured decay constant.
pub const DECAY_MARGIN: f64 = 1e-6;
/// Samples closer than this to the peak point are skipped.
pub const PEAK_EXCLUSION: f64 = 1e-6;
pub const DEFAULT_DECAY_SAMPLES: usize = 4096;
pub const DEFAULT_DECAY_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakKind {
    BallModel,
    ConvexGradient,
    UserSupplied,
}

/// Holomorphic `f` with `f(ζ) = 1`, stored as an expression in the offset `d = z − ζ`.
#[derive(Clone, Debug)]
pub struct PeakFunction {
    pub zeta: CVec,
    pub kind: PeakKind,
    /// `f(ζ + d)` as a function of `d`.
    pub local: ScalarExpr,
    pub decay_c: f64,
    /// Tangent ball radius for ball-model peaks.
    pub radius: Option<f64>,
    /// Axis unitary for ball-model peaks; the ball is centred at `ζ − r·axis e_1`.
    pub axis: Option<CMat>,
    /// Wirtinger gradient `∂ρ(ζ)` for convex-gradient peaks.
    pub gradient: Option<CVec>,
    pub report: Option<PeakReport>,
}

/// Outcome of a decay certification sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub kind: PeakKind,
    pub zeta: Vec<[f64; 2]>,
    pub decay_c: f64,
    /// Raw minimum of `−log|f(z)| / |z − ζ|²` before the margin.
    pub raw_c: f64,
    pub samples: usize,
    pub seed: u64,
    /// `max (|f(z)| e^{c|z−ζ|²} − 1)` over the samples at the certified `c`.
    pub max_violation: f64,
    /// Largest `|f(z)|` seen away from `ζ`.
    pub max_modulus: f64,
    pub certified: bool,
}

fn exp_of_linear(coeffs: Vec<C64>) -> ScalarExpr {
    ScalarExpr::exp(ScalarExpr::linear(coeffs, C64::new(0.0, 0.0)))
}

impl PeakFunction {
    pub fn n(&self) -> usize {
        self.zeta.len()
    }

    /// Wraps a user expression in `d = z − ζ`; decay stays uncertified until
    /// [`estimate_decay`] runs.
    pub fn user_supplied(zeta: CVec, local: ScalarExpr) -> Result<Self> {
        let at = local.eval(&vec![C64::new(0.0, 0.0); zeta.len()]);
        if (at - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(ExposeError::PeakNormalization((at - C64::new(1.0, 0.0)).norm()));
        }
        Ok(PeakFunction {
            zeta,
            kind: PeakKind::UserSupplied,
            local,
            decay_c: 0.0,
            radius: None,
            axis: None,
            gradient: None,
            report: None,
        })
    }

    fn offset(&self, z: &[C64]) -> Vec<C64> {
        z.iter().zip(self.zeta.iter()).map(|(a, b)| a - b).collect()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.local.eval(&self.offset(z))
    }

    /// Value and holomorphic gradient.
    pub fn eval_grad(&self, z: &[C64]) -> (C64, Vec<C64>) {
        self.local.eval_grad(&self.offset(z))
    }

    /// `log|f(z)|`, evaluated without forming `f` when it is an exponential.
    pub fn log_modulus(&self, z: &[C64]) -> f64 {
        let d = self.offset(z);
        match &self.local {
            ScalarExpr::Exp { inner } => inner.eval(&d).re,
            other => other.eval(&d).norm().ln(),
        }
    }

    /// `w ↦ f(ζ + s U w)` for the chart at the same peak point.
    pub fn in_chart(&self, chart: &BoundaryChart) -> ScalarExpr {
        let a = &chart.unitary * C64::new(chart.scale, 0.0);
        let shift = &chart.zeta - &self.zeta;
        match &self.local {
            ScalarExpr::Exp { inner } if shift.norm() == 0.0 => {
                if let ScalarExpr::Linear { coeffs, constant } = inner.as_ref() {
                    let row = CVec::from_column_slice(coeffs).transpose() * &a;
                    return ScalarExpr::exp(ScalarExpr::linear(row.iter().copied().collect(), *constant));
                }
                ScalarExpr::pullback(self.local.clone(), &a, &shift)
            }
            _ => ScalarExpr::pullback(self.local.clone(), &a, &shift),
        }
    }

    /// Whether `|f(z)| ≤ e^{−c|z−ζ|²}(1 + tol)` at `z`.
    pub fn satisfies_decay(&self, z: &[C64], tol: f64) -> bool {
        let d2 = crate::linalg::cdist(z, self.zeta.as_slice()).powi(2);
        self.log_modulus(z) + self.decay_c * d2 <= tol.ln_1p()
    }
}

/// `e^{(U*(z−ζ))_1}`, peaking at `ζ` on the ball of radius `r` centred at `ζ − r U e_1`.
pub fn make_ball_peak(r: f64, axis: &CMat, zeta: &CVec) -> Result<PeakFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ExposeError::InvalidInput(format!("ball radius must be positive, got {r}")));
    }
    let n = zeta.len();
    if axis.nrows() != n || axis.ncols() != n {
        return Err(ExposeError::DimensionMismatch { expected: n, got: axis.nrows() });
    }
    let row: Vec<C64> = (0..n).map(|j| axis[(j, 0)].conj()).collect();
    Ok(PeakFunction {
        zeta: zeta.clone(),
        kind: PeakKind::BallModel,
        local: exp_of_linear(row),
        decay_c: 1.0 / (2.0 * r),
        radius: Some(r),
        axis: Some(axis.clone()),
        gradient: None,
        report: None,
    })
}

/// The ball `{|z_1 + r|² + Σ_{j>1} |z_j|² < r²}` tangent to the origin, as a local domain.
pub fn tangent_ball(r: f64, n: usize) -> Result<LocalDomain> {
    let mut b = PolyBuilder::new(n).re_power(0, 1, 2.0 * r);
    for i in 0..n {
        b = b.abs_sq(i, 1.0);
    }
    let mut center = CVec::zeros(n);
    center[0] = C64::new(-r, 0.0);
    LocalDomain::new(b.build()?, center, r * (1.0 + 1e-9))
}

/// `e^{∂ρ(ζ)(z − ζ)}` on a domain that is strictly convex at `ζ`, with sampled decay.
pub fn make_convex_peak(domain: &LocalDomain, zeta: &CVec) -> Result<PeakFunction> {
    let convexity = certify_convexity_at(domain, zeta)?;
    if !(convexity > 0.0) {
        return Err(ExposeError::NotConvex(convexity));
    }
    let jet = domain.rho.eval_jet(zeta.as_slice())?;
    let mut peak = PeakFunction {
        zeta: zeta.clone(),
        kind: PeakKind::ConvexGradient,
        local: exp_of_linear(jet.dbar_grad.iter().copied().collect()),
        decay_c: 0.0,
        radius: None,
        axis: None,
        gradient: Some(jet.dbar_grad.clone()),
        report: None,
    };
    let report = estimate_decay(&peak, domain, DEFAULT_DECAY_SAMPLES, DEFAULT_DECAY_SEED)?;
    peak.decay_c = report.decay_c;
    peak.report = Some(report);
    Ok(peak)
}

/// `e^{P(z − ζ)}` with `P(d) = ∂ρ(ζ)·d + ½ dᵀ ∂²ρ(ζ) d`, so that `2 Re P` is the pluriharmonic
/// part of the second-order Taylor expansion of `ρ`. Decay is certified by sampling.
pub fn make_levi_peak(domain: &LocalDomain, zeta: &CVec) -> Result<PeakFunction> {
    let jet = domain.rho.eval_jet(zeta.as_slice())?;
    let half = &jet.holo_hess * C64::new(0.5, 0.0);
    let local = ScalarExpr::exp(ScalarExpr::Sum {
        terms: vec![
            ScalarExpr::linear(jet.dbar_grad.iter().copied().collect(), C64::new(0.0, 0.0)),
            ScalarExpr::quadratic(&half),
        ],
    });
    let mut peak = PeakFunction::user_supplied(zeta.clone(), local)?;
    let report = estimate_decay(&peak, domain, DEFAULT_DECAY_SAMPLES, DEFAULT_DECAY_SEED)?;
    peak.decay_c = report.decay_c;
    peak.report = Some(report);
    Ok(peak)
}

/// Measures `c* = min (−log|f(z)|)/|z − ζ|²` over `count` samples, half on the boundary and
/// half in the interior, and certifies `c*(1 − 1e-6)`. Any sample with `|f| ≥ 1` leaves the
/// peak uncertified (`decay_c = 0`).
pub fn estimate_decay(peak: &PeakFunction, domain: &LocalDomain, count: usize, seed: u64) -> Result<PeakReport> {
    if peak.n() != domain.n() {
        return Err(ExposeError::DimensionMismatch { expected: domain.n(), got: peak.n() });
    }
    let boundary_count = count / 2;
    let mut samples = if boundary_count > 0 { boundary_sample(domain, boundary_count, seed)? } else { Vec::new() };
    samples.extend(domain.sample_interior(count - boundary_count, seed ^ 0x9e37_79b9_7f4a_7c15)?);
    let measured: Vec<Option<(f64, f64)>> = samples
        .par_iter()
        .map(|z| {
            let d2 = crate::linalg::cdist(z.as_slice(), peak.zeta.as_slice()).powi(2);
            if d2.sqrt() < PEAK_EXCLUSION {
                return None;
            }
            Some((peak.log_modulus(z.as_slice()), d2))
        })
        .collect();
    let mut raw = f64::INFINITY;
    let mut max_log = f64::NEG_INFINITY;
    for (lm, d2) in measured.iter().flatten() {
        max_log = max_log.max(*lm);
        raw = raw.min(-lm / d2);
    }
    let certified = max_log < 0.0 && raw.is_finite() && raw > 0.0;
    let decay_c = if certified { raw * (1.0 - DECAY_MARGIN) } else { 0.0 };
    let max_violation = measured
        .iter()
        .flatten()
        .map(|(lm, d2)| (lm + decay_c * d2).exp() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PeakReport {
        kind: peak.kind,
        zeta: pairs(peak.zeta.as_slice()),
        decay_c,
        raw_c: if raw.is_finite() { raw } else { 0.0 },
        samples: samples.len(),
        seed,
        max_violation,
        max_modulus: max_log.exp(),
        certified,
    })
}

/// Certifies `peak` on `domain` and stores the result; fails when uncertified.
pub fn certify(mut peak: PeakFunction, domain: &LocalDomain, count: usize, seed: u64) -> Result<PeakFunction> {
    let report = estimate_decay(&peak, domain, count, seed)?;
    if !report.certified {
        return Err(ExposeError::UncertifiedPeak);
    }
    peak.decay_c = report.decay_c;
    peak.report = Some(report);
    Ok(peak)
}

/// Convex peaks at every `ζ` sharing the smallest certified decay constant.
pub fn make_peak_family(domain: &LocalDomain, zetas: &[CVec]) -> Result<(Vec<PeakFunction>, f64)> {
    if zetas.is_empty() {
        return Err(ExposeError::InvalidInput("empty peak family".into()));
    }
    let built: Vec<Result<PeakFunction>> = zetas.par_iter().map(|z| make_convex_peak(domain, z)).collect();
    let mut family = Vec::with_capacity(zetas.len());
    for (index, p) in built.into_iter().enumerate() {
        family.push(p.map_err(|e| ExposeError::FamilyMember { index, source: Box::new(e) })?);
    }
    let shared = family.iter().map(|p| p.decay_c).fold(f64::INFINITY, f64::min);
    for p in &mut family {
        p.decay_c = shared;
    }
    Ok((family, shared))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermpoly::HermitianPolynomial;
    use crate::linalg::cidentity;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_ball(n: usize) -> LocalDomain {
        LocalDomain::new(HermitianPolynomial::sphere(n, 1.0), CVec::zeros(n), 2.0).unwrap()
    }

    fn north(n: usize) -> CVec {
        let mut z = CVec::zeros(n);
        z[n - 1] = c(1.0, 0.0);
        z
    }

    #[test]
    fn ball_peak_values() {
        let p = make_ball_peak(1.0, &cidentity(2), &CVec::zeros(2)).unwrap();
        assert_eq!(p.eval(&[c(0.0, 0.0), c(0.0, 0.0)]), c(1.0, 0.0));
        let deep = [c(-2.0, 0.0), c(0.0, 0.0)];
        assert!((p.eval(&deep).norm() - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(p.decay_c, 0.5);
    }

    #[test]
    fn ball_peak_measured_decay() {
        let dom = tangent_ball(1.0, 2).unwrap();
        let p = make_ball_peak(1.0, &cidentity(2), &CVec::zeros(2)).unwrap();
        let rep = estimate_decay(&p, &dom, 2000, 3).unwrap();
        assert!(rep.certified);
        assert!(rep.decay_c >= 0.5 - 1e-6, "{}", rep.decay_c);
        assert!(rep.max_violation <= 1e-9);
    }

    #[test]
    fn convex_peak_on_unit_ball() {
        let dom = unit_ball(2);
        let p = make_convex_peak(&dom, &north(2)).unwrap();
        let w = [c(0.3, -0.2), c(0.1, 0.4)];
        assert!((p.eval(&w) - (w[1] - 1.0).exp()).norm() < 1e-14);
        assert!(p.decay_c >= 0.5 * (1.0 - 1e-6) - 1e-9, "{}", p.decay_c);
    }

    #[test]
    fn constant_is_uncertified() {
        let dom = unit_ball(2);
        let p = PeakFunction::user_supplied(north(2), ScalarExpr::constant(c(1.0, 0.0))).unwrap();
        let rep = estimate_decay(&p, &dom, 200, 1).unwrap();
        assert!(!rep.certified);
        assert_eq!(rep.decay_c, 0.0);
    }

    #[test]
    fn nonconvex_rejected() {
        let rho = PolyBuilder::new(2).re_power(1, 1, 2.0).re_power(0, 2, 3.0).abs_sq(0, 1.0).abs_sq(1, 1.0).build().unwrap();
        let dom = LocalDomain::new(rho, CVec::zeros(2), 0.5).unwrap();
        assert!(matches!(make_convex_peak(&dom, &CVec::zeros(2)), Err(ExposeError::NotConvex(v)) if v < 0.0));
        let levi = make_levi_peak(&dom, &CVec::zeros(2)).unwrap();
        let z = [c(0.1, 0.05), c(-0.02, 0.03)];
        let expect = (z[1] + 1.5 * z[0] * z[0]).exp();
        assert!((levi.eval(&z) - expect).norm() < 1e-15);
        assert!(levi.decay_c > 0.49, "{}", levi.decay_c);
    }

    #[test]
    fn antipodal_family() {
        let dom = unit_ball(2);
        let south = -north(2);
        let (fam, shared) = make_peak_family(&dom, &[north(2), south.clone()]).unwrap();
        assert!((fam[0].eval(south.as_slice()).norm() - (-2.0f64).exp()).abs() < 1e-14);
        assert!(shared > 0.49);
    }

    #[test]
    fn chart_form_matches() {
        let dom = unit_ball(2);
        let z0 = CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let p = make_convex_peak(&dom, &z0).unwrap();
        let chart = crate::geometry::normalize_at_scaled(&dom, &z0, 0.7).unwrap();
        let e = p.in_chart(&chart);
        let w = [c(0.1, 0.2), c(-0.3, 0.05)];
        assert!((e.eval(&w) - p.eval(chart.from_chart(&w).as_slice())).norm() < 1e-14);
    }
}
