//! Dumbbell regions and the welded pair `f, g: 𝔻 → Ω` with `g ∘ m = f`.
//!
//! In strip coordinates `s = log((1+z)/(1−z))` the automorphism `m(z) = (z−r)/(1−rz)` is the
//! translation `s ↦ s − T` with `r = tanh(T/2)`. The map `f` blends the left-disk chart
//! `a + tanh(s/2)` into the right-disk chart `b + tanh((s−T)/2)` with a logistic weight
//! centred at `T/2`, so `F(s) + F(T − s) = a + b` holds identically; `g(w) = a + b − f(−w)`
//! then satisfies `g(m(z)) = f(z)`.

use super::mobius::DiskAutomorphism;
use crate::error::{ExposeError, Result};
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// δ-neighbourhood of `D₁(a) ∪ [a+1, b−1] ∪ D₁(b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DumbbellRegion {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    /// Counter-clockwise closed boundary polyline.
    pub boundary: Vec<C64>,
}

impl DumbbellRegion {
    pub fn new(a: f64, b: f64, delta: f64, nodes: usize) -> Result<Self> {
        if !(b - a > 2.0) {
            return Err(ExposeError::InvalidInput(format!("need b - a > 2, got a = {a}, b = {b}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ExposeError::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
        }
        let rad = 1.0 + delta;
        let th0 = (delta / rad).asin();
        let arc_len = rad * (2.0 * PI - 2.0 * th0);
        let line_len = (b - rad * th0.cos()) - (a + rad * th0.cos());
        let total = 2.0 * arc_len + 2.0 * line_len;
        let per = |len: f64| ((nodes as f64 * len / total).round() as usize).max(2);
        let mut pts = Vec::new();
        // Right circle, upper part: angle 0 → π − θ₀.
        let k = per(arc_len / 2.0);
        for i in 0..k {
            let t = (PI - th0) * i as f64 / k as f64;
            pts.push(C64::new(b, 0.0) + C64::from_polar(rad, t));
        }
        // Upper line, right to left.
        let k = per(line_len);
        let (x0, x1) = (b - rad * th0.cos(), a + rad * th0.cos());
        for i in 0..k {
            pts.push(C64::new(x0 + (x1 - x0) * i as f64 / k as f64, delta));
        }
        // Left circle: θ₀ → 2π − θ₀.
        let k = per(arc_len);
        for i in 0..k {
            let t = th0 + (2.0 * PI - 2.0 * th0) * i as f64 / k as f64;
            pts.push(C64::new(a, 0.0) + C64::from_polar(rad, t));
        }
        // Lower line, left to right.
        let k = per(line_len);
        for i in 0..k {
            pts.push(C64::new(x1 + (x0 - x1) * i as f64 / k as f64, -delta));
        }
        // Right circle, lower part: π + θ₀ → 2π.
        let k = per(arc_len / 2.0);
        for i in 0..k {
            let t = PI + th0 + (PI - th0) * i as f64 / k as f64;
            pts.push(C64::new(b, 0.0) + C64::from_polar(rad, t));
        }
        Ok(DumbbellRegion { a, b, delta, boundary: pts })
    }

    /// Distance from `w` to the skeleton `D₁(a) ∪ [a+1, b−1] ∪ D₁(b)`.
    pub fn skeleton_distance(&self, w: C64) -> f64 {
        let da = ((w - self.a).norm() - 1.0).max(0.0);
        let db = ((w - self.b).norm() - 1.0).max(0.0);
        let x = w.re.clamp(self.a + 1.0, self.b - 1.0);
        let ds = (w - C64::new(x, 0.0)).norm();
        da.min(db).min(ds)
    }

    pub fn contains(&self, w: C64) -> bool {
        self.skeleton_distance(w) < self.delta
    }

    /// Winding number of the boundary polyline about `p`.
    pub fn winding(&self, p: C64) -> i64 {
        winding_number(&self.boundary, p)
    }

    /// Largest distance between a boundary sample and the conjugate sample set.
    pub fn symmetry_defect(&self) -> f64 {
        self.boundary
            .iter()
            .map(|p| self.boundary.iter().map(|q| (q - p.conj()).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
}

/// Winding number of a closed polyline about `p`.
pub fn winding_number(poly: &[C64], p: C64) -> i64 {
    let n = poly.len();
    let mut total = 0.0;
    for k in 0..n {
        let u = poly[k] - p;
        let v = poly[(k + 1) % n] - p;
        total += (v / u).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Blend parameters of the welded map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeldedMap {
    pub a: f64,
    pub b: f64,
    /// Logistic rate of the blend in strip coordinates.
    pub kappa: f64,
    /// Strip translation length `T`.
    pub shift: f64,
    /// Coefficient of the `sech` correction pinning `f(0) = a`.
    pub correction: f64,
    pub automorphism: DiskAutomorphism,
}

fn tanh(x: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    if x.re >= 0.0 {
        let e = (-x * 2.0).exp();
        (one - e) / (one + e)
    } else {
        let e = (x * 2.0).exp();
        (e - one) / (e + one)
    }
}

fn sech(x: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let y = if x.re >= 0.0 { -x } else { x };
    let e = y.exp();
    e * 2.0 / (one + e * e)
}

fn logistic(x: C64) -> C64 {
    if x.re >= 0.0 {
        C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + (-x).exp())
    } else {
        let e = x.exp();
        e / (C64::new(1.0, 0.0) + e)
    }
}

impl WeldedMap {
    /// Builds the blend for the dumbbell `(a, b, δ)`.
    pub fn new(a: f64, b: f64, delta: f64) -> Result<Self> {
        let len = b - a - 2.0;
        if !(len > 0.0) {
            return Err(ExposeError::InvalidInput(format!("need b - a > 2, got a = {a}, b = {b}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ExposeError::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
        }
        let kappa = (2.0 / PI) * (1.6 * delta / len).atan();
        let shift = (8.0 + 4.0 * (1.0 + 1.0 / delta).ln()) / kappa;
        let automorphism = DiskAutomorphism::from_shift(shift)?;
        let phi0 = logistic(C64::new(-kappa * shift, 0.0)).re;
        let sech_half = sech(C64::new(shift / 2.0, 0.0)).re;
        let correction = (b - a - automorphism.r()) * phi0 / (1.0 - sech_half);
        Ok(WeldedMap { a, b, kappa, shift, correction, automorphism })
    }

    fn weight(&self, s: C64) -> C64 {
        logistic((s - self.shift / 2.0) * (2.0 * self.kappa))
    }

    /// `F(s) = f(tanh(s/2))` on the strip `|Im s| < π/2`.
    pub fn eval_strip(&self, s: C64) -> C64 {
        let phi = self.weight(s);
        let left = tanh(s * 0.5) + self.a;
        let right = tanh((s - self.shift) * 0.5) + self.b;
        let fix = (sech(s * 0.5) - sech((s - self.shift) * 0.5)) * self.correction;
        left * (C64::new(1.0, 0.0) - phi) + right * phi - fix
    }

    /// Strip coordinate of a disk point.
    pub fn strip_coordinate(z: C64) -> C64 {
        (C64::new(1.0, 0.0) + z).ln() - (C64::new(1.0, 0.0) - z).ln()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.eval_deriv_opt(z, false).0
    }

    pub fn eval_deriv(&self, z: C64) -> (C64, C64) {
        self.eval_deriv_opt(z, true)
    }

    fn eval_deriv_opt(&self, z: C64, want: bool) -> (C64, C64) {
        let one = C64::new(1.0, 0.0);
        let nan = C64::new(f64::NAN, f64::NAN);
        if z == one {
            return (C64::new(self.b + 1.0, 0.0), nan);
        }
        if z == -one {
            return (C64::new(self.a - 1.0, 0.0), nan);
        }
        let s = Self::strip_coordinate(z);
        let phi = self.weight(s);
        let m = self.automorphism.eval(z);
        let eps = self.automorphism.one_minus_r();
        let den = (one - z) + z * eps;
        let one_plus_m = (one + z) * eps / den;
        let one_minus_m = (one - z) * (2.0 - eps) / den;
        let root_z = ((one - z) * (one + z)).sqrt();
        let root_m = (one_minus_m * one_plus_m).sqrt();
        let value = (z + self.a) * (one - phi) + (m + self.b) * phi - (root_z - root_m) * self.correction;
        if !want {
            return (value, nan);
        }
        let dm = self.automorphism.deriv(z);
        let ds = C64::new(2.0, 0.0) / ((one - z) * (one + z));
        let dphi = phi * (one - phi) * (2.0 * self.kappa) * ds;
        let droot_z = -z / root_z;
        let droot_m = if root_m.norm() > 0.0 { -m * dm / root_m } else { C64::new(0.0, 0.0) };
        let d = (one - phi) + dm * phi + (m + self.b - z - self.a) * dphi - (droot_z - droot_m) * self.correction;
        (value, d)
    }
}

/// Output of [`dumbbell_pair`].
#[derive(Clone, Debug)]
pub struct DumbbellPair {
    pub region: DumbbellRegion,
    pub welded: WeldedMap,
    pub f: super::OneVarMap,
    pub g: super::OneVarMap,
    pub automorphism: DiskAutomorphism,
    /// `r` rounded to double precision; `one_minus_r` and `log_one_minus_r` resolve it.
    pub r_value: f64,
    pub one_minus_r: f64,
    pub log_one_minus_r: f64,
    pub f_at_minus_one: C64,
    pub f_at_one: C64,
    pub diagnostics: DumbbellDiagnostics,
}

/// Certificates attached to a dumbbell pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumbbellDiagnostics {
    /// `sup |g(m(z)) − f(z)|` over the test grid, with `m` applied in strip coordinates.
    pub consistency_sup: f64,
    /// Largest skeleton distance of the sampled image boundary.
    pub image_skeleton_distance: f64,
    pub image_in_region: bool,
    pub boundary_simple: bool,
    pub boundary_winding: i64,
    pub injective: bool,
    pub f_at_zero_error: f64,
    pub boundary_samples: usize,
}

/// Grid density used for the welding consistency check.
const CONSISTENCY_GRID: usize = 200;
/// Strip-boundary samples per unit of `Re s`.
const EDGE_DENSITY: f64 = 8.0;
const EDGE_TAIL: f64 = 40.0;

/// Upper image boundary `F(x + iπ/2)` for `x` across the strip, plus the endpoints.
pub fn upper_image_boundary(w: &WeldedMap) -> Vec<C64> {
    let lo = -EDGE_TAIL;
    let hi = w.shift + EDGE_TAIL;
    let count = ((hi - lo) * EDGE_DENSITY).ceil() as usize;
    let mut out = Vec::with_capacity(count + 3);
    out.push(C64::new(w.a - 1.0, 0.0));
    for k in 0..=count {
        let x = lo + (hi - lo) * k as f64 / count as f64;
        out.push(w.eval_strip(C64::new(x, PI / 2.0)));
    }
    out.push(C64::new(w.b + 1.0, 0.0));
    out
}

fn segments_cross(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let cross = |o: C64, a: C64, b: C64| (a - o).re * (b - o).im - (a - o).im * (b - o).re;
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

/// No two non-adjacent segments of the open polyline cross.
pub fn polyline_is_simple(pts: &[C64]) -> bool {
    let n = pts.len();
    if n < 4 {
        return true;
    }
    let boxes: Vec<(f64, f64, f64, f64)> = (0..n - 1)
        .map(|k| {
            let (p, q) = (pts[k], pts[k + 1]);
            (p.re.min(q.re), p.re.max(q.re), p.im.min(q.im), p.im.max(q.im))
        })
        .collect();
    !(0..n - 1).into_par_iter().any(|i| {
        let bi = boxes[i];
        (i + 2..n - 1).any(|j| {
            let bj = boxes[j];
            if bj.0 > bi.1 || bj.1 < bi.0 || bj.2 > bi.3 || bj.3 < bi.2 {
                return false;
            }
            segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1])
        })
    })
}

/// The pair `f, g` with `f(0) = a`, `g(0) = b`, `g ∘ m = f`, both real-symmetric, and
/// `f(−1) = a − 1`, `f(1) = b + 1`.
pub fn dumbbell_pair(a: f64, b: f64, delta: f64) -> Result<DumbbellPair> {
    let region = DumbbellRegion::new(a, b, delta, 4096)?;
    let welded = WeldedMap::new(a, b, delta)?;
    let f = super::OneVarMap::Welded(welded);
    let g = super::OneVarMap::Reflected { inner: Box::new(f.clone()), sum: C64::new(a + b, 0.0) };

    // Welding identity on a polar grid of the disk, in strip coordinates.
    let consistency_sup = (0..CONSISTENCY_GRID)
        .into_par_iter()
        .map(|i| {
            let rad = 0.999 * (i as f64 + 0.5) / CONSISTENCY_GRID as f64;
            (0..CONSISTENCY_GRID)
                .map(|j| {
                    let z = C64::from_polar(rad, 2.0 * PI * j as f64 / CONSISTENCY_GRID as f64);
                    let s = WeldedMap::strip_coordinate(z);
                    let fz = welded.eval_strip(s);
                    let gmz = C64::new(a + b, 0.0) - welded.eval_strip(C64::new(welded.shift, 0.0) - s);
                    (gmz - fz).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    if consistency_sup > 1e-5 {
        return Err(ExposeError::Consistency(format!("sup |g(m(z)) - f(z)| = {consistency_sup:e}")));
    }

    let upper = upper_image_boundary(&welded);
    let image_skeleton_distance = upper.iter().map(|&w| region.skeleton_distance(w)).fold(0.0, f64::max);
    let image_in_region = image_skeleton_distance < delta;
    let interior_upper = upper[1..upper.len() - 1].iter().all(|w| w.im > 0.0);
    let boundary_simple = interior_upper && polyline_is_simple(&upper);
    let mut closed: Vec<C64> = upper.iter().map(|w| w.conj()).collect();
    closed.extend(upper[1..upper.len() - 1].iter().rev().copied());
    let boundary_winding = winding_number(&closed, C64::new(a, 0.0));
    let f_at_zero = welded.eval(C64::new(0.0, 0.0));
    let diagnostics = DumbbellDiagnostics {
        consistency_sup,
        image_skeleton_distance,
        image_in_region,
        boundary_simple,
        boundary_winding,
        injective: boundary_simple && boundary_winding == 1,
        f_at_zero_error: (f_at_zero - a).norm(),
        boundary_samples: closed.len(),
    };
    let automorphism = welded.automorphism;
    Ok(DumbbellPair {
        region,
        welded,
        f_at_minus_one: welded.eval(C64::new(-1.0, 0.0)),
        f_at_one: welded.eval(C64::new(1.0, 0.0)),
        f,
        g,
        automorphism,
        r_value: automorphism.r(),
        one_minus_r: automorphism.one_minus_r(),
        log_one_minus_r: automorphism.log_one_minus_r(),
        diagnostics,
    })
}

/// `sup |f(z) − (z + a)|` over the closed unit disk minus `D_excluded(1)`, on a polar grid
/// with `radial` circles and `angular` points per circle.
pub fn translation_defect(pair: &DumbbellPair, excluded: f64, radial: usize, angular: usize) -> f64 {
    let a = C64::new(pair.welded.a, 0.0);
    (0..=radial)
        .into_par_iter()
        .map(|i| {
            let rad = i as f64 / radial as f64;
            (0..angular)
                .map(|j| {
                    let z = C64::from_polar(rad, 2.0 * PI * j as f64 / angular as f64);
                    if (z - 1.0).norm() < excluded {
                        0.0
                    } else {
                        (pair.f.eval(z) - (z + a)).norm()
                    }
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_shape() {
        let r = DumbbellRegion::new(-2.0, 2.0, 0.15, 2000).unwrap();
        assert_eq!(r.winding(C64::new(-2.0, 0.0)), 1);
        assert_eq!(r.winding(C64::new(2.0, 0.0)), 1);
        assert_eq!(r.winding(C64::new(0.0, 0.5)), 0);
        assert!(r.symmetry_defect() < 1e-12);
        assert!(r.contains(C64::new(0.0, 0.1)) && !r.contains(C64::new(0.0, 0.2)));
    }

    #[test]
    fn welded_basics() {
        let w = WeldedMap::new(-2.0, 2.0, 0.3).unwrap();
        assert!((w.eval(C64::new(0.0, 0.0)) + 2.0).norm() < 1e-12);
        let z = C64::new(0.3, -0.2);
        assert!((w.eval(z.conj()) - w.eval(z).conj()).norm() < 1e-14);
        let h = 1e-6;
        let (_, d) = w.eval_deriv(z);
        let fd = (w.eval(z + h) - w.eval(z - h)) / (2.0 * h);
        assert!((fd - d).norm() < 1e-7);
        for s in [C64::new(3.0, 0.4), C64::new(w.shift / 2.0, -1.0), C64::new(-5.0, 1.2)] {
            let sum = w.eval_strip(s) + w.eval_strip(C64::new(w.shift, 0.0) - s);
            assert!((sum - 0.0).norm() < 1e-12);
        }
    }

    #[test]
    fn pair_certificates() {
        let p = dumbbell_pair(-2.0, 2.0, 0.3).unwrap();
        let d = &p.diagnostics;
        assert!(d.consistency_sup < 1e-6);
        assert!(d.image_in_region, "{}", d.image_skeleton_distance);
        assert!(d.injective, "{d:?}");
        assert_eq!(p.f_at_one, C64::new(3.0, 0.0));
        assert_eq!(p.f_at_minus_one, C64::new(-3.0, 0.0));
        let z = C64::new(0.4, 0.3);
        assert!((p.g.eval(z) + p.f.eval(-z)).norm() == 0.0);
    }
}
