//! Riemann maps of star-shaped regions by Theodorsen's circle-correspondence iteration.

use super::cauchy::{cauchy_eval, BoundaryTable, CauchyValue, DEFAULT_NODES};
use crate::error::{ExposeError, Result};
use crate::C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Simply connected regions given through their boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Disk { center: C64, radius: f64 },
    Ellipse { center: C64, a: f64, b: f64 },
    /// Disk of radius `radius` whose boundary carries a Gaussian bulge of relative height
    /// `height` and angular width `width` in the direction of `+1`.
    BumpedDisk { center: C64, radius: f64, height: f64, width: f64 },
    /// Closed polygon, vertices in order.
    Polygon { vertices: Vec<C64> },
}

fn ray_conic(origin: C64, dir: C64, center: C64, a: f64, b: f64) -> Option<f64> {
    // Solve ((o + t d − c)_x / a)² + ((o + t d − c)_y / b)² = 1 for the positive root.
    let o = origin - center;
    let (ox, oy) = (o.re / a, o.im / b);
    let (dx, dy) = (dir.re / a, dir.im / b);
    let qa = dx * dx + dy * dy;
    let qb = 2.0 * (ox * dx + oy * dy);
    let qc = ox * ox + oy * oy - 1.0;
    if qc >= 0.0 {
        return None;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    Some((-qb + disc.sqrt()) / (2.0 * qa))
}

fn wrap_angle(t: f64) -> f64 {
    let mut x = (t + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

impl Region {
    /// Distance from `center` to the boundary along direction `theta`.
    pub fn radial(&self, center: C64, theta: f64) -> Result<f64> {
        let dir = C64::from_polar(1.0, theta);
        match self {
            Region::Disk { center: c, radius } => ray_conic(center, dir, *c, *radius, *radius)
                .ok_or_else(|| ExposeError::StarShapeViolation("center lies outside the disk".into())),
            Region::Ellipse { center: c, a, b } => ray_conic(center, dir, *c, *a, *b)
                .ok_or_else(|| ExposeError::StarShapeViolation("center lies outside the ellipse".into())),
            Region::BumpedDisk { center: c, radius, height, width } => {
                if (center - c).norm() > 1e-12 {
                    return Err(ExposeError::StarShapeViolation("bumped disk is parametrised about its own center".into()));
                }
                let t = wrap_angle(theta);
                Ok(radius * (1.0 + height * (-(t / width).powi(2)).exp()))
            }
            Region::Polygon { vertices } => {
                let n = vertices.len();
                let mut hits = Vec::new();
                for k in 0..n {
                    let p = vertices[k] - center;
                    let q = vertices[(k + 1) % n] - center;
                    let e = q - p;
                    let den = dir.re * e.im - dir.im * e.re;
                    if den.abs() < 1e-300 {
                        continue;
                    }
                    let t = (p.re * e.im - p.im * e.re) / den;
                    let u = (p.re * dir.im - p.im * dir.re) / den;
                    if t > 0.0 && (0.0..1.0).contains(&u) {
                        hits.push(t);
                    }
                }
                match hits.len() {
                    1 => Ok(hits[0]),
                    0 => Err(ExposeError::StarShapeViolation(format!("ray at angle {theta:.6} misses the boundary"))),
                    k => Err(ExposeError::StarShapeViolation(format!("ray at angle {theta:.6} crosses the boundary {k} times"))),
                }
            }
        }
    }

    /// `n` boundary points at equally spaced angles about `center`.
    pub fn boundary_points(&self, center: C64, n: usize) -> Result<Vec<C64>> {
        (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                Ok(center + C64::from_polar(self.radial(center, th)?, th))
            })
            .collect()
    }
}

/// Iteration controls.
#[derive(Clone, Copy, Debug)]
pub struct RiemannOptions {
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RiemannOptions {
    fn default() -> Self {
        RiemannOptions { nodes: DEFAULT_NODES, tol: 1e-13, max_iter: 10_000 }
    }
}

/// Boundary correspondence of the Riemann map `ψ: 𝔻 → region` with `ψ(0) = center`,
/// `ψ'(0) > 0`.
#[derive(Clone, Debug)]
pub struct RiemannMap {
    pub center: C64,
    pub table: BoundaryTable,
    /// Boundary angle about `center` hit by node `k`.
    pub theta: Vec<f64>,
    pub conformal_radius: f64,
    pub iterations: usize,
    pub last_correction: f64,
}

impl RiemannMap {
    pub fn eval(&self, z: C64) -> Result<CauchyValue> {
        cauchy_eval(&self.table, z)
    }

    /// Half the largest gap between consecutive boundary images: every boundary point of the
    /// region lies within this distance of the sampled image curve.
    pub fn boundary_gap(&self) -> f64 {
        let n = self.table.nodes();
        (0..n).map(|k| (self.table.values[(k + 1) % n] - self.table.values[k]).norm()).fold(0.0, f64::max) / 2.0
    }
}

/// Conjugate function of a real periodic sample via FFT.
fn conjugate(values: &[f64], planner: &mut FftPlanner<f64>) -> (Vec<f64>, f64) {
    let n = values.len();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let mean = buf[0].re / n as f64;
    for (j, c) in buf.iter_mut().enumerate() {
        let sign = if j == 0 || 2 * j == n {
            0.0
        } else if 2 * j < n {
            1.0
        } else {
            -1.0
        };
        *c *= C64::new(0.0, -sign);
    }
    inv.process(&mut buf);
    (buf.iter().map(|c| c.re / n as f64).collect(), mean)
}

/// Theodorsen iteration `θ = t + K[log R(θ)]` with adaptive under-relaxation.
pub fn riemann_map(region: &Region, center: C64, opts: RiemannOptions) -> Result<RiemannMap> {
    let n = opts.nodes;
    if n < 8 {
        return Err(ExposeError::InvalidInput(format!("need at least 8 nodes, got {n}")));
    }
    let t: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let mut theta = t.clone();
    let mut planner = FftPlanner::new();
    let mut relax = 1.0;
    let mut prev = f64::INFINITY;
    let mut mean = 0.0;
    let mut correction = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let logs: Vec<f64> = theta.iter().map(|&th| region.radial(center, th).map(f64::ln)).collect::<Result<_>>()?;
        let (eta, m) = conjugate(&logs, &mut planner);
        mean = m;
        correction = 0.0;
        for k in 0..n {
            let target = t[k] + eta[k];
            let step = target - theta[k];
            correction = f64::max(correction, step.abs());
            theta[k] += relax * step;
        }
        if correction < opts.tol {
            break;
        }
        if correction > prev {
            relax = (relax * 0.5).max(0.02);
        }
        prev = correction;
    }
    if correction >= opts.tol {
        return Err(ExposeError::NonConvergence(format!(
            "circle correspondence stalled at correction {correction:e} after {iterations} iterations"
        )));
    }
    let values: Vec<C64> = theta
        .iter()
        .map(|&th| region.radial(center, th).map(|r| center + C64::from_polar(r, th)))
        .collect::<Result<_>>()?;
    Ok(RiemannMap {
        center,
        table: BoundaryTable { values },
        theta,
        conformal_radius: mean.exp(),
        iterations,
        last_correction: correction,
    })
}
