//! Least-squares polynomial fitting in an Arnoldi-orthogonalised basis with exact
//! interpolation constraints.

use crate::error::{ExposeError, Result};
use crate::{CMat, CVec, C64};
use serde::{Deserialize, Serialize};

/// Largest tolerated departure of the sampled basis from orthonormality.
pub const BASIS_TOL: f64 = 1e-6;

/// Interpolation condition `p(point) = value` and optionally `p'(point) = derivative`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub point: C64,
    pub value: C64,
    pub derivative: Option<C64>,
}

impl Constraint {
    pub fn value(point: C64, value: C64) -> Self {
        Constraint { point, value, derivative: None }
    }

    pub fn jet(point: C64, value: C64, derivative: C64) -> Self {
        Constraint { point, value, derivative: Some(derivative) }
    }

    fn equations(&self) -> usize {
        1 + self.derivative.is_some() as usize
    }
}

/// Polynomial `Σ c_k W_k(z)` where `W_k` follow the Arnoldi recurrence
/// `h_{k+1,k} W_{k+1} = z W_k − Σ_{j≤k} h_{jk} W_j`, `W_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArnoldiPoly {
    /// Column `k` holds `h_{0..=k+1, k}`.
    pub hess: Vec<Vec<C64>>,
    pub coeffs: Vec<C64>,
    pub real_symmetric: bool,
}

impl ArnoldiPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn basis(&self, z: C64, want_deriv: bool) -> (Vec<C64>, Vec<C64>) {
        let d = self.degree();
        let mut w = Vec::with_capacity(d + 1);
        let mut dw = Vec::with_capacity(d + 1);
        w.push(C64::new(1.0, 0.0));
        dw.push(C64::new(0.0, 0.0));
        for k in 0..d {
            let col = &self.hess[k];
            let mut v = z * w[k];
            let mut dv = if want_deriv { w[k] + z * dw[k] } else { C64::new(0.0, 0.0) };
            for j in 0..=k {
                v -= col[j] * w[j];
                if want_deriv {
                    dv -= col[j] * dw[j];
                }
            }
            w.push(v / col[k + 1]);
            dw.push(dv / col[k + 1]);
        }
        (w, dw)
    }

    pub fn eval(&self, z: C64) -> C64 {
        let (w, _) = self.basis(z, false);
        w.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn eval_deriv(&self, z: C64) -> (C64, C64) {
        let (w, dw) = self.basis(z, true);
        let v = w.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        let d = dw.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        (v, d)
    }

    /// Monomial coefficients `a_0, a_1, …` (ill-conditioned for high degree).
    pub fn monomial_coefficients(&self) -> Vec<C64> {
        let d = self.degree();
        let mut polys: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0)]];
        for k in 0..d {
            let col = &self.hess[k];
            let mut next = vec![C64::new(0.0, 0.0); k + 2];
            for (i, c) in polys[k].iter().enumerate() {
                next[i + 1] += c;
            }
            for j in 0..=k {
                for (i, c) in polys[j].iter().enumerate() {
                    next[i] -= col[j] * c;
                }
            }
            for c in next.iter_mut() {
                *c /= col[k + 1];
            }
            polys.push(next);
        }
        let mut out = vec![C64::new(0.0, 0.0); d + 1];
        for (p, c) in polys.iter().zip(&self.coeffs) {
            for (i, a) in p.iter().enumerate() {
                out[i] += a * c;
            }
        }
        out
    }
}

/// Fit outcome with the sup residual over the sample.
#[derive(Clone, Debug)]
pub struct PolyFit {
    pub poly: ArnoldiPoly,
    pub residual: f64,
}

/// Fitting knobs.
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub degree: usize,
    pub real_symmetric: bool,
}

/// [`polyfit_constrained_with`] with default options.
pub fn polyfit_constrained(points: &[C64], values: &[C64], degree: usize, constraints: &[Constraint]) -> Result<PolyFit> {
    polyfit_constrained_with(points, values, constraints, FitOptions { degree, real_symmetric: false })
}

/// Least squares on the sample subject to exact constraints.
///
/// With the sampled basis matrix `Q` satisfying `Q*Q = mI`, the constrained minimiser is the
/// unconstrained coefficient vector plus the least-norm correction onto the constraint plane.
pub fn polyfit_constrained_with(
    points: &[C64],
    values: &[C64],
    constraints: &[Constraint],
    opts: FitOptions,
) -> Result<PolyFit> {
    let m = points.len();
    let d = opts.degree;
    if m != values.len() {
        return Err(ExposeError::InvalidInput(format!("{} points but {} values", m, values.len())));
    }
    if m <= d {
        return Err(ExposeError::InvalidInput(format!("need more than {d} sample points, got {m}")));
    }
    let eqs: usize = constraints.iter().map(Constraint::equations).sum();
    if eqs > d + 1 {
        return Err(ExposeError::InvalidInput(format!("degree {d} too small for {eqs} constraint equations")));
    }
    let mf = m as f64;
    let mut q = CMat::zeros(m, d + 1);
    for i in 0..m {
        q[(i, 0)] = C64::new(1.0, 0.0);
    }
    let mut hess: Vec<Vec<C64>> = Vec::with_capacity(d);
    for k in 0..d {
        let mut v = CVec::from_fn(m, |i, _| points[i] * q[(i, k)]);
        let mut col = vec![C64::new(0.0, 0.0); k + 2];
        for _pass in 0..2 {
            for j in 0..=k {
                let h = q.column(j).dotc(&v) / mf;
                col[j] += h;
                v -= q.column(j) * h;
            }
        }
        let norm = v.norm() / mf.sqrt();
        if !(norm > 1e-13) {
            return Err(ExposeError::IllConditioned(format!("Arnoldi breakdown at degree {}", k + 1)));
        }
        col[k + 1] = C64::new(norm, 0.0);
        if opts.real_symmetric {
            for c in col.iter_mut() {
                *c = C64::new(c.re, 0.0);
            }
        }
        q.set_column(k + 1, &(v / col[k + 1]));
        hess.push(col);
    }
    let gram = q.adjoint() * &q / C64::new(mf, 0.0);
    let defect = (gram - CMat::identity(d + 1, d + 1)).iter().map(|c| c.norm()).fold(0.0, f64::max);
    if defect > BASIS_TOL {
        return Err(ExposeError::IllConditioned(format!("basis orthogonality defect {defect:e}")));
    }
    let b = CVec::from_column_slice(values);
    let mut coeffs = q.adjoint() * &b / C64::new(mf, 0.0);
    let mut poly = ArnoldiPoly { hess, coeffs: coeffs.iter().copied().collect(), real_symmetric: opts.real_symmetric };
    if eqs > 0 {
        let mut rows = CMat::zeros(eqs, d + 1);
        let mut rhs = CVec::zeros(eqs);
        let mut r = 0;
        for c in constraints {
            let (w, dw) = poly.basis(c.point, c.derivative.is_some());
            let wn = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for k in 0..=d {
                rows[(r, k)] = w[k] / wn;
            }
            rhs[r] = c.value / wn;
            r += 1;
            if let Some(dv) = c.derivative {
                let dn = dw.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                for k in 0..=d {
                    rows[(r, k)] = dw[k] / dn;
                }
                rhs[r] = dv / dn;
                r += 1;
            }
        }
        let gap = &rhs - &rows * &coeffs;
        let normal = &rows * rows.adjoint();
        let y = normal
            .lu()
            .solve(&gap)
            .ok_or_else(|| ExposeError::IllConditioned("constraint equations are dependent".into()))?;
        coeffs += rows.adjoint() * y;
        // One refinement pass against rounding in the correction.
        let gap = &rhs - &rows * &coeffs;
        let normal = &rows * rows.adjoint();
        if let Some(y) = normal.lu().solve(&gap) {
            coeffs += rows.adjoint() * y;
        }
    }
    if opts.real_symmetric {
        coeffs = coeffs.map(|c| C64::new(c.re, 0.0));
    }
    poly.coeffs = coeffs.iter().copied().collect();
    let fitted = &q * &coeffs;
    let residual = fitted.iter().zip(values).map(|(f, v)| (f - v).norm()).fold(0.0, f64::max);
    Ok(PolyFit { poly, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment(m: usize) -> Vec<C64> {
        (0..m).map(|k| C64::new(-1.0 + 2.0 * k as f64 / (m - 1) as f64, 0.0)).collect()
    }

    #[test]
    fn identity_degree_one() {
        let pts: Vec<C64> = (0..20).map(|k| C64::from_polar(0.7, k as f64)).collect();
        let fit = polyfit_constrained(&pts, &pts, 1, &[]).unwrap();
        assert!(fit.residual < 1e-14);
        let mono = fit.poly.monomial_coefficients();
        assert!(mono[0].norm() < 1e-14 && (mono[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn exponential_on_segment() {
        let pts = segment(400);
        let vals: Vec<C64> = pts.iter().map(|z| z.exp()).collect();
        let fit = polyfit_constrained(&pts, &vals, 30, &[]).unwrap();
        assert!(fit.residual < 1e-10, "{}", fit.residual);
    }

    #[test]
    fn constraints_hold_exactly() {
        let pts: Vec<C64> = (0..300).map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 300.0) - 2.0).collect();
        let vals: Vec<C64> = pts.iter().map(|z| z + 0.05 * (z + 2.0).powi(2)).collect();
        let c = Constraint::jet(C64::new(-2.0, 0.0), C64::new(-2.0, 0.0), C64::new(1.0, 0.0));
        let fit = polyfit_constrained(&pts, &vals, 12, &[c]).unwrap();
        let (v, d) = fit.poly.eval_deriv(C64::new(-2.0, 0.0));
        assert!((v + 2.0).norm() < 1e-13);
        assert!((d - 1.0).norm() < 1e-13);
    }

    #[test]
    fn too_many_constraints() {
        let pts = segment(10);
        let c = Constraint::jet(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        assert!(polyfit_constrained(&pts, &pts, 0, &[c]).is_err());
    }

    #[test]
    fn degenerate_sample_breaks_down() {
        let pts = vec![C64::new(0.5, 0.0); 10];
        assert!(matches!(polyfit_constrained(&pts, &pts, 3, &[]), Err(ExposeError::IllConditioned(_))));
    }
}
