//! Small dense linear-algebra helpers shared by the geometric modules.

use crate::{CMat, CVec, RMat, C64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Smallest eigenvalue of a real symmetric matrix (symmetrised first).
pub fn min_eig_sym(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.
pub fn hermitian_embedding(m: &CMat) -> RMat {
    let k = m.nrows();
    let mut out = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[(i, j)] = h.re;
            out[(i + k, j + k)] = h.re;
            out[(i, j + k)] = -h.im;
            out[(i + k, j)] = h.im;
        }
    }
    out
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(m: &CMat) -> f64 {
    min_eig_sym(&hermitian_embedding(m))
}

/// Largest singular value of a complex matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let emb = hermitian_embedding(&gram);
    let top = SymmetricEigen::new(emb).eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    top.max(0.0).sqrt()
}

/// Euclidean norm of a complex slice.
pub fn cnorm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean distance between two complex slices.
pub fn cdist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `max |U*U - I|` entrywise.
pub fn unitary_defect(u: &CMat) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Coordinate indices sorted by ascending `weight`, ties broken by index.
fn seeding_order(weights: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[a].partial_cmp(&weights[b]).unwrap().then(a.cmp(&b)));
    idx
}

/// Unitary matrix whose last column is `normal / |normal|`.
///
/// The remaining columns come from Gram–Schmidt over coordinate vectors taken in order of
/// ascending `|normal_i|`, so the frame is a deterministic function of `normal`.
pub fn complex_frame(normal: &CVec) -> CMat {
    let n = normal.len();
    let len = normal.norm();
    let unit = normal / C64::new(len, 0.0);
    let mut cols: Vec<CVec> = vec![unit.clone()];
    let weights: Vec<f64> = unit.iter().map(|c| c.norm()).collect();
    for i in seeding_order(&weights) {
        if cols.len() == n {
            break;
        }
        let mut v = CVec::zeros(n);
        v[i] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / C64::new(nv, 0.0));
        }
    }
    let mut u = CMat::zeros(n, n);
    for (k, c) in cols.iter().skip(1).enumerate() {
        u.set_column(k, c);
    }
    u.set_column(n - 1, &cols[0]);
    u
}

/// Orthonormal basis (as columns) of the real orthogonal complement of `v`.
pub fn real_complement(v: &DVector<f64>) -> RMat {
    let d = v.len();
    let unit = v / v.norm();
    let mut cols: Vec<DVector<f64>> = vec![unit.clone()];
    let weights: Vec<f64> = unit.iter().map(|c| c.abs()).collect();
    for i in seeding_order(&weights) {
        if cols.len() == d {
            break;
        }
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&e);
                e -= c * proj;
            }
        }
        let ne = e.norm();
        if ne > 1e-8 {
            cols.push(e / ne);
        }
    }
    let mut basis = DMatrix::zeros(d, d - 1);
    for (k, c) in cols.iter().skip(1).enumerate() {
        basis.set_column(k, c);
    }
    basis
}

/// Real vector `[Re v; Im v]`.
pub fn to_real(v: &[C64]) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}

/// Inverse of [`to_real`].
pub fn from_real(x: &DVector<f64>) -> CVec {
    let n = x.len() / 2;
    CVec::from_fn(n, |i, _| C64::new(x[i], x[i + n]))
}

/// Real 2n×2n matrix of the complex-linear map `m` in `[x; y]` block order.
pub fn complex_linear_as_real(m: &CMat) -> RMat {
    let n = m.nrows();
    let k = m.ncols();
    let mut out = DMatrix::zeros(2 * n, 2 * k);
    for i in 0..n {
        for j in 0..k {
            let c = m[(i, j)];
            out[(i, j)] = c.re;
            out[(i, j + k)] = -c.im;
            out[(i + n, j)] = c.im;
            out[(i + n, j + k)] = c.re;
        }
    }
    out
}

/// Angle in radians between two nonzero real vectors.
pub fn angle_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // Half-angle form avoids the cancellation in `|a|²|b|² − (a·b)²` for nearly parallel vectors.
    let u = a / a.norm();
    let v = b / b.norm();
    2.0 * (&u - &v).norm().atan2((&u + &v).norm())
}

/// Identity matrix of complex type.
pub fn cidentity(n: usize) -> CMat {
    CMat::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_unitary_with_prescribed_last_column() {
        let v = CVec::from_vec(vec![C64::new(0.3, -0.2), C64::new(1.0, 0.5), C64::new(0.0, 0.1)]);
        let u = complex_frame(&v);
        assert!(unitary_defect(&u) < 1e-13);
        let unit = &v / C64::new(v.norm(), 0.0);
        for i in 0..3 {
            assert!((u[(i, 2)] - unit[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.0, 3.0), C64::new(-1.0, 0.0)]));
        assert!((op_norm(&m) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
        let b = real_complement(&v);
        assert_eq!(b.ncols(), 3);
        let g = b.transpose() * &b;
        assert!((g - RMat::identity(3, 3)).amax() < 1e-14);
        assert!((b.transpose() * v).amax() < 1e-14);
    }

    #[test]
    fn hermitian_min_eigen() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        );
        assert!((min_eig_hermitian(&m) - 1.0).abs() < 1e-12);
    }
}
