//! Analytic jets and Jacobians against finite-difference oracles.

mod common;

use common::*;
use expose_core::onevar::OneVarMap;
use expose_core::CVec;
use proptest::prelude::*;

const H: f64 = 1e-4;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_polynomials_are_real_valued(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let p = random_poly(&mut r, n, 6, 3, 10.0);
        let z = polydisk_point(&mut r, n, 1.0);
        let v = p.eval_complex(z.as_slice());
        prop_assert!(v.im.abs() <= 1e-12 * (1.0 + v.re.abs()), "imaginary part {}", v.im);
    }

    #[test]
    fn jet_matches_finite_differences(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let p = random_poly(&mut r, n, 6, 3, 10.0);
        let z = polydisk_point(&mut r, n, 0.9);
        let jet = p.eval_jet(z.as_slice()).unwrap();
        let f = |w: &CVec| p.eval(w.as_slice());

        let g = fd_real_gradient(&f, &z, 1e-6);
        let dz_fd = wirtinger_from_real(&g);
        let scale = g.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            prop_assert!((jet.dbar_grad[i] - dz_fd[i]).norm() < 1e-7 * scale);
        }
        let rg = jet.real_grad();
        for k in 0..2 * n {
            prop_assert!((rg[k] - g[k]).abs() < 1e-7 * scale);
        }

        let hess = fd_real_hessian(&f, &z, H);
        prop_assert!(rel_err_r(&jet.real_hess, &hess) < 1e-5, "real Hessian {}", rel_err_r(&jet.real_hess, &hess));
        let (holo, levi) = wirtinger_hessians(&hess);
        prop_assert!(rel_err_c(&jet.holo_hess, &holo) < 1e-5);
        prop_assert!(rel_err_c(&jet.levi, &levi) < 1e-5);
    }

    #[test]
    fn real_hessian_gives_directional_second_derivative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_poly(&mut r, 2, 6, 3, 10.0);
        let z = polydisk_point(&mut r, 2, 0.9);
        let v = polydisk_point(&mut r, 2, 1.0);
        let jet = p.eval_jet(z.as_slice()).unwrap();
        let line = |t: f64| p.eval((&z + &v * common::c(t, 0.0)).as_slice());
        let fd = (line(H) - 2.0 * line(0.0) + line(-H)) / (H * H);
        let x = nalgebra::DVector::from_iterator(4, v.iter().map(|c| c.re).chain(v.iter().map(|c| c.im)));
        let analytic = (x.transpose() * &jet.real_hess * &x)[0];
        prop_assert!((fd - analytic).abs() < 1e-4 * (1.0 + analytic.abs()), "{fd} vs {analytic}");
    }

    #[test]
    fn composite_jacobian_matches_finite_differences(seed in any::<u64>(), n in 2usize..4) {
        let mut r = rng(seed);
        let map = random_map(&mut r, n);
        let z = polydisk_point(&mut r, n, 0.5);
        let (value, jac) = map.eval_jacobian(&z);
        let f = |w: &CVec| map.eval(w);
        prop_assert!((&value - map.eval(&z)).norm() < 1e-13 * (1.0 + value.norm()));
        let fd = fd_jacobian(&f, &z, 1e-6);
        prop_assert!(rel_err_c(&jac, &fd) < 1e-7, "Jacobian error {}", rel_err_c(&jac, &fd));
        prop_assert!(fd_conj_wirtinger(&f, &z, 1e-6) < 1e-8 * (1.0 + jac.norm()));
    }

    #[test]
    fn scalar_gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let e = random_scalar(&mut r, n);
        let z = polydisk_point(&mut r, n, 0.8);
        let (v, g) = e.eval_grad(z.as_slice());
        prop_assert!((v - e.eval(z.as_slice())).norm() < 1e-12 * (1.0 + v.norm()));
        let f = |w: &CVec| CVec::from_element(1, e.eval(w.as_slice()));
        let fd = fd_jacobian(&f, &z, 1e-6);
        for i in 0..n {
            prop_assert!((g[i] - fd[(0, i)]).norm() < 1e-7 * (1.0 + g[i].norm()));
        }
        prop_assert!(fd_conj_wirtinger(&f, &z, 1e-6) < 1e-8 * (1.0 + v.norm()));
    }
}

fn one_var_cases() -> Vec<(&'static str, OneVarMap, f64)> {
    let welded = expose_core::onevar::WeldedMap::new(-2.0, 2.0, 0.3).unwrap();
    let auto = expose_core::onevar::DiskAutomorphism::new(0.4).unwrap();
    let mono = OneVarMap::Monomial { coeffs: vec![c(0.1, 0.2), c(1.0, 0.0), c(0.0, -0.3), c(0.05, 0.0)] };
    vec![
        ("affine", OneVarMap::Affine { a: c(2.0, -1.0), b: c(0.5, 0.5) }, 0.9),
        ("monomial", mono.clone(), 0.9),
        ("welded", OneVarMap::Welded(welded), 0.8),
        ("mobius", OneVarMap::Mobius(auto), 0.9),
        ("reflected", OneVarMap::Reflected { inner: Box::new(mono.clone()), sum: c(1.0, 0.0) }, 0.9),
        (
            "composed",
            OneVarMap::Composed { first: Box::new(OneVarMap::Mobius(auto)), second: Box::new(mono.clone()) },
            0.9,
        ),
        (
            "blend",
            OneVarMap::Blend { rate: 3.0, center: 0.0, left: Box::new(mono), right: Box::new(OneVarMap::Identity) },
            0.9,
        ),
    ]
}

#[test]
fn one_variable_maps_satisfy_cauchy_riemann() {
    let mut r = rng(11);
    for (name, map, radius) in one_var_cases() {
        for _ in 0..50 {
            let z = polydisk_point(&mut r, 1, radius)[0];
            let (v, d) = map.eval_deriv(z);
            assert!((v - map.eval(z)).norm() < 1e-12 * (1.0 + v.norm()), "{name}");
            let h = 1e-6;
            let dx = (map.eval(z + h) - map.eval(z - h)) / (2.0 * h);
            let dy = (map.eval(z + c(0.0, h)) - map.eval(z - c(0.0, h))) / (2.0 * h);
            let scale = 1.0 + d.norm();
            assert!((dx - d).norm() < 1e-6 * scale, "{name}: derivative {dx} vs {d}");
            // Holomorphic: ∂_y f = i ∂_x f.
            assert!((dy - c(0.0, 1.0) * dx).norm() < 1e-6 * scale, "{name}: Cauchy-Riemann");
        }
    }
}
