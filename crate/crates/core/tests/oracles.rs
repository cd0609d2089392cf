//! Values frozen from independent computations (dense inverse, long proximal
//! gradient runs, closed-form eigenvalues) on small fixed instances.

mod common;

use gdnm_core::baselines::{admm_solve, apg_solve, fista_solve, ista_solve, BaselineConfig};
use gdnm_core::composite::{gdnm_composite_solve, MoreauReduction};
use gdnm_core::lasso::{direction_lasso, prox_l1, LassoInstance};
use gdnm_core::linalg::{cholesky, smallest_eigenvalue, spectral_upper_bound, DenseMatrix, DenseVector};
use gdnm_core::newton::SolverConfig;

fn v(x: &[f64]) -> DenseVector {
    DenseVector::new(x.to_vec()).unwrap()
}

fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol, "entry {i}: got {g}, want {w}");
    }
}

fn small_instance() -> LassoInstance {
    let a = DenseMatrix::from_rows(&[
        [1.0, 2.0, 0.0],
        [0.0, 1.0, -1.0],
        [3.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [2.0, -1.0, 0.0],
    ])
    .unwrap();
    LassoInstance::new(a, v(&[1.0, -2.0, 3.0, 0.5, 1.0]), 0.5).unwrap()
}

// 2·10⁵ proximal gradient steps in an independent implementation.
const X_STAR: [f64; 3] = [0.56, -0.08, 0.92];
const OBJ_STAR: f64 = 1.965;

// (I − 0.05·AᵀA)⁻¹ by dense inversion.
const Q_GAMMA_005: [f64; 9] = [
    5.0227272727272725,
    0.38636363636363646,
    1.181818181818182,
    0.38636363636363646,
    1.5681818181818183,
    0.09090909090909094,
    1.1818181818181819,
    0.09090909090909095,
    1.4545454545454546,
];
const C_GAMMA_005: [f64; 3] = [-3.454545454545455, -0.22727272727272735, -1.1363636363636365];

#[test]
fn small_instance_optimum_all_solvers() {
    let inst = small_instance();
    let gdnm = gdnm_composite_solve(&inst.to_composite().unwrap(), &SolverConfig::default()).unwrap();
    assert!(gdnm.solve.converged());
    assert_close(&gdnm.x, &X_STAR, 1e-6);
    assert!((gdnm.objective - OBJ_STAR).abs() < 1e-9);

    let cfg = BaselineConfig {
        eta_tol: 1e-10,
        ..BaselineConfig::default()
    };
    for rep in [
        ista_solve(&inst, &cfg).unwrap(),
        fista_solve(&inst, &cfg).unwrap(),
        apg_solve(&inst, &cfg).unwrap(),
        admm_solve(&inst, &cfg).unwrap(),
    ] {
        assert!(rep.converged());
        assert_close(&rep.final_x, &X_STAR, 1e-8);
    }
}

#[test]
fn reduction_matches_dense_inverse() {
    let prob = small_instance().to_composite().unwrap();
    let red = MoreauReduction::with_gamma(prob.a_bar(), prob.b_bar(), 0.05).unwrap();
    assert_close(red.q().as_slice(), &Q_GAMMA_005, 1e-12);
    assert_close(red.c(), &C_GAMMA_005, 1e-12);
    let psi = red.psi_value(prob.regularizer(), &v(&[0.3, -0.01, 0.2])).unwrap();
    assert!((psi - -0.9897284090909093).abs() < 1e-12);
}

#[test]
fn newton_direction_matches_dense_solve() {
    let prob = small_instance().to_composite().unwrap();
    let red = MoreauReduction::with_gamma(prob.a_bar(), prob.b_bar(), 0.05).unwrap();
    let u = v(&[0.3, -0.01, 0.2]);
    let vv = prox_l1(&u, 0.05 * 0.5);
    assert_eq!(vv[1], 0.0);
    let grad = red.psi_grad(prob.regularizer(), &u).unwrap();
    assert_close(&grad, &[-1.9902272727272732, -0.10886363636363641, -0.666818181818182], 1e-12);
    let dir = direction_lasso(&red, 0.5, &u, &vv, &grad).unwrap();
    assert_close(&dir.d, &[0.2767241379310344, -0.04258620689655174, 0.7560344827586212], 1e-12);
    assert!(!dir.fallback_used);
    assert_eq!(dir.inclusion_verified, Some(true));
}

#[test]
fn spectral_estimates_match_closed_form() {
    // [[2,1],[1,2]] has eigenvalues 1 and 3.
    let m = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
    let upper = spectral_upper_bound(&m, 1000, 1e-14);
    assert!((3.0..=3.0 * 1.01 + 1e-12).contains(&upper));
    let lo = smallest_eigenvalue(&m, 1000, 1e-14).unwrap();
    assert!((lo - 1.0).abs() < 1e-9);
    assert!(smallest_eigenvalue(&DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap(), 100, 1e-12).is_none());
}

#[test]
fn cholesky_reconstructs_gram() {
    let a = small_instance().a().gram();
    let l = cholesky(&a).unwrap().into_lower();
    let rebuilt = l.matmul(&l.transpose());
    assert!(rebuilt.combine(1.0, &a, -1.0).norm_max() < 1e-12);
}

#[test]
fn power_iteration_agrees_with_long_run() {
    let inst = common::instance(30, 8, 11, gdnm_core::bench::MuMode::Relative);
    let g = inst.a().gram();
    let quick = spectral_upper_bound(&g, 1000, 1e-12) / 1.01;
    let long = spectral_upper_bound(&g, 100_000, 0.0) / 1.01;
    assert!((quick - long).abs() <= 1e-8 * long);
}
