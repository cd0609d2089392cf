//! Generalized damped Newton method for `C^{1,1}` minimization and for
//! quadratic composite problems, with a Lasso specialization, first-order
//! baselines and a seeded benchmark harness.
//!
//! ```
//! use gdnm_core::lasso::LassoInstance;
//! use gdnm_core::linalg::{DenseMatrix, DenseVector};
//! use gdnm_core::composite::gdnm_composite_solve;
//! use gdnm_core::newton::SolverConfig;
//!
//! let a = DenseMatrix::from_rows(&[[1.0]]).unwrap();
//! let b = DenseVector::new(vec![2.0]).unwrap();
//! let inst = LassoInstance::new(a, b, 0.5).unwrap();
//! let report = gdnm_composite_solve(&inst.to_composite().unwrap(), &SolverConfig::default()).unwrap();
//! assert!((report.x[0] - 1.5).abs() < 1e-6);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod composite;
pub mod lasso;
pub mod linalg;
pub mod newton;

pub use baselines::{admm_solve, apg_solve, fista_solve, ista_solve, BaselineConfig};
pub use composite::{gdnm_composite_solve, tikhonov_solve, QuadraticCompositeProblem};
pub use lasso::{kkt_residual, LassoInstance};
pub use newton::{gdnm_solve, SolveReport, SolveStatus, SolverConfig};
