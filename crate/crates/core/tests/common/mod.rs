#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use gdnm_core::bench::{gen_data, gen_instance, MuMode};
use gdnm_core::lasso::LassoInstance;
use gdnm_core::linalg::{DenseMatrix, DenseVector};
use gdnm_core::newton::SolveReport;

pub fn instance(m: usize, n: usize, seed: u64, mu: MuMode) -> LassoInstance {
    gen_instance(m, n, seed, mu).expect("valid instance")
}

pub fn scalar_instance() -> LassoInstance {
    LassoInstance::new(
        DenseMatrix::from_rows(&[[1.0]]).unwrap(),
        DenseVector::new(vec![2.0]).unwrap(),
        0.5,
    )
    .unwrap()
}

/// `A = [B, B]` with `B ∈ ℝ^{m×k}` Gaussian: `2k` columns, rank `k`.
pub fn duplicated_columns(m: usize, k: usize, seed: u64) -> LassoInstance {
    let (b_block, rhs) = gen_data(m, k, seed).unwrap();
    let mut data = Vec::with_capacity(m * 2 * k);
    for i in 0..m {
        data.extend_from_slice(b_block.row(i));
        data.extend_from_slice(b_block.row(i));
    }
    let a = DenseMatrix::new(m, 2 * k, data).unwrap();
    LassoInstance::with_relative_mu(a, rhs).unwrap()
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Armijo inequality, strict descent and negative slope at every recorded step.
pub fn audit_descent(report: &SolveReport, sigma: f64) -> Result<(), String> {
    for pair in report.trace.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let step = cur.step.as_ref().ok_or_else(|| format!("iterate {} has a successor but no step", cur.k))?;
        let slope = step.slope.ok_or_else(|| format!("step {} has no slope", cur.k))?;
        if !(slope < 0.0) {
            return Err(format!("step {}: slope {slope} is not negative", cur.k));
        }
        if next.objective > cur.objective + sigma * step.tau * slope {
            return Err(format!(
                "step {}: Armijo fails, {} > {} + {sigma}*{}*{slope}",
                cur.k, next.objective, cur.objective, step.tau
            ));
        }
        if !(next.objective < cur.objective) {
            return Err(format!("step {}: objective did not decrease", cur.k));
        }
    }
    Ok(())
}
