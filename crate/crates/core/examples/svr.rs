//! Linear epsilon-insensitive SVR by dual coordinate descent. Larger tubes
//! leave more points without a penalty and shrink the weights.

use textcount::regressors::{fit_svr, svr_primal_objective, SvrParams};
use textcount::sparse::CsrMatrix;

fn main() -> textcount::Result<()> {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 - 20.0) / 10.0, ((i * 7) % 5) as f64 - 2.0]).collect();
    let z: Vec<f64> = rows.iter().enumerate().map(|(i, r)| 1.5 * r[0] - 0.5 * r[1] + 0.2 + 0.3 * ((i % 3) as f64 - 1.0)).collect();
    let x = CsrMatrix::from_dense(&rows);

    for epsilon in [0.0, 0.5, 2.0] {
        let p = SvrParams { c: 1.0, epsilon, ..Default::default() };
        let m = fit_svr(&x, &z, &p)?;
        let obj = svr_primal_objective(&x, &z, &m.weights, m.intercept, p.c, epsilon);
        println!(
            "epsilon {epsilon:.1}: w = [{:+.3}, {:+.3}], b = {:+.3}, primal objective {obj:.4}",
            m.weights[0], m.weights[1], m.intercept
        );
    }
    Ok(())
}
