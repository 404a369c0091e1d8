//! Ridge regression on log-transformed counts, solved by conjugate gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textcount::regressors::{fit_ridge, RidgeParams, TargetTransform};
use textcount::sparse::CsrMatrix;

fn main() -> textcount::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth = [0.8, -0.5, 0.0, 0.3];
    let rows: Vec<Vec<f64>> = (0..500)
        .map(|_| (0..truth.len()).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect())
        .collect();
    let y: Vec<u32> = rows
        .iter()
        .map(|r| {
            let eta: f64 = 1.0 + r.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>();
            (eta.exp() - 1.0 + rng.random::<f64>()).max(0.0) as u32
        })
        .collect();
    let x = CsrMatrix::from_dense(&rows);
    let z = TargetTransform::default().forward_counts(&y);

    for alpha in [0.1, 10.0, 100.0] {
        let m = fit_ridge(&x, &z, &RidgeParams { alpha, ..Default::default() })?;
        let w: Vec<String> = m.weights.iter().map(|w| format!("{w:+.3}")).collect();
        println!("alpha {alpha:>5}: intercept {:.3}, weights [{}]", m.intercept, w.join(", "));
    }
    Ok(())
}
