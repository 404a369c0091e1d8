//! Poisson regression trained by mini-batch RMSProp, compared with the
//! generating coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use textcount::regressors::{fit_poisson, poisson_objective, FitOptions, SgdOptions};
use textcount::sparse::CsrMatrix;

fn main() -> textcount::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (b0, w) = (0.5, [0.7, -0.4, 0.2]);
    let rows: Vec<Vec<f64>> = (0..3000)
        .map(|_| (0..w.len()).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| {
            let eta = b0 + r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            Poisson::new(eta.exp()).expect("positive rate").sample(&mut rng)
        })
        .collect();
    let x = CsrMatrix::from_dense(&rows);

    let opts = FitOptions {
        alpha: 1e-4,
        sgd: SgdOptions { epochs: 100, ..Default::default() },
        ..Default::default()
    };
    let m = fit_poisson(&x, &y, &opts)?;
    println!("true      b = {b0:.3}, w = {w:?}");
    println!("estimated b = {:.3}, w = {:.3?}", m.intercept, m.weights);
    let fitted = poisson_objective(&m.weights, m.intercept, &x, &y)?;
    let truth = poisson_objective(&w, b0, &x, &y)?;
    println!("negative log-likelihood: fitted {:.2}, generating {:.2}", fitted.value, truth.value);
    Ok(())
}
