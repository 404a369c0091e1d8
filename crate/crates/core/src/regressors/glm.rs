//! Poisson and logistic objectives and the mini-batch RMSProp trainer.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, FitOptions, LinearFamily, LinearModel, TargetTransform};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Upper clamp on the linear predictor before exponentiation.
pub const ETA_CLAMP: f64 = 30.0;

/// Objective value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_intercept: f64,
    /// Some linear predictor exceeded [`ETA_CLAMP`].
    pub clamped: bool,
}

#[derive(Clone, Copy)]
enum Loss {
    Poisson,
    Logistic,
}

impl Loss {
    /// Per-sample loss and its derivative in the linear predictor.
    #[inline]
    fn eval(self, eta: f64, y: f64) -> (f64, f64) {
        match self {
            Loss::Poisson => {
                let lambda = eta.exp();
                (lambda - y * eta, lambda - y)
            }
            Loss::Logistic => {
                // log(1 + e^eta) - y * eta, computed stably
                let softplus = if eta > 0.0 {
                    eta + (-eta).exp().ln_1p()
                } else {
                    eta.exp().ln_1p()
                };
                (softplus - y * eta, sigmoid(eta) - y)
            }
        }
    }
}

fn objective(loss: Loss, theta: &[f64], intercept: f64, x: &CsrMatrix, y: &[f64]) -> Result<Objective> {
    if x.n_cols() != theta.len() || x.n_rows() != y.len() {
        return Err(Error::Dimension(format!(
            "matrix {}x{}, {} coefficients, {} targets",
            x.n_rows(),
            x.n_cols(),
            theta.len(),
            y.len()
        )));
    }
    let mut value = 0.0;
    let mut resid = vec![0.0; y.len()];
    let mut clamped = false;
    for (i, (r, &yi)) in resid.iter_mut().zip(y).enumerate() {
        let mut eta = x.row_dot(i, theta) + intercept;
        if eta > ETA_CLAMP {
            eta = ETA_CLAMP;
            clamped = true;
        }
        let (l, g) = loss.eval(eta, yi);
        value += l;
        *r = g;
    }
    Ok(Objective {
        value,
        grad: x.tmul_vec(&resid),
        grad_intercept: resid.iter().sum(),
        clamped,
    })
}

/// Poisson negative log-likelihood `Σ λᵢ − yᵢ ln λᵢ` (the `ln yᵢ!` constant
/// dropped) with `λᵢ = exp(θᵀxᵢ + b)`, and its gradient `Xᵀ(λ − y)`.
pub fn poisson_objective(theta: &[f64], intercept: f64, x: &CsrMatrix, y: &[f64]) -> Result<Objective> {
    objective(Loss::Poisson, theta, intercept, x, y)
}

/// Logistic negative log-likelihood `Σ ln(1 + e^ηᵢ) − yᵢηᵢ` for `y ∈ {0, 1}`,
/// gradient `Xᵀ(σ(η) − y)`.
pub fn logistic_objective(theta: &[f64], intercept: f64, x: &CsrMatrix, y: &[f64]) -> Result<Objective> {
    objective(Loss::Logistic, theta, intercept, x, y)
}

/// Consecutive objective increases tolerated before giving up.
const DIVERGENCE_EPOCHS: usize = 5;

/// Tracks per-epoch objective values and flags divergence.
struct Monitor {
    prev: f64,
    increases: usize,
}

impl Monitor {
    fn new(initial: f64) -> Self {
        Monitor {
            prev: initial,
            increases: 0,
        }
    }

    /// Records the objective after `epochs` epochs.
    fn record(&mut self, value: f64, epochs: usize) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Diverged { epochs });
        }
        if value > self.prev {
            self.increases += 1;
            if self.increases >= DIVERGENCE_EPOCHS {
                return Err(Error::Diverged {
                    epochs: DIVERGENCE_EPOCHS,
                });
            }
        } else {
            self.increases = 0;
        }
        self.prev = value;
        Ok(())
    }
}

fn penalized(loss: Loss, theta: &[f64], b: f64, x: &CsrMatrix, y: &[f64], alpha: f64) -> Result<f64> {
    let obj = objective(loss, theta, b, x, y)?;
    Ok(obj.value + 0.5 * alpha * theta.iter().map(|t| t * t).sum::<f64>())
}

/// Minimizes `loss + (α/2)‖θ‖²` by mini-batch RMSProp.
///
/// Each step uses the batch-mean gradient plus `(α/n)θ`, which is an unbiased
/// estimate of the gradient of the objective divided by `n`.
fn rmsprop(
    loss: Loss,
    x: &CsrMatrix,
    y: &[f64],
    opts: &FitOptions,
    init_intercept: f64,
) -> Result<(Vec<f64>, f64)> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if n != y.len() {
        return Err(Error::Dimension(format!("{n} rows but {} targets", y.len())));
    }
    if n == 0 {
        return Err(Error::InvalidInput("cannot fit on zero rows".into()));
    }
    let sgd = &opts.sgd;
    let alpha_n = opts.alpha / n as f64;
    let mut theta = vec![0.0; d];
    let mut b = init_intercept;
    let mut cache = vec![0.0; d];
    let mut cache_b = 0.0;
    let mut grad = vec![0.0; d];
    let mut touched: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sgd.seed);

    let mut monitor = Monitor::new(penalized(loss, &theta, b, x, y, opts.alpha)?);
    for epoch in 0..sgd.epochs {
        let lr = if sgd.anneal {
            sgd.learning_rate / ((1 + epoch) as f64).sqrt()
        } else {
            sgd.learning_rate
        };
        order.shuffle(&mut rng);
        for batch in order.chunks(sgd.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut g_b = 0.0;
            for &i in batch {
                let eta = (x.row_dot(i, &theta) + b).min(ETA_CLAMP);
                let (_, g) = loss.eval(eta, y[i]);
                g_b += g * scale;
                for (j, v) in x.row_entries(i) {
                    if grad[j] == 0.0 {
                        touched.push(j);
                    }
                    grad[j] += g * v * scale;
                }
            }
            // dense part: penalty gradient and moving-average decay
            for j in 0..d {
                let g = grad[j] + alpha_n * theta[j];
                cache[j] = sgd.decay * cache[j] + (1.0 - sgd.decay) * g * g;
                if g != 0.0 {
                    theta[j] -= lr * g / (cache[j].sqrt() + sgd.epsilon);
                }
            }
            for &j in &touched {
                grad[j] = 0.0;
            }
            touched.clear();
            cache_b = sgd.decay * cache_b + (1.0 - sgd.decay) * g_b * g_b;
            b -= lr * g_b / (cache_b.sqrt() + sgd.epsilon);
        }
        monitor.record(penalized(loss, &theta, b, x, y, opts.alpha)?, epoch + 1)?;
    }
    Ok((theta, b))
}

/// Poisson regression `λ = exp(θᵀx + b)` with an unpenalized intercept.
pub fn fit_poisson(x: &CsrMatrix, y: &[f64], opts: &FitOptions) -> Result<LinearModel> {
    if y.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput("Poisson targets must be non-negative".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
    let (weights, intercept) = rmsprop(Loss::Poisson, x, y, opts, mean.max(1e-2).ln())?;
    Ok(LinearModel {
        family: LinearFamily::Poisson,
        weights,
        intercept,
        transform: TargetTransform::Identity,
        alpha: opts.alpha,
    })
}

/// L2-penalized logistic regression on `y ∈ {0, 1}`.
pub fn fit_logistic(x: &CsrMatrix, y: &[f64], opts: &FitOptions) -> Result<LinearModel> {
    if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::InvalidInput("logistic targets must be 0 or 1".into()));
    }
    let p = (y.iter().sum::<f64>() / y.len().max(1) as f64).clamp(1e-3, 1.0 - 1e-3);
    let (weights, intercept) = rmsprop(Loss::Logistic, x, y, opts, (p / (1.0 - p)).ln())?;
    Ok(LinearModel {
        family: LinearFamily::Logistic,
        weights,
        intercept,
        transform: TargetTransform::Identity,
        alpha: opts.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_rate_is_stationary() {
        let x = CsrMatrix::from_dense(&[vec![1.0, 0.5], vec![0.2, 2.0], vec![0.0, 1.0]]);
        let o = poisson_objective(&[0.0, 0.0], 0.0, &x, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(o.grad, vec![0.0, 0.0]);
        assert_eq!(o.grad_intercept, 0.0);
    }

    #[test]
    fn single_sample_zero_target() {
        let x = CsrMatrix::from_dense(&[vec![1.0]]);
        let o = poisson_objective(&[0.0], 0.0, &x, &[0.0]).unwrap();
        assert_eq!(o.value, 1.0);
        assert_eq!(o.grad, vec![1.0]);
        assert!(!o.clamped);
    }

    #[test]
    fn clamp_is_flagged() {
        let x = CsrMatrix::from_dense(&[vec![1.0]]);
        let o = poisson_objective(&[100.0], 0.0, &x, &[0.0]).unwrap();
        assert!(o.clamped);
        assert!(o.value.is_finite());
    }

    #[test]
    fn all_zero_targets_drive_rates_down() {
        let dense: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 7) as f64 / 7.0, 1.0]).collect();
        let x = CsrMatrix::from_dense(&dense);
        let m = fit_poisson(&x, &[0.0; 200], &FitOptions::default()).unwrap();
        assert!(m.predict(&x).unwrap().iter().all(|&r| r < 0.05));
    }

    #[test]
    fn five_consecutive_increases_diverge() {
        let mut m = Monitor::new(10.0);
        for v in [11.0, 12.0, 13.0, 14.0] {
            m.record(v, 0).unwrap();
        }
        m.record(9.0, 0).unwrap();
        for v in [9.5, 10.0, 10.5, 11.0] {
            m.record(v, 0).unwrap();
        }
        assert!(matches!(m.record(12.0, 0), Err(Error::Diverged { epochs: 5 })));
        assert!(Monitor::new(1.0).record(f64::NAN, 3).is_err());
    }

    #[test]
    fn overflowing_objective_diverges() {
        let x = CsrMatrix::from_dense(&[vec![1.0], vec![1.0]]);
        let r = fit_poisson(&x, &[f64::MAX, f64::MAX], &FitOptions::default());
        assert!(matches!(r, Err(Error::Diverged { epochs: 1 })), "{r:?}");
    }

    #[test]
    fn same_seed_same_model() {
        let dense: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 4) as f64, (i % 3) as f64]).collect();
        let x = CsrMatrix::from_dense(&dense);
        let y: Vec<f64> = (0..100).map(|i| (i % 4) as f64).collect();
        let opts = FitOptions::default();
        assert_eq!(fit_poisson(&x, &y, &opts).unwrap(), fit_poisson(&x, &y, &opts).unwrap());
        let mut other = opts;
        other.sgd.seed = 1;
        assert_ne!(fit_poisson(&x, &y, &opts).unwrap(), fit_poisson(&x, &y, &other).unwrap());
    }
}
