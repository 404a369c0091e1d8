//! Linear model families fitted on sparse features.
//!
//! * ridge: L2-penalized least squares on `ln(y + c)` targets, conjugate gradient
//! * poisson: log-link GLM trained with mini-batch RMSProp
//! * svr: epsilon-insensitive linear SVR, dual coordinate descent
//! * zero-inflated: logistic gate on `y > 0` plus a count model fitted on the
//!   non-zero rows

mod glm;
mod ridge;
mod svr;
mod zero_inflated;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use glm::{fit_logistic, fit_poisson, logistic_objective, poisson_objective, Objective, ETA_CLAMP};
pub use ridge::{fit_ridge, fit_ridge_from, fit_ridge_multi, RidgeParams};
pub use svr::{fit_svr, svr_primal_objective, SvrParams};
pub use zero_inflated::{fit_zero_inflated, ZeroInflatedModel};

/// Invertible map applied to count targets before a least-squares or SVR fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetTransform {
    /// `z = ln(y + shift)`; inverse `max(0, exp(z) - shift)`.
    LogShift(f64),
    Identity,
}

impl Default for TargetTransform {
    fn default() -> Self {
        TargetTransform::LogShift(1.0)
    }
}

impl TargetTransform {
    pub fn forward(&self, y: &[f64]) -> Result<Vec<f64>> {
        if let Some(v) = y.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "target transform needs non-negative values, got {v}"
            )));
        }
        Ok(match *self {
            TargetTransform::LogShift(c) => y.iter().map(|v| (v + c).ln()).collect(),
            TargetTransform::Identity => y.to_vec(),
        })
    }

    pub fn forward_counts(&self, y: &[u32]) -> Vec<f64> {
        let y: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        self.forward(&y).expect("counts are non-negative")
    }

    pub fn inverse_one(&self, z: f64) -> f64 {
        match *self {
            TargetTransform::LogShift(c) => (z.exp() - c).max(0.0),
            TargetTransform::Identity => z.max(0.0),
        }
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|&v| self.inverse_one(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearFamily {
    Ridge,
    Poisson,
    Svr,
    Logistic,
}

/// Coefficients, intercept and output mapping of one fitted linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub family: LinearFamily,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub transform: TargetTransform,
    pub alpha: f64,
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    /// Raw linear predictor `Xw + b`.
    pub fn decision(&self, x: &CsrMatrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, model has {} weights",
                x.n_cols(),
                self.weights.len()
            )));
        }
        let mut eta = x.mul_vec(&self.weights);
        eta.iter_mut().for_each(|e| *e += self.intercept);
        Ok(eta)
    }

    /// Predictions on the count scale (probabilities for the logistic gate).
    pub fn predict(&self, x: &CsrMatrix) -> Result<Vec<f64>> {
        let eta = self.decision(x)?;
        Ok(match self.family {
            LinearFamily::Ridge | LinearFamily::Svr => self.transform.inverse(&eta),
            LinearFamily::Poisson => eta.iter().map(|e| e.min(ETA_CLAMP).exp()).collect(),
            LinearFamily::Logistic => eta.iter().map(|e| sigmoid(e.min(ETA_CLAMP))).collect(),
        })
    }
}

/// Counter model used inside the zero-inflated composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterFamily {
    Ridge,
    Poisson,
}

/// Model family selected for a whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Ridge,
    Poisson,
    Svr,
    ZeroInflated(CounterFamily),
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Ridge => "ridge",
            ModelFamily::Poisson => "poisson",
            ModelFamily::Svr => "svr",
            ModelFamily::ZeroInflated(CounterFamily::Ridge) => "zero_inflated_ridge",
            ModelFamily::ZeroInflated(CounterFamily::Poisson) => "zero_inflated",
        })
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ridge" => Ok(ModelFamily::Ridge),
            "poisson" => Ok(ModelFamily::Poisson),
            "svr" => Ok(ModelFamily::Svr),
            "zero_inflated" | "zero_inflated_poisson" => {
                Ok(ModelFamily::ZeroInflated(CounterFamily::Poisson))
            }
            "zero_inflated_ridge" => Ok(ModelFamily::ZeroInflated(CounterFamily::Ridge)),
            other => Err(Error::Config(format!(
                "unknown model family `{other}` (ridge, poisson, svr, zero_inflated, zero_inflated_ridge)"
            ))),
        }
    }
}

/// Mini-batch RMSProp settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdOptions {
    pub learning_rate: f64,
    /// Decay of the squared-gradient moving average.
    pub decay: f64,
    /// Added to the root of the moving average.
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Step size in epoch `e` is `learning_rate / sqrt(1 + e)` when set.
    pub anneal: bool,
    pub seed: u64,
}

impl Default for SgdOptions {
    fn default() -> Self {
        SgdOptions {
            learning_rate: 0.01,
            decay: 0.9,
            epsilon: 1e-8,
            batch_size: 64,
            epochs: 50,
            anneal: true,
            seed: 0,
        }
    }
}

/// Per-target fit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// L2 strength; SVR uses `C = 1 / alpha`.
    pub alpha: f64,
    /// SVR tube half-width.
    pub epsilon: f64,
    pub sgd: SgdOptions,
    pub tol: f64,
    pub max_iter: usize,
    /// Zero-inflated gate threshold.
    pub threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            alpha: 1.0,
            epsilon: 0.1,
            sgd: SgdOptions::default(),
            tol: 1e-6,
            max_iter: 10_000,
            threshold: 0.5,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config("svr epsilon must be non-negative".into()));
        }
        if self.sgd.epochs == 0 || self.sgd.batch_size == 0 {
            return Err(Error::Config("sgd epochs and batch_size must be at least 1".into()));
        }
        if !(self.sgd.learning_rate > 0.0) || !(0.0..1.0).contains(&self.sgd.decay) {
            return Err(Error::Config("sgd learning_rate must be > 0 and decay in [0, 1)".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config("threshold must be in (0, 1]".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tol must be positive and max_iter at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn ridge_params(&self) -> RidgeParams {
        RidgeParams {
            alpha: self.alpha,
            tol: self.tol,
            max_iter: self.max_iter,
            fit_intercept: true,
        }
    }
}

/// A fitted per-target model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetModel {
    Linear(LinearModel),
    ZeroInflated(ZeroInflatedModel),
}

impl TargetModel {
    pub fn predict(&self, x: &CsrMatrix) -> Result<Vec<f64>> {
        match self {
            TargetModel::Linear(m) => m.predict(x),
            TargetModel::ZeroInflated(m) => m.predict(x),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TargetModel::Linear(m) => m.weights.len(),
            TargetModel::ZeroInflated(m) => m.gate.weights.len(),
        }
    }
}

fn counts_to_f64(y: &[u32]) -> Vec<f64> {
    y.iter().map(|&v| f64::from(v)).collect()
}

/// Fits one target with the given family.
pub fn fit_target(x: &CsrMatrix, y: &[u32], family: ModelFamily, opts: &FitOptions) -> Result<TargetModel> {
    opts.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.n_rows(), y.len())));
    }
    let transform = TargetTransform::default();
    Ok(match family {
        ModelFamily::Ridge => {
            let z = transform.forward_counts(y);
            TargetModel::Linear(fit_ridge(x, &z, &opts.ridge_params())?)
        }
        ModelFamily::Poisson => TargetModel::Linear(fit_poisson(x, &counts_to_f64(y), opts)?),
        ModelFamily::Svr => {
            let z = transform.forward_counts(y);
            let params = SvrParams {
                c: 1.0 / opts.alpha,
                epsilon: opts.epsilon,
                tol: opts.tol,
                max_iter: opts.max_iter,
            };
            let mut m = fit_svr(x, &z, &params)?;
            m.alpha = opts.alpha;
            TargetModel::Linear(m)
        }
        ModelFamily::ZeroInflated(counter) => {
            TargetModel::ZeroInflated(fit_zero_inflated(x, y, opts, counter)?)
        }
    })
}

/// Fits every target column on one shared design matrix, each with its own
/// options. Output order follows `targets`.
pub fn fit_multi_target(
    x: &CsrMatrix,
    targets: &[Vec<u32>],
    opts: &[FitOptions],
    family: ModelFamily,
) -> Result<Vec<TargetModel>> {
    if targets.len() != opts.len() {
        return Err(Error::Dimension(format!(
            "{} target columns but {} option sets",
            targets.len(),
            opts.len()
        )));
    }
    if family == ModelFamily::Ridge {
        for (y, o) in targets.iter().zip(opts) {
            o.validate()?;
            if y.len() != x.n_rows() {
                return Err(Error::Dimension(format!("{} rows but {} targets", x.n_rows(), y.len())));
            }
        }
        let transform = TargetTransform::default();
        let zs: Vec<Vec<f64>> = targets.iter().map(|y| transform.forward_counts(y)).collect();
        let params: Vec<RidgeParams> = opts.iter().map(FitOptions::ridge_params).collect();
        return fit_ridge_multi(x, &zs, &params)
            .map(|ms| ms.into_iter().map(TargetModel::Linear).collect());
    }
    targets
        .par_iter()
        .zip(opts.par_iter())
        .map(|(y, o)| fit_target(x, y, family, o))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_shift_examples() {
        let t = TargetTransform::LogShift(1.0);
        assert_eq!(t.forward(&[0.0]).unwrap(), vec![0.0]);
        let back = t.inverse(&t.forward(&[0.0, 1.0, 2.0, 7.0]).unwrap());
        for (a, b) in back.iter().zip([0.0, 1.0, 2.0, 7.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(t.inverse(&[-5.0]), vec![0.0]);
        assert!(t.forward(&[-1.0]).is_err());
    }

    #[test]
    fn zero_model_predictions() {
        let x = CsrMatrix::identity(3);
        let mut m = LinearModel {
            family: LinearFamily::Poisson,
            weights: vec![0.0; 3],
            intercept: 0.0,
            transform: TargetTransform::Identity,
            alpha: 1.0,
        };
        assert_eq!(m.predict(&x).unwrap(), vec![1.0; 3]);
        m.family = LinearFamily::Ridge;
        m.transform = TargetTransform::LogShift(1.0);
        assert_eq!(m.predict(&x).unwrap(), vec![0.0; 3]);
        assert!(m.predict(&CsrMatrix::identity(2)).is_err());
    }

    #[test]
    fn family_names_roundtrip() {
        for f in [
            ModelFamily::Ridge,
            ModelFamily::Poisson,
            ModelFamily::Svr,
            ModelFamily::ZeroInflated(CounterFamily::Poisson),
            ModelFamily::ZeroInflated(CounterFamily::Ridge),
        ] {
            assert_eq!(f.to_string().parse::<ModelFamily>().unwrap(), f);
        }
    }

    #[test]
    fn multi_target_identical_columns_identical_models() {
        let x = CsrMatrix::from_dense(&[
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.3, 0.2, 1.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let y = vec![3, 0, 2, 5];
        let opts = vec![FitOptions { alpha: 2.0, ..Default::default() }; 3];
        for family in [ModelFamily::Ridge, ModelFamily::Poisson, ModelFamily::Svr] {
            let ms = fit_multi_target(&x, &vec![y.clone(); 3], &opts, family).unwrap();
            assert_eq!(ms[0], ms[1]);
            assert_eq!(ms[1], ms[2]);
        }
    }

    #[test]
    fn huge_alpha_shrinks_weights() {
        let x = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let ys = vec![vec![1, 5, 2], vec![4, 0, 9]];
        let opts = vec![
            FitOptions { alpha: 1.0, ..Default::default() },
            FitOptions { alpha: 1e9, ..Default::default() },
        ];
        let ms = fit_multi_target(&x, &ys, &opts, ModelFamily::Ridge).unwrap();
        let TargetModel::Linear(m) = &ms[1] else { panic!() };
        let norm = m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm < 1e-3);
    }
}
