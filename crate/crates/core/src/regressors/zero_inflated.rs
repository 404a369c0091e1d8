use super::{
    fit_logistic, fit_poisson, fit_ridge, CounterFamily, FitOptions, LinearModel, TargetTransform,
};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Two-stage model: a logistic gate decides zero versus non-zero, a count
/// model trained on the non-zero rows supplies the value.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroInflatedModel {
    pub gate: LinearModel,
    pub counter: LinearModel,
    pub threshold: f64,
}

impl ZeroInflatedModel {
    pub fn predict(&self, x: &CsrMatrix) -> Result<Vec<f64>> {
        let p = self.gate.predict(x)?;
        let counts = self.counter.predict(x)?;
        Ok(p.iter()
            .zip(counts)
            .map(|(&p, c)| if p < self.threshold { 0.0 } else { c })
            .collect())
    }
}

pub fn fit_zero_inflated(
    x: &CsrMatrix,
    y: &[u32],
    opts: &FitOptions,
    counter: CounterFamily,
) -> Result<ZeroInflatedModel> {
    opts.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.n_rows(), y.len())));
    }
    let nonzero: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0).collect();
    if nonzero.is_empty() || nonzero.len() == y.len() {
        let which = if nonzero.is_empty() { "zero" } else { "non-zero" };
        return Err(Error::Degenerate(format!(
            "zero-inflated model needs both zero and non-zero targets, all {} are {which}; \
             use a single-stage family (ridge, poisson or svr)",
            y.len()
        )));
    }
    let indicator: Vec<f64> = y.iter().map(|&v| f64::from(u8::from(v > 0))).collect();
    let gate = fit_logistic(x, &indicator, opts)?;

    let xs = x.select_rows(&nonzero);
    let ys: Vec<u32> = nonzero.iter().map(|&i| y[i]).collect();
    let counter = match counter {
        CounterFamily::Ridge => {
            let z = TargetTransform::default().forward_counts(&ys);
            fit_ridge(&xs, &z, &opts.ridge_params())?
        }
        CounterFamily::Poisson => {
            let yf: Vec<f64> = ys.iter().map(|&v| f64::from(v)).collect();
            fit_poisson(&xs, &yf, opts)?
        }
    };
    Ok(ZeroInflatedModel {
        gate,
        counter,
        threshold: opts.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (CsrMatrix, Vec<u32>) {
        let dense: Vec<Vec<f64>> = (0..40)
            .map(|i| if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
            .collect();
        let y = (0..40).map(|i| if i % 2 == 0 { 0 } else { 2 + (i % 3) as u32 }).collect();
        (CsrMatrix::from_dense(&dense), y)
    }

    #[test]
    fn threshold_one_gives_all_zero() {
        let (x, y) = fixture();
        let opts = FitOptions { threshold: 1.0, ..Default::default() };
        let m = fit_zero_inflated(&x, &y, &opts, CounterFamily::Poisson).unwrap();
        assert!(m.predict(&x).unwrap().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn degenerate_targets_rejected() {
        let (x, _) = fixture();
        for y in [vec![0; 40], vec![3; 40]] {
            let err = fit_zero_inflated(&x, &y, &FitOptions::default(), CounterFamily::Ridge).unwrap_err();
            assert!(err.to_string().contains("single-stage"), "{err}");
        }
    }
}
