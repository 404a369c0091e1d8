//! A fitted, deployable pipeline: featurizer plus one model per target,
//! optionally preceded by a stage that predicts age-11 scores.

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::featurizer::{FeaturizerModel, A11_WIDTH};
use crate::regressors::{LinearModel, TargetModel};
use crate::sparse::CsrMatrix;

/// Ridge models predicting the age-11 scores, whose log-scale outputs feed
/// the age-11 block of the main featurizer.
#[derive(Debug, Clone, PartialEq)]
pub struct A11Stage {
    pub targets: Vec<String>,
    pub featurizer: FeaturizerModel,
    pub models: Vec<LinearModel>,
}

/// Transposes per-target decision columns into per-row arrays.
pub(crate) fn stack_rows(columns: &[Vec<f64>]) -> Vec<[f64; A11_WIDTH]> {
    let n = columns.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| std::array::from_fn(|k| columns[k][i]))
        .collect()
}

impl A11Stage {
    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != A11_WIDTH || self.models.len() != A11_WIDTH {
            return Err(Error::Dimension(format!(
                "age-11 stage needs exactly {A11_WIDTH} targets and models"
            )));
        }
        if self.featurizer.aux_layout().a11 {
            return Err(Error::Dimension("age-11 stage featurizer cannot itself use age-11 scores".into()));
        }
        check_widths(&self.featurizer, self.models.iter().map(|m| m.weights.len()))
    }

    /// Linear predictors (log scale) from an already featurized matrix.
    pub(crate) fn scores_from(models: &[LinearModel], x: &CsrMatrix) -> Result<Vec<[f64; A11_WIDTH]>> {
        let cols = models
            .iter()
            .map(|m| m.decision(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(stack_rows(&cols))
    }

    pub fn scores(&self, corpus: &Corpus) -> Result<Vec<[f64; A11_WIDTH]>> {
        let x = self.featurizer.transform(corpus, None)?;
        Self::scores_from(&self.models, &x)
    }
}

fn check_widths(featurizer: &FeaturizerModel, widths: impl Iterator<Item = usize>) -> Result<()> {
    let n = featurizer.n_features();
    for w in widths {
        if w != n {
            return Err(Error::Dimension(format!(
                "featurizer has {n} columns but a model has {w} weights"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub targets: Vec<String>,
    pub featurizer: FeaturizerModel,
    pub models: Vec<TargetModel>,
    pub a11: Option<A11Stage>,
}

impl Pipeline {
    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != self.models.len() {
            return Err(Error::Dimension(format!(
                "{} targets but {} models",
                self.targets.len(),
                self.models.len()
            )));
        }
        check_widths(&self.featurizer, self.models.iter().map(TargetModel::n_features))?;
        match (&self.a11, self.featurizer.aux_layout().a11) {
            (Some(stage), true) => stage.validate(),
            (None, false) => Ok(()),
            (Some(_), false) => Err(Error::Dimension("age-11 stage present but featurizer has no age-11 block".into())),
            (None, true) => Err(Error::Dimension("featurizer expects age-11 scores but no stage is present".into())),
        }
    }

    /// Predictions per target (outer index follows `targets`), in corpus row order.
    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<Vec<f64>>> {
        let a11 = self.a11.as_ref().map(|s| s.scores(corpus)).transpose()?;
        let x = self.featurizer.transform(corpus, a11.as_deref())?;
        self.models.iter().map(|m| m.predict(&x)).collect()
    }
}
