//! Two-stage zero-inflated model on a synthetic corpus with many structural
//! zeros, against a single Poisson model.

use textcount::corpus::{synth_corpus, SynthSpec};
use textcount::evaluation::mae;
use textcount::featurizer::{FeaturizerConfig, FeaturizerModel};
use textcount::regressors::{fit_target, CounterFamily, FitOptions, ModelFamily};

fn main() -> textcount::Result<()> {
    let spec = SynthSpec { zero_inflation: 0.5, world_seed: Some(3), ..SynthSpec::default() }.with_targets(&["score"]);
    let train = synth_corpus(&spec, 1)?;
    let test = synth_corpus(&SynthSpec { n_docs: 500, ..spec.clone() }, 2)?;

    let feats = FeaturizerModel::fit(&train, &FeaturizerConfig { c_ngmax: 0, w_ngmax: 1, ..Default::default() })?;
    let (xtr, xte) = (feats.transform(&train, None)?, feats.transform(&test, None)?);
    let ytr = train.target_counts("score")?;
    let gold: Vec<f64> = test.target_counts("score")?.iter().map(|&v| f64::from(v)).collect();
    let zeros = gold.iter().filter(|&&v| v == 0.0).count();
    println!("{zeros} of {} test targets are zero", gold.len());

    for family in [ModelFamily::Poisson, ModelFamily::ZeroInflated(CounterFamily::Poisson)] {
        for threshold in [0.3, 0.5] {
            let opts = FitOptions { alpha: 1e-3, threshold, ..Default::default() };
            let m = fit_target(&xtr, &ytr, family, &opts)?;
            let pred = m.predict(&xte)?;
            println!("{family:<14} threshold {threshold}: test MAE {:.3}", mae(&pred, &gold)?);
            if family == ModelFamily::Poisson {
                break;
            }
        }
    }
    Ok(())
}
