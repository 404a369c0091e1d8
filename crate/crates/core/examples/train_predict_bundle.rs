//! Train a pipeline, save it as a model bundle, reload it and predict.

use textcount::bundle::{sha256_hex, ModelBundle, Provenance};
use textcount::corpus::{corpus_to_csv, synth_corpus, SynthSpec};
use textcount::evaluation::pearson;
use textcount::featurizer::FeaturizerConfig;
use textcount::regressors::ModelFamily;
use textcount::selection::{refit_final, HyperConfig, SearchSettings};

fn main() -> textcount::Result<()> {
    let spec = SynthSpec { world_seed: Some(5), ..SynthSpec::default() };
    let train = synth_corpus(&spec, 1)?;
    let test = synth_corpus(&SynthSpec { n_docs: 300, ..spec.clone() }, 2)?;

    let targets = spec.target_names();
    let config = HyperConfig {
        featurizer: FeaturizerConfig { c_ngmax: 3, w_ngmax: 1, min_df: 3, ..Default::default() },
        alpha: vec![2.0; targets.len()],
        targets: targets.clone(),
        family: ModelFamily::Ridge,
        svr_epsilon: 0.1,
    };
    let settings = SearchSettings::new(targets.clone(), ModelFamily::Ridge);
    let pipeline = refit_final(&train, &config, &settings, 5)?;

    let bundle = ModelBundle {
        pipeline,
        provenance: Provenance {
            config: "featurizer.c_ngmax = 3\n".into(),
            seed: 0,
            rows: train.len() as u64,
            corpus_sha256: sha256_hex(&corpus_to_csv(&train)),
            tool_version: env!("CARGO_PKG_VERSION").into(),
        },
    };
    let dir = tempfile::tempdir().map_err(|e| textcount::Error::io(std::env::temp_dir(), e))?;
    let path = dir.path().join("model.bin");
    bundle.save(&path)?;
    let loaded = ModelBundle::load(&path)?;
    println!(
        "bundle: {} bytes, identical after reload: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        loaded == bundle
    );

    let preds = loaded.pipeline.predict(&test)?;
    for (name, p) in targets.iter().zip(&preds) {
        let gold: Vec<f64> = test.target_counts(name)?.iter().map(|&v| f64::from(v)).collect();
        println!("{name:<11} held-out pearson {:.3}", pearson(p, &gold)?.unwrap_or(f64::NAN));
    }
    Ok(())
}
