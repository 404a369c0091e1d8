//! Random hyperparameter search on a synthetic corpus, then a held-out check
//! of the recommended ridge configuration.
//!
//! cargo run --release --example random_search -- [n_trials] [seed]

use std::time::Instant;

use textcount::corpus::{synth_corpus, SynthSpec};
use textcount::evaluation::pearson;
use textcount::regressors::ModelFamily;
use textcount::selection::{random_search, refit_final, SearchSettings, SearchSpace};

fn main() -> textcount::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let n_trials: usize = args.next().map_or(30, |a| a.parse().expect("n_trials"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));

    let spec = SynthSpec { world_seed: Some(seed), ..SynthSpec::default() };
    let train = synth_corpus(&spec, seed)?;
    let test = synth_corpus(&SynthSpec { n_docs: 500, ..spec.clone() }, seed + 1_000_000)?;

    let space = SearchSpace { n_trials, ..SearchSpace::default() };
    let mut settings = SearchSettings::new(spec.target_names(), ModelFamily::Ridge);
    settings.seed = seed;
    settings.workers = std::thread::available_parallelism().map_or(1, |n| n.get());

    let start = Instant::now();
    let result = random_search(&train, &space, &settings)?;
    println!("search: {} trials in {:.1}s", n_trials, start.elapsed().as_secs_f64());
    for t in result.trials.iter().take(5) {
        println!("  trial {:>3}  score {:?}  {:?}", t.index, t.score(), t.config.featurizer);
    }

    let pipeline = refit_final(&train, &result.recommended, &settings, space.k_folds)?;
    let preds = pipeline.predict(&test)?;
    for (name, p) in spec.target_names().iter().zip(&preds) {
        let gold: Vec<f64> = test.target_counts(name)?.iter().map(|&v| f64::from(v)).collect();
        println!("held-out {name}: pearson {:?}", pearson(p, &gold)?);
    }
    Ok(())
}
