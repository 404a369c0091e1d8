//! Fit a TF-IDF featurizer on a toy corpus and print the features of one
//! document.

use textcount::corpus::{Corpus, Document};
use textcount::featurizer::{FeaturizerConfig, FeaturizerModel, Lowercase};

fn main() -> textcount::Result<()> {
    let texts = ["The cat sat on the mat.", "A dog sat by the door.", "the cat and the dog"];
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document {
            id: format!("d{i}"),
            text: t.to_string(),
            gender: Some((i % 2) as u8),
            social_class: Some(i as u32),
        })
        .collect();
    let corpus = Corpus::unlabelled(docs)?;

    let config = FeaturizerConfig {
        c_ngmax: 3,
        w_ngmax: 2,
        min_df: 2,
        lowercase: Lowercase::Both,
        ctrl_weight: 0.5,
        a11_weight: 0.0,
    };
    let model = FeaturizerModel::fit(&corpus, &config)?;
    println!("{} vocabulary features, {} columns in total", model.vocab_len(), model.n_features());

    let x = model.transform(&corpus, None)?;
    let (cols, vals) = x.row(2);
    println!("document d2:");
    for (&c, &v) in cols.iter().zip(vals) {
        let c = c as usize;
        let name = if c < model.vocab_len() {
            let k = model.key(c);
            format!("{:?}{} {:?}", k.kind, k.order, k.gram)
        } else {
            format!("control column {}", c - model.vocab_len())
        };
        println!("  {name:<28} {v:.4}");
    }
    Ok(())
}
