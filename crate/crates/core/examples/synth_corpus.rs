//! Generate a synthetic corpus and show its shape and planted signal.
//!
//! cargo run --example synth_corpus -- [seed]

use textcount::corpus::synth::{planted_coefficients, signal_tokens};
use textcount::corpus::{corpus_to_csv, synth_corpus, SynthSpec};

fn main() -> textcount::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(1, |a| a.parse().expect("seed"));
    let spec = SynthSpec::default();
    let corpus = synth_corpus(&spec, seed)?;

    let lengths: Vec<f64> = corpus.documents().iter().map(|d| d.text.split_whitespace().count() as f64).collect();
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    let sd = (lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    println!("{} documents, length {mean:.1} ± {sd:.1} words", corpus.len());

    for name in corpus.target_names() {
        let y = corpus.target_counts(name)?;
        let zeros = y.iter().filter(|&&v| v == 0).count();
        let avg = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        println!("{name:<11} mean {avg:6.2}, zeros {:.1}%", 100.0 * zeros as f64 / n);
    }
    let tokens = signal_tokens(&spec, seed);
    let coefs = planted_coefficients(&spec, seed);
    println!("first signal tokens and their {} coefficients:", corpus.target_names()[0]);
    for (t, c) in tokens.iter().zip(&coefs[0]).take(5) {
        println!("  {t:<10} {c:+.2}");
    }

    let csv = corpus_to_csv(&corpus);
    let head: String = String::from_utf8_lossy(&csv).lines().take(2).collect::<Vec<_>>().join("\n");
    println!("\n{}...", &head[..head.len().min(300)]);
    Ok(())
}
