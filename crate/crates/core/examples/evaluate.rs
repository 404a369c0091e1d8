//! MAE, Pearson and disattenuated correlation for a few prediction vectors.

use textcount::evaluation::{Reliability, ScoreReport};

fn main() -> textcount::Result<()> {
    let gold = vec![0.0, 2.0, 5.0, 1.0, 0.0, 8.0, 3.0, 4.0];
    let names = vec!["close".to_string(), "noisy".to_string(), "constant".to_string()];
    let preds = vec![
        vec![0.5, 2.5, 4.0, 1.0, 0.2, 7.0, 3.5, 3.0],
        vec![2.0, 1.0, 3.0, 3.0, 1.0, 4.0, 1.0, 5.0],
        vec![3.0; 8],
    ];
    let golds = vec![gold.clone(), gold.clone(), gold];
    let rel = Reliability { pred: 0.8, gold: 0.7 };
    let report = ScoreReport::compute(&names, &preds, &golds, &[rel; 3])?;
    print!("{}", report.to_table());
    println!();
    print!("{}", report.to_csv());
    Ok(())
}
