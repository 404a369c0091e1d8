//! Mean absolute error, Pearson correlation and disattenuated correlation.

use std::fmt::Write as _;

use crate::error::{Error, Result};

fn check_lengths(a: &[f64], b: &[f64], min: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    if a.len() < min {
        return Err(Error::InvalidInput(format!("need at least {min} values, got {}", a.len())));
    }
    Ok(())
}

pub fn mae(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_lengths(pred, gold, 1)?;
    let total: f64 = pred.iter().zip(gold).map(|(p, g)| (p - g).abs()).sum();
    Ok(total / pred.len() as f64)
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Sample correlation; `None` when either vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    check_lengths(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

fn check_reliability(name: &str, r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidInput(format!("{name} reliability must be in (0, 1], got {r}")));
    }
    Ok(())
}

/// Correlation corrected for measurement error: `r / sqrt(rel_pred * rel_gold)`.
/// Not clamped; magnitudes above 1 are possible.
pub fn disattenuate(r: f64, rel_pred: f64, rel_gold: f64) -> Result<f64> {
    check_reliability("prediction", rel_pred)?;
    check_reliability("gold", rel_gold)?;
    Ok(r / (rel_pred * rel_gold).sqrt())
}

pub fn disattenuated_r(pred: &[f64], gold: &[f64], rel_pred: f64, rel_gold: f64) -> Result<Option<f64>> {
    check_reliability("prediction", rel_pred)?;
    check_reliability("gold", rel_gold)?;
    pearson(pred, gold)?
        .map(|r| disattenuate(r, rel_pred, rel_gold))
        .transpose()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reliability {
    pub pred: f64,
    pub gold: f64,
}

impl Default for Reliability {
    fn default() -> Self {
        Reliability { pred: 1.0, gold: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetScore {
    pub target: String,
    pub mae: f64,
    pub pearson: Option<f64>,
    pub disattenuated_r: Option<f64>,
    pub reliability: Reliability,
    pub n: usize,
}

impl TargetScore {
    pub fn compute(target: &str, pred: &[f64], gold: &[f64], reliability: Reliability) -> Result<Self> {
        let r = pearson(pred, gold)?;
        Ok(TargetScore {
            target: target.to_string(),
            mae: mae(pred, gold)?,
            pearson: r,
            disattenuated_r: r
                .map(|r| disattenuate(r, reliability.pred, reliability.gold))
                .transpose()?,
            reliability,
            n: pred.len(),
        })
    }

    /// Disattenuation pushed the correlation beyond ±1.
    pub fn overshoots(&self) -> bool {
        self.disattenuated_r.is_some_and(|r| r.abs() > 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreReport {
    pub targets: Vec<TargetScore>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

fn opt4(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

impl ScoreReport {
    /// Scores every target column. `preds[t]` and `golds[t]` belong to `names[t]`.
    pub fn compute(
        names: &[String],
        preds: &[Vec<f64>],
        golds: &[Vec<f64>],
        reliabilities: &[Reliability],
    ) -> Result<Self> {
        if preds.len() != names.len() || golds.len() != names.len() || reliabilities.len() != names.len() {
            return Err(Error::Dimension("one prediction, gold and reliability column per target".into()));
        }
        let targets = names
            .iter()
            .enumerate()
            .map(|(t, name)| TargetScore::compute(name, &preds[t], &golds[t], reliabilities[t]))
            .collect::<Result<_>>()?;
        Ok(ScoreReport { targets })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("target,mae,pearson,disattenuated_r,rel_pred,rel_gold,n\n");
        for s in &self.targets {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.target,
                s.mae,
                opt(s.pearson),
                opt(s.disattenuated_r),
                s.reliability.pred,
                s.reliability.gold,
                s.n
            );
        }
        out
    }

    /// Fixed-width table; `*` marks a disattenuated value beyond ±1.
    pub fn to_table(&self) -> String {
        let width = self.targets.iter().map(|s| s.target.len()).max().unwrap_or(0).max(6);
        let mut out = format!(
            "{:<width$}  {:>9}  {:>9}  {:>10}  {:>8}  {:>8}  {:>6}\n",
            "target", "mae", "pearson", "dis_r", "rel_pred", "rel_gold", "n"
        );
        for s in &self.targets {
            let dis = opt4(s.disattenuated_r) + if s.overshoots() { "*" } else { "" };
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9}  {:>10}  {:>8}  {:>8}  {:>6}",
                s.target,
                s.mae,
                opt4(s.pearson),
                dis,
                s.reliability.pred,
                s.reliability.gold,
                s.n
            );
        }
        out
    }
}
