//! K-fold cross-validation and random hyperparameter search.
//!
//! Every fold refits the vocabulary on its training rows only. Trials share
//! one fold assignment, draw their configurations from a single sampler
//! stream in trial order, and run in parallel; results never depend on the
//! worker count or completion order.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::evaluation::{disattenuate, mae, pearson, Reliability};
use crate::featurizer::{FeaturizerConfig, FeaturizerModel, GramTable, Lowercase, A11_WIDTH, MAX_C_NGRAM, MAX_W_NGRAM};
use crate::pipeline::{A11Stage, Pipeline};
use crate::regressors::{fit_multi_target, fit_ridge_multi, FitOptions, LinearModel, ModelFamily, RidgeParams, TargetModel, TargetTransform};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled partition of `0..n` into `k` test sets whose sizes differ by at
/// most one. Index lists are sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("k_folds must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidInput(format!("cannot split {n} rows into {k} folds")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, "folds", &[n as u64, k as u64]));
    let (base, extra) = (n / k, n % k);
    let mut assignment = vec![0usize; n];
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &i in &perm[start..start + size] {
            assignment[i] = f;
        }
        start += size;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

/// One point of the search space: featurizer settings plus a per-target alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperConfig {
    pub featurizer: FeaturizerConfig,
    pub targets: Vec<String>,
    /// Parallel to `targets`.
    pub alpha: Vec<f64>,
    pub family: ModelFamily,
    pub svr_epsilon: f64,
}

impl HyperConfig {
    pub fn validate(&self) -> Result<()> {
        self.featurizer.validate()?;
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target is required".into()));
        }
        if self.alpha.len() != self.targets.len() {
            return Err(Error::Config(format!(
                "{} targets but {} alpha values",
                self.targets.len(),
                self.alpha.len()
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Config(format!("alpha must be positive, got {a}")));
        }
        if !(self.svr_epsilon >= 0.0) {
            return Err(Error::Config("svr epsilon must be non-negative".into()));
        }
        Ok(())
    }

    /// Per-target fit options: `base` with this config's alphas and tube width.
    pub fn fit_options(&self, base: &FitOptions) -> Vec<FitOptions> {
        self.alpha
            .iter()
            .map(|&alpha| FitOptions {
                alpha,
                epsilon: self.svr_epsilon,
                ..*base
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub c_ngmax: (usize, usize),
    pub w_ngmax: (usize, usize),
    pub min_df: (usize, usize),
    /// Sampled log-uniformly.
    pub alpha: (f64, f64),
    pub lowercase: Vec<Lowercase>,
    pub ctrl_weight: (f64, f64),
    /// Only sampled when an age-11 stage is configured.
    pub a11_weight: (f64, f64),
    pub n_trials: usize,
    pub k_folds: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            c_ngmax: (1, 8),
            w_ngmax: (1, 5),
            min_df: (1, 5),
            alpha: (0.5, 20.0),
            lowercase: Lowercase::ALL.to_vec(),
            ctrl_weight: (0.0, 1.0),
            a11_weight: (0.0, 1.0),
            n_trials: 30,
            k_folds: 5,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("search space: {m}")));
        let int_ranges = [
            ("c_ngmax", self.c_ngmax, 0, MAX_C_NGRAM),
            ("w_ngmax", self.w_ngmax, 0, MAX_W_NGRAM),
            ("min_df", self.min_df, 1, usize::MAX),
        ];
        for (name, (lo, hi), min, max) in int_ranges {
            if lo > hi || lo < min || hi > max {
                return bad(format!("{name} range {lo}..={hi} is empty or outside {min}..={max}"));
            }
        }
        if self.c_ngmax.1 == 0 && self.w_ngmax.1 == 0 {
            return bad("c_ngmax and w_ngmax cannot both be fixed at 0".into());
        }
        let (lo, hi) = self.alpha;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("alpha range {lo}..={hi} must be positive and non-empty"));
        }
        for (name, (lo, hi)) in [("ctrl_weight", self.ctrl_weight), ("a11_weight", self.a11_weight)] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return bad(format!("{name} range {lo}..={hi} must lie in [0, 1]"));
            }
        }
        if self.lowercase.is_empty() {
            return bad("lowercase choices are empty".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.k_folds < 2 {
            return bad("k_folds must be at least 2".into());
        }
        Ok(())
    }

    /// Whether every value of `config` lies inside this space.
    pub fn contains(&self, config: &HyperConfig) -> bool {
        let f = &config.featurizer;
        let within = |v: usize, (lo, hi): (usize, usize)| lo <= v && v <= hi;
        let within_f = |v: f64, (lo, hi): (f64, f64)| lo <= v && v <= hi;
        within(f.c_ngmax, self.c_ngmax)
            && within(f.w_ngmax, self.w_ngmax)
            && within(f.min_df, self.min_df)
            && self.lowercase.contains(&f.lowercase)
            && within_f(f.ctrl_weight, self.ctrl_weight)
            && (f.a11_weight == 0.0 || within_f(f.a11_weight, self.a11_weight))
            && config.alpha.iter().all(|&a| within_f(a, self.alpha))
    }
}

fn uniform_f64(rng: &mut dyn RngCore, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draws one configuration. Integers and categories are uniform, alphas
/// log-uniform and independent per target, weights uniform.
pub fn sample_config(
    space: &SearchSpace,
    targets: &[String],
    family: ModelFamily,
    svr_epsilon: f64,
    with_a11: bool,
    rng: &mut dyn RngCore,
) -> HyperConfig {
    let (c_ngmax, w_ngmax) = loop {
        let c = rng.random_range(space.c_ngmax.0..=space.c_ngmax.1);
        let w = rng.random_range(space.w_ngmax.0..=space.w_ngmax.1);
        if c + w > 0 {
            break (c, w);
        }
    };
    let min_df = rng.random_range(space.min_df.0..=space.min_df.1);
    let lowercase = space.lowercase[rng.random_range(0..space.lowercase.len())];
    let ctrl_weight = uniform_f64(rng, space.ctrl_weight);
    let a11_weight = if with_a11 { uniform_f64(rng, space.a11_weight) } else { 0.0 };
    let (lo, hi) = (space.alpha.0.ln(), space.alpha.1.ln());
    let alpha = targets
        .iter()
        .map(|_| {
            if lo == hi {
                space.alpha.0
            } else {
                rng.random_range(lo..=hi).exp().clamp(space.alpha.0, space.alpha.1)
            }
        })
        .collect();
    HyperConfig {
        featurizer: FeaturizerConfig {
            c_ngmax,
            w_ngmax,
            min_df,
            lowercase,
            ctrl_weight,
            a11_weight,
        },
        targets: targets.to_vec(),
        alpha,
        family,
        svr_epsilon,
    }
}

/// Settings of the age-11 stage: Task-A score columns and the ridge strength
/// of the models that predict them.
#[derive(Debug, Clone, PartialEq)]
pub struct A11Settings {
    pub targets: Vec<String>,
    pub alpha: f64,
}

/// Everything about a search that is not sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub targets: Vec<String>,
    pub family: ModelFamily,
    pub svr_epsilon: f64,
    /// Base options; the alpha and tube width come from each configuration.
    pub fit: FitOptions,
    /// Parallel to `targets`.
    pub reliabilities: Vec<Reliability>,
    pub a11: Option<A11Settings>,
    pub seed: u64,
    pub workers: usize,
}

impl SearchSettings {
    pub fn new(targets: Vec<String>, family: ModelFamily) -> Self {
        SearchSettings {
            reliabilities: vec![Reliability::default(); targets.len()],
            targets,
            family,
            svr_epsilon: 0.1,
            fit: FitOptions::default(),
            a11: None,
            seed: 0,
            workers: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reliabilities.len() != self.targets.len() {
            return Err(Error::Config("one reliability pair per target required".into()));
        }
        if let Some(a) = &self.a11 {
            if a.targets.len() != A11_WIDTH {
                return Err(Error::Config(format!("age-11 stage needs exactly {A11_WIDTH} targets")));
            }
            if !(a.alpha > 0.0) {
                return Err(Error::Config("age-11 alpha must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldScore {
    pub mae: f64,
    pub pearson: Option<f64>,
    pub disattenuated_r: Option<f64>,
}

/// Cross-validated scores of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub index: usize,
    pub config: HyperConfig,
    /// `[target][fold]`; empty when the trial failed.
    pub folds: Vec<Vec<FoldScore>>,
    pub mean_mae: Vec<f64>,
    /// Mean over folds where the correlation is defined.
    pub mean_pearson: Vec<Option<f64>>,
    pub mean_disattenuated_r: Vec<Option<f64>>,
    /// Folds excluded from the correlation means, summed over targets.
    pub undefined_folds: usize,
    /// Fit error that aborted this trial.
    pub error: Option<String>,
    pub duration_ms: u64,
}

impl TrialResult {
    /// Mean disattenuated R across targets; `None` when any target is undefined.
    pub fn score(&self) -> Option<f64> {
        if self.error.is_some() || self.mean_disattenuated_r.is_empty() {
            return None;
        }
        let vals: Option<Vec<f64>> = self.mean_disattenuated_r.iter().copied().collect();
        vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// A fold's fitted featurizer, exposed for inspection during a search.
pub struct FoldView<'a> {
    pub trial: usize,
    pub fold: usize,
    pub train: &'a [usize],
    pub test: &'a [usize],
    pub featurizer: &'a FeaturizerModel,
}

pub type FoldInspector<'a> = dyn Fn(&FoldView<'_>) + Send + Sync + 'a;

fn gold_columns(corpus: &Corpus, names: &[String]) -> Result<Vec<Vec<u32>>> {
    names.iter().map(|n| corpus.target_counts(n)).collect()
}

fn pick<T: Copy>(v: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| v[i]).collect()
}

fn a11_ridge(
    table: &GramTable,
    corpus: &Corpus,
    rows: &[usize],
    config: &FeaturizerConfig,
    a11_gold: &[Vec<u32>],
    params: &RidgeParams,
) -> Result<(crate::featurizer::FoldFeatures, Vec<LinearModel>)> {
    let feats = table.fit_rows(corpus, rows, config)?;
    let x = feats.transform_rows(table, corpus, rows, None)?;
    let t = TargetTransform::default();
    let zs: Vec<Vec<f64>> = a11_gold.iter().map(|y| t.forward_counts(&pick(y, rows))).collect();
    let models = fit_ridge_multi(&x, &zs, &vec![*params; zs.len()])?;
    Ok((feats, models))
}

/// Out-of-fold age-11 scores for `rows` (inner k-fold over `rows`), and the
/// scores of `apply_rows` from a stage fitted on all of `rows`.
#[allow(clippy::too_many_arguments)]
fn a11_scores(
    table: &GramTable,
    corpus: &Corpus,
    rows: &[usize],
    apply_rows: &[usize],
    config: &FeaturizerConfig,
    a11_gold: &[Vec<u32>],
    params: &RidgeParams,
    k: usize,
    seed: u64,
) -> Result<(Vec<[f64; A11_WIDTH]>, Vec<[f64; A11_WIDTH]>, Option<A11Stage>)> {
    let stage_cfg = FeaturizerConfig { a11_weight: 0.0, ..*config };
    let mut oof = vec![[0.0; A11_WIDTH]; rows.len()];
    for inner in kfold_split(rows.len(), k, seed)? {
        let tr: Vec<usize> = inner.train.iter().map(|&i| rows[i]).collect();
        let te: Vec<usize> = inner.test.iter().map(|&i| rows[i]).collect();
        let (feats, models) = a11_ridge(table, corpus, &tr, &stage_cfg, a11_gold, params)?;
        let x = feats.transform_rows(table, corpus, &te, None)?;
        for (&local, s) in inner.test.iter().zip(A11Stage::scores_from(&models, &x)?) {
            oof[local] = s;
        }
    }
    let (feats, models) = a11_ridge(table, corpus, rows, &stage_cfg, a11_gold, params)?;
    let applied = if apply_rows.is_empty() {
        Vec::new()
    } else {
        let x = feats.transform_rows(table, corpus, apply_rows, None)?;
        A11Stage::scores_from(&models, &x)?
    };
    let stage = A11Stage {
        targets: Vec::new(),
        featurizer: feats.model,
        models,
    };
    Ok((oof, applied, Some(stage)))
}

struct Prepared {
    table: GramTable,
    gold: Vec<Vec<u32>>,
    a11_gold: Vec<Vec<u32>>,
}

fn prepare(corpus: &Corpus, config: &HyperConfig, settings: &SearchSettings) -> Result<Prepared> {
    let a11_gold = match &settings.a11 {
        Some(a) if config.featurizer.a11_weight > 0.0 => gold_columns(corpus, &a.targets)?,
        _ => Vec::new(),
    };
    Ok(Prepared {
        table: GramTable::build(corpus.documents(), &config.featurizer),
        gold: gold_columns(corpus, &config.targets)?,
        a11_gold,
    })
}

fn a11_params(settings: &SearchSettings) -> RidgeParams {
    RidgeParams {
        alpha: settings.a11.as_ref().map_or(1.0, |a| a.alpha),
        ..settings.fit.ridge_params()
    }
}

fn score_fold(
    prep: &Prepared,
    corpus: &Corpus,
    config: &HyperConfig,
    settings: &SearchSettings,
    fold: &Fold,
    fold_index: usize,
    inspect: Option<(&FoldInspector<'_>, usize)>,
    k: usize,
) -> Result<Vec<FoldScore>> {
    let table = &prep.table;
    let (a11_train, a11_test) = if prep.a11_gold.is_empty() {
        (None, None)
    } else {
        let seed = derive_seed(settings.seed, "a11-folds", &[fold_index as u64]);
        let (oof, test, _) = a11_scores(
            table,
            corpus,
            &fold.train,
            &fold.test,
            &config.featurizer,
            &prep.a11_gold,
            &a11_params(settings),
            k,
            seed,
        )?;
        (Some(oof), Some(test))
    };
    let feats = table.fit_rows(corpus, &fold.train, &config.featurizer)?;
    if let Some((f, trial)) = inspect {
        f(&FoldView {
            trial,
            fold: fold_index,
            train: &fold.train,
            test: &fold.test,
            featurizer: &feats.model,
        });
    }
    let x_train = feats.transform_rows(table, corpus, &fold.train, a11_train.as_deref())?;
    let x_test = feats.transform_rows(table, corpus, &fold.test, a11_test.as_deref())?;
    let y_train: Vec<Vec<u32>> = prep.gold.iter().map(|y| pick(y, &fold.train)).collect();
    let models = fit_multi_target(&x_train, &y_train, &config.fit_options(&settings.fit), config.family)?;
    models
        .iter()
        .zip(&prep.gold)
        .zip(&settings.reliabilities)
        .map(|((m, y), rel)| {
            let pred = m.predict(&x_test)?;
            let gold: Vec<f64> = fold.test.iter().map(|&i| f64::from(y[i])).collect();
            let r = pearson(&pred, &gold)?;
            Ok(FoldScore {
                mae: mae(&pred, &gold)?,
                pearson: r,
                disattenuated_r: r.map(|r| disattenuate(r, rel.pred, rel.gold)).transpose()?,
            })
        })
        .collect()
}

fn mean_defined(v: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut missing) = (0.0, 0usize, 0usize);
    for x in v {
        match x {
            Some(x) => {
                sum += x;
                n += 1;
            }
            None => missing += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), missing)
}

fn run_trial(
    corpus: &Corpus,
    config: &HyperConfig,
    folds: &[Fold],
    settings: &SearchSettings,
    index: usize,
    inspect: Option<&FoldInspector<'_>>,
) -> Result<TrialResult> {
    config.validate()?;
    settings.validate()?;
    if config.targets.len() != settings.reliabilities.len() {
        return Err(Error::Config("one reliability pair per target required".into()));
    }
    let start = Instant::now();
    let prep = prepare(corpus, config, settings)?;
    let per_fold = folds
        .iter()
        .enumerate()
        .map(|(f, fold)| {
            score_fold(&prep, corpus, config, settings, fold, f, inspect.map(|i| (i, index)), folds.len())
        })
        .collect::<Result<Vec<_>>>()?;
    let n_targets = config.targets.len();
    let folds_by_target: Vec<Vec<FoldScore>> = (0..n_targets)
        .map(|t| per_fold.iter().map(|f| f[t]).collect())
        .collect();
    let mut undefined = 0;
    let mut mean_pearson = Vec::with_capacity(n_targets);
    let mut mean_dis = Vec::with_capacity(n_targets);
    for fs in &folds_by_target {
        let (p, missing) = mean_defined(fs.iter().map(|s| s.pearson));
        let (d, _) = mean_defined(fs.iter().map(|s| s.disattenuated_r));
        undefined += missing;
        mean_pearson.push(p);
        mean_dis.push(d);
    }
    if undefined > 0 {
        log::warn!("trial {index}: {undefined} fold correlations undefined (constant predictions or gold)");
    }
    Ok(TrialResult {
        index,
        config: config.clone(),
        mean_mae: folds_by_target
            .iter()
            .map(|fs| fs.iter().map(|s| s.mae).sum::<f64>() / fs.len() as f64)
            .collect(),
        folds: folds_by_target,
        mean_pearson,
        mean_disattenuated_r: mean_dis,
        undefined_folds: undefined,
        error: None,
        duration_ms: start.elapsed().as_millis() as u64,
    })
}

/// Scores one configuration on the given folds.
pub fn cv_score(corpus: &Corpus, config: &HyperConfig, folds: &[Fold], settings: &SearchSettings) -> Result<TrialResult> {
    run_trial(corpus, config, folds, settings, 0, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Ordered by score (best first, undefined last), then trial index.
    pub trials: Vec<TrialResult>,
    pub recommended: HyperConfig,
    pub best_trial: usize,
    /// Per target, the trial index with the best mean disattenuated R.
    pub per_target_best: Vec<usize>,
    pub folds: Vec<Fold>,
}

impl SearchResult {
    pub fn trial(&self, index: usize) -> Option<&TrialResult> {
        self.trials.iter().find(|t| t.index == index)
    }
}

/// `a` beats `b`: higher value, ties to the lower trial index.
fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn argmax(items: impl Iterator<Item = (f64, usize)>) -> Option<usize> {
    items.fold(None, |best: Option<(f64, usize)>, cur| match best {
        Some(b) if !better(cur, b) => Some(b),
        _ => Some(cur),
    })
    .map(|b| b.1)
}

pub fn random_search(corpus: &Corpus, space: &SearchSpace, settings: &SearchSettings) -> Result<SearchResult> {
    random_search_inspected(corpus, space, settings, None)
}

/// [`random_search`] that reports every fold's fitted featurizer to `inspect`.
pub fn random_search_inspected(
    corpus: &Corpus,
    space: &SearchSpace,
    settings: &SearchSettings,
    inspect: Option<&FoldInspector<'_>>,
) -> Result<SearchResult> {
    use rayon::prelude::*;

    space.validate()?;
    settings.validate()?;
    let folds = kfold_split(corpus.len(), space.k_folds, derive_seed(settings.seed, "folds", &[]))?;
    let mut sampler = stream_rng(settings.seed, "sampler", &[]);
    let configs: Vec<HyperConfig> = (0..space.n_trials)
        .map(|_| {
            sample_config(
                space,
                &settings.targets,
                settings.family,
                settings.svr_epsilon,
                settings.a11.is_some(),
                &mut sampler,
            )
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut trials: Vec<TrialResult> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let res = run_trial(corpus, c, &folds, settings, i, inspect);
                match res {
                    Ok(t) => {
                        log::info!("trial {i}: score {:?} ({} ms)", t.score(), t.duration_ms);
                        Ok(t)
                    }
                    Err(e) if e.class() == crate::error::ErrorClass::Usage => Err(e),
                    Err(e) => {
                        log::warn!("trial {i} failed: {e}");
                        Ok(TrialResult {
                            index: i,
                            config: c.clone(),
                            folds: Vec::new(),
                            mean_mae: Vec::new(),
                            mean_pearson: Vec::new(),
                            mean_disattenuated_r: Vec::new(),
                            undefined_folds: 0,
                            error: Some(e.to_string()),
                            duration_ms: 0,
                        })
                    }
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let best_trial = argmax(trials.iter().filter_map(|t| t.score().map(|s| (s, t.index)))).ok_or_else(|| {
        Error::Degenerate(format!(
            "all {} trials are degenerate (failed or undefined correlation on some target)",
            trials.len()
        ))
    })?;
    let n_targets = settings.targets.len();
    let target_score = |t: &TrialResult, j: usize| t.mean_disattenuated_r.get(j).copied().flatten();
    let per_target_best: Vec<usize> = (0..n_targets)
        .map(|j| {
            argmax(trials.iter().filter_map(|t| target_score(t, j).map(|s| (s, t.index))))
                .unwrap_or(best_trial)
        })
        .collect();

    // alphas chosen per target among trials sharing the winning featurizer
    let best = &trials[best_trial];
    let mut recommended = best.config.clone();
    for j in 0..n_targets {
        let pick = argmax(
            trials
                .iter()
                .filter(|t| t.config.featurizer == best.config.featurizer)
                .filter_map(|t| target_score(t, j).map(|s| (s, t.index))),
        )
        .unwrap_or(best_trial);
        recommended.alpha[j] = trials[pick].config.alpha[j];
    }

    trials.sort_by(|a, b| match (a.score(), b.score()) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    Ok(SearchResult {
        trials,
        recommended,
        best_trial,
        per_target_best,
        folds,
    })
}

/// Fits the deployable pipeline on every row of `corpus`.
pub fn refit_final(corpus: &Corpus, config: &HyperConfig, settings: &SearchSettings, k_folds: usize) -> Result<Pipeline> {
    config.validate()?;
    settings.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty corpus".into()));
    }
    let prep = prepare(corpus, config, settings)?;
    let rows: Vec<usize> = (0..corpus.len()).collect();
    let (a11_rows, stage) = match (&settings.a11, prep.a11_gold.is_empty()) {
        (Some(a), false) => {
            let seed = derive_seed(settings.seed, "a11-folds", &[u64::MAX]);
            let (oof, _, stage) = a11_scores(
                &prep.table,
                corpus,
                &rows,
                &[],
                &config.featurizer,
                &prep.a11_gold,
                &a11_params(settings),
                k_folds,
                seed,
            )?;
            let stage = stage.map(|s| A11Stage {
                targets: a.targets.clone(),
                ..s
            });
            (Some(oof), stage)
        }
        (None, _) if config.featurizer.a11_weight > 0.0 => {
            return Err(Error::Config("a11_weight > 0 requires age-11 target columns (task.a11_targets)".into()));
        }
        _ => (None, None),
    };
    let feats = prep.table.fit_rows(corpus, &rows, &config.featurizer)?;
    let x = feats.transform_rows(&prep.table, corpus, &rows, a11_rows.as_deref())?;
    let models: Vec<TargetModel> = fit_multi_target(&x, &prep.gold, &config.fit_options(&settings.fit), config.family)?;
    let pipeline = Pipeline {
        targets: config.targets.clone(),
        featurizer: feats.model,
        models,
        a11: stage,
    };
    pipeline.validate()?;
    Ok(pipeline)
}

/// Trial log as CSV, one row per trial in log order.
pub fn trial_log_csv(result: &SearchResult) -> Result<Vec<u8>> {
    let Some(first) = result.trials.first() else {
        return Ok(Vec::new());
    };
    let targets = &first.config.targets;
    let k = result.folds.len();
    let mut header: Vec<String> = [
        "trial", "score", "family", "c_ngmax", "w_ngmax", "min_df", "lowercase", "ctrl_weight", "a11_weight", "svr_epsilon",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(targets.iter().map(|t| format!("alpha_{t}")));
    for t in targets {
        for f in 0..k {
            for m in ["mae", "pearson", "dis_r"] {
                header.push(format!("{t}_fold{f}_{m}"));
            }
        }
        for m in ["mae", "pearson", "dis_r"] {
            header.push(format!("{t}_mean_{m}"));
        }
    }
    header.push("undefined_folds".into());
    header.push("error".into());

    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| v.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<trial log>".into(),
        message: e.to_string(),
    };
    w.write_record(&header).map_err(csv_err)?;
    for t in &result.trials {
        let f = &t.config.featurizer;
        let mut row = vec![
            t.index.to_string(),
            opt(t.score()),
            t.config.family.to_string(),
            f.c_ngmax.to_string(),
            f.w_ngmax.to_string(),
            f.min_df.to_string(),
            f.lowercase.to_string(),
            f.ctrl_weight.to_string(),
            f.a11_weight.to_string(),
            t.config.svr_epsilon.to_string(),
        ];
        row.extend(t.config.alpha.iter().map(f64::to_string));
        for j in 0..targets.len() {
            for fi in 0..k {
                match t.folds.get(j).and_then(|fs| fs.get(fi)) {
                    Some(s) => row.extend([s.mae.to_string(), opt(s.pearson), opt(s.disattenuated_r)]),
                    None => row.extend(["".to_string(), "".to_string(), "".to_string()]),
                }
            }
            row.push(t.mean_mae.get(j).map_or_else(String::new, f64::to_string));
            row.push(t.mean_pearson.get(j).map_or_else(String::new, |v| opt(*v)));
            row.push(t.mean_disattenuated_r.get(j).map_or_else(String::new, |v| opt(*v)));
        }
        row.push(t.undefined_folds.to_string());
        row.push(t.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Csv {
        path: "<trial log>".into(),
        message: e.to_string(),
    })
}

/// Wall-clock durations per trial, kept apart from the trial log so that
/// the log itself is reproducible byte for byte.
pub fn trial_timing_csv(result: &SearchResult) -> String {
    let mut rows: Vec<(usize, u64)> = result.trials.iter().map(|t| (t.index, t.duration_ms)).collect();
    rows.sort_unstable();
    let mut out = String::from("trial,duration_ms\n");
    for (i, d) in rows {
        out.push_str(&format!("{i},{d}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes() {
        let folds = kfold_split(10, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.test.len() == 2 && f.train.len() == 8));
        let mut sizes: Vec<usize> = kfold_split(11, 5, 1).unwrap().iter().map(|f| f.test.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert_eq!(kfold_split(11, 5, 9).unwrap(), kfold_split(11, 5, 9).unwrap());
        assert!(kfold_split(3, 5, 0).is_err());
    }

    #[test]
    fn singleton_space_forces_config() {
        let space = SearchSpace {
            c_ngmax: (5, 5),
            w_ngmax: (3, 3),
            min_df: (2, 2),
            alpha: (5.0, 5.0),
            lowercase: vec![Lowercase::Word],
            ctrl_weight: (0.5, 0.5),
            a11_weight: (0.0, 0.0),
            n_trials: 1,
            k_folds: 5,
        };
        let names = vec!["a".to_string(), "b".to_string()];
        let mut rng = stream_rng(3, "sampler", &[]);
        let c = sample_config(&space, &names, ModelFamily::Ridge, 0.1, false, &mut rng);
        assert_eq!(c.featurizer, FeaturizerConfig::default());
        assert_eq!(c.alpha, vec![5.0, 5.0]);
        assert!(space.contains(&c));
    }

    #[test]
    fn argmax_prefers_lower_index_on_ties() {
        assert_eq!(argmax([(0.5, 3), (0.7, 4), (0.7, 1), (0.2, 0)].into_iter()), Some(1));
        assert_eq!(argmax(std::iter::empty()), None);
    }
}
