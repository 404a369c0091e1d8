//! Command-line front end: `search`, `train`, `predict`, `evaluate`, `synth`.
//!
//! Settings come from an optional `--config` file of dotted `key = value`
//! lines. Any flag with a dot in its name (`--featurizer.c_ngmax=4`, or
//! `--model.alpha.total 3`) overrides the matching config key.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bundle::{sha256_hex, ModelBundle, Provenance};
use crate::config::KeyValues;
use crate::corpus::{corpus_to_csv, filter_complete, parse_corpus, synth_corpus, Corpus, SynthSpec, TASK_A_TARGETS};
use crate::error::{Error, Result};
use crate::evaluation::{Reliability, ScoreReport};
use crate::featurizer::{FeaturizerConfig, Lowercase};
use crate::fsutil::{atomic_write, read_file};
use crate::regressors::{FitOptions, ModelFamily};
use crate::rng::derive_seed;
use crate::selection::{
    random_search, refit_final, trial_log_csv, trial_timing_csv, A11Settings, HyperConfig, SearchSettings, SearchSpace,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every setting a command may need, resolved from config text.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub targets: Vec<String>,
    pub a11: Option<A11Settings>,
    pub family: ModelFamily,
    pub svr_epsilon: f64,
    pub fit: FitOptions,
    pub c_ngmax: Option<usize>,
    pub w_ngmax: Option<usize>,
    pub min_df: Option<usize>,
    pub lowercase: Option<Lowercase>,
    pub ctrl_weight: Option<f64>,
    pub a11_weight: Option<f64>,
    /// Keyed by target name.
    pub alpha: BTreeMap<String, f64>,
    pub space: SearchSpace,
    pub reliabilities: BTreeMap<String, Reliability>,
    pub seed: u64,
    pub workers: usize,
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_range<T>(key: &str, v: &str) -> Result<(T, T)>
where
    T: std::str::FromStr + Copy,
{
    let parse = |s: &str| {
        s.trim()
            .parse::<T>()
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}` as a value or `lo..hi` range")))
    };
    match v.split_once("..") {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => {
            let x = parse(v)?;
            Ok((x, x))
        }
    }
}

fn render_range<T: std::fmt::Display + PartialEq>((lo, hi): (T, T)) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("{lo}..{hi}")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    /// Consumes every key; unknown keys are an error naming the key.
    pub fn from_key_values(mut kv: KeyValues) -> Result<Self> {
        let targets = kv
            .take("task.targets")
            .map(|v| split_list(&v))
            .unwrap_or_else(|| TASK_A_TARGETS.iter().map(|s| s.to_string()).collect());
        let a11 = match kv.take("task.a11_targets") {
            Some(v) => Some(A11Settings {
                targets: split_list(&v),
                alpha: kv.take_parsed("task.a11_alpha")?.unwrap_or(1.0),
            }),
            None => None,
        };
        let mut fit = FitOptions::default();
        macro_rules! field {
            ($key:literal, $slot:expr) => {
                if let Some(v) = kv.take_parsed($key)? {
                    $slot = v;
                }
            };
        }
        field!("model.tol", fit.tol);
        field!("model.max_iter", fit.max_iter);
        field!("model.threshold", fit.threshold);
        field!("sgd.learning_rate", fit.sgd.learning_rate);
        field!("sgd.decay", fit.sgd.decay);
        field!("sgd.epsilon", fit.sgd.epsilon);
        field!("sgd.batch_size", fit.sgd.batch_size);
        field!("sgd.epochs", fit.sgd.epochs);
        field!("sgd.anneal", fit.sgd.anneal);

        let mut space = SearchSpace::default();
        for (key, slot) in [
            ("search.c_ngmax", &mut space.c_ngmax),
            ("search.w_ngmax", &mut space.w_ngmax),
            ("search.min_df", &mut space.min_df),
        ] {
            if let Some(v) = kv.take(key) {
                *slot = parse_range(key, &v)?;
            }
        }
        for (key, slot) in [
            ("search.alpha", &mut space.alpha),
            ("search.ctrl_weight", &mut space.ctrl_weight),
            ("search.a11_weight", &mut space.a11_weight),
        ] {
            if let Some(v) = kv.take(key) {
                *slot = parse_range(key, &v)?;
            }
        }
        if let Some(v) = kv.take("search.lowercase") {
            space.lowercase = split_list(&v).iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        field!("search.n_trials", space.n_trials);
        field!("search.k_folds", space.k_folds);

        let mut alpha = BTreeMap::new();
        for (t, v) in kv.take_prefix("model.alpha.") {
            let a = v
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`model.alpha.{t}`: cannot parse `{v}`")))?;
            alpha.insert(t, a);
        }
        let mut reliabilities = BTreeMap::new();
        for (t, v) in kv.take_prefix("eval.reliability.") {
            let (p, g) = parse_range::<f64>(&format!("eval.reliability.{t}"), &v.replace(',', ".."))?;
            reliabilities.insert(t, Reliability { pred: p, gold: g });
        }

        let cfg = RunConfig {
            family: kv.take_parsed("model.family")?.unwrap_or(ModelFamily::Ridge),
            svr_epsilon: kv.take_parsed("model.svr_epsilon")?.unwrap_or(0.1),
            c_ngmax: kv.take_parsed("featurizer.c_ngmax")?,
            w_ngmax: kv.take_parsed("featurizer.w_ngmax")?,
            min_df: kv.take_parsed("featurizer.min_df")?,
            lowercase: kv.take_parsed("featurizer.lowercase")?,
            ctrl_weight: kv.take_parsed("featurizer.ctrl_weight")?,
            a11_weight: kv.take_parsed("featurizer.a11_weight")?,
            seed: kv.take_parsed("run.seed")?.unwrap_or(0),
            workers: kv.take_parsed("run.workers")?.unwrap_or(1),
            targets,
            a11,
            fit,
            alpha,
            space,
            reliabilities,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Config("task.targets is empty".into()));
        }
        let known = |t: &String| self.targets.contains(t);
        if let Some(t) = self.alpha.keys().find(|t| !known(t)) {
            return Err(Error::UnknownKey(format!("model.alpha.{t}")));
        }
        if let Some(t) = self.reliabilities.keys().find(|t| !known(t)) {
            return Err(Error::UnknownKey(format!("eval.reliability.{t}")));
        }
        for r in self.reliabilities.values() {
            crate::evaluation::disattenuate(0.0, r.pred, r.gold).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.workers == 0 {
            return Err(Error::Config("run.workers must be at least 1".into()));
        }
        self.fit.validate()?;
        self.space.validate()
    }

    /// The single configuration `train` fits; every featurizer field and one
    /// alpha per target must be present.
    pub fn hyper_config(&self) -> Result<HyperConfig> {
        let mut missing = Vec::new();
        let mut need = |name: &str, present: bool| {
            if !present {
                missing.push(name.to_string());
            }
        };
        need("featurizer.c_ngmax", self.c_ngmax.is_some());
        need("featurizer.w_ngmax", self.w_ngmax.is_some());
        need("featurizer.min_df", self.min_df.is_some());
        need("featurizer.lowercase", self.lowercase.is_some());
        need("featurizer.ctrl_weight", self.ctrl_weight.is_some());
        for t in &self.targets {
            need(&format!("model.alpha.{t}"), self.alpha.contains_key(t));
        }
        if !missing.is_empty() {
            return Err(Error::MissingKeys(missing));
        }
        let config = HyperConfig {
            featurizer: FeaturizerConfig {
                c_ngmax: self.c_ngmax.unwrap_or_default(),
                w_ngmax: self.w_ngmax.unwrap_or_default(),
                min_df: self.min_df.unwrap_or_default(),
                lowercase: self.lowercase.unwrap_or(Lowercase::Word),
                ctrl_weight: self.ctrl_weight.unwrap_or_default(),
                a11_weight: self.a11_weight.unwrap_or(0.0),
            },
            targets: self.targets.clone(),
            alpha: self.targets.iter().map(|t| self.alpha[t]).collect(),
            family: self.family,
            svr_epsilon: self.svr_epsilon,
        };
        config.validate()?;
        if config.featurizer.a11_weight > 0.0 && self.a11.is_none() {
            return Err(Error::Config("featurizer.a11_weight > 0 requires task.a11_targets".into()));
        }
        Ok(config)
    }

    /// Replaces the featurizer and alpha settings with `config`.
    pub fn with_hyper_config(&self, config: &HyperConfig) -> RunConfig {
        let f = &config.featurizer;
        RunConfig {
            c_ngmax: Some(f.c_ngmax),
            w_ngmax: Some(f.w_ngmax),
            min_df: Some(f.min_df),
            lowercase: Some(f.lowercase),
            ctrl_weight: Some(f.ctrl_weight),
            a11_weight: Some(f.a11_weight),
            alpha: config.targets.iter().cloned().zip(config.alpha.iter().copied()).collect(),
            family: config.family,
            svr_epsilon: config.svr_epsilon,
            ..self.clone()
        }
    }

    pub fn search_settings(&self) -> SearchSettings {
        let mut s = SearchSettings::new(self.targets.clone(), self.family);
        s.svr_epsilon = self.svr_epsilon;
        s.fit = self.fit;
        s.fit.sgd.seed = derive_seed(self.seed, "sgd", &[]);
        s.reliabilities = self
            .targets
            .iter()
            .map(|t| self.reliabilities.get(t).copied().unwrap_or_default())
            .collect();
        s.a11 = self.a11.clone();
        s.seed = self.seed;
        s.workers = self.workers;
        s
    }

    /// Target columns a training file must provide.
    pub fn required_columns(&self) -> Vec<String> {
        let mut cols = self.targets.clone();
        if let Some(a) = &self.a11 {
            cols.extend(a.targets.iter().filter(|t| !self.targets.contains(t)).cloned());
        }
        cols
    }

    /// Config text; search-space keys are included only when asked for.
    pub fn to_key_values(&self, with_search: bool) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.set("task.targets", self.targets.join(","));
        if let Some(a) = &self.a11 {
            kv.set("task.a11_targets", a.targets.join(","));
            kv.set("task.a11_alpha", a.alpha.to_string());
        }
        kv.set("model.family", self.family.to_string());
        kv.set("model.svr_epsilon", self.svr_epsilon.to_string());
        kv.set("model.tol", self.fit.tol.to_string());
        kv.set("model.max_iter", self.fit.max_iter.to_string());
        kv.set("model.threshold", self.fit.threshold.to_string());
        let s = &self.fit.sgd;
        kv.set("sgd.learning_rate", s.learning_rate.to_string());
        kv.set("sgd.decay", s.decay.to_string());
        kv.set("sgd.epsilon", s.epsilon.to_string());
        kv.set("sgd.batch_size", s.batch_size.to_string());
        kv.set("sgd.epochs", s.epochs.to_string());
        kv.set("sgd.anneal", s.anneal.to_string());
        let opt = |kv: &mut KeyValues, k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.set(k, v);
            }
        };
        opt(&mut kv, "featurizer.c_ngmax", self.c_ngmax.map(|v| v.to_string()));
        opt(&mut kv, "featurizer.w_ngmax", self.w_ngmax.map(|v| v.to_string()));
        opt(&mut kv, "featurizer.min_df", self.min_df.map(|v| v.to_string()));
        opt(&mut kv, "featurizer.lowercase", self.lowercase.map(|v| v.to_string()));
        opt(&mut kv, "featurizer.ctrl_weight", self.ctrl_weight.map(|v| v.to_string()));
        opt(&mut kv, "featurizer.a11_weight", self.a11_weight.map(|v| v.to_string()));
        for (t, a) in &self.alpha {
            kv.set(format!("model.alpha.{t}"), a.to_string());
        }
        for (t, r) in &self.reliabilities {
            kv.set(format!("eval.reliability.{t}"), format!("{},{}", r.pred, r.gold));
        }
        kv.set("run.seed", self.seed.to_string());
        if with_search {
            let sp = &self.space;
            kv.set("search.c_ngmax", render_range(sp.c_ngmax));
            kv.set("search.w_ngmax", render_range(sp.w_ngmax));
            kv.set("search.min_df", render_range(sp.min_df));
            kv.set("search.alpha", render_range(sp.alpha));
            kv.set("search.ctrl_weight", render_range(sp.ctrl_weight));
            kv.set("search.a11_weight", render_range(sp.a11_weight));
            kv.set(
                "search.lowercase",
                sp.lowercase.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(","),
            );
            kv.set("search.n_trials", sp.n_trials.to_string());
            kv.set("search.k_folds", sp.k_folds.to_string());
        }
        kv
    }
}

/// Loads a training file and keeps only complete rows.
fn load_training(path: &Path, cfg: &RunConfig) -> Result<(Corpus, Vec<u8>)> {
    let bytes = read_file(path)?;
    let corpus = parse_corpus(&bytes, &cfg.required_columns()).map_err(|e| with_path(e, path))?;
    let complete = filter_complete(&corpus);
    if complete.len() < corpus.len() {
        log::warn!(
            "{}: dropped {} incomplete rows, {} remain",
            path.display(),
            corpus.len() - complete.len(),
            complete.len()
        );
    }
    if complete.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no complete rows", path.display())));
    }
    Ok((complete, bytes))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv { message, .. } => Error::Csv {
            path: path.to_path_buf(),
            message,
        },
        Error::MissingColumn(c) => Error::InvalidInput(format!("{}: missing required column `{c}`", path.display())),
        other => other,
    }
}

pub fn cmd_search(
    cfg: &RunConfig,
    train: &Path,
    trial_log: &Path,
    best_config: &Path,
    timing: Option<&Path>,
) -> Result<()> {
    let (corpus, _) = load_training(train, cfg)?;
    let settings = cfg.search_settings();
    let result = random_search(&corpus, &cfg.space, &settings)?;
    atomic_write(trial_log, &trial_log_csv(&result)?)?;
    if let Some(p) = timing {
        atomic_write(p, trial_timing_csv(&result).as_bytes())?;
    }
    let best = cfg.with_hyper_config(&result.recommended);
    atomic_write(best_config, best.to_key_values(false).render().as_bytes())?;
    let score = result.trial(result.best_trial).and_then(|t| t.score());
    println!(
        "best trial {} (mean disattenuated r {})",
        result.best_trial,
        score.map_or_else(|| "undefined".into(), |s| format!("{s:.4}"))
    );
    Ok(())
}

/// Fits the configured model on a training file and returns the bundle.
pub fn train_bundle(cfg: &RunConfig, train: &Path) -> Result<ModelBundle> {
    let config = cfg.hyper_config()?;
    let (corpus, bytes) = load_training(train, cfg)?;
    let settings = cfg.search_settings();
    let pipeline = refit_final(&corpus, &config, &settings, cfg.space.k_folds)?;
    Ok(ModelBundle {
        pipeline,
        provenance: Provenance {
            config: cfg.to_key_values(false).render(),
            seed: cfg.seed,
            rows: corpus.len() as u64,
            corpus_sha256: sha256_hex(&bytes),
            tool_version: TOOL_VERSION.to_string(),
        },
    })
}

pub fn cmd_train(cfg: &RunConfig, train: &Path, out: &Path) -> Result<()> {
    let bundle = train_bundle(cfg, train)?;
    bundle.save(out)?;
    println!(
        "trained {} targets on {} rows, {} features",
        bundle.pipeline.targets.len(),
        bundle.provenance.rows,
        bundle.pipeline.featurizer.n_features()
    );
    Ok(())
}

/// Prediction CSV: `id` then one column per target, in input order.
pub fn predictions_csv(bundle: &ModelBundle, corpus: &Corpus) -> Result<Vec<u8>> {
    let preds = bundle.pipeline.predict(corpus)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<predictions>".into(),
        message: e.to_string(),
    };
    let mut header = vec!["id".to_string()];
    header.extend(bundle.pipeline.targets.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, d) in corpus.documents().iter().enumerate() {
        let mut row = vec![d.id.clone()];
        row.extend(preds.iter().map(|p| p[i].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Csv {
        path: "<predictions>".into(),
        message: e.to_string(),
    })
}

pub fn cmd_predict(model: &Path, input: &Path, out: &Path) -> Result<()> {
    let bundle = ModelBundle::load(model)?;
    let bytes = read_file(input)?;
    let corpus = parse_corpus(&bytes, &[]).map_err(|e| with_path(e, input))?;
    atomic_write(out, &predictions_csv(&bundle, &corpus)?)?;
    println!("wrote {} predictions to {}", corpus.len(), out.display());
    Ok(())
}

/// Reads `id` plus the named columns as numbers.
fn read_columns(path: &Path, names: Option<&[String]>) -> Result<(Vec<String>, Vec<String>, Vec<Vec<f64>>)> {
    let bytes = read_file(path)?;
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header = r.headers().map_err(csv_err)?.clone();
    let col = |n: &str| {
        header
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::InvalidInput(format!("{}: missing required column `{n}`", path.display())))
    };
    let id_col = col("id")?;
    let names: Vec<String> = match names {
        Some(n) => n.to_vec(),
        None => header.iter().filter(|h| *h != "id").map(str::to_string).collect(),
    };
    let cols = names.iter().map(|n| col(n)).collect::<Result<Vec<_>>>()?;
    let (mut ids, mut values) = (Vec::new(), vec![Vec::new(); names.len()]);
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        ids.push(rec.get(id_col).unwrap_or("").to_string());
        for (j, &c) in cols.iter().enumerate() {
            let s = rec.get(c).unwrap_or("").trim();
            let v = s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::InvalidField {
                field: names[j].clone(),
                value: s.to_string(),
                row: row + 1,
            })?;
            values[j].push(v);
        }
    }
    Ok((ids, names, values))
}

/// Joins predictions and gold on `id` and scores every predicted target.
pub fn evaluate_files(cfg: &RunConfig, pred: &Path, gold: &Path) -> Result<ScoreReport> {
    let (pred_ids, names, pred_vals) = read_columns(pred, None)?;
    let (gold_ids, _, gold_vals) = read_columns(gold, Some(&names))?;
    let index = |ids: &[String], path: &Path| -> Result<HashMap<String, usize>> {
        let mut m = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if m.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("{}: duplicate id `{id}`", path.display())));
            }
        }
        Ok(m)
    };
    let gold_index = index(&gold_ids, gold)?;
    let pred_index = index(&pred_ids, pred)?;
    let mut unmatched: Vec<String> = pred_ids.iter().filter(|id| !gold_index.contains_key(*id)).cloned().collect();
    unmatched.extend(gold_ids.iter().filter(|id| !pred_index.contains_key(*id)).cloned());
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedIds {
            count: unmatched.len(),
            first: unmatched.into_iter().take(10).collect(),
        });
    }
    let order: Vec<usize> = pred_ids.iter().map(|id| gold_index[id]).collect();
    let golds: Vec<Vec<f64>> = gold_vals.iter().map(|g| order.iter().map(|&i| g[i]).collect()).collect();
    if let Some(t) = cfg.reliabilities.keys().find(|t| !names.contains(t)) {
        return Err(Error::Config(format!("reliability given for `{t}`, which has no prediction column")));
    }
    let rels: Vec<Reliability> = names
        .iter()
        .map(|t| cfg.reliabilities.get(t).copied().unwrap_or_default())
        .collect();
    ScoreReport::compute(&names, &pred_vals, &golds, &rels)
}

pub fn cmd_evaluate(cfg: &RunConfig, pred: &Path, gold: &Path, out: &Path) -> Result<()> {
    let report = evaluate_files(cfg, pred, gold)?;
    atomic_write(out, report.to_csv().as_bytes())?;
    print!("{}", report.to_table());
    Ok(())
}

pub fn cmd_synth(spec: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let spec = match spec {
        Some(p) => SynthSpec::from_key_values(&mut KeyValues::load(p)?)?,
        None => SynthSpec::default(),
    };
    let corpus = synth_corpus(&spec, seed)?;
    atomic_write(out, &corpus_to_csv(&corpus))?;
    println!("wrote {} documents to {}", corpus.len(), out.display());
    Ok(())
}

#[derive(Debug, Parser)]
#[command(name = "textcount", version, about = "Predict count scores from document text")]
struct Cli {
    /// Root seed for folds, sampling and SGD
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the search
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Random hyperparameter search with k-fold cross-validation
    Search {
        train: PathBuf,
        trial_log: PathBuf,
        best_config: PathBuf,
        /// Per-trial wall-clock durations
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Fit one configuration on all rows and write a model bundle
    Train { train: PathBuf, model: PathBuf },
    /// Predict every target for an input corpus
    Predict { model: PathBuf, input: PathBuf, out: PathBuf },
    /// Score a prediction file against gold values
    Evaluate { pred: PathBuf, gold: PathBuf, report: PathBuf },
    /// Write a synthetic corpus
    Synth {
        out: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

/// Pulls `--a.b=v` and `--a.b v` arguments out as config overrides.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, KeyValues)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut kv = KeyValues::default();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (name, value) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        if !name.contains('.') {
            rest.push(a);
            continue;
        }
        let value = match value {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| Error::Config(format!("--{name} needs a value")))?,
        };
        kv.set(name, value);
    }
    Ok((rest, kv))
}

fn resolve_config(cli: &Cli, overrides: KeyValues) -> Result<RunConfig> {
    let mut kv = match &cli.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    kv.overlay(overrides);
    if let Some(s) = cli.seed {
        kv.set("run.seed", s.to_string());
    }
    if let Some(w) = cli.workers {
        kv.set("run.workers", w.to_string());
    }
    RunConfig::from_key_values(kv)
}

fn dispatch(cli: Cli, overrides: KeyValues) -> Result<()> {
    if let Command::Synth { out, spec } = &cli.command {
        if overrides.iter().next().is_some() || cli.config.is_some() {
            return Err(Error::Config("synth takes its settings from --spec, not --config or dotted flags".into()));
        }
        return cmd_synth(spec.as_deref(), cli.seed.unwrap_or(0), out);
    }
    let cfg = resolve_config(&cli, overrides)?;
    match &cli.command {
        Command::Search {
            train,
            trial_log,
            best_config,
            timing,
        } => cmd_search(&cfg, train, trial_log, best_config, timing.as_deref()),
        Command::Train { train, model } => cmd_train(&cfg, train, model),
        Command::Predict { model, input, out } => cmd_predict(model, input, out),
        Command::Evaluate { pred, gold, report } => cmd_evaluate(&cfg, pred, gold, report),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

/// Runs the command line and returns the process exit code: 0 success,
/// 1 usage error, 2 data error, 3 numerical failure.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let (rest, overrides) = match split_overrides(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, overrides) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges_and_overrides() {
        let cfg = RunConfig::parse(
            "search.c_ngmax = 2..4\nsearch.alpha = 1\nsearch.lowercase = word,none\n\
             eval.reliability.total = 0.8,0.9\nmodel.alpha.total = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.space.c_ngmax, (2, 4));
        assert_eq!(cfg.space.alpha, (1.0, 1.0));
        assert_eq!(cfg.space.lowercase, vec![Lowercase::Word, Lowercase::None]);
        assert_eq!(cfg.reliabilities["total"], Reliability { pred: 0.8, gold: 0.9 });
        let again = RunConfig::from_key_values(cfg.to_key_values(true)).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse("featurizer.cngmax = 3\n").unwrap_err();
        assert!(matches!(&err, Error::UnknownKey(k) if k == "featurizer.cngmax"), "{err}");
        let err = RunConfig::parse("model.alpha.bogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("model.alpha.bogus"));
    }

    #[test]
    fn underspecified_train_config_lists_missing_keys() {
        let cfg = RunConfig::parse("featurizer.c_ngmax = 3\nmodel.alpha.total = 1\n").unwrap();
        let Err(Error::MissingKeys(keys)) = cfg.hyper_config() else {
            panic!("expected missing keys");
        };
        assert!(keys.contains(&"featurizer.w_ngmax".to_string()));
        assert!(keys.contains(&"model.alpha.anxiety".to_string()));
        assert!(!keys.contains(&"model.alpha.total".to_string()));
    }

    #[test]
    fn dotted_flags_become_overrides() {
        let args = ["tc", "--featurizer.min_df=2", "train", "--model.alpha.total", "4", "a", "b"];
        let (rest, kv) = split_overrides(args.iter().map(|s| s.to_string()).collect()).unwrap();
        assert_eq!(rest, vec!["tc", "train", "a", "b"]);
        let got: Vec<_> = kv.iter().collect();
        assert_eq!(got, vec![("featurizer.min_df", "2"), ("model.alpha.total", "4")]);
    }
}
