//! Synthetic corpora with a planted count signal.
//!
//! Each document is a bag of pseudo-words drawn from a Zipf-distributed
//! filler vocabulary plus a handful of signal tokens. Every target is drawn as
//!
//! ```text
//! y ~ 0                                       with probability zero_inflation
//! y ~ Poisson(exp(intercept + Σ_j coef_j · count_j))  otherwise
//! ```
//!
//! where `count_j` is the number of occurrences of signal token `j` in the
//! document. Document lengths follow a gamma distribution matched to the
//! requested mean and standard deviation (in words).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, Zipf};

use super::{Corpus, Document, TargetVector, TASK_A_TARGETS};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

const DEFAULT_INTERCEPT: f64 = 2.0;
const DEFAULT_COEF_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTarget {
    pub name: String,
    pub intercept: f64,
    /// One coefficient per signal token; `±coef_scale` with random signs
    /// when absent.
    pub coefficients: Option<Vec<f64>>,
    pub coef_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_docs: usize,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub n_signal: usize,
    /// Expected occurrences of each signal token per document.
    pub signal_rate: f64,
    pub length_mean: f64,
    pub length_sd: f64,
    /// Structural-zero probability.
    pub zero_inflation: f64,
    pub n_classes: u32,
    /// Number of rows with exactly one target blanked out.
    pub n_missing_targets: usize,
    /// Number of rows with the social class blanked out.
    pub n_missing_controls: usize,
    /// Seed for vocabulary and coefficients; defaults to the sampling seed.
    /// Two corpora sharing a world seed share one generative model.
    pub world_seed: Option<u64>,
    pub targets: Vec<SynthTarget>,
}

impl Default for SynthSpec {
    /// Task-A shaped demo: three targets, 20 signal tokens, essay lengths
    /// around 227 ± 117 words, 30% structural zeros.
    fn default() -> Self {
        SynthSpec {
            n_docs: 2000,
            vocab_size: 3000,
            zipf_exponent: 2.5,
            n_signal: 20,
            signal_rate: 0.3,
            length_mean: 227.19,
            length_sd: 116.52,
            zero_inflation: 0.3,
            n_classes: 6,
            n_missing_targets: 0,
            n_missing_controls: 0,
            world_seed: None,
            targets: TASK_A_TARGETS
                .iter()
                .map(|n| SynthTarget {
                    name: n.to_string(),
                    intercept: DEFAULT_INTERCEPT,
                    coefficients: None,
                    coef_scale: DEFAULT_COEF_SCALE,
                })
                .collect(),
        }
    }
}

impl SynthSpec {
    pub fn with_targets(mut self, names: &[&str]) -> Self {
        let template = self.targets.first().cloned().unwrap_or(SynthTarget {
            name: String::new(),
            intercept: DEFAULT_INTERCEPT,
            coefficients: None,
            coef_scale: DEFAULT_COEF_SCALE,
        });
        self.targets = names
            .iter()
            .map(|n| SynthTarget {
                name: n.to_string(),
                ..template.clone()
            })
            .collect();
        self
    }

    pub fn target_names(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("synth spec: {m}")));
        if !(self.length_mean >= 0.0 && self.length_mean.is_finite()) {
            return bad(format!("length_mean must be non-negative, got {}", self.length_mean));
        }
        if !(self.length_sd >= 0.0 && self.length_sd.is_finite()) {
            return bad(format!("length_sd must be non-negative, got {}", self.length_sd));
        }
        if !(0.0..=1.0).contains(&self.zero_inflation) {
            return bad(format!("zero_inflation must be in [0, 1], got {}", self.zero_inflation));
        }
        if !(self.signal_rate >= 0.0 && self.signal_rate.is_finite()) {
            return bad(format!("signal_rate must be non-negative, got {}", self.signal_rate));
        }
        if self.vocab_size == 0 {
            return bad("vocab_size must be at least 1".into());
        }
        if !(self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be non-negative".into());
        }
        if self.targets.is_empty() {
            return bad("at least one target is required".into());
        }
        let mut names = HashSet::new();
        for t in &self.targets {
            if !names.insert(t.name.as_str()) {
                return bad(format!("duplicate target `{}`", t.name));
            }
            if let Some(c) = &t.coefficients {
                if c.len() != self.n_signal {
                    return bad(format!(
                        "target `{}` has {} coefficients for {} signal tokens",
                        t.name,
                        c.len(),
                        self.n_signal
                    ));
                }
            }
            if !(t.coef_scale >= 0.0) {
                return bad(format!("target `{}`: coef_scale must be non-negative", t.name));
            }
        }
        if self.n_missing_targets > self.n_docs || self.n_missing_controls > self.n_docs {
            return bad("more missing rows than documents".into());
        }
        if self.n_missing_controls > 0 && self.n_classes == 0 {
            return bad("n_missing_controls requires n_classes > 0".into());
        }
        Ok(())
    }

    /// Parses the `key = value` spec format. Unknown keys are rejected.
    pub fn from_key_values(kv: &mut KeyValues) -> Result<Self> {
        let mut spec = SynthSpec::default();
        macro_rules! field {
            ($key:literal, $slot:expr) => {
                if let Some(v) = kv.take_parsed($key)? {
                    $slot = v;
                }
            };
        }
        field!("n_docs", spec.n_docs);
        field!("vocab_size", spec.vocab_size);
        field!("zipf_exponent", spec.zipf_exponent);
        field!("n_signal", spec.n_signal);
        field!("signal_rate", spec.signal_rate);
        field!("length_mean", spec.length_mean);
        field!("length_sd", spec.length_sd);
        field!("zero_inflation", spec.zero_inflation);
        field!("n_classes", spec.n_classes);
        field!("n_missing_targets", spec.n_missing_targets);
        field!("n_missing_controls", spec.n_missing_controls);
        if let Some(v) = kv.take_parsed::<u64>("world_seed")? {
            spec.world_seed = Some(v);
        }
        let default_intercept = kv.take_parsed::<f64>("intercept")?.unwrap_or(DEFAULT_INTERCEPT);
        let default_scale = kv.take_parsed::<f64>("coef_scale")?.unwrap_or(DEFAULT_COEF_SCALE);
        let names: Vec<String> = match kv.take("targets") {
            Some(v) => split_list(&v),
            None => spec.target_names(),
        };
        spec.targets = names
            .into_iter()
            .map(|name| {
                let intercept = kv
                    .take_parsed(&format!("target.{name}.intercept"))?
                    .unwrap_or(default_intercept);
                let coef_scale = kv
                    .take_parsed(&format!("target.{name}.coef_scale"))?
                    .unwrap_or(default_scale);
                let coefficients = kv
                    .take(&format!("target.{name}.coefficients"))
                    .map(|v| {
                        split_list(&v)
                            .iter()
                            .map(|s| {
                                s.parse::<f64>().map_err(|_| {
                                    Error::Config(format!(
                                        "target.{name}.coefficients: `{s}` is not a number"
                                    ))
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?;
                Ok(SynthTarget {
                    name,
                    intercept,
                    coefficients,
                    coef_scale,
                })
            })
            .collect::<Result<_>>()?;
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// The generative model shared by every corpus drawn with one world seed.
struct World {
    filler: Vec<String>,
    signal: Vec<String>,
    coefficients: Vec<Vec<f64>>,
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = match rng.random::<f64>() {
        p if p < 0.35 => 1,
        p if p < 0.8 => 2,
        _ => 3,
    };
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
        if rng.random::<f64>() < 0.3 {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
        }
    }
    w
}

impl World {
    fn build(spec: &SynthSpec, seed: u64) -> World {
        let mut rng = stream_rng(seed, "synth-world", &[]);
        let total = spec.vocab_size + spec.n_signal;
        let mut seen = HashSet::with_capacity(total);
        let mut words = Vec::with_capacity(total);
        while words.len() < total {
            let w = pseudo_word(&mut rng);
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        let signal = words.split_off(spec.vocab_size);
        // frequent filler words are the short ones
        words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let coefficients = spec
            .targets
            .iter()
            .map(|t| match &t.coefficients {
                Some(c) => c.clone(),
                None => (0..spec.n_signal)
                    .map(|_| if rng.random::<bool>() { t.coef_scale } else { -t.coef_scale })
                    .collect(),
            })
            .collect();
        World {
            filler: words,
            signal,
            coefficients,
        }
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let p = Poisson::new(lambda).expect("positive finite rate");
    p.sample(rng).min(f64::from(u32::MAX)) as u32
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn render_text(tokens: &[&str], rng: &mut ChaCha8Rng) -> String {
    let mut text = String::new();
    let mut i = 0;
    while i < tokens.len() {
        let len = rng.random_range(5..=16).min(tokens.len() - i);
        for k in 0..len {
            if !text.is_empty() {
                text.push(' ');
            }
            let w = tokens[i + k];
            if k == 0 {
                text.push_str(&capitalize(w));
            } else {
                text.push_str(w);
            }
            if k + 1 == len {
                text.push('.');
            } else if rng.random::<f64>() < 0.08 {
                text.push(',');
            }
        }
        i += len;
    }
    text
}

/// Draws a corpus from `spec`. Deterministic for a fixed seed.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus> {
    spec.validate()?;
    let world = World::build(spec, spec.world_seed.unwrap_or(seed));
    let mut rng = stream_rng(seed, "synth-docs", &[]);

    let length_dist = if spec.length_sd > 0.0 && spec.length_mean > 0.0 {
        let shape = (spec.length_mean / spec.length_sd).powi(2);
        let scale = spec.length_sd * spec.length_sd / spec.length_mean;
        Some(Gamma::new(shape, scale).map_err(|e| Error::InvalidInput(e.to_string()))?)
    } else {
        None
    };
    let zipf = Zipf::new(spec.vocab_size as f64, spec.zipf_exponent)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut documents = Vec::with_capacity(spec.n_docs);
    let mut targets = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let length = match &length_dist {
            Some(g) => g.sample(&mut rng).round().max(1.0) as usize,
            None => spec.length_mean.round() as usize,
        };
        let counts: Vec<u32> = (0..spec.n_signal)
            .map(|_| poisson(&mut rng, spec.signal_rate))
            .collect();
        let n_signal_tokens: usize = counts.iter().map(|&c| c as usize).sum();
        let mut tokens: Vec<&str> = Vec::with_capacity(length.max(n_signal_tokens));
        for _ in 0..length.saturating_sub(n_signal_tokens) {
            let rank = zipf.sample(&mut rng) as usize;
            tokens.push(&world.filler[rank.clamp(1, spec.vocab_size) - 1]);
        }
        for (j, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                tokens.push(&world.signal[j]);
            }
        }
        tokens.shuffle(&mut rng);
        let text = render_text(&tokens, &mut rng);

        let gender = Some(u8::from(rng.random::<bool>()));
        let social_class = (spec.n_classes > 0).then(|| rng.random_range(0..spec.n_classes));

        let values = world
            .coefficients
            .iter()
            .zip(&spec.targets)
            .map(|(coef, t)| {
                let eta = t.intercept
                    + coef
                        .iter()
                        .zip(&counts)
                        .map(|(b, &c)| b * f64::from(c))
                        .sum::<f64>();
                let structural_zero = rng.random::<f64>() < spec.zero_inflation;
                let y = poisson(&mut rng, eta.min(30.0).exp());
                Some(if structural_zero { 0 } else { y })
            })
            .collect();

        documents.push(Document {
            id: format!("doc{seed}-{i:05}"),
            text,
            gender,
            social_class,
        });
        targets.push(TargetVector(values));
    }

    let mut rows: Vec<usize> = (0..spec.n_docs).collect();
    rows.shuffle(&mut rng);
    for &r in rows.iter().take(spec.n_missing_targets) {
        let j = rng.random_range(0..spec.targets.len());
        targets[r].0[j] = None;
    }
    rows.shuffle(&mut rng);
    for &r in rows.iter().take(spec.n_missing_controls) {
        documents[r].social_class = None;
    }

    Corpus::new(documents, targets, spec.target_names())
}

/// The signal words of the generative model, in coefficient order.
pub fn signal_tokens(spec: &SynthSpec, seed: u64) -> Vec<String> {
    World::build(spec, spec.world_seed.unwrap_or(seed)).signal
}

/// Coefficients actually used for each target.
pub fn planted_coefficients(spec: &SynthSpec, seed: u64) -> Vec<Vec<f64>> {
    World::build(spec, spec.world_seed.unwrap_or(seed)).coefficients
}
