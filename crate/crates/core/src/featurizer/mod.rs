//! Sublinear TF-IDF features over concatenated word and character n-grams,
//! followed by weighted control-variable (and optional age-11) columns.
//!
//! For a document with raw count `tf` of feature `t`, the text block holds
//! `(1 + ln tf) · idf_t` with `idf_t = ln((1 + n_docs) / (1 + df_t)) + 1`,
//! scaled to unit L2 norm. The auxiliary block is appended after
//! normalization and is not itself normalized:
//!
//! ```text
//! [ ctrl_weight · gender | ctrl_weight · onehot(class) | a11_weight · age11 ]
//! ```

mod table;
mod tokenize;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use table::{FoldFeatures, GramTable};
pub use tokenize::{collapse_whitespace, tokenize};
pub(crate) use tokenize::{for_each_gram, slot, slot_kind_order, N_SLOTS};

pub const MAX_C_NGRAM: usize = 8;
pub const MAX_W_NGRAM: usize = 5;
/// Width of the age-11 prediction block.
pub const A11_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GramKind {
    Word,
    Char,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureKey {
    pub kind: GramKind,
    pub order: usize,
    pub gram: String,
}

impl FeatureKey {
    pub fn word(gram: &str) -> Self {
        FeatureKey {
            kind: GramKind::Word,
            order: gram.split(' ').count(),
            gram: gram.to_string(),
        }
    }

    pub fn char(gram: &str) -> Self {
        FeatureKey {
            kind: GramKind::Char,
            order: gram.chars().count(),
            gram: gram.to_string(),
        }
    }
}

/// Which n-gram families are case-folded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lowercase {
    Char,
    Word,
    Both,
    None,
}

impl Lowercase {
    pub const ALL: [Lowercase; 4] = [Lowercase::Char, Lowercase::Word, Lowercase::Both, Lowercase::None];

    pub fn words(self) -> bool {
        matches!(self, Lowercase::Word | Lowercase::Both)
    }

    pub fn chars(self) -> bool {
        matches!(self, Lowercase::Char | Lowercase::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Lowercase::Char => "char",
            Lowercase::Word => "word",
            Lowercase::Both => "both",
            Lowercase::None => "none",
        }
    }
}

impl fmt::Display for Lowercase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lowercase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char" => Ok(Lowercase::Char),
            "word" => Ok(Lowercase::Word),
            "both" => Ok(Lowercase::Both),
            "none" => Ok(Lowercase::None),
            other => Err(Error::Config(format!(
                "lowercase must be one of char, word, both, none; got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturizerConfig {
    pub c_ngmax: usize,
    pub w_ngmax: usize,
    pub min_df: usize,
    pub lowercase: Lowercase,
    pub ctrl_weight: f64,
    pub a11_weight: f64,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            c_ngmax: 5,
            w_ngmax: 3,
            min_df: 2,
            lowercase: Lowercase::Word,
            ctrl_weight: 0.5,
            a11_weight: 0.0,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("featurizer: {m}")));
        if self.c_ngmax > MAX_C_NGRAM {
            return bad(format!("c_ngmax must be in 0..={MAX_C_NGRAM}, got {}", self.c_ngmax));
        }
        if self.w_ngmax > MAX_W_NGRAM {
            return bad(format!("w_ngmax must be in 0..={MAX_W_NGRAM}, got {}", self.w_ngmax));
        }
        if self.c_ngmax + self.w_ngmax == 0 {
            return bad("at least one of c_ngmax, w_ngmax must be positive".into());
        }
        if self.min_df == 0 {
            return bad("min_df must be at least 1".into());
        }
        for (name, w) in [("ctrl_weight", self.ctrl_weight), ("a11_weight", self.a11_weight)] {
            if !(0.0..=1.0).contains(&w) {
                return bad(format!("{name} must be in [0, 1], got {w}"));
            }
        }
        Ok(())
    }

    /// Whether this config and `other` enumerate the same n-grams.
    pub fn same_extraction(&self, other: &FeaturizerConfig) -> bool {
        self.c_ngmax == other.c_ngmax
            && self.w_ngmax == other.w_ngmax
            && (self.w_ngmax == 0 || self.lowercase.words() == other.lowercase.words())
            && (self.c_ngmax == 0 || self.lowercase.chars() == other.lowercase.chars())
    }
}

/// Layout of the columns appended after the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxLayout {
    pub n_classes: u32,
    pub a11: bool,
}

impl AuxLayout {
    pub fn width(&self) -> usize {
        1 + self.n_classes as usize + if self.a11 { A11_WIDTH } else { 0 }
    }
}

/// Occurrence counts of every n-gram of `text`.
pub fn extract_ngrams(text: &str, config: &FeaturizerConfig) -> BTreeMap<FeatureKey, u32> {
    let mut out = BTreeMap::new();
    for_each_gram(text, config, |s, g| {
        let (kind, order) = slot_kind_order(s);
        *out.entry(FeatureKey {
            kind,
            order,
            gram: g.to_string(),
        })
        .or_insert(0) += 1;
    });
    out
}

pub fn idf(n_docs: usize, df: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + f64::from(df))).ln() + 1.0
}

type Lookup = Vec<FxHashMap<Arc<str>, u32>>;

/// A fitted vocabulary with document frequencies and IDF weights.
#[derive(Debug)]
pub struct FeaturizerModel {
    config: FeaturizerConfig,
    slots: Vec<u8>,
    grams: Vec<Arc<str>>,
    df: Vec<u32>,
    idf: Vec<f64>,
    n_docs: usize,
    aux: AuxLayout,
    lookup: OnceLock<Lookup>,
}

impl Clone for FeaturizerModel {
    fn clone(&self) -> Self {
        FeaturizerModel {
            config: self.config,
            slots: self.slots.clone(),
            grams: self.grams.clone(),
            df: self.df.clone(),
            idf: self.idf.clone(),
            n_docs: self.n_docs,
            aux: self.aux,
            lookup: OnceLock::new(),
        }
    }
}

impl PartialEq for FeaturizerModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.slots == other.slots
            && self.grams == other.grams
            && self.df == other.df
            && self.n_docs == other.n_docs
            && self.aux == other.aux
    }
}

impl FeaturizerModel {
    /// Learns the vocabulary of `corpus`. Features with document frequency
    /// below `min_df` are dropped.
    pub fn fit(corpus: &Corpus, config: &FeaturizerConfig) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot fit a featurizer on an empty corpus".into()));
        }
        config.validate()?;
        let table = GramTable::build(corpus.documents(), config);
        let rows: Vec<usize> = (0..corpus.len()).collect();
        Ok(table.fit_rows(corpus, &rows, config)?.model)
    }

    /// Rebuilds a model from serialized parts. `records` must be sorted by
    /// key, unique, and satisfy the `min_df` cutoff.
    pub fn from_parts(
        config: FeaturizerConfig,
        records: Vec<(FeatureKey, u32)>,
        n_docs: usize,
        aux: AuxLayout,
    ) -> Result<Self> {
        config.validate()?;
        for w in records.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Format("vocabulary records not strictly sorted".into()));
            }
        }
        let mut slots = Vec::with_capacity(records.len());
        let mut grams = Vec::with_capacity(records.len());
        let mut df = Vec::with_capacity(records.len());
        for (key, d) in records {
            let max = match key.kind {
                GramKind::Word => config.w_ngmax,
                GramKind::Char => config.c_ngmax,
            };
            if key.order == 0 || key.order > max {
                return Err(Error::Format(format!("feature order {} out of range", key.order)));
            }
            if (d as usize) < config.min_df || d as usize > n_docs {
                return Err(Error::Format(format!("document frequency {d} out of range")));
            }
            slots.push(slot(key.kind, key.order) as u8);
            grams.push(Arc::from(key.gram));
            df.push(d);
        }
        Ok(Self::assemble(config, slots, grams, df, n_docs, aux))
    }

    pub(crate) fn assemble(
        config: FeaturizerConfig,
        slots: Vec<u8>,
        grams: Vec<Arc<str>>,
        df: Vec<u32>,
        n_docs: usize,
        aux: AuxLayout,
    ) -> Self {
        let idf = df.iter().map(|&d| idf(n_docs, d)).collect();
        FeaturizerModel {
            config,
            slots,
            grams,
            df,
            idf,
            n_docs,
            aux,
            lookup: OnceLock::new(),
        }
    }

    pub fn config(&self) -> &FeaturizerConfig {
        &self.config
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn aux_layout(&self) -> AuxLayout {
        self.aux
    }

    pub fn vocab_len(&self) -> usize {
        self.grams.len()
    }

    /// Total column count: vocabulary plus auxiliary block.
    pub fn n_features(&self) -> usize {
        self.vocab_len() + self.aux.width()
    }

    pub fn key(&self, col: usize) -> FeatureKey {
        let (kind, order) = slot_kind_order(self.slots[col] as usize);
        FeatureKey {
            kind,
            order,
            gram: self.grams[col].to_string(),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = FeatureKey> + '_ {
        (0..self.vocab_len()).map(|c| self.key(c))
    }

    pub fn df(&self) -> &[u32] {
        &self.df
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn column_of(&self, key: &FeatureKey) -> Option<usize> {
        self.lookup()[slot(key.kind, key.order)]
            .get(key.gram.as_str())
            .map(|&c| c as usize)
    }

    fn lookup(&self) -> &Lookup {
        self.lookup.get_or_init(|| {
            let mut maps: Lookup = vec![FxHashMap::default(); N_SLOTS];
            for (col, (s, g)) in self.slots.iter().zip(&self.grams).enumerate() {
                maps[*s as usize].insert(Arc::clone(g), col as u32);
            }
            maps
        })
    }

    fn text_entries(&self, text: &str) -> Vec<(u32, u32)> {
        let lookup = self.lookup();
        let mut counts: FxHashMap<u32, u32> = FxHashMap::default();
        for_each_gram(text, &self.config, |s, g| {
            if let Some(&c) = lookup[s].get(g) {
                *counts.entry(c).or_insert(0) += 1;
            }
        });
        counts.into_iter().collect()
    }

    /// One finished row from `(column, tf)` pairs of the text block.
    pub(crate) fn assemble_row(
        &self,
        mut text: Vec<(u32, u32)>,
        doc: &Document,
        a11: Option<&[f64; A11_WIDTH]>,
    ) -> Vec<(usize, f64)> {
        text.sort_unstable_by_key(|e| e.0);
        let mut row: Vec<(usize, f64)> = text
            .iter()
            .map(|&(c, tf)| {
                let c = c as usize;
                (c, (1.0 + f64::from(tf).ln()) * self.idf[c])
            })
            .collect();
        let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|e| e.1 /= norm);
        }
        let base = self.vocab_len();
        let w = self.config.ctrl_weight;
        if let Some(g) = doc.gender {
            row.push((base, w * f64::from(g)));
        }
        if let Some(c) = doc.social_class.filter(|&c| c < self.aux.n_classes) {
            row.push((base + 1 + c as usize, w));
        }
        if let Some(a) = a11 {
            let start = base + 1 + self.aux.n_classes as usize;
            row.extend(a.iter().enumerate().map(|(k, v)| (start + k, self.config.a11_weight * v)));
        }
        row
    }

    pub(crate) fn check_a11(&self, rows: usize, a11: Option<&[[f64; A11_WIDTH]]>) -> Result<()> {
        match (self.aux.a11, a11) {
            (true, Some(a)) if a.len() == rows => Ok(()),
            (true, Some(a)) => Err(Error::Dimension(format!(
                "{} age-11 score rows for {rows} documents",
                a.len()
            ))),
            (true, None) => Err(Error::Dimension("model expects age-11 scores".into())),
            (false, Some(_)) => Err(Error::Dimension("model has no age-11 block".into())),
            (false, None) => Ok(()),
        }
    }

    pub(crate) fn build_matrix(&self, rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        let mut m = CsrMatrix::with_cols(self.n_features());
        for r in rows {
            m.push_row(r).expect("columns are ordered and in range");
        }
        m
    }

    /// Feature matrix of `corpus`; out-of-vocabulary grams are ignored.
    pub fn transform(&self, corpus: &Corpus, a11: Option<&[[f64; A11_WIDTH]]>) -> Result<CsrMatrix> {
        self.check_a11(corpus.len(), a11)?;
        self.lookup();
        let rows: Vec<Vec<(usize, f64)>> = corpus
            .documents()
            .par_iter()
            .enumerate()
            .map(|(i, d)| self.assemble_row(self.text_entries(&d.text), d, a11.map(|a| &a[i])))
            .collect();
        Ok(self.build_matrix(rows))
    }
}
