//! Interned n-gram counts of a whole corpus.
//!
//! Cross-validation refits the vocabulary once per fold. Extracting the
//! n-grams of every document once and reusing the interned ids across folds
//! avoids re-hashing strings; the resulting models and matrices are identical
//! to those of [`FeaturizerModel::fit`] and [`FeaturizerModel::transform`].

use std::sync::Arc;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::{for_each_gram, AuxLayout, FeaturizerConfig, FeaturizerModel, A11_WIDTH, N_SLOTS};
use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub struct GramTable {
    extraction: FeaturizerConfig,
    slots: Vec<u8>,
    grams: Vec<Arc<str>>,
    /// Per document: `(gram id, tf)` sorted by id.
    docs: Vec<Vec<(u32, u32)>>,
}

/// A vocabulary fitted on a subset of a [`GramTable`], with the id → column map.
pub struct FoldFeatures {
    pub model: FeaturizerModel,
    id_to_col: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl GramTable {
    pub fn build(documents: &[Document], config: &FeaturizerConfig) -> Self {
        let mut intern: Vec<FxHashMap<Arc<str>, u32>> = vec![FxHashMap::default(); N_SLOTS];
        let mut slots: Vec<u8> = Vec::new();
        let mut grams: Vec<Arc<str>> = Vec::new();
        let mut docs = Vec::with_capacity(documents.len());
        // dense scratch counts indexed by gram id
        let mut tf: Vec<u32> = Vec::new();
        let mut touched: Vec<u32> = Vec::new();
        for d in documents {
            for_each_gram(&d.text, config, |s, g| {
                let id = match intern[s].get(g) {
                    Some(&id) => id,
                    None => {
                        let id = grams.len() as u32;
                        let g: Arc<str> = Arc::from(g);
                        intern[s].insert(Arc::clone(&g), id);
                        grams.push(g);
                        slots.push(s as u8);
                        tf.push(0);
                        id
                    }
                };
                let slot = &mut tf[id as usize];
                if *slot == 0 {
                    touched.push(id);
                }
                *slot += 1;
            });
            touched.sort_unstable();
            let row: Vec<(u32, u32)> = touched
                .iter()
                .map(|&id| (id, std::mem::take(&mut tf[id as usize])))
                .collect();
            touched.clear();
            docs.push(row);
        }
        GramTable {
            extraction: *config,
            slots,
            grams,
            docs,
        }
    }

    pub fn n_grams(&self) -> usize {
        self.grams.len()
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    /// Fits a vocabulary on the given rows only.
    pub fn fit_rows(
        &self,
        corpus: &Corpus,
        rows: &[usize],
        config: &FeaturizerConfig,
    ) -> Result<FoldFeatures> {
        config.validate()?;
        if !self.extraction.same_extraction(config) {
            return Err(Error::InvalidInput(
                "gram table was built with a different n-gram configuration".into(),
            ));
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("cannot fit a featurizer on zero rows".into()));
        }
        let mut df = vec![0u32; self.grams.len()];
        for &r in rows {
            for &(id, _) in &self.docs[r] {
                df[id as usize] += 1;
            }
        }
        let mut selected: Vec<u32> = (0..self.grams.len() as u32)
            .filter(|&id| df[id as usize] as usize >= config.min_df)
            .collect();
        if selected.is_empty() {
            return Err(Error::EmptyVocabulary {
                min_df: config.min_df,
            });
        }
        selected.sort_unstable_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            self.slots[a]
                .cmp(&self.slots[b])
                .then_with(|| self.grams[a].cmp(&self.grams[b]))
        });
        let mut id_to_col = vec![ABSENT; self.grams.len()];
        for (col, &id) in selected.iter().enumerate() {
            id_to_col[id as usize] = col as u32;
        }
        let n_classes = rows
            .iter()
            .filter_map(|&r| corpus.documents()[r].social_class)
            .max()
            .map_or(0, |c| c + 1);
        let model = FeaturizerModel::assemble(
            *config,
            selected.iter().map(|&id| self.slots[id as usize]).collect(),
            selected.iter().map(|&id| Arc::clone(&self.grams[id as usize])).collect(),
            selected.iter().map(|&id| df[id as usize]).collect(),
            rows.len(),
            AuxLayout {
                n_classes,
                a11: config.a11_weight > 0.0,
            },
        );
        Ok(FoldFeatures { model, id_to_col })
    }
}

impl FoldFeatures {
    /// Feature rows for `rows` of the table's corpus. `a11` is indexed like `rows`.
    pub fn transform_rows(
        &self,
        table: &GramTable,
        corpus: &Corpus,
        rows: &[usize],
        a11: Option<&[[f64; A11_WIDTH]]>,
    ) -> Result<CsrMatrix> {
        self.model.check_a11(rows.len(), a11)?;
        let out: Vec<Vec<(usize, f64)>> = rows
            .par_iter()
            .enumerate()
            .map(|(k, &r)| {
                let text: Vec<(u32, u32)> = table.docs[r]
                    .iter()
                    .filter_map(|&(id, tf)| {
                        let c = self.id_to_col[id as usize];
                        (c != ABSENT).then_some((c, tf))
                    })
                    .collect();
                self.model
                    .assemble_row(text, &corpus.documents()[r], a11.map(|a| &a[k]))
            })
            .collect();
        Ok(self.model.build_matrix(out))
    }
}
