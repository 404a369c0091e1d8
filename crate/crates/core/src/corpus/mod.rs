//! Labelled document collections: loading, validation, filtering and
//! synthetic generation.

mod io;
pub mod synth;

use std::collections::HashSet;

use crate::error::{Error, Result};

pub use io::{corpus_to_csv, load_corpus, parse_corpus, write_corpus};
pub use synth::{synth_corpus, SynthSpec, SynthTarget};

/// Target names of the current-health task.
pub const TASK_A_TARGETS: [&str; 3] = ["total", "anxiety", "depression"];
/// Target names of the future-distress task.
pub const TASK_B_TARGETS: [&str; 3] = ["distress_23", "distress_33", "distress_42"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Binary flag, `None` when missing.
    pub gender: Option<u8>,
    /// Class code in `0..K`, `None` when missing.
    pub social_class: Option<u32>,
}

/// Count labels of one document, parallel to [`Corpus::target_names`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetVector(pub Vec<Option<u32>>);

impl TargetVector {
    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }
}

/// Documents with parallel target vectors. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    targets: Vec<TargetVector>,
    target_names: Vec<String>,
}

impl Corpus {
    pub fn new(
        documents: Vec<Document>,
        targets: Vec<TargetVector>,
        target_names: Vec<String>,
    ) -> Result<Self> {
        if documents.len() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} documents but {} target vectors",
                documents.len(),
                targets.len()
            )));
        }
        if let Some(t) = targets.iter().find(|t| t.0.len() != target_names.len()) {
            return Err(Error::Dimension(format!(
                "target vector of length {} for {} target names",
                t.0.len(),
                target_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if !seen.insert(d.id.as_str()) {
                return Err(Error::DuplicateId(d.id.clone()));
            }
            if d.gender.is_some_and(|g| g > 1) {
                return Err(Error::InvalidInput(format!(
                    "document `{}`: gender must be 0 or 1",
                    d.id
                )));
            }
        }
        Ok(Corpus {
            documents,
            targets,
            target_names,
        })
    }

    /// A corpus of unlabelled documents.
    pub fn unlabelled(documents: Vec<Document>) -> Result<Self> {
        let targets = vec![TargetVector::default(); documents.len()];
        Corpus::new(documents, targets, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn targets(&self) -> &[TargetVector] {
        &self.targets
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    pub fn target_index(&self, name: &str) -> Option<usize> {
        self.target_names.iter().position(|n| n == name)
    }

    /// One target column, with missing values preserved.
    pub fn target_column(&self, name: &str) -> Result<Vec<Option<u32>>> {
        let j = self
            .target_index(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.targets.iter().map(|t| t.0[j]).collect())
    }

    /// One target column that must be complete.
    pub fn target_counts(&self, name: &str) -> Result<Vec<u32>> {
        self.target_column(name)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "target `{name}` missing for document `{}`",
                        self.documents[i].id
                    ))
                })
            })
            .collect()
    }

    /// Sub-corpus of the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Corpus {
        Corpus {
            documents: rows.iter().map(|&i| self.documents[i].clone()).collect(),
            targets: rows.iter().map(|&i| self.targets[i].clone()).collect(),
            target_names: self.target_names.clone(),
        }
    }

    /// Largest social-class code plus one (0 when no class is present).
    pub fn class_count(&self) -> u32 {
        self.documents
            .iter()
            .filter_map(|d| d.social_class)
            .max()
            .map_or(0, |c| c + 1)
    }
}

/// Keeps the rows that have every target, both control variables and
/// non-blank text. Order is preserved.
pub fn filter_complete(corpus: &Corpus) -> Corpus {
    let mut dropped_targets = 0usize;
    let mut dropped_controls = 0usize;
    let mut dropped_text = 0usize;
    let keep: Vec<usize> = (0..corpus.len())
        .filter(|&i| {
            let d = &corpus.documents[i];
            if !corpus.targets[i].is_complete() {
                dropped_targets += 1;
                false
            } else if d.gender.is_none() || d.social_class.is_none() {
                dropped_controls += 1;
                false
            } else if d.text.trim().is_empty() {
                dropped_text += 1;
                false
            } else {
                true
            }
        })
        .collect();
    if keep.len() != corpus.len() {
        log::info!(
            "filter_complete: kept {} of {} rows ({} missing targets, {} missing controls, {} blank text)",
            keep.len(),
            corpus.len(),
            dropped_targets,
            dropped_controls,
            dropped_text
        );
    }
    corpus.subset(&keep)
}
