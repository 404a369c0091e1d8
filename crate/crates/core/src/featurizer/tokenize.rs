//! Word tokenization and raw n-gram enumeration.

use super::{FeaturizerConfig, GramKind, MAX_C_NGRAM, MAX_W_NGRAM};

/// Splits text into maximal runs of letters/digits; every other
/// non-whitespace character becomes a token of its own.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let owned;
    let text = if lowercase {
        owned = text.to_lowercase();
        owned.as_str()
    } else {
        text
    };
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.push(c);
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Text with every whitespace run replaced by a single space.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_ws = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !in_ws {
                out.push(' ');
            }
            in_ws = true;
        } else {
            out.push(c);
            in_ws = false;
        }
    }
    out
}

/// Dense slot number of a `(kind, order)` pair. Slots sort like
/// `(kind, order)` so that `(slot, gram)` order equals feature-key order.
#[inline]
pub(crate) fn slot(kind: GramKind, order: usize) -> usize {
    match kind {
        GramKind::Word => order - 1,
        GramKind::Char => MAX_W_NGRAM + order - 1,
    }
}

#[inline]
pub(crate) fn slot_kind_order(slot: usize) -> (GramKind, usize) {
    if slot < MAX_W_NGRAM {
        (GramKind::Word, slot + 1)
    } else {
        (GramKind::Char, slot - MAX_W_NGRAM + 1)
    }
}

pub(crate) const N_SLOTS: usize = MAX_W_NGRAM + MAX_C_NGRAM;

/// Calls `f(slot, gram)` for every n-gram occurrence in `text`.
///
/// Word n-grams are space-joined token sequences; character n-grams run
/// over the whitespace-collapsed text, across word boundaries.
pub(crate) fn for_each_gram(text: &str, config: &FeaturizerConfig, mut f: impl FnMut(usize, &str)) {
    if config.w_ngmax > 0 {
        let tokens = tokenize(text, config.lowercase.words());
        let mut joined = String::new();
        let mut bounds = Vec::with_capacity(tokens.len());
        for t in &tokens {
            if !joined.is_empty() {
                joined.push(' ');
            }
            let start = joined.len();
            joined.push_str(t);
            bounds.push((start, joined.len()));
        }
        for n in 1..=config.w_ngmax.min(tokens.len()) {
            let s = slot(GramKind::Word, n);
            for i in 0..=tokens.len() - n {
                f(s, &joined[bounds[i].0..bounds[i + n - 1].1]);
            }
        }
    }
    if config.c_ngmax > 0 {
        let lowered;
        let base = if config.lowercase.chars() {
            lowered = text.to_lowercase();
            lowered.as_str()
        } else {
            text
        };
        let collapsed = collapse_whitespace(base);
        let mut offsets: Vec<usize> = collapsed.char_indices().map(|(i, _)| i).collect();
        let n_chars = offsets.len();
        offsets.push(collapsed.len());
        for n in 1..=config.c_ngmax.min(n_chars) {
            let s = slot(GramKind::Char, n);
            for i in 0..=n_chars - n {
                f(s, &collapsed[offsets[i]..offsets[i + n]]);
            }
        }
    }
}
