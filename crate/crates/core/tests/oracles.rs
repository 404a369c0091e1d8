//! Library results against independent reference computations.

use std::collections::BTreeMap;

use proptest::prelude::*;

use textcount::featurizer::{extract_ngrams, idf, FeatureKey, FeaturizerConfig, Lowercase};

/// Reference enumeration: tokens by character class, char windows over a
/// whitespace-collapsed string.
fn reference_grams(text: &str, c: usize, w: usize, lower_words: bool, lower_chars: bool) -> BTreeMap<FeatureKey, u32> {
    let mut out = BTreeMap::new();
    let wt = if lower_words { text.to_lowercase() } else { text.to_string() };
    let mut toks: Vec<String> = Vec::new();
    let mut in_word = false;
    for ch in wt.chars() {
        if ch.is_alphanumeric() {
            if in_word {
                toks.last_mut().unwrap().push(ch);
            } else {
                toks.push(ch.to_string());
            }
            in_word = true;
        } else {
            in_word = false;
            if !ch.is_whitespace() {
                toks.push(ch.to_string());
            }
        }
    }
    for n in 1..=w {
        for win in toks.windows(n) {
            *out.entry(FeatureKey::word(&win.join(" "))).or_insert(0) += 1;
        }
    }
    let ct = if lower_chars { text.to_lowercase() } else { text.to_string() };
    let mut chars: Vec<char> = Vec::new();
    for ch in ct.chars() {
        let ch = if ch.is_whitespace() { ' ' } else { ch };
        if !(ch == ' ' && chars.last() == Some(&' ')) {
            chars.push(ch);
        }
    }
    for n in 1..=c {
        for win in chars.windows(n) {
            *out.entry(FeatureKey::char(&win.iter().collect::<String>())).or_insert(0) += 1;
        }
    }
    out
}

#[test]
fn idf_matches_formula() {
    for (n, df) in [(3usize, 3u32), (3, 1), (10, 4), (2000, 1)] {
        let want = ((1.0 + n as f64) / (1.0 + f64::from(df))).ln() + 1.0;
        assert!((idf(n, df) - want).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn ngram_counts_match_reference(
        text in "[ a-cA-C.,!\\n\\té]{0,40}",
        c in 0usize..=8,
        w in 0usize..=5,
        lowercase in prop_oneof![Just(Lowercase::Char), Just(Lowercase::Word), Just(Lowercase::Both), Just(Lowercase::None)],
    ) {
        let config = FeaturizerConfig { c_ngmax: c, w_ngmax: w, lowercase, ..FeaturizerConfig::default() };
        let want = reference_grams(&text, c, w, lowercase.words(), lowercase.chars());
        prop_assert_eq!(extract_ngrams(&text, &config), want);
    }
}
