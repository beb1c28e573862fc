//! Tokenization and epistemic-marker feature extraction.
//!
//! Features are occurrence *rates*: the count of each lexicon term divided
//! by the token count, plus two aggregates (total hedge rate, total booster
//! rate). Multiword phrases are matched greedily before shorter terms, and
//! a token consumed by a phrase is not re-counted for any single-word term
//! it contains — "a certain amount of doubt" counts the hedge phrase
//! "certain amount", not the booster "certain".

use serde::{Deserialize, Serialize};

use super::lexicon::MarkerLexicon;
use super::ScorerError;

/// Marker rates for one text, tied to the lexicon version that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Rate per lexicon term, in [`MarkerLexicon::feature_terms`] order.
    pub term_rates: Vec<f64>,
    /// Number of tokens in the text (positive).
    pub token_count: usize,
    /// Σ hedge counts / token_count.
    pub hedge_rate: f64,
    /// Σ booster counts / token_count.
    pub booster_rate: f64,
    /// Version of the lexicon these features were extracted with.
    pub lexicon_version: String,
}

impl FeatureVector {
    /// The dense model-input layout: per-term rates followed by the two
    /// aggregate rates.
    pub fn dense(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.term_rates.len() + 2);
        out.extend_from_slice(&self.term_rates);
        out.push(self.hedge_rate);
        out.push(self.booster_rate);
        out
    }

    /// Length of [`FeatureVector::dense`] for a lexicon with `terms` terms.
    pub fn dense_len(terms: usize) -> usize {
        terms + 2
    }
}

/// Lowercase Unicode word tokenization.
///
/// Tokens are maximal runs of alphanumeric characters plus interior
/// apostrophes (`don't` stays one token); typographic apostrophes are
/// normalised to `'`. Everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.to_lowercase().chars() {
        let ch = if ch == '\u{2019}' { '\'' } else { ch };
        if ch.is_alphanumeric() || ch == '\'' {
            current.push(ch);
        } else if !current.is_empty() {
            push_token(&mut tokens, std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        push_token(&mut tokens, current);
    }
    tokens
}

/// Strip apostrophes that ended up at token edges (quoting artifacts), then
/// keep the token if anything remains.
fn push_token(tokens: &mut Vec<String>, raw: String) {
    let trimmed = raw.trim_matches('\'');
    if !trimmed.is_empty() {
        tokens.push(trimmed.to_string());
    }
}

/// Count marker occurrences in `text` and normalise by token count.
///
/// Errors when the text is empty or contains no tokens (rates would divide
/// by zero).
pub fn extract_features(
    text: &str,
    lexicon: &MarkerLexicon,
) -> Result<FeatureVector, ScorerError> {
    if text.trim().is_empty() {
        return Err(ScorerError::EmptyText);
    }
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(ScorerError::NoTokens {
            text: text.chars().take(60).collect(),
        });
    }

    // Terms in canonical order; each maps to a feature slot.
    let terms = lexicon.feature_terms();
    let hedge_count = lexicon.hedges().len();

    // Group term token-sequences by first token, longest first, so scanning
    // is greedy: at each position the longest matching phrase wins.
    let mut by_first: std::collections::HashMap<&str, Vec<(Vec<&str>, usize)>> =
        std::collections::HashMap::new();
    for (slot, term) in terms.iter().enumerate() {
        let parts: Vec<&str> = term.split_whitespace().collect();
        by_first.entry(parts[0]).or_default().push((parts, slot));
    }
    for candidates in by_first.values_mut() {
        candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));
    }

    let mut counts = vec![0usize; terms.len()];
    let mut i = 0;
    while i < tokens.len() {
        let mut advanced = 1;
        if let Some(candidates) = by_first.get(tokens[i].as_str()) {
            for (parts, slot) in candidates {
                if i + parts.len() <= tokens.len()
                    && parts
                        .iter()
                        .zip(&tokens[i..i + parts.len()])
                        .all(|(p, t)| *p == t.as_str())
                {
                    counts[*slot] += 1;
                    advanced = parts.len();
                    break; // greedy: longest match consumed
                }
            }
        }
        i += advanced;
    }

    let token_count = tokens.len();
    let n = token_count as f64;
    let term_rates: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let hedge_rate = counts[..hedge_count].iter().sum::<usize>() as f64 / n;
    let booster_rate = counts[hedge_count..].iter().sum::<usize>() as f64 / n;
    Ok(FeatureVector {
        term_rates,
        token_count,
        hedge_rate,
        booster_rate,
        lexicon_version: lexicon.version().to_string(),
    })
}
