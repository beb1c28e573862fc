//! Epistemic-marker lexicon: versioned sets of hedge and booster terms.
//!
//! Terms may be single words (`"might"`) or multiword phrases
//! (`"tend to"`, `"in my opinion"`). All entries are lowercase and the two
//! sets are disjoint; both properties are enforced at construction so the
//! feature extractor never has to disambiguate.
//!
//! A curated default lexicon ships embedded in the binary (126 hedges,
//! 82 boosters, version `reconstruction-v1`). Because trained models are
//! only meaningful against the exact marker inventory they were trained
//! with, every lexicon carries a `version` string that is stamped into
//! feature vectors and persisted models, and checked at prediction time.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::ScorerError;

/// Embedded default lexicon source (JSON).
const DEFAULT_LEXICON_JSON: &str = include_str!("../../data/default_lexicon.json");

/// A versioned, validated set of hedges and boosters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LexiconFile", into = "LexiconFile")]
pub struct MarkerLexicon {
    version: String,
    hedges: BTreeSet<String>,
    boosters: BTreeSet<String>,
}

/// On-disk shape: `{"version": ..., "hedges": [...], "boosters": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LexiconFile {
    version: String,
    hedges: Vec<String>,
    boosters: Vec<String>,
}

impl TryFrom<LexiconFile> for MarkerLexicon {
    type Error = ScorerError;
    fn try_from(file: LexiconFile) -> Result<Self, Self::Error> {
        MarkerLexicon::new(file.version, file.hedges, file.boosters)
    }
}

impl From<MarkerLexicon> for LexiconFile {
    fn from(lexicon: MarkerLexicon) -> Self {
        LexiconFile {
            version: lexicon.version,
            hedges: lexicon.hedges.into_iter().collect(),
            boosters: lexicon.boosters.into_iter().collect(),
        }
    }
}

impl MarkerLexicon {
    /// Build a lexicon, enforcing the invariants: entries non-empty,
    /// lowercase, and the hedge/booster sets disjoint.
    pub fn new(
        version: impl Into<String>,
        hedges: impl IntoIterator<Item = String>,
        boosters: impl IntoIterator<Item = String>,
    ) -> Result<MarkerLexicon, ScorerError> {
        let version = version.into();
        if version.trim().is_empty() {
            return Err(ScorerError::LexiconInvalid {
                detail: "lexicon version must be non-empty".into(),
            });
        }
        let clean = |set: BTreeSet<String>, kind: &str| -> Result<BTreeSet<String>, ScorerError> {
            for term in &set {
                if term.trim().is_empty() {
                    return Err(ScorerError::LexiconInvalid {
                        detail: format!("{kind} set contains an empty term"),
                    });
                }
                if term != &term.to_lowercase() || term.trim() != term {
                    return Err(ScorerError::LexiconInvalid {
                        detail: format!("{kind} term {term:?} must be lowercase and trimmed"),
                    });
                }
            }
            Ok(set)
        };
        let hedges = clean(hedges.into_iter().collect(), "hedge")?;
        let boosters = clean(boosters.into_iter().collect(), "booster")?;
        if let Some(shared) = hedges.intersection(&boosters).next() {
            return Err(ScorerError::LexiconInvalid {
                detail: format!("term {shared:?} appears in both hedges and boosters"),
            });
        }
        Ok(MarkerLexicon {
            version,
            hedges,
            boosters,
        })
    }

    /// Parse a lexicon from its JSON file format.
    pub fn from_json_str(json: &str) -> Result<MarkerLexicon, ScorerError> {
        serde_json::from_str(json).map_err(|e| ScorerError::LexiconInvalid {
            detail: e.to_string(),
        })
    }

    /// Load a lexicon from a JSON file.
    pub fn from_path(path: &Path) -> Result<MarkerLexicon, ScorerError> {
        let body = std::fs::read_to_string(path).map_err(|e| ScorerError::LexiconInvalid {
            detail: format!("{}: {e}", path.display()),
        })?;
        Self::from_json_str(&body)
    }

    /// The curated built-in lexicon.
    pub fn default_lexicon() -> &'static MarkerLexicon {
        static DEFAULT: OnceLock<MarkerLexicon> = OnceLock::new();
        DEFAULT.get_or_init(|| {
            MarkerLexicon::from_json_str(DEFAULT_LEXICON_JSON)
                .expect("embedded default lexicon is valid")
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn hedges(&self) -> &BTreeSet<String> {
        &self.hedges
    }

    pub fn boosters(&self) -> &BTreeSet<String> {
        &self.boosters
    }

    /// All marker terms in canonical feature order: hedges (sorted), then
    /// boosters (sorted). Feature vectors and trained models both rely on
    /// this ordering.
    pub fn feature_terms(&self) -> Vec<&str> {
        self.hedges
            .iter()
            .chain(self.boosters.iter())
            .map(String::as_str)
            .collect()
    }

    /// Number of marker features (`hedges + boosters`).
    pub fn term_count(&self) -> usize {
        self.hedges.len() + self.boosters.len()
    }
}
