//! Assertiveness scoring engines and their shared evaluation harness.
//!
//! Two engines produce an [`AssertivenessScore`] for arbitrary text:
//!
//! * [`forest`] — an offline random-forest regressor over epistemic-marker
//!   rates ([`features`], [`lexicon`]); train once, score forever, no
//!   network.
//! * [`prompt`] — a remote model prompted with the same guidance human
//!   coders received, through the chat [`adapter`](crate::adapter).
//!
//! Scores are canonically in `[0, 1]`; `raw_value` keeps the scorer-native
//! 0–10 value for evaluation against human labels. [`evaluate_scorer`]
//! reports both a raw MSE (0–10 scale) and a standardized MSE where
//! predictions and labels are independently z-scored — for z-scored series,
//! `MSE = 2·(1 − r)` with `r` the Pearson correlation.

pub mod features;
pub mod forest;
pub mod lexicon;
pub mod prompt;

use serde::{Deserialize, Serialize};

pub use features::{extract_features, tokenize, FeatureVector};
pub use forest::{predict_forest, train_forest, ForestModel, ForestParams};
pub use lexicon::MarkerLexicon;
pub use prompt::{prompt_score, PromptScorer, PromptScorerConfig};

use crate::adapter::AdapterError;
use crate::corpus::AnnotatedSample;
use crate::stats;

/// A linguistic-assertiveness score for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertivenessScore {
    /// Canonical score in `[0, 1]`.
    pub value: f64,
    /// Scorer-native value (0–10 for both built-in engines), after clamping.
    pub raw_value: f64,
    /// Which engine produced this (`"forest"`, `"prompt:<model>"`).
    pub scorer_id: String,
    /// Set when the parsed raw value fell outside the scorer's scale and was
    /// clamped.
    pub clamped: bool,
    /// How many reply retries were needed (prompt scorer only).
    pub retries_used: u32,
}

/// Anything that can rate the assertiveness of a text.
pub trait Scorer {
    /// Stable identifier, embedded in every score this engine produces.
    fn id(&self) -> String;
    /// Score one text.
    fn score_text(&self, text: &str) -> Result<AssertivenessScore, ScorerError>;
}

/// The offline engine: a trained forest plus the lexicon it was trained
/// with.
pub struct ForestScorer {
    pub model: ForestModel,
    pub lexicon: MarkerLexicon,
}

impl Scorer for ForestScorer {
    fn id(&self) -> String {
        "forest".to_string()
    }

    fn score_text(&self, text: &str) -> Result<AssertivenessScore, ScorerError> {
        predict_forest(&self.model, text, &self.lexicon)
    }
}

/// Evaluation of one scorer against human-annotated samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorerEvaluation {
    /// MSE between independently z-scored predictions and labels; `None`
    /// when the predictions have zero variance (standardisation undefined).
    pub mse_standardized: Option<f64>,
    /// MSE on the raw 0–10 scale.
    pub mse_raw: f64,
    /// Number of samples evaluated.
    pub n: usize,
    /// Set when `mse_standardized` is `None`, explaining why.
    pub note: Option<String>,
}

/// MSE between z-scored series; `None` if either side has zero variance.
pub fn standardized_mse(predictions: &[f64], labels: &[f64]) -> Option<f64> {
    let zp = stats::zscore(predictions)?;
    let zl = stats::zscore(labels)?;
    Some(
        zp.iter()
            .zip(&zl)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / zp.len() as f64,
    )
}

/// Plain MSE on the native scale.
pub fn raw_mse(predictions: &[f64], labels: &[f64]) -> f64 {
    predictions
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / predictions.len() as f64
}

/// Score every sample and compare with the human mean labels.
///
/// Requires at least 3 samples and non-zero label variance. Prediction
/// failures on individual texts propagate as errors — an evaluation is
/// only meaningful over the full test set.
pub fn evaluate_scorer(
    scorer: &dyn Scorer,
    samples: &[AnnotatedSample],
) -> Result<ScorerEvaluation, ScorerError> {
    if samples.len() < 3 {
        return Err(ScorerError::EvaluationInvalid {
            detail: format!("need at least 3 test samples, found {}", samples.len()),
        });
    }
    let labels: Vec<f64> = samples.iter().map(|s| s.mean_score).collect();
    if stats::population_variance(&labels) == 0.0 {
        return Err(ScorerError::EvaluationInvalid {
            detail: "test labels have zero variance".into(),
        });
    }
    let mut predictions = Vec::with_capacity(samples.len());
    for sample in samples {
        predictions.push(scorer.score_text(&sample.text)?.raw_value);
    }
    let mse_standardized = standardized_mse(&predictions, &labels);
    let note = match mse_standardized {
        Some(_) => None,
        None => Some("standardized MSE undefined: predictions have zero variance".to_string()),
    };
    Ok(ScorerEvaluation {
        mse_standardized,
        mse_raw: raw_mse(&predictions, &labels),
        n: samples.len(),
        note,
    })
}

/// Errors from feature extraction, training, prediction, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("text is empty")]
    EmptyText,
    #[error("text has no tokens: {text:?}")]
    NoTokens { text: String },
    #[error("invalid lexicon: {detail}")]
    LexiconInvalid { detail: String },
    #[error("model was trained with lexicon {model:?} but got {lexicon:?}")]
    LexiconVersionMismatch { model: String, lexicon: String },
    #[error("feature vector has {found} values, model expects {expected}")]
    FeatureShapeMismatch { expected: usize, found: usize },
    #[error("invalid training data: {detail}")]
    TrainingDataInvalid { detail: String },
    #[error("model persistence: {detail}")]
    ModelFormat { detail: String },
    #[error("no parseable score in {attempts} replies; transcripts: {transcripts:?}")]
    UnparseableReply {
        attempts: u32,
        transcripts: Vec<String>,
    },
    #[error("invalid evaluation: {detail}")]
    EvaluationInvalid { detail: String },
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}
