//! Linguistic-assertion audit: three-way classify whether an explanation
//! asserts something true, asserts something false, or asserts neither;
//! draw the certainty-stratified audit sample; and measure agreement
//! between model and human labels with Cohen's kappa.
//!
//! The default classification prompt asks for a bare `1` / `-1` / `0` and
//! the parser accepts exactly that (whitespace aside). Two alternative
//! prompt styles are shipped but flagged non-default: a 0–100 assertion
//! scale (whose replies are scores, not three-way labels — interpret them
//! yourself via [`classify_request`]) and a T/F/N letter form.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapter::{AdapterError, ChatAdapter, ChatMessage, ChatRequest, GenParams};
use crate::prompts;

/// Who produced an assertion label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rater {
    Model,
    Human,
}

/// A three-way assertion-direction label: +1 asserts true, −1 asserts
/// false, 0 asserts neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionLabel {
    pub value: i8,
    pub rater: Rater,
}

impl AssertionLabel {
    /// Validating constructor: the value must be −1, 0, or +1.
    pub fn new(value: i8, rater: Rater) -> Result<AssertionLabel, AuditError> {
        if !(-1..=1).contains(&value) {
            return Err(AuditError::BadLabelValue { value: value as i64 });
        }
        Ok(AssertionLabel { value, rater })
    }
}

/// Which classification prompt to send. Only [`Numeric`] replies parse into
/// three-way labels by default; the alternatives exist because they were
/// tried and found less interpretable, and remain available for manual use.
///
/// [`Numeric`]: AuditPromptStyle::Numeric
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditPromptStyle {
    /// Bare `1` / `-1` / `0` categorization (the default).
    #[default]
    Numeric,
    /// 0–100 assertion scale; replies are scores, not labels.
    Scale0To100,
    /// Single-letter `T` / `F` / `N`.
    TrueFalseNeither,
}

impl AuditPromptStyle {
    fn system_prompt(self) -> &'static str {
        match self {
            AuditPromptStyle::Numeric => prompts::ASSERTION_DIRECTION_PROMPT,
            AuditPromptStyle::Scale0To100 => prompts::ASSERTION_DIRECTION_SCALE_PROMPT,
            AuditPromptStyle::TrueFalseNeither => prompts::ASSERTION_DIRECTION_TFN_PROMPT,
        }
    }
}

/// Configuration for assertion classification.
#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Provider model name (snapshot names are configuration, never
    /// hard-coded).
    pub model_name: String,
    /// Sampling parameters for classification requests.
    pub params: GenParams,
    /// Prompt style; [`AuditPromptStyle::Numeric`] unless overridden.
    pub style: AuditPromptStyle,
    /// Additional attempts after an unparseable reply.
    pub max_retries: u32,
}

impl AuditConfig {
    pub fn new(model_name: impl Into<String>) -> AuditConfig {
        AuditConfig {
            model_name: model_name.into(),
            params: GenParams::default(),
            style: AuditPromptStyle::default(),
            max_retries: 2,
        }
    }
}

/// Build the classification request for `explanation`. Public so fixture
/// generators and the CLI produce byte-identical requests (replay stores
/// key on the hash).
pub fn classify_request(
    config: &AuditConfig,
    explanation: &str,
) -> Result<ChatRequest, AuditError> {
    if explanation.trim().is_empty() {
        return Err(AuditError::EmptyExplanation);
    }
    ChatRequest::new(
        config.model_name.clone(),
        vec![
            ChatMessage::system(config.style.system_prompt()),
            ChatMessage::user(explanation),
        ],
        config.params.clone(),
    )
    .map_err(AuditError::from)
}

/// Strict per-style reply parse. Anything but an exact (whitespace-trimmed)
/// token is a protocol violation and triggers a retry.
fn parse_label_reply(reply: &str, style: AuditPromptStyle) -> Option<i8> {
    let token = reply.trim();
    match style {
        AuditPromptStyle::Numeric => match token {
            "1" => Some(1),
            "-1" => Some(-1),
            "0" => Some(0),
            _ => None,
        },
        AuditPromptStyle::TrueFalseNeither => match token {
            "T" => Some(1),
            "F" => Some(-1),
            "N" => Some(0),
            _ => None,
        },
        AuditPromptStyle::Scale0To100 => None,
    }
}

/// Classify which direction an explanation asserts.
///
/// Sends the configured prompt and parses strictly one of `{1, -1, 0}`
/// (or `{T, F, N}` for that style); any other reply is retried up to the
/// budget and then surfaced with every transcript.
///
/// # Errors
///
/// Empty explanation, the [`AuditPromptStyle::Scale0To100`] style (its
/// replies are scores, not labels — build the request yourself and
/// interpret the score), transport errors, or persistent unparseable
/// replies.
pub fn classify_assertion(
    adapter: &ChatAdapter,
    config: &AuditConfig,
    explanation: &str,
) -> Result<AssertionLabel, AuditError> {
    if config.style == AuditPromptStyle::Scale0To100 {
        return Err(AuditError::UnsupportedStyle {
            detail: "the 0-100 scale prompt yields scores, not three-way labels; \
                     use classify_request and interpret the score directly"
                .to_string(),
        });
    }
    let request = classify_request(config, explanation)?;
    let mut transcripts = Vec::new();
    let attempts = config.max_retries + 1;
    for _ in 0..attempts {
        let exchange = adapter.send_chat(&request)?;
        match parse_label_reply(&exchange.reply_text, config.style) {
            Some(value) => return AssertionLabel::new(value, Rater::Model),
            None => transcripts.push(exchange.reply_text),
        }
    }
    Err(AuditError::ClassificationFailed {
        attempts,
        transcripts,
    })
}

/// The certainty-stratified sampling scheme: (lower, upper, quota) on the
/// 0–100 certainty axis. Intervals are half-open `[lo, hi)` except the
/// final `[95, 100]`, which is closed. Quotas total 100.
pub const PLAN_SCHEME: [(f64, f64, usize); 11] = [
    (0.0, 5.0, 5),
    (5.0, 15.0, 5),
    (15.0, 25.0, 5),
    (25.0, 35.0, 5),
    (35.0, 45.0, 15),
    (45.0, 55.0, 30),
    (55.0, 65.0, 15),
    (65.0, 75.0, 5),
    (75.0, 85.0, 5),
    (85.0, 95.0, 5),
    (95.0, 100.0, 5),
];

/// One bin of the sampling plan with the ids drawn from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanBin {
    pub lower: f64,
    pub upper: f64,
    /// The final bin includes its upper endpoint.
    pub upper_inclusive: bool,
    pub quota: usize,
    pub drawn: Vec<String>,
}

impl PlanBin {
    fn contains(&self, value: f64) -> bool {
        value >= self.lower && (value < self.upper || (self.upper_inclusive && value <= self.upper))
    }
}

/// A stratified audit sample: which statements to hand to human labellers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub bins: Vec<PlanBin>,
    /// Σ quotas — always 100 for the built-in scheme.
    pub total: usize,
    pub seed: u64,
}

impl SamplingPlan {
    /// All drawn ids in bin order.
    pub fn drawn_ids(&self) -> Vec<String> {
        self.bins.iter().flat_map(|b| b.drawn.clone()).collect()
    }
}

/// Draw the stratified audit sample: for each scheme bin, a uniform draw
/// without replacement among the statements whose certainty (0–100) falls
/// in the bin. Seeded, so equal inputs and seeds give identical plans.
///
/// # Errors
///
/// A certainty outside [0, 100], or any bin with fewer eligible statements
/// than its quota (named with its shortfall).
pub fn build_plan(
    certainties: &[(String, f64)],
    seed: u64,
) -> Result<SamplingPlan, AuditError> {
    for (id, value) in certainties {
        if !(0.0..=100.0).contains(value) || !value.is_finite() {
            return Err(AuditError::CertaintyOutOfRange {
                statement_id: id.clone(),
                value: *value,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bins = Vec::with_capacity(PLAN_SCHEME.len());
    for (i, &(lower, upper, quota)) in PLAN_SCHEME.iter().enumerate() {
        let mut bin = PlanBin {
            lower,
            upper,
            upper_inclusive: i == PLAN_SCHEME.len() - 1,
            quota,
            drawn: Vec::new(),
        };
        let mut eligible: Vec<&String> = certainties
            .iter()
            .filter(|(_, v)| bin.contains(*v))
            .map(|(id, _)| id)
            .collect();
        if eligible.len() < quota {
            return Err(AuditError::UnderfullBin {
                lower,
                upper,
                need: quota,
                have: eligible.len(),
            });
        }
        eligible.shuffle(&mut rng);
        bin.drawn = eligible.into_iter().take(quota).cloned().collect();
        bins.push(bin);
    }
    let total = bins.iter().map(|b| b.quota).sum();
    Ok(SamplingPlan { bins, total, seed })
}

/// Agreement between two label sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    /// Chance-corrected agreement; `None` when expected agreement is 1
    /// (both raters constant and identical), where kappa is undefined.
    pub kappa: Option<f64>,
    /// Raw fraction of matching labels (pₒ).
    pub percent_agreement: f64,
    /// Sorted union of the label values seen.
    pub labels: Vec<i8>,
    /// confusion[i][j] counts pairs where rater A gave `labels[i]` and
    /// rater B gave `labels[j]`.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
    /// Set when `kappa` is `None`, explaining why.
    pub note: Option<String>,
}

/// Cohen's kappa with the confusion matrix and raw agreement.
///
/// κ = (pₒ − pₑ)/(1 − pₑ), with pₑ from the product of the two raters'
/// marginal distributions. When pₑ = 1 — both raters constant and equal —
/// kappa is undefined and flagged while agreement is still reported as 1.
///
/// # Errors
///
/// Empty or unequal-length inputs.
pub fn cohen_kappa(a: &[i8], b: &[i8]) -> Result<KappaReport, AuditError> {
    if a.len() != b.len() {
        return Err(AuditError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(AuditError::EmptyInput);
    }
    let mut labels: Vec<i8> = a.iter().chain(b).copied().collect();
    labels.sort_unstable();
    labels.dedup();
    let index_of = |v: i8| labels.iter().position(|&l| l == v).expect("label in union");

    let k = labels.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&la, &lb) in a.iter().zip(b) {
        confusion[index_of(la)][index_of(lb)] += 1;
    }
    let n = a.len() as f64;
    let observed = (0..k).map(|i| confusion[i][i]).sum::<usize>() as f64 / n;
    let expected: f64 = (0..k)
        .map(|i| {
            let row: usize = confusion[i].iter().sum();
            let col: usize = confusion.iter().map(|r| r[i]).sum();
            (row as f64 / n) * (col as f64 / n)
        })
        .sum();

    let (kappa, note) = if (1.0 - expected).abs() < 1e-15 {
        (
            None,
            Some("undefined: both raters constant and identical (expected agreement 1)".to_string()),
        )
    } else {
        (Some((observed - expected) / (1.0 - expected)), None)
    };
    Ok(KappaReport {
        kappa,
        percent_agreement: observed,
        labels,
        confusion,
        n: a.len(),
        note,
    })
}

/// One row of a model-vs-human label file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub statement_id: String,
    pub model_label: i8,
    pub human_label: i8,
}

/// Read a labels CSV with header `statement_id,model_label,human_label`.
/// Label values must be −1, 0, or +1.
pub fn read_labels_csv(path: &Path) -> Result<Vec<LabeledPair>, AuditError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| AuditError::Store {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| AuditError::Store {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?
        .clone();
    let expected = ["statement_id", "model_label", "human_label"];
    if headers.iter().take(3).ne(expected) {
        return Err(AuditError::Store {
            path: path.to_path_buf(),
            detail: format!(
                "header must start with {expected:?}, found {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        });
    }
    let mut pairs = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let line = index + 2; // 1-based, after the header
        let row = row.map_err(|e| AuditError::Parse {
            path: path.to_path_buf(),
            line,
            detail: e.to_string(),
        })?;
        let field = |i: usize, name: &str| -> Result<String, AuditError> {
            row.get(i)
                .map(|s| s.trim().to_string())
                .ok_or_else(|| AuditError::Parse {
                    path: path.to_path_buf(),
                    line,
                    detail: format!("missing column {name}"),
                })
        };
        let statement_id = field(0, "statement_id")?;
        let parse_label = |i: usize, name: &str| -> Result<i8, AuditError> {
            let raw = field(i, name)?;
            let value: i64 = raw.parse().map_err(|_| AuditError::Parse {
                path: path.to_path_buf(),
                line,
                detail: format!("{name} {raw:?} is not an integer"),
            })?;
            if !(-1..=1).contains(&value) {
                return Err(AuditError::Parse {
                    path: path.to_path_buf(),
                    line,
                    detail: format!("{name} {value} must be -1, 0, or 1"),
                });
            }
            Ok(value as i8)
        };
        pairs.push(LabeledPair {
            statement_id,
            model_label: parse_label(1, "model_label")?,
            human_label: parse_label(2, "human_label")?,
        });
    }
    Ok(pairs)
}

/// Errors from classification, sampling, and agreement.
#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("explanation text is empty")]
    EmptyExplanation,
    #[error("assertion label {value} must be -1, 0, or 1")]
    BadLabelValue { value: i64 },
    #[error("unsupported prompt style: {detail}")]
    UnsupportedStyle { detail: String },
    #[error(
        "could not parse a classification reply after {attempts} attempts; transcripts: {transcripts:?}"
    )]
    ClassificationFailed {
        attempts: u32,
        transcripts: Vec<String>,
    },
    #[error("certainty for {statement_id:?} is {value}; expected 0-100")]
    CertaintyOutOfRange { statement_id: String, value: f64 },
    #[error("bin [{lower}, {upper}) needs {need} statements but only {have} are eligible")]
    UnderfullBin {
        lower: f64,
        upper: f64,
        need: usize,
        have: usize,
    },
    #[error("input is empty")]
    EmptyInput,
    #[error("label sequences differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("labels file {path}: {detail}")]
    Store { path: PathBuf, detail: String },
    #[error("labels file {path} line {line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}
