//! Internal certainty: elicit a verdict plus a raw confidence per statement
//! (explain-then-score), calibrate raw confidences with Platt's method, and
//! produce reliability diagnostics.
//!
//! The pipeline stages map onto the functions below:
//!
//! 1. [`elicit`] — ask a model to explain, then commit to a True/False
//!    verdict with a numeric confidence. The raw confidence is re-oriented
//!    as a *score for true* (a False verdict with confidence `c` becomes
//!    `scale.max() − c`), so every downstream consumer sees one axis.
//! 2. [`fit_platt`] / [`apply_platt`] — map raw scores to calibrated
//!    probabilities `p(true | score)` with the classic two-parameter
//!    sigmoid fit, including Platt's smoothed targets so perfectly
//!    separable data cannot blow the parameters up.
//! 3. [`reliability`] — equal-width reliability bins and the expected
//!    calibration error over calibrated probabilities.
//!
//! Raw confidences are parsed from reply text because provider
//! log-probabilities are not exposed through the chat adapter; the scale the
//! prompt declares (0–1, 0–10, 0–100) travels with each record and is
//! normalized before fitting.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapter::{AdapterError, ChatAdapter, ChatMessage, ChatRequest, GenParams};
use crate::prompts;
use crate::scale::Scale;
use crate::scorers::prompt::parse_score_reply;
use crate::stats;

/// Binary verdict a model commits to for a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
        })
    }
}

/// One elicited certainty judgment for one statement.
///
/// `raw_confidence` is always oriented as a score *for true* on
/// `scale`, regardless of the verdict the model stated (see [`elicit`]).
/// `calibrated_p` stays `None` until [`calibrate_records`] fills it in.
///
/// Field order is the serialization order of the persisted JSONL records —
/// keep it stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertaintyRecord {
    pub statement_id: String,
    pub statement: String,
    pub verdict: Verdict,
    pub raw_confidence: f64,
    pub scale: Scale,
    pub calibrated_p: Option<f64>,
    pub explanation: String,
    pub gold_label: Option<bool>,
}

impl CertaintyRecord {
    /// Validating constructor: the explanation must be non-empty (a verdict
    /// without reasoning is a protocol violation of the explain-then-score
    /// prompt), the raw confidence must lie on its declared scale, and any
    /// calibrated probability must be a probability.
    pub fn new(
        statement_id: impl Into<String>,
        statement: impl Into<String>,
        verdict: Verdict,
        raw_confidence: f64,
        scale: Scale,
        explanation: impl Into<String>,
        gold_label: Option<bool>,
    ) -> Result<CertaintyRecord, CertaintyError> {
        let record = CertaintyRecord {
            statement_id: statement_id.into(),
            statement: statement.into(),
            verdict,
            raw_confidence,
            scale,
            calibrated_p: None,
            explanation: explanation.into(),
            gold_label,
        };
        record.validate()?;
        Ok(record)
    }

    fn validate(&self) -> Result<(), CertaintyError> {
        if self.explanation.trim().is_empty() {
            return Err(CertaintyError::EmptyExplanation {
                statement_id: self.statement_id.clone(),
            });
        }
        if !self.scale.contains(self.raw_confidence) {
            return Err(CertaintyError::ConfidenceOutOfRange {
                statement_id: self.statement_id.clone(),
                value: self.raw_confidence,
                scale: self.scale,
            });
        }
        if let Some(p) = self.calibrated_p {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(CertaintyError::BadProbability {
                    statement_id: self.statement_id.clone(),
                    value: p,
                });
            }
        }
        Ok(())
    }

    /// Raw score-for-true mapped onto `[0, 1]` — the feature Platt fitting
    /// and calibration use, so records on different declared scales mix.
    pub fn unit_confidence(&self) -> f64 {
        self.scale.to_unit(self.raw_confidence)
    }
}

/// Configuration for certainty elicitation.
#[derive(Debug, Clone)]
pub struct ElicitConfig {
    /// Provider model name (snapshot names are configuration, never
    /// hard-coded).
    pub model_name: String,
    /// Sampling parameters for elicitation requests.
    pub params: GenParams,
    /// Scale the prompt instructs the model to answer on.
    pub scale: Scale,
    /// Additional attempts after an unparseable reply.
    pub max_retries: u32,
}

impl ElicitConfig {
    pub fn new(model_name: impl Into<String>) -> ElicitConfig {
        ElicitConfig {
            model_name: model_name.into(),
            params: GenParams::default(),
            // The elicitation prompt asks for "Score: <number>/100".
            scale: Scale::ZeroToHundred,
            max_retries: 2,
        }
    }
}

/// Build the elicitation request for `statement`. Public so fixture
/// generators and the CLI produce byte-identical requests (replay stores key
/// on the hash).
pub fn elicit_request(
    config: &ElicitConfig,
    statement: &str,
) -> Result<ChatRequest, CertaintyError> {
    if statement.trim().is_empty() {
        return Err(CertaintyError::EmptyStatement);
    }
    let user = prompts::fill(prompts::EXPLAIN_THEN_SCORE_USER_TEMPLATE, "statement", statement)
        .expect("static template declares {statement}");
    ChatRequest::new(
        config.model_name.clone(),
        vec![
            ChatMessage::system(prompts::EXPLAIN_THEN_SCORE_SYSTEM),
            ChatMessage::user(user),
        ],
        config.params.clone(),
    )
    .map_err(CertaintyError::from)
}

/// Ask a model for an explain-then-score judgment of `statement`.
///
/// The reply must contain an explanation, then the word `verdict`, then a
/// `true`/`false` token, then a number. Replies that break the protocol are
/// retried up to the configured budget and then surfaced as an error that
/// carries every transcript. The parsed confidence is clamped onto the
/// declared scale; a False verdict is re-oriented so `raw_confidence` is
/// always a score for true (`False` at 90 on 0–100 stores 10).
pub fn elicit(
    adapter: &ChatAdapter,
    config: &ElicitConfig,
    statement_id: &str,
    statement: &str,
    gold_label: Option<bool>,
) -> Result<CertaintyRecord, CertaintyError> {
    let request = elicit_request(config, statement)?;
    let mut transcripts = Vec::new();
    let attempts = config.max_retries + 1;
    for _ in 0..attempts {
        let exchange = adapter.send_chat(&request)?;
        match parse_elicit_reply(&exchange.reply_text, config.scale) {
            Some(parsed) => {
                return CertaintyRecord::new(
                    statement_id,
                    statement,
                    parsed.verdict,
                    parsed.raw_for_true,
                    config.scale,
                    parsed.explanation,
                    gold_label,
                );
            }
            None => transcripts.push(exchange.reply_text),
        }
    }
    Err(CertaintyError::ElicitationFailed {
        statement_id: statement_id.to_string(),
        attempts,
        transcripts,
    })
}

struct ParsedElicitation {
    explanation: String,
    verdict: Verdict,
    raw_for_true: f64,
}

/// Parse one explain-then-score reply. Returns `None` when any of the
/// protocol pieces is missing: a non-empty explanation before the `verdict`
/// keyword, a `true`/`false` token after it, and a number after the verdict
/// ("85/100" reads as 85 because the first number wins).
fn parse_elicit_reply(reply: &str, scale: Scale) -> Option<ParsedElicitation> {
    let keyword_at = find_ascii_ci(reply, "verdict")?;
    let explanation = reply[..keyword_at].trim();
    if explanation.is_empty() {
        return None;
    }
    let tail = &reply[keyword_at + "verdict".len()..];
    let (verdict_end, verdict) = find_verdict_token(tail)?;
    let stated = parse_score_reply(&tail[verdict_end..])?;
    let stated = scale.clamp(stated);
    let raw_for_true = match verdict {
        Verdict::True => stated,
        Verdict::False => scale.max() - stated,
    };
    Some(ParsedElicitation {
        explanation: explanation.to_string(),
        verdict,
        raw_for_true,
    })
}

/// First byte offset at which `needle` occurs in `haystack`, ASCII
/// case-insensitively.
fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.is_empty() || h.len() < n.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

/// First standalone `true`/`false` word in `tail` (ASCII case-insensitive,
/// alphabetic boundaries so "untrue" does not match). Returns the byte
/// offset just past the token and the verdict it names.
fn find_verdict_token(tail: &str) -> Option<(usize, Verdict)> {
    let bytes = tail.as_bytes();
    for i in 0..bytes.len() {
        for (word, verdict) in [("true", Verdict::True), ("false", Verdict::False)] {
            let w = word.as_bytes();
            let end = i + w.len();
            if end <= bytes.len()
                && bytes[i..end].eq_ignore_ascii_case(w)
                && (i == 0 || !bytes[i - 1].is_ascii_alphabetic())
                && (end == bytes.len() || !bytes[end].is_ascii_alphabetic())
            {
                return Some((end, verdict));
            }
        }
    }
    None
}

/// Where to cut the six-way truthfulness labels into a binary target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiarBinarization {
    /// `{half-true, mostly-true, true}` → true (the default split).
    #[default]
    HalfTrueUp,
    /// `{mostly-true, true}` → true — the stricter alternative cut.
    MostlyTrueUp,
}

/// Map one six-way truthfulness label to a boolean with the default cut
/// (`half-true` and above count as true).
pub fn binarize_liar_label(label: &str) -> Result<bool, CertaintyError> {
    binarize_liar_label_with(label, LiarBinarization::default())
}

/// Map one six-way truthfulness label to a boolean under an explicit cut.
/// Labels are normalized (trim, lowercase, underscores and spaces to
/// hyphens) before matching; anything outside the six known labels is an
/// error.
pub fn binarize_liar_label_with(
    label: &str,
    cut: LiarBinarization,
) -> Result<bool, CertaintyError> {
    let normalized = label.trim().to_lowercase().replace(['_', ' '], "-");
    let rank = match normalized.as_str() {
        "pants-fire" | "pants-on-fire" => 0,
        "false" => 1,
        "barely-true" => 2,
        "half-true" => 3,
        "mostly-true" => 4,
        "true" => 5,
        _ => {
            return Err(CertaintyError::UnknownLiarLabel {
                label: label.to_string(),
            })
        }
    };
    let min_true_rank = match cut {
        LiarBinarization::HalfTrueUp => 3,
        LiarBinarization::MostlyTrueUp => 4,
    };
    Ok(rank >= min_true_rank)
}

/// Fitted Platt calibration map `p(true | f) = 1 / (1 + exp(a·f + b))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
    pub fit_meta: PlattFitMeta,
}

/// Bookkeeping from the Newton fit behind a [`PlattParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattFitMeta {
    /// Number of (score, label) examples fitted on.
    pub n: usize,
    /// Accepted Newton steps taken.
    pub iterations: usize,
    /// Negative log-likelihood at the accepted optimum.
    pub final_nll: f64,
    /// Always true on a returned fit; non-convergence is an error instead.
    pub converged: bool,
}

/// Minimum number of examples required to fit the two-parameter map.
pub const PLATT_MIN_EXAMPLES: usize = 10;
const PLATT_MAX_ITERATIONS: usize = 100;
const PLATT_NLL_TOLERANCE: f64 = 1e-9;

/// Fit Platt's calibration map by minimizing the smoothed-target negative
/// log-likelihood with damped Newton steps.
///
/// Targets follow the original method — `t₊ = (N₊+1)/(N₊+2)` for positive
/// labels and `t₋ = 1/(N₋+2)` for negatives — which keeps the parameters
/// finite even on perfectly separable data. Iteration stops when the NLL
/// improves by less than `1e-9` (or no descent direction remains), and
/// errors out at 100 iterations.
///
/// # Errors
///
/// Fewer than [`PLATT_MIN_EXAMPLES`] examples, a single-class label vector,
/// mismatched slice lengths, or non-finite scores are rejected up front;
/// hitting the iteration cap reports the NLL trace tail.
pub fn fit_platt(raw_scores: &[f64], gold_labels: &[bool]) -> Result<PlattParams, CertaintyError> {
    fit_platt_traced(raw_scores, gold_labels).map(|(params, _)| params)
}

/// Newton fit that also returns the NLL after every accepted step (index 0
/// is the NLL at the initial point). Split out so tests can assert the
/// damped trajectory never increases.
fn fit_platt_traced(
    raw_scores: &[f64],
    gold_labels: &[bool],
) -> Result<(PlattParams, Vec<f64>), CertaintyError> {
    if raw_scores.len() != gold_labels.len() {
        return Err(CertaintyError::LengthMismatch {
            scores: raw_scores.len(),
            labels: gold_labels.len(),
        });
    }
    if raw_scores.len() < PLATT_MIN_EXAMPLES {
        return Err(CertaintyError::TooFewExamples {
            n: raw_scores.len(),
            min: PLATT_MIN_EXAMPLES,
        });
    }
    if let Some(index) = raw_scores.iter().position(|f| !f.is_finite()) {
        return Err(CertaintyError::NonFiniteScore { index });
    }
    let n_pos = gold_labels.iter().filter(|&&label| label).count();
    let n_neg = gold_labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CertaintyError::SingleClass { n_pos, n_neg });
    }

    // Platt's smoothed targets: shrink {0, 1} labels toward the interior so
    // separable data keeps a finite optimum.
    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = gold_labels
        .iter()
        .map(|&label| if label { t_pos } else { t_neg })
        .collect();

    let nll = |a: f64, b: f64| -> f64 {
        raw_scores
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = a * f + b;
                // p = sigmoid(-z); -ln p = softplus(z), -ln(1-p) = softplus(-z).
                t * softplus(z) + (1.0 - t) * softplus(-z)
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
    let mut current = nll(a, b);
    let mut trace = vec![current];

    for _ in 0..PLATT_MAX_ITERATIONS {
        // Gradient dNLL/d(a,b) = Σ (tᵢ − pᵢ)·(fᵢ, 1); Hessian is the usual
        // positive-semidefinite logistic weight matrix.
        let (mut ga, mut gb) = (0.0, 0.0);
        let (mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0);
        for (&f, &t) in raw_scores.iter().zip(&targets) {
            let p = stats::sigmoid(-(a * f + b));
            let d = t - p;
            ga += d * f;
            gb += d;
            let w = p * (1.0 - p);
            haa += w * f * f;
            hab += w * f;
            hbb += w;
        }
        // Tiny ridge keeps the solve well-posed when every score is equal
        // (Cauchy–Schwarz makes det = 0 exactly there).
        haa += 1e-12;
        hbb += 1e-12;
        let det = haa * hbb - hab * hab;
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(haa * gb - hab * ga) / det;

        // Damping: halve the Newton step until the NLL stops increasing.
        let mut step = 1.0;
        let mut accepted = None;
        while step >= 1e-12 {
            let candidate = nll(a + step * da, b + step * db);
            if candidate <= current {
                accepted = Some((a + step * da, b + step * db, candidate));
                break;
            }
            step /= 2.0;
        }
        let Some((next_a, next_b, next_nll)) = accepted else {
            // No descent left in this direction: we are at the optimum to
            // within floating-point resolution.
            break;
        };
        a = next_a;
        b = next_b;
        let improvement = current - next_nll;
        current = next_nll;
        trace.push(current);
        if improvement < PLATT_NLL_TOLERANCE {
            break;
        }
    }

    let iterations = trace.len() - 1;
    if iterations == PLATT_MAX_ITERATIONS
        && trace[iterations - 1] - trace[iterations] >= PLATT_NLL_TOLERANCE
    {
        let tail: Vec<String> = trace
            .iter()
            .rev()
            .take(5)
            .rev()
            .map(|v| format!("{v:.12}"))
            .collect();
        return Err(CertaintyError::PlattNotConverged {
            iterations,
            trace_tail: tail.join(" -> "),
        });
    }

    let params = PlattParams {
        a,
        b,
        fit_meta: PlattFitMeta {
            n: raw_scores.len(),
            iterations,
            final_nll: current,
            converged: true,
        },
    };
    Ok((params, trace))
}

/// Numerically stable `ln(1 + exp(x))`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Probability floor/ceiling for calibrated outputs, keeping them strictly
/// inside (0, 1) so log-loss style consumers never see ±∞.
const PROBABILITY_CLAMP: f64 = 1e-15;

/// Apply a fitted Platt map: `p = 1 / (1 + exp(a·raw + b))`, computed via
/// the stable sigmoid and clamped to `[1e-15, 1 − 1e-15]`. Monotone
/// decreasing in `raw` for `a > 0` and increasing for `a < 0`.
pub fn apply_platt(params: &PlattParams, raw: f64) -> f64 {
    let p = stats::sigmoid(-(params.a * raw + params.b));
    p.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
}

/// Fill in `calibrated_p` for every record by applying `params` to the
/// unit-normalized raw confidence (the same feature [`fit_platt`] should be
/// given when fitting across mixed scales).
pub fn calibrate_records(records: &mut [CertaintyRecord], params: &PlattParams) {
    for record in records {
        record.calibrated_p = Some(apply_platt(params, record.unit_confidence()));
    }
}

/// One equal-width reliability bin over calibrated probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    /// Mean calibrated probability of records in the bin; `None` when empty.
    pub mean_predicted_p: Option<f64>,
    /// Fraction of records in the bin whose gold label is true; `None` when
    /// empty.
    pub empirical_frequency: Option<f64>,
    pub count: usize,
}

/// Reliability diagram data plus its expected calibration error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub bins: Vec<ReliabilityBin>,
    /// Count-weighted mean of |mean_predicted_p − empirical_frequency|.
    pub ece: f64,
    pub n: usize,
}

impl ReliabilityTable {
    /// Render the table as CSV for plotting. Empty bins leave their mean
    /// columns blank.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("lower,upper,mean_predicted_p,empirical_frequency,count\n");
        for bin in &self.bins {
            let mean_p = bin.mean_predicted_p.map(|v| v.to_string()).unwrap_or_default();
            let freq = bin
                .empirical_frequency
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                bin.lower, bin.upper, mean_p, freq, bin.count
            ));
        }
        out
    }
}

/// Bin calibrated probabilities against gold labels.
///
/// Bins are equal-width over `[0, 1]`; a probability of exactly 1.0 lands in
/// the top bin. Empty bins are kept (count 0, `None` means) so the table
/// always partitions the interval.
///
/// # Errors
///
/// Empty input, fewer than two bins, or any record missing its gold label or
/// calibrated probability.
pub fn reliability(
    records: &[CertaintyRecord],
    n_bins: usize,
) -> Result<ReliabilityTable, CertaintyError> {
    if records.is_empty() {
        return Err(CertaintyError::EmptyInput);
    }
    if n_bins < 2 {
        return Err(CertaintyError::BadBinCount { n_bins });
    }
    let mut sums = vec![0.0f64; n_bins];
    let mut trues = vec![0usize; n_bins];
    let mut counts = vec![0usize; n_bins];
    for record in records {
        let gold = record
            .gold_label
            .ok_or_else(|| CertaintyError::MissingGoldLabel {
                statement_id: record.statement_id.clone(),
            })?;
        let p = record
            .calibrated_p
            .ok_or_else(|| CertaintyError::MissingCalibration {
                statement_id: record.statement_id.clone(),
            })?;
        record.validate()?;
        let bin = ((p * n_bins as f64).floor() as usize).min(n_bins - 1);
        sums[bin] += p;
        trues[bin] += usize::from(gold);
        counts[bin] += 1;
    }
    let n = records.len();
    let width = 1.0 / n_bins as f64;
    let mut bins = Vec::with_capacity(n_bins);
    let mut ece = 0.0;
    for i in 0..n_bins {
        let count = counts[i];
        let (mean_predicted_p, empirical_frequency) = if count > 0 {
            let mean_p = sums[i] / count as f64;
            let freq = trues[i] as f64 / count as f64;
            ece += (count as f64 / n as f64) * (mean_p - freq).abs();
            (Some(mean_p), Some(freq))
        } else {
            (None, None)
        };
        bins.push(ReliabilityBin {
            lower: i as f64 * width,
            upper: if i == n_bins - 1 {
                1.0
            } else {
                (i + 1) as f64 * width
            },
            mean_predicted_p,
            empirical_frequency,
            count,
        });
    }
    Ok(ReliabilityTable { bins, ece, n })
}

/// Direction-free confidence of a calibrated verdict: `|2p − 1|`, the
/// distance from maximal uncertainty. Both a confident-true `p = 0.96` and a
/// confident-false `p = 0.04` map to 0.92, which is what makes the value
/// comparable against directionless assertiveness scores.
pub fn verdict_confidence(calibrated_p: f64) -> f64 {
    (2.0 * calibrated_p - 1.0).abs()
}

/// Write records as JSONL, one record per line, in field order.
pub fn write_records_jsonl(
    records: &[CertaintyRecord],
    path: &Path,
) -> Result<(), CertaintyError> {
    let mut file = fs::File::create(path).map_err(|e| CertaintyError::Store {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| CertaintyError::Store {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        writeln!(file, "{line}").map_err(|e| CertaintyError::Store {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    }
    Ok(())
}

/// Read records back from JSONL, validating invariants per line and
/// rejecting duplicate statement ids.
pub fn read_records_jsonl(path: &Path) -> Result<Vec<CertaintyRecord>, CertaintyError> {
    let file = fs::File::open(path).map_err(|e| CertaintyError::Store {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CertaintyError::Store {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CertaintyRecord =
            serde_json::from_str(&line).map_err(|e| CertaintyError::Parse {
                path: path.to_path_buf(),
                line: index + 1,
                detail: e.to_string(),
            })?;
        record.validate().map_err(|e| CertaintyError::Parse {
            path: path.to_path_buf(),
            line: index + 1,
            detail: e.to_string(),
        })?;
        if !seen.insert(record.statement_id.clone()) {
            return Err(CertaintyError::Parse {
                path: path.to_path_buf(),
                line: index + 1,
                detail: format!("duplicate statement_id {:?}", record.statement_id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Errors from elicitation, calibration, and reliability binning.
#[derive(Debug, thiserror::Error)]
pub enum CertaintyError {
    #[error("statement text is empty")]
    EmptyStatement,
    #[error("record {statement_id:?} has an empty explanation")]
    EmptyExplanation { statement_id: String },
    #[error("record {statement_id:?} confidence {value} is outside its declared scale {scale}")]
    ConfidenceOutOfRange {
        statement_id: String,
        value: f64,
        scale: Scale,
    },
    #[error("record {statement_id:?} calibrated_p {value} is not a probability")]
    BadProbability { statement_id: String, value: f64 },
    #[error(
        "could not parse an explain-then-score reply for {statement_id:?} after {attempts} attempts; transcripts: {transcripts:?}"
    )]
    ElicitationFailed {
        statement_id: String,
        attempts: u32,
        transcripts: Vec<String>,
    },
    #[error("unknown six-way truthfulness label {label:?}")]
    UnknownLiarLabel { label: String },
    #[error("platt fit needs at least {min} examples, got {n}")]
    TooFewExamples { n: usize, min: usize },
    #[error("platt fit needs both classes present (got {n_pos} true, {n_neg} false)")]
    SingleClass { n_pos: usize, n_neg: usize },
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("raw score at index {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error("platt fit did not converge after {iterations} iterations (nll tail: {trace_tail})")]
    PlattNotConverged {
        iterations: usize,
        trace_tail: String,
    },
    #[error("reliability needs at least one record")]
    EmptyInput,
    #[error("reliability needs at least 2 bins, got {n_bins}")]
    BadBinCount { n_bins: usize },
    #[error("record {statement_id:?} is missing its gold label")]
    MissingGoldLabel { statement_id: String },
    #[error("record {statement_id:?} has no calibrated probability")]
    MissingCalibration { statement_id: String },
    #[error("certainty store {path}: {detail}")]
    Store { path: PathBuf, detail: String },
    #[error("certainty store {path} line {line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}
