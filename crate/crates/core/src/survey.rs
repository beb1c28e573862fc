//! Survey stimuli and human-perception statistics: generate low/high
//! assertiveness variants of explanations, assemble a balanced survey with
//! attention checks, ingest and filter respondent ratings, and summarize
//! how assertiveness was perceived per variant level.
//!
//! Levels are coded −1 (low), 0 (the original explanation), +1 (high).
//! Every statement must carry all three levels before survey assembly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adapter::{AdapterError, ChatAdapter, ChatMessage, ChatRequest, GenParams};
use crate::certainty::Verdict;
use crate::diagnostics::{self, DiagnosticsError, DistributionSummary};
use crate::prompts::{self, TemplateError};

/// Exclusion-log reason for a failed easy attention check.
pub const REASON_EASY_CHECK: &str = "easy check";
/// Exclusion-log reason for a content-attention score below 4.
pub const REASON_LOW_SCORE: &str = "score < 4";
/// Minimum content-attention score (out of 5) a respondent must reach.
pub const MIN_ATTENTION_SCORE: u8 = 4;
/// Items rated by each respondent.
pub const ITEMS_PER_RESPONDENT: usize = 4;

/// One explanation variant at a given assertiveness level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusItem {
    pub statement_id: String,
    /// −1 low, 0 original, +1 high.
    pub level: i8,
    pub explanation: String,
    /// Word count of the original explanation (the generation target).
    pub target_length: usize,
    /// True when generation kept violating the ±50% length tolerance and
    /// the last attempt was kept anyway; flagged items stay in the set but
    /// carry the mark for downstream filtering.
    pub length_flagged: bool,
}

/// Human-readable tag for a level (`low` / `original` / `high`).
pub fn level_name(level: i8) -> &'static str {
    match level {
        -1 => "low",
        0 => "original",
        1 => "high",
        _ => "unknown",
    }
}

/// Configuration for variant generation.
#[derive(Debug, Clone)]
pub struct StimulusConfig {
    /// Provider model name.
    pub model_name: String,
    /// Additional attempts after a reply outside the length tolerance.
    pub max_retries: u32,
}

impl StimulusConfig {
    pub fn new(model_name: impl Into<String>) -> StimulusConfig {
        StimulusConfig {
            model_name: model_name.into(),
            max_retries: 2,
        }
    }
}

/// Sampling parameters for variant generation: high temperature, wide
/// nucleus, single sample, room for long explanations.
pub fn generation_params() -> GenParams {
    GenParams {
        max_tokens: 750,
        temperature: 1.5,
        top_p: 0.9,
        n: 1,
    }
}

/// Whitespace-delimited word count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Build the variant-generation request for one level (−1 or +1).
///
/// The original explanation travels as the context message; the rewrite
/// instruction is the verbatim level template with `{original_length}`
/// substituted. Public so fixture generators and the CLI produce
/// byte-identical requests.
///
/// # Errors
///
/// Empty original text, or a level other than −1/+1 (the original needs no
/// generation).
pub fn variant_request(
    config: &StimulusConfig,
    original: &str,
    level: i8,
) -> Result<ChatRequest, SurveyError> {
    if original.trim().is_empty() {
        return Err(SurveyError::EmptyExplanation);
    }
    let template = match level {
        1 => prompts::HIGH_VARIANT_USER_TEMPLATE,
        -1 => prompts::LOW_VARIANT_USER_TEMPLATE,
        other => return Err(SurveyError::BadVariantLevel { level: other }),
    };
    let length = word_count(original);
    let instruction = prompts::fill(template, "original_length", &length.to_string())?;
    ChatRequest::new(
        config.model_name.clone(),
        vec![
            ChatMessage::system(prompts::VARIANT_SYSTEM_PROMPT),
            ChatMessage::user(original),
            ChatMessage::user(instruction),
        ],
        generation_params(),
    )
    .map_err(SurveyError::from)
}

/// Generate one variant, retrying while the reply's word count deviates
/// from the original's by more than 50%. Exhausted retries keep the last
/// reply and flag the item rather than failing.
fn generate_one(
    adapter: &ChatAdapter,
    config: &StimulusConfig,
    statement_id: &str,
    original: &str,
    level: i8,
) -> Result<StimulusItem, SurveyError> {
    let request = variant_request(config, original, level)?;
    let target = word_count(original);
    let tolerance = target as f64 * 0.5;
    let mut last_reply = String::new();
    let mut flagged = true;
    for _ in 0..=config.max_retries {
        let exchange = adapter.send_chat(&request)?;
        last_reply = exchange.reply_text;
        let deviation = (word_count(&last_reply) as f64 - target as f64).abs();
        if deviation <= tolerance {
            flagged = false;
            break;
        }
    }
    Ok(StimulusItem {
        statement_id: statement_id.to_string(),
        level,
        explanation: last_reply,
        target_length: target,
        length_flagged: flagged,
    })
}

/// Generate the low- and high-assertiveness variants of an explanation.
///
/// # Errors
///
/// Empty original text, or transport failure. A persistent length
/// violation is not an error: the item comes back `length_flagged`.
pub fn generate_variants(
    adapter: &ChatAdapter,
    config: &StimulusConfig,
    statement_id: &str,
    original: &str,
) -> Result<(StimulusItem, StimulusItem), SurveyError> {
    let low = generate_one(adapter, config, statement_id, original, -1)?;
    let high = generate_one(adapter, config, statement_id, original, 1)?;
    Ok((low, high))
}

/// Wrap the original explanation as its own level-0 stimulus.
///
/// # Errors
///
/// Empty original text.
pub fn original_stimulus(
    statement_id: &str,
    original: &str,
) -> Result<StimulusItem, SurveyError> {
    if original.trim().is_empty() {
        return Err(SurveyError::EmptyExplanation);
    }
    Ok(StimulusItem {
        statement_id: statement_id.to_string(),
        level: 0,
        explanation: original.to_string(),
        target_length: word_count(original),
        length_flagged: false,
    })
}

/// Statement-level survey input: what respondents see alongside each
/// explanation, including the authored content attention question
/// (questions are authored in the input, never auto-generated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyStatement {
    pub statement_id: String,
    pub statement: String,
    pub verdict: Verdict,
    pub content_question: String,
}

/// One presentable survey item: a statement, its verdict, one explanation
/// variant, and the statement's content question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyItem {
    /// `{statement_id}:{level_name}`, e.g. `s017:low`.
    pub item_id: String,
    pub statement_id: String,
    pub level: i8,
    pub statement: String,
    pub verdict: Verdict,
    pub explanation: String,
    pub content_question: String,
}

/// The four items one respondent rates, in presentation order. The easy
/// attention check precedes the rated items (it is the survey's first
/// check), so it needs no slot here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentAssignment {
    pub respondent_id: String,
    pub item_ids: Vec<String>,
}

/// A complete, reproducible survey definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDefinition {
    /// Respondent-facing instructions, shown once.
    pub instructions: String,
    /// The easy attention-check text, shown verbatim before the items.
    pub easy_check_text: String,
    pub items: Vec<SurveyItem>,
    pub assignments: Vec<RespondentAssignment>,
    pub n_respondents: usize,
    /// `n_respondents × 4` rating slots.
    pub total_slots: usize,
    pub seed: u64,
}

/// Assemble a survey: four items per respondent, each from a distinct
/// statement (so no item — and no statement — repeats within a
/// respondent), with levels balanced across the whole survey via an
/// as-equal-as-possible shuffled level deck.
///
/// # Errors
///
/// A statement missing one of its three levels (or carrying duplicates),
/// an item referencing an unknown statement, fewer than four statements
/// (each respondent needs four distinct ones), or zero respondents.
pub fn assemble_survey(
    statements: &[SurveyStatement],
    items: &[StimulusItem],
    n_respondents: usize,
    seed: u64,
) -> Result<SurveyDefinition, SurveyError> {
    if n_respondents == 0 {
        return Err(SurveyError::BadRespondentCount);
    }
    let statements_by_id: BTreeMap<&str, &SurveyStatement> = statements
        .iter()
        .map(|s| (s.statement_id.as_str(), s))
        .collect();
    if statements_by_id.len() < ITEMS_PER_RESPONDENT {
        return Err(SurveyError::TooFewStatements {
            have: statements_by_id.len(),
            need: ITEMS_PER_RESPONDENT,
        });
    }

    // Index stimuli per statement and demand exactly one item per level.
    let mut per_statement: BTreeMap<&str, BTreeMap<i8, &StimulusItem>> = BTreeMap::new();
    for item in items {
        if !statements_by_id.contains_key(item.statement_id.as_str()) {
            return Err(SurveyError::UnknownStatement {
                statement_id: item.statement_id.clone(),
            });
        }
        let levels = per_statement.entry(item.statement_id.as_str()).or_default();
        if levels.insert(item.level, item).is_some() {
            return Err(SurveyError::DuplicateLevel {
                statement_id: item.statement_id.clone(),
                level: item.level,
            });
        }
    }
    for (&statement_id, levels) in &per_statement {
        for level in [-1i8, 0, 1] {
            if !levels.contains_key(&level) {
                return Err(SurveyError::MissingLevel {
                    statement_id: statement_id.to_string(),
                    level,
                });
            }
        }
    }
    for &statement_id in statements_by_id.keys() {
        if !per_statement.contains_key(statement_id) {
            return Err(SurveyError::MissingLevel {
                statement_id: statement_id.to_string(),
                level: -1,
            });
        }
    }

    // Presentable items, sorted by (statement, level) so assembly does not
    // depend on input order.
    let mut survey_items = Vec::with_capacity(per_statement.len() * 3);
    for (&statement_id, levels) in &per_statement {
        let statement = statements_by_id[statement_id];
        for (&level, stimulus) in levels {
            survey_items.push(SurveyItem {
                item_id: format!("{statement_id}:{}", level_name(level)),
                statement_id: statement_id.to_string(),
                level,
                statement: statement.statement.clone(),
                verdict: statement.verdict,
                explanation: stimulus.explanation.clone(),
                content_question: statement.content_question.clone(),
            });
        }
    }

    // Per-level candidate pools, sorted by statement id.
    let mut pools: BTreeMap<i8, Vec<&SurveyItem>> = BTreeMap::new();
    for item in &survey_items {
        pools.entry(item.level).or_default().push(item);
    }

    // Level deck: counts as equal as possible over all slots, then shuffled.
    let total_slots = n_respondents * ITEMS_PER_RESPONDENT;
    let base = total_slots / 3;
    let remainder = total_slots % 3;
    let mut deck = Vec::with_capacity(total_slots);
    for (i, level) in [-1i8, 0, 1].into_iter().enumerate() {
        let count = base + usize::from(i < remainder);
        deck.extend(std::iter::repeat_n(level, count));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    deck.shuffle(&mut rng);

    let mut assignments = Vec::with_capacity(n_respondents);
    for (r, slots) in deck.chunks(ITEMS_PER_RESPONDENT).enumerate() {
        let mut used_statements: Vec<&str> = Vec::with_capacity(ITEMS_PER_RESPONDENT);
        let mut item_ids = Vec::with_capacity(ITEMS_PER_RESPONDENT);
        for &level in slots {
            let pool = &pools[&level];
            let eligible: Vec<&&SurveyItem> = pool
                .iter()
                .filter(|i| !used_statements.contains(&i.statement_id.as_str()))
                .collect();
            // Non-empty because there are ≥ 4 statements and ≤ 3 are used.
            let chosen = eligible[rng.random_range(0..eligible.len())];
            used_statements.push(chosen.statement_id.as_str());
            item_ids.push(chosen.item_id.clone());
        }
        assignments.push(RespondentAssignment {
            respondent_id: format!("r{:04}", r + 1),
            item_ids,
        });
    }

    Ok(SurveyDefinition {
        instructions: prompts::SURVEY_RESPONDENT_PREAMBLE.to_string(),
        easy_check_text: prompts::EASY_ATTENTION_CHECK.to_string(),
        items: survey_items,
        assignments,
        n_respondents,
        total_slots,
        seed,
    })
}

/// One item rating on the 0–10 assertiveness scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRating {
    pub item_id: String,
    pub rating: f64,
}

/// One respondent's complete survey response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentRecord {
    pub respondent_id: String,
    /// Exactly four ratings, one per assigned item.
    pub ratings: Vec<ItemRating>,
    /// Whether the easy check was answered with the demanded '6'.
    pub easy_check_passed: bool,
    /// Content-attention questions answered correctly, out of 5.
    pub attention_score: u8,
    /// Pass-through demographic fields; never interpreted.
    pub demographics: BTreeMap<String, String>,
}

impl RespondentRecord {
    /// Validating constructor: four ratings, each in [0, 10], attention
    /// score at most 5.
    pub fn new(
        respondent_id: impl Into<String>,
        ratings: Vec<ItemRating>,
        easy_check_passed: bool,
        attention_score: u8,
        demographics: BTreeMap<String, String>,
    ) -> Result<RespondentRecord, SurveyError> {
        let respondent_id = respondent_id.into();
        if ratings.len() != ITEMS_PER_RESPONDENT {
            return Err(SurveyError::BadRatingCount {
                respondent_id,
                count: ratings.len(),
            });
        }
        for rating in &ratings {
            if !rating.rating.is_finite() || !(0.0..=10.0).contains(&rating.rating) {
                return Err(SurveyError::BadRating {
                    respondent_id,
                    item_id: rating.item_id.clone(),
                    value: rating.rating,
                });
            }
        }
        if attention_score > 5 {
            return Err(SurveyError::BadAttentionScore {
                respondent_id,
                value: attention_score,
            });
        }
        Ok(RespondentRecord {
            respondent_id,
            ratings,
            easy_check_passed,
            attention_score,
            demographics,
        })
    }
}

/// Why a respondent was dropped: every failed rule, in fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub respondent_id: String,
    /// One entry per failed rule: [`REASON_EASY_CHECK`] and/or
    /// [`REASON_LOW_SCORE`].
    pub reasons: Vec<String>,
}

/// Retain respondents who passed the easy check *and* scored at least 4/5
/// on the content checks; log every dropped respondent with each rule they
/// failed. The log length always equals input − retained.
pub fn filter_respondents(
    records: &[RespondentRecord],
) -> (Vec<RespondentRecord>, Vec<Exclusion>) {
    let mut retained = Vec::new();
    let mut exclusions = Vec::new();
    for record in records {
        let mut reasons = Vec::new();
        if !record.easy_check_passed {
            reasons.push(REASON_EASY_CHECK.to_string());
        }
        if record.attention_score < MIN_ATTENTION_SCORE {
            reasons.push(REASON_LOW_SCORE.to_string());
        }
        if reasons.is_empty() {
            retained.push(record.clone());
        } else {
            exclusions.push(Exclusion {
                respondent_id: record.respondent_id.clone(),
                reasons,
            });
        }
    }
    (retained, exclusions)
}

/// Moments of the ratings at one level, on both the raw 0–10 axis and the
/// [0, 1] axis (scaled mean = mean/10, scaled variance = variance/100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: i8,
    pub n: usize,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub stddev: f64,
    pub scaled_mean: f64,
    pub scaled_variance: f64,
    pub scaled_stddev: f64,
}

/// Outcome of the mean(low) < mean(original) < mean(high) check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub passed: bool,
    pub detail: String,
}

/// Per-level and overall perception statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionStats {
    /// Present levels in low → original → high order.
    pub per_level: Vec<LevelStats>,
    /// Levels with no retained ratings, flagged rather than fatal.
    pub empty_levels: Vec<i8>,
    /// Distribution of all retained ratings on the 0–10 axis.
    pub overall: DistributionSummary,
    pub monotonicity: MonotonicityCheck,
}

impl PerceptionStats {
    /// Per-level stats as CSV (one row per present level).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "level,n,mean,variance,stddev,scaled_mean,scaled_variance,scaled_stddev\n",
        );
        for stats in &self.per_level {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                level_name(stats.level),
                stats.n,
                stats.mean,
                stats.variance,
                stats.stddev,
                stats.scaled_mean,
                stats.scaled_variance,
                stats.scaled_stddev,
            ));
        }
        out
    }
}

/// Summarize retained ratings per level and overall, and run the
/// monotonicity check. `level_of` maps item ids to their variant level.
///
/// # Errors
///
/// No records, or a rating whose item id the map does not know.
pub fn perception_stats(
    records: &[RespondentRecord],
    level_of: &BTreeMap<String, i8>,
) -> Result<PerceptionStats, SurveyError> {
    if records.is_empty() {
        return Err(SurveyError::EmptyInput);
    }
    let mut by_level: BTreeMap<i8, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    for record in records {
        for rating in &record.ratings {
            let level = level_of.get(&rating.item_id).ok_or_else(|| {
                SurveyError::UnknownItem {
                    item_id: rating.item_id.clone(),
                }
            })?;
            by_level.entry(*level).or_default().push(rating.rating);
            all.push(rating.rating);
        }
    }

    let mut per_level = Vec::new();
    let mut empty_levels = Vec::new();
    let mut means: BTreeMap<i8, f64> = BTreeMap::new();
    for level in [-1i8, 0, 1] {
        match by_level.get(&level) {
            Some(values) if !values.is_empty() => {
                let mean = crate::stats::mean(values);
                let variance = crate::stats::population_variance(values);
                means.insert(level, mean);
                per_level.push(LevelStats {
                    level,
                    n: values.len(),
                    mean,
                    variance,
                    stddev: variance.sqrt(),
                    scaled_mean: mean / 10.0,
                    scaled_variance: variance / 100.0,
                    scaled_stddev: variance.sqrt() / 10.0,
                });
            }
            _ => empty_levels.push(level),
        }
    }

    let monotonicity = match (means.get(&-1), means.get(&0), means.get(&1)) {
        (Some(&low), Some(&original), Some(&high)) => {
            if low < original && original < high {
                MonotonicityCheck {
                    passed: true,
                    detail: format!(
                        "mean(low) {low:.4} < mean(original) {original:.4} < mean(high) {high:.4}"
                    ),
                }
            } else {
                MonotonicityCheck {
                    passed: false,
                    detail: format!(
                        "expected mean(low) < mean(original) < mean(high), got low {low:.4}, \
                         original {original:.4}, high {high:.4}"
                    ),
                }
            }
        }
        _ => MonotonicityCheck {
            passed: false,
            detail: format!(
                "cannot check monotonicity: no retained ratings at level(s) {}",
                empty_levels
                    .iter()
                    .map(|l| level_name(*l))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        },
    };

    Ok(PerceptionStats {
        per_level,
        empty_levels,
        overall: diagnostics::distribution_summary(&all)?,
        monotonicity,
    })
}

/// Read a ratings CSV with header
/// `respondent_id,item_id,rating,easy_check_value,attention_correct_count`
/// followed by arbitrarily named demographic columns. Four rows per
/// respondent; the per-respondent fields must repeat identically. The easy
/// check passes iff its value equals the demanded answer (6).
pub fn load_ratings_csv(path: &Path) -> Result<Vec<RespondentRecord>, SurveyError> {
    let store_err = |detail: String| SurveyError::Store {
        path: path.to_path_buf(),
        detail,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| store_err(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| store_err(e.to_string()))?
        .clone();
    let expected = [
        "respondent_id",
        "item_id",
        "rating",
        "easy_check_value",
        "attention_correct_count",
    ];
    if headers.len() < expected.len() || headers.iter().take(expected.len()).ne(expected) {
        return Err(store_err(format!(
            "header must start with {expected:?}, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let demographic_keys: Vec<String> = headers
        .iter()
        .skip(expected.len())
        .map(|s| s.to_string())
        .collect();

    struct Partial {
        ratings: Vec<ItemRating>,
        easy_check_value: f64,
        attention_score: u8,
        demographics: BTreeMap<String, String>,
    }
    // Group rows per respondent, preserving first-seen order.
    let mut order: Vec<String> = Vec::new();
    let mut partials: BTreeMap<String, Partial> = BTreeMap::new();

    for (index, row) in reader.records().enumerate() {
        let line = index + 2; // 1-based, after the header
        let parse_err = |detail: String| SurveyError::Parse {
            path: path.to_path_buf(),
            line,
            detail,
        };
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        let respondent_id = field(0);
        if respondent_id.is_empty() {
            return Err(parse_err("empty respondent_id".to_string()));
        }
        let rating: f64 = field(2)
            .parse()
            .map_err(|_| parse_err(format!("rating {:?} is not a number", field(2))))?;
        let easy_check_value: f64 = field(3).parse().map_err(|_| {
            parse_err(format!("easy_check_value {:?} is not a number", field(3)))
        })?;
        let attention_raw: u64 = field(4).parse().map_err(|_| {
            parse_err(format!(
                "attention_correct_count {:?} is not an integer",
                field(4)
            ))
        })?;
        if attention_raw > 5 {
            return Err(parse_err(format!(
                "attention_correct_count {attention_raw} must be at most 5"
            )));
        }
        let mut demographics = BTreeMap::new();
        for (k, key) in demographic_keys.iter().enumerate() {
            demographics.insert(key.clone(), field(expected.len() + k));
        }

        let entry = partials.entry(respondent_id.clone()).or_insert_with(|| {
            order.push(respondent_id.clone());
            Partial {
                ratings: Vec::new(),
                easy_check_value,
                attention_score: attention_raw as u8,
                demographics: demographics.clone(),
            }
        });
        if entry.easy_check_value != easy_check_value
            || entry.attention_score != attention_raw as u8
            || entry.demographics != demographics
        {
            return Err(parse_err(format!(
                "respondent {respondent_id} repeats with different per-respondent fields"
            )));
        }
        entry.ratings.push(ItemRating {
            item_id: field(1),
            rating,
        });
    }

    let mut records = Vec::with_capacity(order.len());
    for respondent_id in order {
        let partial = partials.remove(&respondent_id).expect("grouped above");
        records.push(RespondentRecord::new(
            respondent_id,
            partial.ratings,
            partial.easy_check_value == prompts::EASY_ATTENTION_CHECK_EXPECTED,
            partial.attention_score,
            partial.demographics,
        )?);
    }
    Ok(records)
}

/// Errors from stimulus generation, survey assembly, ingest, and stats.
#[derive(Debug, thiserror::Error)]
pub enum SurveyError {
    #[error("original explanation is empty")]
    EmptyExplanation,
    #[error("variant level {level} must be -1 (low) or +1 (high)")]
    BadVariantLevel { level: i8 },
    #[error("statement {statement_id:?} is missing its level {level} item")]
    MissingLevel { statement_id: String, level: i8 },
    #[error("statement {statement_id:?} has more than one level {level} item")]
    DuplicateLevel { statement_id: String, level: i8 },
    #[error("stimulus references unknown statement {statement_id:?}")]
    UnknownStatement { statement_id: String },
    #[error("rating references unknown item {item_id:?}")]
    UnknownItem { item_id: String },
    #[error("survey needs at least {need} statements, found {have}")]
    TooFewStatements { have: usize, need: usize },
    #[error("survey needs at least one respondent")]
    BadRespondentCount,
    #[error("respondent {respondent_id:?} has {count} ratings; expected 4")]
    BadRatingCount { respondent_id: String, count: usize },
    #[error("respondent {respondent_id:?} rated item {item_id:?} {value}; expected 0-10")]
    BadRating {
        respondent_id: String,
        item_id: String,
        value: f64,
    },
    #[error("respondent {respondent_id:?} attention score {value} exceeds 5")]
    BadAttentionScore { respondent_id: String, value: u8 },
    #[error("input is empty")]
    EmptyInput,
    #[error("ratings file {path}: {detail}")]
    Store { path: PathBuf, detail: String },
    #[error("ratings file {path} line {line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}
