//! The annotated assertiveness corpus: ingest, validation, aggregation,
//! inter-coder agreement, train/test splitting, and fine-tune export.
//!
//! A corpus is a flat list of [`AnnotatedSample`]s, each carrying the ratings
//! of one or more human coders on a 0–10 assertiveness scale. Samples come
//! from heterogeneous sources ([`Source`]); coders need not rate every sample
//! (missing ratings are simply absent keys), and every sample's `mean_score`
//! is the arithmetic mean over the ratings actually present.
//!
//! File formats (see [`load_corpus`]):
//!
//! * CSV with header `id,text,source,<coder>,<coder>,...` — one column per
//!   coder, empty cells meaning "did not rate".
//! * JSONL with keys `id`, `text`, `source` and one numeric (or null) key per
//!   coder.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::prompts;
use crate::stats;

/// Where a sample was drawn from.
///
/// The five named variants cover the compiled corpus; [`Source::Other`]
/// keeps the enum open so new corpora ingest without a code change.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Anthropic,
    GlobeAndMail,
    ChangeMyView,
    Llama3Liar,
    Pei,
    Other(String),
}

impl Source {
    /// Parse a source tag as it appears in data files. Matching is
    /// case-insensitive and accepts common spellings; anything unrecognised
    /// becomes [`Source::Other`] with the trimmed original text.
    pub fn parse(raw: &str) -> Source {
        let trimmed = raw.trim();
        match trimmed.to_lowercase().replace([' ', '_'], "-").as_str() {
            "anthropic" => Source::Anthropic,
            "gm" | "globe-and-mail" | "globeandmail" => Source::GlobeAndMail,
            "cmv" | "change-my-view" | "changemyview" => Source::ChangeMyView,
            "llama3liar" | "llama3-liar" | "llama-3-liar" => Source::Llama3Liar,
            "pei" => Source::Pei,
            _ => Source::Other(trimmed.to_string()),
        }
    }
}

impl fmt::Display for Source {
    /// Stable string tag used in files and reports.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Source::Anthropic => "Anthropic",
            Source::GlobeAndMail => "GM",
            Source::ChangeMyView => "CMV",
            Source::Llama3Liar => "Llama3Liar",
            Source::Pei => "Pei",
            Source::Other(s) => s.as_str(),
        };
        f.write_str(tag)
    }
}

impl Serialize for Source {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Ok(Source::parse(&raw))
    }
}

/// One corpus entry: a text, its provenance, and per-coder 0–10 ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub id: String,
    pub text: String,
    pub source: Source,
    /// Coder id → rating in `[0, 10]`. Ordered so serialisation is stable.
    pub coder_scores: BTreeMap<String, f64>,
    /// Arithmetic mean over the ratings present in `coder_scores`.
    pub mean_score: f64,
}

impl AnnotatedSample {
    /// Build a validated sample; `mean_score` is computed from the ratings.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        source: Source,
        coder_scores: BTreeMap<String, f64>,
    ) -> Result<AnnotatedSample, CorpusError> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { id });
        }
        if coder_scores.is_empty() {
            return Err(CorpusError::NoRatings { id });
        }
        for (coder, &rating) in &coder_scores {
            if !rating.is_finite() || !(0.0..=10.0).contains(&rating) {
                return Err(CorpusError::RatingOutOfRange {
                    id,
                    coder: coder.clone(),
                    rating,
                });
            }
        }
        let ratings: Vec<f64> = coder_scores.values().copied().collect();
        let mean_score = stats::mean(&ratings);
        Ok(AnnotatedSample {
            id,
            text,
            source,
            coder_scores,
            mean_score,
        })
    }
}

/// How [`load_corpus`] should interpret its input files.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Force a format instead of inferring from the file extension
    /// (`.csv` → CSV, `.jsonl`/`.json` → JSONL).
    pub format: Option<IngestFormat>,
}

/// Tabular format of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestFormat {
    Csv,
    Jsonl,
}

/// Load and validate corpus files, concatenating their samples in file then
/// row order. Duplicate ids across the whole load are rejected.
pub fn load_corpus(
    paths: &[PathBuf],
    config: &IngestConfig,
) -> Result<Vec<AnnotatedSample>, CorpusError> {
    let mut samples = Vec::new();
    let mut seen = BTreeSet::new();
    for path in paths {
        let format = match config.format {
            Some(f) => f,
            None => infer_format(path)?,
        };
        let file_samples = match format {
            IngestFormat::Csv => load_csv(path)?,
            IngestFormat::Jsonl => load_jsonl(path)?,
        };
        for sample in file_samples {
            if !seen.insert(sample.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    id: sample.id,
                    path: path.clone(),
                });
            }
            samples.push(sample);
        }
    }
    Ok(samples)
}

fn infer_format(path: &Path) -> Result<IngestFormat, CorpusError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(IngestFormat::Csv),
        Some("jsonl") | Some("json") => Ok(IngestFormat::Jsonl),
        _ => Err(CorpusError::UnknownFormat { path: path.into() }),
    }
}

fn load_csv(path: &Path) -> Result<Vec<AnnotatedSample>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| CorpusError::Malformed {
            path: path.into(),
            line: 1,
            detail: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::Malformed {
            path: path.into(),
            line: 1,
            detail: e.to_string(),
        })?
        .clone();
    let columns: Vec<String> = headers.iter().map(str::to_string).collect();
    if columns.len() < 4 || columns[0] != "id" || columns[1] != "text" || columns[2] != "source" {
        return Err(CorpusError::Malformed {
            path: path.into(),
            line: 1,
            detail: format!(
                "expected header id,text,source,<coder columns...>; found {:?}",
                columns
            ),
        });
    }
    let coder_ids = &columns[3..];

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CorpusError::Malformed {
            path: path.into(),
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default(),
            detail: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let mut ratings = BTreeMap::new();
        for (coder, cell) in coder_ids.iter().zip(record.iter().skip(3)) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue; // coder did not rate this sample
            }
            let rating: f64 = cell.parse().map_err(|_| CorpusError::Malformed {
                path: path.into(),
                line,
                detail: format!("rating for coder {coder} is not a number: {cell:?}"),
            })?;
            ratings.insert(coder.clone(), rating);
        }
        let sample = AnnotatedSample::new(
            record.get(0).unwrap_or_default(),
            record.get(1).unwrap_or_default(),
            Source::parse(record.get(2).unwrap_or_default()),
            ratings,
        )?;
        samples.push(sample);
    }
    Ok(samples)
}

fn load_jsonl(path: &Path) -> Result<Vec<AnnotatedSample>, CorpusError> {
    let file = File::open(path)?;
    let mut samples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed {
                path: path.into(),
                line: line_no,
                detail: e.to_string(),
            })?;
        let get_str = |key: &str| -> Result<String, CorpusError> {
            value
                .get(key)
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .ok_or_else(|| CorpusError::Malformed {
                    path: path.into(),
                    line: line_no,
                    detail: format!("missing or non-string key {key:?}"),
                })
        };
        let id = get_str("id")?;
        let text = get_str("text")?;
        let source = Source::parse(&get_str("source")?);
        let mut ratings = BTreeMap::new();
        for (key, v) in &value {
            if key == "id" || key == "text" || key == "source" {
                continue;
            }
            match v {
                serde_json::Value::Null => {} // coder did not rate this sample
                serde_json::Value::Number(n) => {
                    let rating = n.as_f64().ok_or_else(|| CorpusError::Malformed {
                        path: path.into(),
                        line: line_no,
                        detail: format!("rating for coder {key} is not representable: {n}"),
                    })?;
                    ratings.insert(key.clone(), rating);
                }
                other => {
                    return Err(CorpusError::Malformed {
                        path: path.into(),
                        line: line_no,
                        detail: format!("rating for coder {key} must be numeric, found {other}"),
                    })
                }
            }
        }
        samples.push(AnnotatedSample::new(id, text, source, ratings)?);
    }
    Ok(samples)
}

// ---------------------------------------------------------------------------
// Inter-coder agreement
// ---------------------------------------------------------------------------

/// One coder's agreement with the per-sample mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementRow {
    pub coder_id: String,
    /// Pearson correlation with the sample means, or `None` when undefined
    /// (zero variance on either side).
    pub correlation: Option<f64>,
    /// How many samples this coder rated.
    pub n_rated: usize,
    /// Set when `correlation` is `None`, explaining why.
    pub note: Option<String>,
}

/// Inter-coder agreement: per-coder correlation with the mean score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementTable {
    /// Flags the methodological choice for report headers: each coder is
    /// correlated against the mean *including* their own rating.
    pub method: String,
    pub rows: Vec<AgreementRow>,
    /// Mean over defined rows; `None` if every row is undefined.
    pub mean_agreement: Option<f64>,
}

/// Per-coder Pearson correlation between a coder's ratings and the sample
/// mean score, over the samples that coder rated (pairwise-complete).
///
/// The mean *includes* the coder's own rating; the table's `method` field
/// records this so reports can surface it. Coders that rated fewer than two
/// samples are omitted (no correlation is estimable); at least two coders
/// with two or more rated samples are required.
pub fn intercoder_agreement(samples: &[AnnotatedSample]) -> Result<AgreementTable, CorpusError> {
    let mut coder_ids = BTreeSet::new();
    for sample in samples {
        coder_ids.extend(sample.coder_scores.keys().cloned());
    }
    let mut rows = Vec::new();
    for coder in &coder_ids {
        let mut own = Vec::new();
        let mut means = Vec::new();
        for sample in samples {
            if let Some(&rating) = sample.coder_scores.get(coder) {
                own.push(rating);
                means.push(sample.mean_score);
            }
        }
        if own.len() < 2 {
            continue; // not enough paired observations for a correlation
        }
        let correlation = pearson_raw(&own, &means);
        let note = match correlation {
            Some(_) => None,
            None => Some("undefined: zero variance".to_string()),
        };
        rows.push(AgreementRow {
            coder_id: coder.clone(),
            correlation,
            n_rated: own.len(),
            note,
        });
    }
    if rows.len() < 2 {
        return Err(CorpusError::InsufficientCoders { found: rows.len() });
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.correlation).collect();
    let mean_agreement = if defined.is_empty() {
        None
    } else {
        Some(stats::mean(&defined))
    };
    Ok(AgreementTable {
        method: "pearson, coder vs per-sample mean (self included)".to_string(),
        rows,
        mean_agreement,
    })
}

/// Plain Pearson correlation; `None` when either side has zero variance.
fn pearson_raw(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = stats::mean(x);
    let my = stats::mean(y);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some((cov / n) / ((vx / n).sqrt() * (vy / n).sqrt()))
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// How to divide a corpus into train and test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Seeded shuffle, first `train_ratio` of samples into train.
    Random { train_ratio: f64 },
    /// Entire named source held out as test; everything else trains.
    LeaveOneSourceOut { source: Source },
}

/// A materialised train/test division, identified by sample ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub strategy: SplitStrategy,
    pub seed: u64,
}

impl CorpusSplit {
    /// Resolve the id lists back to sample references, preserving split order.
    pub fn partition<'a>(
        &self,
        samples: &'a [AnnotatedSample],
    ) -> (Vec<&'a AnnotatedSample>, Vec<&'a AnnotatedSample>) {
        let by_id: BTreeMap<&str, &AnnotatedSample> =
            samples.iter().map(|s| (s.id.as_str(), s)).collect();
        let resolve = |ids: &[String]| {
            ids.iter()
                .filter_map(|id| by_id.get(id.as_str()).copied())
                .collect()
        };
        (resolve(&self.train), resolve(&self.test))
    }
}

/// Split a corpus by the given strategy.
///
/// `Random` shuffles ids with a ChaCha8 generator seeded by `seed`, so equal
/// inputs and seeds always produce equal splits. `LeaveOneSourceOut` ignores
/// the seed. Both sides must end up non-empty.
pub fn split(
    samples: &[AnnotatedSample],
    strategy: &SplitStrategy,
    seed: u64,
) -> Result<CorpusSplit, CorpusError> {
    let (train, test) = match strategy {
        SplitStrategy::Random { train_ratio } => {
            if !(0.0..=1.0).contains(train_ratio) {
                return Err(CorpusError::BadSplitRatio { ratio: *train_ratio });
            }
            let mut ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ids.shuffle(&mut rng);
            let cut = (train_ratio * ids.len() as f64).round() as usize;
            let test = ids.split_off(cut.min(ids.len()));
            (ids, test)
        }
        SplitStrategy::LeaveOneSourceOut { source } => {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for sample in samples {
                if &sample.source == source {
                    test.push(sample.id.clone());
                } else {
                    train.push(sample.id.clone());
                }
            }
            if test.is_empty() {
                return Err(CorpusError::SourceAbsent {
                    source_tag: source.to_string(),
                });
            }
            (train, test)
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(CorpusError::EmptySplitSide {
            train: train.len(),
            test: test.len(),
        });
    }
    Ok(CorpusSplit {
        train,
        test,
        strategy: strategy.clone(),
        seed,
    })
}

// ---------------------------------------------------------------------------
// Rounding and fine-tune export
// ---------------------------------------------------------------------------

/// Copy samples with `mean_score` rounded half-away-from-zero to `decimals`
/// places. Ratings are untouched; the inputs are not modified. Note the
/// rounded mean intentionally no longer equals the exact mean of
/// `coder_scores` — these are label sets for export and training.
pub fn round_scores(samples: &[AnnotatedSample], decimals: u32) -> Vec<AnnotatedSample> {
    samples
        .iter()
        .map(|s| {
            let mut out = s.clone();
            out.mean_score = round_half_away(s.mean_score, decimals);
            out
        })
        .collect()
}

/// Round half-away-from-zero in *decimal* arithmetic.
///
/// Binary floats cannot represent most `.x5` values exactly, so rounding via
/// float multiplication misses ties (e.g. `0.145` is stored as `0.1449…`,
/// and `3.25` as `3.25` exactly but `4.35` as `4.3499…`). Humans labelling
/// "7.65 → 7.7" mean decimal ties, so we round on the shortest decimal
/// representation — the digits `Display` prints, which uniquely identify the
/// float — and convert back.
pub fn round_half_away(value: f64, decimals: u32) -> f64 {
    if !value.is_finite() {
        return value;
    }
    let negative = value < 0.0;
    let text = format!("{}", value.abs());
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (text, String::new()),
    };
    let d = decimals as usize;
    if frac_part.len() <= d {
        return value; // already at most `decimals` places
    }
    let kept: String = frac_part.chars().take(d).collect();
    let first_dropped = frac_part.as_bytes()[d] - b'0';
    let mut digits: Vec<u8> = format!("{int_part}{kept}").into_bytes();
    if first_dropped >= 5 {
        // Propagate a +1 carry through the kept digits.
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let joined = String::from_utf8(digits).expect("ascii digits");
    let (int_digits, frac_digits) = joined.split_at(joined.len() - d);
    let rebuilt = if d == 0 {
        int_digits.to_string()
    } else {
        format!("{int_digits}.{frac_digits}")
    };
    let magnitude: f64 = rebuilt.parse().expect("rebuilt decimal parses");
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Format a score the way fine-tune labels expect: the shortest decimal
/// string that round-trips (`7.7`, not `7.7000000000000002`).
pub fn format_score(score: f64) -> String {
    format!("{score}")
}

/// One chat-formatted fine-tuning record.
#[derive(Debug, Serialize, Deserialize)]
struct FinetuneRecord {
    messages: Vec<FinetuneMessage>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FinetuneMessage {
    role: String,
    content: String,
}

/// Write `samples` as chat-format fine-tuning JSONL and return the record
/// count.
///
/// Each record holds the coder-guidance system message, a user message built
/// from `prompt_template` (which must contain `{text}`), and the sample's
/// mean score as the assistant answer. Scores are typically pre-rounded with
/// [`round_scores`].
pub fn export_finetune(
    samples: &[AnnotatedSample],
    prompt_template: &str,
    path: &Path,
) -> Result<usize, CorpusError> {
    if !prompt_template.contains("{text}") {
        return Err(CorpusError::TemplateMissingPlaceholder);
    }
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for sample in samples {
        let record = FinetuneRecord {
            messages: vec![
                FinetuneMessage {
                    role: "system".into(),
                    content: prompts::ASSERTIVENESS_CODER_PROMPT.into(),
                },
                FinetuneMessage {
                    role: "user".into(),
                    content: prompt_template.replace("{text}", &sample.text),
                },
                FinetuneMessage {
                    role: "assistant".into(),
                    content: format_score(sample.mean_score),
                },
            ],
        };
        serde_json::to_writer(&mut writer, &record).map_err(|e| CorpusError::Malformed {
            path: path.into(),
            line: 0,
            detail: e.to_string(),
        })?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(samples.len())
}

/// Read back a fine-tune export: `(text, score)` pairs in file order.
///
/// The inverse of [`export_finetune`] for templates where `{text}` is the
/// whole user message or has a fixed prefix/suffix around it.
pub fn read_finetune(path: &Path, prompt_template: &str) -> Result<Vec<(String, f64)>, CorpusError> {
    let (prefix, suffix) = prompt_template
        .split_once("{text}")
        .ok_or(CorpusError::TemplateMissingPlaceholder)?;
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FinetuneRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.into(),
                line: line_no,
                detail: e.to_string(),
            })?;
        let malformed = |detail: String| CorpusError::Malformed {
            path: path.into(),
            line: line_no,
            detail,
        };
        let user = record
            .messages
            .iter()
            .find(|m| m.role == "user")
            .ok_or_else(|| malformed("record has no user message".into()))?;
        let assistant = record
            .messages
            .iter()
            .find(|m| m.role == "assistant")
            .ok_or_else(|| malformed("record has no assistant message".into()))?;
        let text = user
            .content
            .strip_prefix(prefix)
            .and_then(|t| t.strip_suffix(suffix))
            .ok_or_else(|| malformed("user message does not match the template".into()))?;
        let score: f64 = assistant
            .content
            .trim()
            .parse()
            .map_err(|_| malformed(format!("assistant content is not a score: {:?}", assistant.content)))?;
        out.push((text.to_string(), score));
    }
    Ok(out)
}

/// Errors from corpus ingest, validation, splitting, and export.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {detail}")]
    Malformed {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("cannot infer corpus format from extension of {path} (expected .csv, .json, or .jsonl)")]
    UnknownFormat { path: PathBuf },
    #[error("sample {id}: rating {rating} by coder {coder} is outside [0, 10]")]
    RatingOutOfRange { id: String, coder: String, rating: f64 },
    #[error("sample {id}: text is empty after trimming")]
    EmptyText { id: String },
    #[error("sample {id}: no coder ratings present")]
    NoRatings { id: String },
    #[error("duplicate sample id {id} (second occurrence in {path})")]
    DuplicateId { id: String, path: PathBuf },
    #[error("agreement requires at least 2 coders with >= 2 rated samples; found {found}")]
    InsufficientCoders { found: usize },
    #[error("train ratio {ratio} is outside [0, 1]")]
    BadSplitRatio { ratio: f64 },
    #[error("no samples with source {source_tag} in corpus")]
    SourceAbsent { source_tag: String },
    #[error("split leaves an empty side (train {train}, test {test})")]
    EmptySplitSide { train: usize, test: usize },
    #[error("prompt template must contain a {{text}} placeholder")]
    TemplateMissingPlaceholder,
}
