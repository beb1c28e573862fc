//! Correlation, comparison, and ablation statistics: Spearman/Pearson with
//! p-values, distribution summaries, stratified correlation tables, the
//! per-statement calibration-gap analysis, and the leave-one-source-out
//! scorer ablation harness.
//!
//! Everything here is a pure function over in-memory series. p-values use
//! the Student-t approximation (`t = r·√((n−2)/(1−r²))` with `n−2` degrees
//! of freedom); [`exact_permutation_p`] offers the exact two-sided
//! permutation test for very small samples. Ties get mid-ranks throughout.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::certainty::{verdict_confidence, CertaintyRecord};
use crate::corpus::{split, AnnotatedSample, CorpusError, SplitStrategy};
use crate::scorers::{evaluate_scorer, Scorer, ScorerError};
use crate::stats;

/// How a correlation coefficient was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Spearman,
    Pearson,
}

/// One correlation with its two-sided p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub method: CorrelationMethod,
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Minimum series length for a defined correlation and p-value.
pub const MIN_CORRELATION_N: usize = 3;

/// Pearson product-moment correlation with a t-approximation p-value.
///
/// # Errors
///
/// Mismatched lengths, fewer than [`MIN_CORRELATION_N`] points, non-finite
/// values, or a constant series (the coefficient is undefined there).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, DiagnosticsError> {
    let r = pearson_coefficient(x, y)?;
    Ok(CorrelationResult {
        method: CorrelationMethod::Pearson,
        coefficient: r,
        p_value: p_value_t(r, x.len())?,
        n: x.len(),
    })
}

/// Spearman rank correlation: mid-rank transform, then Pearson on ranks,
/// with the same t-approximation p-value.
///
/// # Errors
///
/// As [`pearson`].
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, DiagnosticsError> {
    check_series(x, y)?;
    let rx = stats::midranks(x);
    let ry = stats::midranks(y);
    let r = pearson_coefficient(&rx, &ry).map_err(|e| match e {
        // A constant rank vector means the underlying series was constant.
        DiagnosticsError::ConstantSeries { which } => DiagnosticsError::ConstantSeries { which },
        other => other,
    })?;
    Ok(CorrelationResult {
        method: CorrelationMethod::Spearman,
        coefficient: r,
        p_value: p_value_t(r, x.len())?,
        n: x.len(),
    })
}

fn check_series(x: &[f64], y: &[f64]) -> Result<(), DiagnosticsError> {
    if x.len() != y.len() {
        return Err(DiagnosticsError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < MIN_CORRELATION_N {
        return Err(DiagnosticsError::TooFewPoints {
            n: x.len(),
            min: MIN_CORRELATION_N,
        });
    }
    for (name, series) in [("x", x), ("y", y)] {
        if let Some(index) = series.iter().position(|v| !v.is_finite()) {
            return Err(DiagnosticsError::NonFinite {
                which: name.to_string(),
                index,
            });
        }
    }
    Ok(())
}

/// Bare Pearson coefficient, clamped into [−1, 1] against rounding spill.
fn pearson_coefficient(x: &[f64], y: &[f64]) -> Result<f64, DiagnosticsError> {
    check_series(x, y)?;
    let mx = stats::mean(x);
    let my = stats::mean(y);
    let mut num = 0.0;
    let mut den_x = 0.0;
    let mut den_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        den_x += (a - mx) * (a - mx);
        den_y += (b - my) * (b - my);
    }
    if den_x == 0.0 {
        return Err(DiagnosticsError::ConstantSeries { which: "x" });
    }
    if den_y == 0.0 {
        return Err(DiagnosticsError::ConstantSeries { which: "y" });
    }
    // A single square root of the product keeps exactly collinear data at
    // exactly ±1 (two roots multiplied together round away from it).
    Ok((num / (den_x * den_y).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value for a correlation of `r` over `n` points via the
/// Student-t transform `t = r·√((n−2)/(1−r²))` with `n − 2` degrees of
/// freedom. `|r| = 1` returns exactly 0.
///
/// # Errors
///
/// `n < 3` or `|r| > 1` (after a tiny tolerance for rounding spill).
pub fn p_value_t(r: f64, n: usize) -> Result<f64, DiagnosticsError> {
    if n < MIN_CORRELATION_N {
        return Err(DiagnosticsError::TooFewPoints {
            n,
            min: MIN_CORRELATION_N,
        });
    }
    if !r.is_finite() || r.abs() > 1.0 + 1e-12 {
        return Err(DiagnosticsError::BadCoefficient { r });
    }
    let r = r.clamp(-1.0, 1.0);
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let dof = (n - 2) as f64;
    let t = r * (dof / (1.0 - r * r)).sqrt();
    Ok(stats::student_t_two_sided_p(t, dof))
}

/// Largest n for which [`exact_permutation_p`] will enumerate all n!
/// orderings.
pub const MAX_EXACT_PERMUTATION_N: usize = 10;

/// Exact two-sided permutation p-value for a correlation: the fraction of
/// all `n!` orderings of `y` whose |coefficient| is at least the observed
/// one. Only available for `n ≤ 10` (10! ≈ 3.6M orderings).
///
/// # Errors
///
/// As the underlying correlation, plus `n > 10`.
pub fn exact_permutation_p(
    x: &[f64],
    y: &[f64],
    method: CorrelationMethod,
) -> Result<CorrelationResult, DiagnosticsError> {
    check_series(x, y)?;
    if x.len() > MAX_EXACT_PERMUTATION_N {
        return Err(DiagnosticsError::TooManyForExactTest {
            n: x.len(),
            max: MAX_EXACT_PERMUTATION_N,
        });
    }
    // For Spearman, permuting raw values and permuting mid-ranks are the
    // same test, so both methods reduce to Pearson over transformed series.
    let (tx, ty) = match method {
        CorrelationMethod::Spearman => (stats::midranks(x), stats::midranks(y)),
        CorrelationMethod::Pearson => (x.to_vec(), y.to_vec()),
    };
    let observed = pearson_coefficient(&tx, &ty)?;

    // Means and variances are permutation-invariant: only the cross term
    // changes, so each ordering costs one centered dot product.
    let mx = stats::mean(&tx);
    let my = stats::mean(&ty);
    let cx: Vec<f64> = tx.iter().map(|v| v - mx).collect();
    let mut cy: Vec<f64> = ty.iter().map(|v| v - my).collect();
    let den = (cx.iter().map(|v| v * v).sum::<f64>()
        * cy.iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let cutoff = observed.abs() - 1e-12;

    let mut hits: u64 = 0;
    let mut total: u64 = 0;
    let mut count_current = |cy: &[f64]| {
        let r = cx.iter().zip(cy).map(|(a, b)| a * b).sum::<f64>() / den;
        if r.abs() >= cutoff {
            hits += 1;
        }
        total += 1;
    };

    // Heap's algorithm, iteratively: visits every ordering of `cy` once.
    let n = cy.len();
    let mut c = vec![0usize; n];
    count_current(&cy);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                cy.swap(0, i);
            } else {
                cy.swap(c[i], i);
            }
            count_current(&cy);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    Ok(CorrelationResult {
        method,
        coefficient: observed,
        p_value: hits as f64 / total as f64,
        n: x.len(),
    })
}

/// Significance thresholds for star annotations. Defaults follow the usual
/// three-star convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarThresholds {
    pub one: f64,
    pub two: f64,
    pub three: f64,
}

impl Default for StarThresholds {
    fn default() -> StarThresholds {
        StarThresholds {
            one: 0.05,
            two: 0.01,
            three: 0.001,
        }
    }
}

/// Star annotation for a p-value: `*` below 0.05, `**` below 0.01, `***`
/// below 0.001 (strict comparisons).
pub fn significance_stars(p_value: f64) -> &'static str {
    let t = StarThresholds::default();
    if p_value < t.three {
        "***"
    } else if p_value < t.two {
        "**"
    } else if p_value < t.one {
        "*"
    } else {
        ""
    }
}

/// Star annotation against caller-supplied thresholds.
pub fn significance_stars_with(p_value: f64, thresholds: &StarThresholds) -> String {
    if p_value < thresholds.three {
        "***".to_string()
    } else if p_value < thresholds.two {
        "**".to_string()
    } else if p_value < thresholds.one {
        "*".to_string()
    } else {
        String::new()
    }
}

/// One table cell: a correlation when defined, or the reason it is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationCell {
    Result {
        result: CorrelationResult,
        stars: String,
    },
    /// Too few points in the stratum for a defined p-value.
    Insufficient { n: usize },
    /// The coefficient itself is undefined (constant series).
    Undefined { detail: String },
}

impl CorrelationCell {
    /// Correlate two series into a cell, downgrading pre-condition failures
    /// to flagged cells instead of hard errors.
    pub fn compute(
        x: &[f64],
        y: &[f64],
        method: CorrelationMethod,
    ) -> Result<CorrelationCell, DiagnosticsError> {
        if x.len() < MIN_CORRELATION_N {
            return Ok(CorrelationCell::Insufficient { n: x.len() });
        }
        let outcome = match method {
            CorrelationMethod::Spearman => spearman(x, y),
            CorrelationMethod::Pearson => pearson(x, y),
        };
        match outcome {
            Ok(result) => {
                let stars = significance_stars(result.p_value).to_string();
                Ok(CorrelationCell::Result { result, stars })
            }
            Err(DiagnosticsError::ConstantSeries { which }) => Ok(CorrelationCell::Undefined {
                detail: format!("undefined: series {which} is constant"),
            }),
            Err(other) => Err(other),
        }
    }

    /// Human-readable cell text for CSV tables.
    pub fn render(&self) -> String {
        match self {
            CorrelationCell::Result { result, stars } => format!(
                "{:.3}{} (p={:.3e})",
                result.coefficient, stars, result.p_value
            ),
            CorrelationCell::Insufficient { n } => format!("insufficient (n={n})"),
            CorrelationCell::Undefined { detail } => detail.clone(),
        }
    }
}

/// One joined observation for the stratified correlation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub statement_id: String,
    /// Variant level: −1 (low), 0 (medium/original), +1 (high). `None`
    /// participates in the Overall column only.
    pub level: Option<i8>,
    /// Model-predicted assertiveness in [0, 1].
    pub predicted_assertiveness: f64,
    /// Human mean assertiveness in [0, 1].
    pub human_assertiveness: f64,
    /// Calibrated internal certainty (probability true).
    pub certainty_p: f64,
}

/// One series pair correlated overall and per stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedRow {
    pub label: String,
    pub overall: CorrelationCell,
    pub low: CorrelationCell,
    pub medium: CorrelationCell,
    pub high: CorrelationCell,
}

/// The three-row correlation table: predicted vs human assertiveness,
/// certainty vs predicted, certainty vs human — each overall and within the
/// low / medium / high variant strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedTable {
    pub method: CorrelationMethod,
    pub rows: Vec<StratifiedRow>,
    pub n: usize,
}

impl StratifiedTable {
    /// Render as CSV with one column per stratum.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("series,overall,low,medium,high\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.label,
                quote_csv(&row.overall.render()),
                quote_csv(&row.low.render()),
                quote_csv(&row.medium.render()),
                quote_csv(&row.high.render()),
            ));
        }
        out
    }
}

fn quote_csv(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Build the stratified correlation table.
///
/// # Errors
///
/// Empty input, a level outside {−1, 0, +1}, or a value outside [0, 1].
pub fn stratify(
    records: &[ComparisonRecord],
    method: CorrelationMethod,
) -> Result<StratifiedTable, DiagnosticsError> {
    if records.is_empty() {
        return Err(DiagnosticsError::EmptyInput);
    }
    for record in records {
        if let Some(level) = record.level {
            if !(-1..=1).contains(&level) {
                return Err(DiagnosticsError::BadLevel {
                    statement_id: record.statement_id.clone(),
                    level,
                });
            }
        }
        for (name, value) in [
            ("predicted_assertiveness", record.predicted_assertiveness),
            ("human_assertiveness", record.human_assertiveness),
            ("certainty_p", record.certainty_p),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(DiagnosticsError::BadUnitValue {
                    statement_id: record.statement_id.clone(),
                    which: name.to_string(),
                    value,
                });
            }
        }
    }

    type SeriesExtractor = fn(&ComparisonRecord) -> (f64, f64);
    let series: [(&str, SeriesExtractor); 3] = [
        ("predicted vs human", |r| {
            (r.predicted_assertiveness, r.human_assertiveness)
        }),
        ("certainty vs predicted", |r| {
            (r.certainty_p, r.predicted_assertiveness)
        }),
        ("certainty vs human", |r| {
            (r.certainty_p, r.human_assertiveness)
        }),
    ];

    let mut rows = Vec::with_capacity(series.len());
    for (label, extract) in series {
        let cell_for = |level: Option<i8>| -> Result<CorrelationCell, DiagnosticsError> {
            let pairs: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| level.is_none() || r.level == level)
                .map(extract)
                .collect();
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            CorrelationCell::compute(&xs, &ys, method)
        };
        rows.push(StratifiedRow {
            label: label.to_string(),
            overall: cell_for(None)?,
            low: cell_for(Some(-1))?,
            medium: cell_for(Some(0))?,
            high: cell_for(Some(1))?,
        });
    }
    Ok(StratifiedTable {
        method,
        rows,
        n: records.len(),
    })
}

/// Number of equal-width histogram bins in a [`DistributionSummary`].
pub const HISTOGRAM_BINS: usize = 20;

/// One histogram bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Moments, spread, and a fixed-width histogram of one score series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Population skewness; `None` for zero-variance series.
    pub skewness: Option<f64>,
    /// Interquartile range — the concentration measure reported for score
    /// distributions.
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
    pub bins: Vec<HistogramBin>,
}

impl DistributionSummary {
    /// Histogram as CSV for plotting.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for bin in &self.bins {
            out.push_str(&format!("{},{},{}\n", bin.lower, bin.upper, bin.count));
        }
        out
    }
}

/// Summarize a score series: 20 equal-width bins across [min, max] plus
/// population moments and IQR. A zero-span series collapses to a single
/// degenerate bin holding every observation.
///
/// # Errors
///
/// Empty or non-finite input.
pub fn distribution_summary(scores: &[f64]) -> Result<DistributionSummary, DiagnosticsError> {
    if scores.is_empty() {
        return Err(DiagnosticsError::EmptyInput);
    }
    if let Some(index) = scores.iter().position(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite {
            which: "scores".to_string(),
            index,
        });
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        // Every value is identical: the moments are exact, not subject to
        // the rounding jitter a naive computation would pick up.
        return Ok(DistributionSummary {
            n: scores.len(),
            mean: min,
            std: 0.0,
            skewness: None,
            iqr: 0.0,
            min,
            max,
            bins: vec![HistogramBin {
                lower: min,
                upper: max,
                count: scores.len(),
            }],
        });
    }
    let bins = {
        let span = max - min;
        let mut counts = [0usize; HISTOGRAM_BINS];
        for &v in scores {
            let i = (((v - min) / span) * HISTOGRAM_BINS as f64) as usize;
            counts[i.min(HISTOGRAM_BINS - 1)] += 1;
        }
        counts
            .iter()
            .enumerate()
            .map(|(i, &count)| HistogramBin {
                lower: min + span * i as f64 / HISTOGRAM_BINS as f64,
                upper: if i == HISTOGRAM_BINS - 1 {
                    max
                } else {
                    min + span * (i + 1) as f64 / HISTOGRAM_BINS as f64
                },
                count,
            })
            .collect()
    };
    let std = stats::population_std(scores);
    let skew = stats::skewness(scores);
    Ok(DistributionSummary {
        n: scores.len(),
        mean: stats::mean(scores),
        std,
        skewness: if skew.is_finite() { Some(skew) } else { None },
        iqr: stats::iqr(scores),
        min,
        max,
        bins,
    })
}

/// IQR ratio between two series (`a` relative to `b`): below 1 means `a` is
/// more concentrated. `None` when `b` has zero IQR.
pub fn concentration_ratio(a: &[f64], b: &[f64]) -> Option<f64> {
    let denominator = stats::iqr(b);
    if denominator == 0.0 {
        return None;
    }
    Some(stats::iqr(a) / denominator)
}

/// Builds a trained [`Scorer`] from a training partition.
pub type ScorerFactory =
    Box<dyn Fn(&[AnnotatedSample]) -> Result<Box<dyn Scorer>, ScorerError> + Send + Sync>;

/// One model entering the ablation: a display name plus its factory.
pub struct AblationModelSpec {
    pub name: String,
    pub factory: ScorerFactory,
}

/// One train-on-rest / evaluate-on-held-out cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    /// Display tag of the held-out source.
    pub held_out: String,
    /// MSE between z-scored predictions and labels; `None` when the cell
    /// failed or standardization was undefined.
    pub mse_standardized: Option<f64>,
    /// MSE on the raw 0–10 scale; `None` when the cell failed outright.
    pub mse_raw: Option<f64>,
    pub n_test: usize,
    /// Training or evaluation failed; `note` carries the reason.
    pub failed: bool,
    pub note: Option<String>,
}

/// One model's row across every held-out source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub model: String,
    pub cells: Vec<AblationCell>,
    /// Arithmetic mean of the standardized MSEs over cells that produced
    /// one; `None` if no cell did.
    pub row_mean: Option<f64>,
    /// Set when the mean covers fewer cells than the row has.
    pub mean_note: Option<String>,
}

/// The model × held-out-source MSE matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationMatrix {
    /// Held-out source tags, one per column, in evaluation order.
    pub sources: Vec<String>,
    pub rows: Vec<AblationRow>,
}

impl AblationMatrix {
    /// Standardized-MSE matrix as CSV; failed/undefined cells are blank.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("model");
        for source in &self.sources {
            out.push(',');
            out.push_str(source);
        }
        out.push_str(",row_mean\n");
        for row in &self.rows {
            out.push_str(&row.model);
            for cell in &row.cells {
                out.push(',');
                if let Some(v) = cell.mse_standardized {
                    out.push_str(&v.to_string());
                }
            }
            out.push(',');
            if let Some(mean) = row.row_mean {
                out.push_str(&mean.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Leave-one-source-out ablation over the distinct sources found in
/// `samples`, columns ordered by source tag.
///
/// # Errors
///
/// No models, or fewer than two distinct sources. Per-cell training or
/// evaluation failures are flagged in the cell, not raised.
pub fn ablation(
    samples: &[AnnotatedSample],
    models: &[AblationModelSpec],
) -> Result<AblationMatrix, DiagnosticsError> {
    let mut seen = BTreeSet::new();
    let mut sources = Vec::new();
    for sample in samples {
        if seen.insert(sample.source.to_string()) {
            sources.push(sample.source.clone());
        }
    }
    sources.sort_by_key(|s| s.to_string());
    ablation_with_sources(samples, models, &sources)
}

/// Leave-one-source-out ablation over an explicit held-out order. Cell
/// values depend only on the corpus content, never on this order.
pub fn ablation_with_sources(
    samples: &[AnnotatedSample],
    models: &[AblationModelSpec],
    sources: &[crate::corpus::Source],
) -> Result<AblationMatrix, DiagnosticsError> {
    if models.is_empty() {
        return Err(DiagnosticsError::NoModels);
    }
    if sources.len() < 2 {
        return Err(DiagnosticsError::TooFewSources { n: sources.len() });
    }
    let mut rows = Vec::with_capacity(models.len());
    for spec in models {
        let mut cells = Vec::with_capacity(sources.len());
        for source in sources {
            cells.push(ablation_cell(samples, spec, source)?);
        }
        let (row_mean, mean_note) = row_mean_over(&cells);
        rows.push(AblationRow {
            model: spec.name.clone(),
            cells,
            row_mean,
            mean_note,
        });
    }
    Ok(AblationMatrix {
        sources: sources.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

fn ablation_cell(
    samples: &[AnnotatedSample],
    spec: &AblationModelSpec,
    source: &crate::corpus::Source,
) -> Result<AblationCell, DiagnosticsError> {
    let strategy = SplitStrategy::LeaveOneSourceOut {
        source: source.clone(),
    };
    // The seed is unused by leave-one-source-out splits.
    let partition = split(samples, &strategy, 0)?;
    let (train_refs, test_refs) = partition.partition(samples);
    let train: Vec<AnnotatedSample> = train_refs.into_iter().cloned().collect();
    let test: Vec<AnnotatedSample> = test_refs.into_iter().cloned().collect();

    let failed_cell = |note: String, n_test: usize| AblationCell {
        held_out: source.to_string(),
        mse_standardized: None,
        mse_raw: None,
        n_test,
        failed: true,
        note: Some(note),
    };

    let scorer = match (spec.factory)(&train) {
        Ok(scorer) => scorer,
        Err(e) => return Ok(failed_cell(format!("training failed: {e}"), test.len())),
    };
    match evaluate_scorer(scorer.as_ref(), &test) {
        Ok(eval) => Ok(AblationCell {
            held_out: source.to_string(),
            mse_standardized: eval.mse_standardized,
            mse_raw: Some(eval.mse_raw),
            n_test: eval.n,
            failed: false,
            note: eval.note,
        }),
        Err(e) => Ok(failed_cell(format!("evaluation failed: {e}"), test.len())),
    }
}

/// Mean of the standardized MSEs over cells that produced one, with a note
/// when that covers fewer cells than the row holds. This is the single
/// aggregation every [`AblationRow::row_mean`] goes through.
pub fn row_mean_over(cells: &[AblationCell]) -> (Option<f64>, Option<String>) {
    let completed: Vec<f64> = cells.iter().filter_map(|c| c.mse_standardized).collect();
    if completed.is_empty() {
        return (
            None,
            Some("no cells produced a standardized MSE".to_string()),
        );
    }
    let mean = stats::mean(&completed);
    if completed.len() == cells.len() {
        (Some(mean), None)
    } else {
        (
            Some(mean),
            Some(format!(
                "mean over {} of {} cells",
                completed.len(),
                cells.len()
            )),
        )
    }
}

/// Default gap threshold above which a statement counts as over-assertive.
/// A toolkit default, not an established cutoff — reports state it.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.3;

/// Per-statement comparison of assertiveness against calibrated certainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub statement_id: String,
    /// Linguistic assertiveness in [0, 1].
    pub assertiveness: f64,
    /// Calibrated probability the statement is true.
    pub certainty_p: f64,
    /// Direction-free certainty |2p − 1|.
    pub verdict_confidence: f64,
    /// assertiveness − verdict_confidence, in [−1, 1]; positive means the
    /// language is more confident than the model.
    pub gap: f64,
}

/// Joined ids that could not be analyzed, by missing side.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JoinMisses {
    /// Certainty records with no assertiveness score.
    pub missing_assertiveness: Vec<String>,
    /// Assertiveness scores with no certainty record.
    pub missing_certainty: Vec<String>,
}

/// Aggregate view over the per-statement gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub n: usize,
    pub threshold: f64,
    /// Fraction of joined statements with gap > threshold.
    pub over_assertive_share: f64,
    pub mean_gap: f64,
    /// Spearman between calibrated p and assertiveness (the directional
    /// channel).
    pub p_vs_assertiveness: CorrelationCell,
    /// Spearman between verdict confidence and assertiveness (the
    /// direction-free channel).
    pub confidence_vs_assertiveness: CorrelationCell,
    pub join_misses: JoinMisses,
}

/// The full gap analysis: per-statement records plus the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapAnalysis {
    pub records: Vec<GapRecord>,
    pub summary: GapSummary,
}

/// Join certainty records with assertiveness scores on statement id and
/// quantify the gap between what the model says and how it says it.
///
/// Both correlation channels are reported because a directional certainty
/// and a directionless assertiveness can legitimately be compared either
/// way. Join misses are reported and excluded, never silently dropped.
///
/// # Errors
///
/// A threshold outside [0, 1], an assertiveness value outside [0, 1], a
/// certainty record with no calibrated probability, or an empty join.
pub fn gap_analysis(
    certainty: &[CertaintyRecord],
    assertiveness: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<GapAnalysis, DiagnosticsError> {
    if !(0.0..=1.0).contains(&threshold) || !threshold.is_finite() {
        return Err(DiagnosticsError::BadThreshold { value: threshold });
    }
    for (id, &value) in assertiveness {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(DiagnosticsError::BadUnitValue {
                statement_id: id.clone(),
                which: "assertiveness".to_string(),
                value,
            });
        }
    }

    let mut records = Vec::new();
    let mut misses = JoinMisses::default();
    let mut joined_ids = BTreeSet::new();
    for record in certainty {
        let Some(&assert_score) = assertiveness.get(&record.statement_id) else {
            misses.missing_assertiveness.push(record.statement_id.clone());
            continue;
        };
        let p = record
            .calibrated_p
            .ok_or_else(|| DiagnosticsError::MissingCalibration {
                statement_id: record.statement_id.clone(),
            })?;
        let confidence = verdict_confidence(p);
        joined_ids.insert(record.statement_id.clone());
        records.push(GapRecord {
            statement_id: record.statement_id.clone(),
            assertiveness: assert_score,
            certainty_p: p,
            verdict_confidence: confidence,
            gap: assert_score - confidence,
        });
    }
    for id in assertiveness.keys() {
        if !joined_ids.contains(id) {
            misses.missing_certainty.push(id.clone());
        }
    }
    misses.missing_assertiveness.sort_unstable();
    misses.missing_certainty.sort_unstable();

    if records.is_empty() {
        return Err(DiagnosticsError::EmptyJoin);
    }

    let ps: Vec<f64> = records.iter().map(|r| r.certainty_p).collect();
    let confidences: Vec<f64> = records.iter().map(|r| r.verdict_confidence).collect();
    let asserts: Vec<f64> = records.iter().map(|r| r.assertiveness).collect();
    let gaps: Vec<f64> = records.iter().map(|r| r.gap).collect();
    let over = records.iter().filter(|r| r.gap > threshold).count();

    let summary = GapSummary {
        n: records.len(),
        threshold,
        over_assertive_share: over as f64 / records.len() as f64,
        mean_gap: stats::mean(&gaps),
        p_vs_assertiveness: CorrelationCell::compute(&ps, &asserts, CorrelationMethod::Spearman)?,
        confidence_vs_assertiveness: CorrelationCell::compute(
            &confidences,
            &asserts,
            CorrelationMethod::Spearman,
        )?,
        join_misses: misses,
    };
    Ok(GapAnalysis { records, summary })
}

/// Errors from the diagnostics layer.
#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("series differ in length ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("series {which} is constant; correlation undefined")]
    ConstantSeries { which: &'static str },
    #[error("series {which} has a non-finite value at index {index}")]
    NonFinite { which: String, index: usize },
    #[error("correlation coefficient {r} is outside [-1, 1]")]
    BadCoefficient { r: f64 },
    #[error("exact permutation test supports n <= {max}, got {n}")]
    TooManyForExactTest { n: usize, max: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("record {statement_id:?} has level {level}; expected -1, 0, or +1")]
    BadLevel { statement_id: String, level: i8 },
    #[error("record {statement_id:?} {which} = {value} is outside [0, 1]")]
    BadUnitValue {
        statement_id: String,
        which: String,
        value: f64,
    },
    #[error("gap threshold {value} must be in [0, 1]")]
    BadThreshold { value: f64 },
    #[error("no statements joined across certainty and assertiveness")]
    EmptyJoin,
    #[error("record {statement_id:?} has no calibrated probability")]
    MissingCalibration { statement_id: String },
    #[error("ablation needs at least one model")]
    NoModels,
    #[error("ablation needs at least 2 distinct sources, got {n}")]
    TooFewSources { n: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certainty::Verdict;
    use crate::corpus::Source;
    use crate::scale::Scale;
    use crate::scorers::forest::{train_forest, ForestParams};
    use crate::scorers::{
        extract_features, AssertivenessScore, ForestScorer, MarkerLexicon, Scorer,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // --- pearson / spearman ------------------------------------------------

    #[test]
    fn spearman_of_monotone_series_is_one() {
        let r = spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_abs_diff_eq!(r.coefficient, 1.0, epsilon = 1e-15);
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.method, CorrelationMethod::Spearman);
        let r = spearman(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap();
        assert_abs_diff_eq!(r.coefficient, -1.0, epsilon = 1e-15);
    }

    /// Hand oracle: d = [−1, 1, −1, 1, 0] → ρ = 1 − 6·4/(5·24) = 0.8.
    #[test]
    fn spearman_matches_rank_difference_formula() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 1.0, 4.0, 3.0, 5.0];
        let r = spearman(&x, &y).unwrap();
        assert_abs_diff_eq!(r.coefficient, 0.8, epsilon = 1e-12);
    }

    /// Tie-free identity ρ = 1 − 6Σd²/(n(n²−1)), checked on shuffled data.
    #[test]
    fn tie_free_spearman_equals_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [4usize, 7, 12, 25] {
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let mut y = x.clone();
            y.shuffle(&mut rng);
            let rx = stats::midranks(&x);
            let ry = stats::midranks(&y);
            let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
            let nf = n as f64;
            let closed = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
            let r = spearman(&x, &y).unwrap();
            assert_abs_diff_eq!(r.coefficient, closed, epsilon = 1e-12);
        }
    }

    /// Brute-force oracle: Pearson over mid-ranks computed from first
    /// principles, including the documented x=[1,1,2] tie case.
    #[test]
    fn spearman_with_ties_matches_bruteforce_midrank_pearson() {
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![1.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]),
            (
                vec![0.5, 0.5, 1.5, 2.0, 2.0, 2.0, 3.5],
                vec![2.0, 1.0, 1.0, 4.0, 4.0, 2.5, 0.5],
            ),
        ];
        for (x, y) in cases {
            let rx = stats::midranks(&x);
            let ry = stats::midranks(&y);
            let mx = stats::mean(&rx);
            let my = stats::mean(&ry);
            let num: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
            let dx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
            let dy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
            let oracle = num / (dx.sqrt() * dy.sqrt());
            let r = spearman(&x, &y).unwrap();
            assert_abs_diff_eq!(r.coefficient, oracle, epsilon = 1e-12);
        }
        // The documented midranks for the tie case.
        assert_eq!(stats::midranks(&[1.0, 1.0, 2.0]), vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn pearson_known_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = pearson(&x, &[5.0, 7.0, 9.0, 11.0]).unwrap();
        assert_abs_diff_eq!(r.coefficient, 1.0, epsilon = 1e-12);
        assert_eq!(r.p_value, 0.0);

        // Covariance oracle: num 4.0, den 5.0.
        let r = pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.coefficient, 0.8, epsilon = 1e-12);

        // r = 0 at n = 3 → t = 0 → p = 1.
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r.coefficient, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn correlations_reject_degenerate_series() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(DiagnosticsError::TooFewPoints { n: 2, min: 3 })
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(DiagnosticsError::LengthMismatch { x: 3, y: 2 })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(DiagnosticsError::ConstantSeries { which: "x" })
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]),
            Err(DiagnosticsError::ConstantSeries { which: "y" })
        ));
        assert!(matches!(
            pearson(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]),
            Err(DiagnosticsError::NonFinite { index: 1, .. })
        ));
    }

    // --- p-values ------------------------------------------------------------

    #[test]
    fn p_value_boundary_cases() {
        assert_abs_diff_eq!(p_value_t(0.0, 50).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(p_value_t(1.0, 5).unwrap(), 0.0);
        assert_eq!(p_value_t(-1.0, 5).unwrap(), 0.0);
        assert!(matches!(
            p_value_t(0.5, 2),
            Err(DiagnosticsError::TooFewPoints { .. })
        ));
        assert!(matches!(
            p_value_t(1.5, 10),
            Err(DiagnosticsError::BadCoefficient { .. })
        ));
    }

    /// Magnitude sanity check: a strong correlation over a large sample has
    /// an astronomically small p-value.
    #[test]
    fn strong_correlation_large_n_vanishing_p() {
        let p = p_value_t(0.593, 245).unwrap();
        assert!(p > 0.0);
        assert!(p < 1e-20, "p = {p:e} should be < 1e-20");
    }

    /// Oracle: the t-distribution CDF from an independent implementation.
    #[test]
    fn p_value_matches_statrs_t_distribution() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for n in [5usize, 12, 30, 245] {
            let dof = (n - 2) as f64;
            let dist = StudentsT::new(0.0, 1.0, dof).unwrap();
            for r in [0.05, 0.1, 0.25, 0.4, 0.593, 0.75, 0.9, 0.99] {
                let t = r * (dof / (1.0 - r * r)).sqrt();
                let oracle = 2.0 * (1.0 - dist.cdf(t));
                let ours = p_value_t(r, n).unwrap();
                assert_abs_diff_eq!(ours, oracle, epsilon = 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn p_value_strictly_decreases_in_abs_r(
            r1 in 0.0f64..0.9,
            delta in 0.01f64..0.09,
            n in 3usize..200,
        ) {
            let r2 = r1 + delta;
            let p1 = p_value_t(r1, n).unwrap();
            let p2 = p_value_t(r2, n).unwrap();
            prop_assert!(p2 < p1, "p({r2}) = {p2} should be < p({r1}) = {p1}");
            // Two-sidedness: sign never matters.
            let p_neg = p_value_t(-r2, n).unwrap();
            prop_assert!((p2 - p_neg).abs() < 1e-12);
        }

        /// Spearman only sees ranks, so any strictly monotone transform of
        /// either series leaves it untouched.
        #[test]
        fn spearman_invariant_under_monotone_transform(
            values in proptest::collection::vec(-10.0f64..10.0, 5..30),
            others in proptest::collection::vec(-10.0f64..10.0, 5..30),
        ) {
            let n = values.len().min(others.len());
            let x = &values[..n];
            let y = &others[..n];
            let transformed: Vec<f64> = y.iter().map(|v| v.exp()).collect();
            let base = spearman(x, y);
            let warped = spearman(x, &transformed);
            match (base, warped) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.coefficient - b.coefficient).abs() < 1e-12);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "divergent outcomes: {a:?} vs {b:?}"),
            }
        }

        /// Pearson is invariant under positive affine maps of either series.
        #[test]
        fn pearson_invariant_under_positive_affine(
            values in proptest::collection::vec(-10.0f64..10.0, 5..20),
            scale_factor in 0.1f64..10.0,
            shift in -100.0f64..100.0,
        ) {
            let x: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            let mapped: Vec<f64> = values.iter().map(|v| scale_factor * v + shift).collect();
            let base = pearson(&x, &values);
            let warped = pearson(&x, &mapped);
            match (base, warped) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a.coefficient - b.coefficient).abs() < 1e-9);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "divergent outcomes: {a:?} vs {b:?}"),
            }
        }
    }

    // --- exact permutation test ------------------------------------------------

    /// Hand oracle at n = 3: of the 6 orderings, only the identity and the
    /// full reversal reach |ρ| = 1, so p = 2/6.
    #[test]
    fn exact_permutation_p_tiny_case() {
        let result = exact_permutation_p(
            &[1.0, 2.0, 3.0],
            &[1.0, 2.0, 3.0],
            CorrelationMethod::Spearman,
        )
        .unwrap();
        assert_abs_diff_eq!(result.coefficient, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(result.p_value, 2.0 / 6.0, epsilon = 1e-12);
    }

    /// Monte-Carlo oracle: a large random-shuffle estimate of the same
    /// permutation distribution must agree within sampling error.
    #[test]
    fn exact_permutation_p_matches_monte_carlo() {
        let x = [0.2, 1.4, 0.9, 2.2, 3.1, 2.5, 0.1];
        let y = [1.0, 2.4, 1.1, 2.0, 2.9, 3.5, 0.7];
        let exact = exact_permutation_p(&x, &y, CorrelationMethod::Spearman).unwrap();

        let rx = stats::midranks(&x);
        let ry = stats::midranks(&y);
        let mx = stats::mean(&rx);
        let my = stats::mean(&ry);
        let cx: Vec<f64> = rx.iter().map(|v| v - mx).collect();
        let mut cy: Vec<f64> = ry.iter().map(|v| v - my).collect();
        let den = (cx.iter().map(|v| v * v).sum::<f64>()
            * cy.iter().map(|v| v * v).sum::<f64>())
        .sqrt();
        let observed = (cx.iter().zip(&cy).map(|(a, b)| a * b).sum::<f64>() / den).abs();

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let iterations = 200_000;
        let mut hits = 0u64;
        for _ in 0..iterations {
            cy.shuffle(&mut rng);
            let r = cx.iter().zip(&cy).map(|(a, b)| a * b).sum::<f64>() / den;
            if r.abs() >= observed - 1e-12 {
                hits += 1;
            }
        }
        let mc = hits as f64 / iterations as f64;
        assert!(
            (exact.p_value - mc).abs() < 0.005,
            "exact {} vs monte-carlo {}",
            exact.p_value,
            mc
        );
    }

    #[test]
    fn exact_permutation_rejects_large_n() {
        let x: Vec<f64> = (0..11).map(|i| i as f64).collect();
        assert!(matches!(
            exact_permutation_p(&x, &x, CorrelationMethod::Pearson),
            Err(DiagnosticsError::TooManyForExactTest { n: 11, max: 10 })
        ));
    }

    // --- stars ------------------------------------------------------------------

    #[test]
    fn star_thresholds() {
        assert_eq!(significance_stars(0.2), "");
        assert_eq!(significance_stars(0.05), "");
        assert_eq!(significance_stars(0.04), "*");
        assert_eq!(significance_stars(0.01), "*");
        assert_eq!(significance_stars(0.008), "**");
        assert_eq!(significance_stars(0.001), "**");
        assert_eq!(significance_stars(0.0005), "***");
        assert_eq!(significance_stars(0.0), "***");
        let strict = StarThresholds {
            one: 0.01,
            two: 0.005,
            three: 0.0001,
        };
        assert_eq!(significance_stars_with(0.04, &strict), "");
        assert_eq!(significance_stars_with(0.006, &strict), "*");
    }

    // --- distribution summary ------------------------------------------------------

    #[test]
    fn uniform_sample_has_analytic_iqr_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let scores: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let summary = distribution_summary(&scores).unwrap();
        assert!((summary.iqr - 0.5).abs() < 0.02, "iqr = {}", summary.iqr);
        assert!((summary.mean - 0.5).abs() < 0.02, "mean = {}", summary.mean);
        assert_eq!(summary.bins.len(), HISTOGRAM_BINS);
        let total: usize = summary.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, 10_000);
        assert_eq!(summary.n, 10_000);
    }

    #[test]
    fn constant_series_summary_degenerates_cleanly() {
        let summary = distribution_summary(&[0.6; 25]).unwrap();
        assert_abs_diff_eq!(summary.std, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(summary.iqr, 0.0, epsilon = 1e-15);
        assert_eq!(summary.skewness, None);
        assert_eq!(summary.bins.len(), 1);
        assert_eq!(summary.bins[0].count, 25);
        assert_abs_diff_eq!(summary.mean, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn centered_scores_summarize_near_their_center() {
        // A unimodal pile of survey-style means around 0.6.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let scores: Vec<f64> = (0..500)
            .map(|_| {
                let base: f64 = rng.random_range(-1.0..1.0);
                (0.6 + 0.1 * base).clamp(0.0, 1.0)
            })
            .collect();
        let summary = distribution_summary(&scores).unwrap();
        assert!((summary.mean - 0.6).abs() < 0.02, "mean = {}", summary.mean);
    }

    #[test]
    fn summary_rejects_empty_and_non_finite() {
        assert!(matches!(
            distribution_summary(&[]),
            Err(DiagnosticsError::EmptyInput)
        ));
        assert!(matches!(
            distribution_summary(&[1.0, f64::INFINITY]),
            Err(DiagnosticsError::NonFinite { .. })
        ));
    }

    #[test]
    fn concentration_ratio_scales_with_iqr() {
        let narrow: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let wide: Vec<f64> = narrow.iter().map(|v| v * 2.0).collect();
        let ratio = concentration_ratio(&narrow, &wide).unwrap();
        assert_abs_diff_eq!(ratio, 0.5, epsilon = 1e-12);
        assert_eq!(concentration_ratio(&narrow, &[1.0; 10]), None);
    }

    // --- stratified table -------------------------------------------------------------

    fn comparison_records(
        n: usize,
        seed: u64,
        human_from_predicted: impl Fn(f64) -> f64,
        certainty: impl Fn(usize, &mut ChaCha8Rng) -> f64,
    ) -> Vec<ComparisonRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let predicted = (i as f64 / n as f64 * 0.8 + 0.1).clamp(0.0, 1.0);
                ComparisonRecord {
                    statement_id: format!("s{i}"),
                    level: Some([-1i8, 0, 1][i % 3]),
                    predicted_assertiveness: predicted,
                    human_assertiveness: human_from_predicted(predicted),
                    certainty_p: certainty(i, &mut rng),
                }
            })
            .collect()
    }

    #[test]
    fn identical_series_stratify_to_perfect_correlation() {
        let records = comparison_records(24, 41, |p| p, |i, _| (i as f64 / 24.0).clamp(0.0, 1.0));
        let table = stratify(&records, CorrelationMethod::Spearman).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.n, 24);
        let first = &table.rows[0];
        assert_eq!(first.label, "predicted vs human");
        for cell in [&first.overall, &first.low, &first.medium, &first.high] {
            match cell {
                CorrelationCell::Result { result, stars } => {
                    assert_abs_diff_eq!(result.coefficient, 1.0, epsilon = 1e-12);
                    assert_eq!(result.p_value, 0.0);
                    assert_eq!(stars, "***");
                }
                other => panic!("expected a perfect correlation, got {other:?}"),
            }
        }
    }

    /// Simulation oracle: certainty drawn independently of both
    /// assertiveness series correlates near zero and earns no stars.
    #[test]
    fn independent_certainty_rows_are_null(){
        let records = comparison_records(99, 43, |p| p, |_, rng| rng.random());
        let table = stratify(&records, CorrelationMethod::Spearman).unwrap();
        for row in &table.rows[1..] {
            match &row.overall {
                CorrelationCell::Result { result, stars } => {
                    assert!(
                        result.coefficient.abs() < 0.2,
                        "row {} coefficient {} should be near zero",
                        row.label,
                        result.coefficient
                    );
                    assert_eq!(stars, "", "row {} unexpectedly significant", row.label);
                }
                other => panic!("expected a defined correlation, got {other:?}"),
            }
        }
    }

    #[test]
    fn small_and_constant_strata_are_flagged() {
        let mut records = comparison_records(9, 47, |p| 1.0 - p, |_, rng| rng.random());
        // Thin out the low stratum to 2 records and flatten the medium
        // stratum's certainty.
        records.retain(|r| r.level != Some(-1) || r.statement_id == "s0" || r.statement_id == "s3");
        for r in records.iter_mut().filter(|r| r.level == Some(0)) {
            r.certainty_p = 0.5;
        }
        let table = stratify(&records, CorrelationMethod::Spearman).unwrap();
        assert!(matches!(
            table.rows[0].low,
            CorrelationCell::Insufficient { n: 2 }
        ));
        match &table.rows[1].medium {
            CorrelationCell::Undefined { detail } => {
                assert!(detail.contains("constant"), "detail: {detail}")
            }
            other => panic!("expected an undefined cell, got {other:?}"),
        }
    }

    #[test]
    fn stratify_validates_inputs() {
        assert!(matches!(
            stratify(&[], CorrelationMethod::Spearman),
            Err(DiagnosticsError::EmptyInput)
        ));
        let mut records = comparison_records(6, 51, |p| p, |_, rng| rng.random());
        records[0].level = Some(2);
        assert!(matches!(
            stratify(&records, CorrelationMethod::Spearman),
            Err(DiagnosticsError::BadLevel { level: 2, .. })
        ));
        let mut records = comparison_records(6, 51, |p| p, |_, rng| rng.random());
        records[1].human_assertiveness = 1.2;
        assert!(matches!(
            stratify(&records, CorrelationMethod::Pearson),
            Err(DiagnosticsError::BadUnitValue { .. })
        ));
    }

    #[test]
    fn stratified_csv_has_headers_and_rows() {
        let records = comparison_records(24, 41, |p| p, |i, _| (i as f64 / 24.0).clamp(0.0, 1.0));
        let table = stratify(&records, CorrelationMethod::Spearman).unwrap();
        let csv = table.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "series,overall,low,medium,high");
        assert!(csv.contains("predicted vs human"));
        assert!(csv.contains("certainty vs human"));
        assert!(csv.contains("***"));
    }

    // --- ablation ----------------------------------------------------------------------

    /// Synthetic five-source corpus whose labels follow booster density, so
    /// a forest has signal to learn.
    fn ablation_corpus() -> Vec<AnnotatedSample> {
        let sources = [
            Source::Anthropic,
            Source::GlobeAndMail,
            Source::ChangeMyView,
            Source::Llama3Liar,
            Source::Pei,
        ];
        let hedges = ["perhaps", "possibly", "might", "seemingly"];
        let boosters = ["certainly", "definitely", "undoubtedly", "always"];
        let fillers = ["the", "report", "covers", "events", "in", "town"];
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut samples = Vec::new();
        for (si, source) in sources.iter().enumerate() {
            for i in 0..30 {
                let booster_count = i % 5;
                let hedge_count = 4 - booster_count;
                let mut words: Vec<&str> = Vec::new();
                for k in 0..booster_count {
                    words.push(boosters[(k + i) % boosters.len()]);
                }
                for k in 0..hedge_count {
                    words.push(hedges[(k + i) % hedges.len()]);
                }
                for k in 0..6 {
                    words.push(fillers[(k + i) % fillers.len()]);
                }
                words.shuffle(&mut rng);
                let label = 2.0 + 1.5 * booster_count as f64 + rng.random_range(-0.3..0.3);
                let mut scores = BTreeMap::new();
                scores.insert("c1".to_string(), label.clamp(0.0, 10.0));
                samples.push(
                    AnnotatedSample::new(
                        format!("{}-{}", si, i),
                        words.join(" "),
                        source.clone(),
                        scores,
                    )
                    .unwrap(),
                );
            }
        }
        samples
    }

    fn forest_factory(trees: usize, depth: usize) -> ScorerFactory {
        Box::new(move |train: &[AnnotatedSample]| {
            let lexicon = MarkerLexicon::default_lexicon();
            let features = train
                .iter()
                .map(|s| extract_features(&s.text, lexicon))
                .collect::<Result<Vec<_>, _>>()?;
            let labels: Vec<f64> = train.iter().map(|s| s.mean_score).collect();
            let params = ForestParams {
                n_trees: trees,
                max_depth: depth,
                ..ForestParams::default()
            };
            let model = train_forest(&features, &labels, &params)?;
            Ok(Box::new(ForestScorer {
                model,
                lexicon: lexicon.clone(),
            }) as Box<dyn Scorer>)
        })
    }

    #[test]
    fn ablation_produces_full_matrix_with_row_means() {
        let samples = ablation_corpus();
        let models = vec![
            AblationModelSpec {
                name: "forest-20".to_string(),
                factory: forest_factory(20, 4),
            },
            AblationModelSpec {
                name: "forest-5".to_string(),
                factory: forest_factory(5, 2),
            },
        ];
        let matrix = ablation(&samples, &models).unwrap();
        assert_eq!(matrix.sources.len(), 5);
        assert_eq!(matrix.rows.len(), 2);
        for row in &matrix.rows {
            assert_eq!(row.cells.len(), 5);
            let values: Vec<f64> = row.cells.iter().map(|c| c.mse_standardized.unwrap()).collect();
            assert_eq!(values.len(), 5);
            assert_abs_diff_eq!(row.row_mean.unwrap(), stats::mean(&values), epsilon = 1e-12);
            assert_eq!(row.mean_note, None);
            for cell in &row.cells {
                assert!(!cell.failed);
                assert_eq!(cell.n_test, 30);
            }
        }
        // Columns are sorted by source tag.
        let mut sorted = matrix.sources.clone();
        sorted.sort();
        assert_eq!(matrix.sources, sorted);
    }

    #[test]
    fn ablation_cells_do_not_depend_on_source_order() {
        let samples = ablation_corpus();
        let models = || {
            vec![AblationModelSpec {
                name: "forest".to_string(),
                factory: forest_factory(10, 3),
            }]
        };
        let forward = [
            Source::Anthropic,
            Source::ChangeMyView,
            Source::GlobeAndMail,
            Source::Llama3Liar,
            Source::Pei,
        ];
        let mut backward = forward.clone();
        backward.reverse();
        let a = ablation_with_sources(&samples, &models(), &forward).unwrap();
        let b = ablation_with_sources(&samples, &models(), &backward).unwrap();
        for cell in &a.rows[0].cells {
            let mirror = b.rows[0]
                .cells
                .iter()
                .find(|c| c.held_out == cell.held_out)
                .unwrap();
            assert_eq!(cell, mirror);
        }
        assert_abs_diff_eq!(
            a.rows[0].row_mean.unwrap(),
            b.rows[0].row_mean.unwrap(),
            epsilon = 1e-12
        );
    }

    struct ConstantScorer(f64);

    impl Scorer for ConstantScorer {
        fn id(&self) -> String {
            "constant".to_string()
        }
        fn score_text(&self, _text: &str) -> Result<AssertivenessScore, ScorerError> {
            Ok(AssertivenessScore {
                value: self.0 / 10.0,
                raw_value: self.0,
                scorer_id: self.id(),
                clamped: false,
                retries_used: 0,
            })
        }
    }

    /// Variance oracle: a constant predictor at the common label mean has a
    /// raw MSE equal to each held-out set's population label variance, and
    /// no standardized MSE at all.
    #[test]
    fn constant_predictor_cells_flag_undefined_and_equal_label_variance() {
        // Two sources, equal label means (5.0), nonzero variance.
        let mut samples = Vec::new();
        for (tag, source) in [("a", Source::Anthropic), ("g", Source::GlobeAndMail)] {
            for (i, label) in [3.0, 5.0, 7.0, 4.0, 6.0].iter().enumerate() {
                let mut scores = BTreeMap::new();
                scores.insert("c1".to_string(), *label);
                samples.push(
                    AnnotatedSample::new(
                        format!("{tag}{i}"),
                        "definitely maybe words here",
                        source.clone(),
                        scores,
                    )
                    .unwrap(),
                );
            }
        }
        let models = vec![AblationModelSpec {
            name: "constant".to_string(),
            factory: Box::new(|_| Ok(Box::new(ConstantScorer(5.0)) as Box<dyn Scorer>)),
        }];
        let matrix = ablation(&samples, &models).unwrap();
        let row = &matrix.rows[0];
        for cell in &row.cells {
            assert!(!cell.failed);
            assert_eq!(cell.mse_standardized, None);
            assert!(cell.note.as_deref().unwrap().contains("zero variance"));
            // MSE against the mean is exactly the population variance.
            let labels = [3.0, 5.0, 7.0, 4.0, 6.0];
            assert_abs_diff_eq!(
                cell.mse_raw.unwrap(),
                stats::population_variance(&labels),
                epsilon = 1e-12
            );
        }
        assert_eq!(row.row_mean, None);
        assert_eq!(
            row.mean_note.as_deref(),
            Some("no cells produced a standardized MSE")
        );
    }

    #[test]
    fn failing_factory_flags_cells_and_mean_skips_them() {
        let samples = ablation_corpus();
        let models = vec![AblationModelSpec {
            name: "broken".to_string(),
            factory: Box::new(|_| {
                Err(ScorerError::TrainingDataInvalid {
                    detail: "simulated".to_string(),
                })
            }),
        }];
        let matrix = ablation(&samples, &models).unwrap();
        let row = &matrix.rows[0];
        assert!(row.cells.iter().all(|c| c.failed));
        assert!(row
            .cells
            .iter()
            .all(|c| c.note.as_deref().unwrap().contains("training failed")));
        assert_eq!(row.row_mean, None);
    }

    /// The documented row-mean arithmetic: five standardized cells averaging
    /// to 1.076.
    #[test]
    fn row_mean_matches_hand_arithmetic() {
        let cells: Vec<AblationCell> = [0.99, 1.05, 1.42, 0.98, 0.94]
            .iter()
            .enumerate()
            .map(|(i, &v)| AblationCell {
                held_out: format!("s{i}"),
                mse_standardized: Some(v),
                mse_raw: Some(v),
                n_test: 10,
                failed: false,
                note: None,
            })
            .collect();
        let (mean, note) = row_mean_over(&cells);
        assert_abs_diff_eq!(mean.unwrap(), 1.076, epsilon = 1e-12);
        assert_eq!(note, None);

        let mut with_gap = cells.clone();
        with_gap[2].mse_standardized = None;
        with_gap[2].failed = true;
        let (mean, note) = row_mean_over(&with_gap);
        assert_abs_diff_eq!(mean.unwrap(), (0.99 + 1.05 + 0.98 + 0.94) / 4.0, epsilon = 1e-12);
        assert_eq!(note.as_deref(), Some("mean over 4 of 5 cells"));
    }

    #[test]
    fn ablation_rejects_degenerate_setups() {
        let samples = ablation_corpus();
        assert!(matches!(
            ablation(&samples, &[]),
            Err(DiagnosticsError::NoModels)
        ));
        let single: Vec<AnnotatedSample> = samples
            .iter()
            .filter(|s| s.source == Source::Pei)
            .cloned()
            .collect();
        let models = vec![AblationModelSpec {
            name: "forest".to_string(),
            factory: forest_factory(5, 2),
        }];
        assert!(matches!(
            ablation(&single, &models),
            Err(DiagnosticsError::TooFewSources { n: 1 })
        ));
    }

    // --- gap analysis -----------------------------------------------------------------------

    fn certainty_record(id: &str, p: f64) -> CertaintyRecord {
        CertaintyRecord {
            statement_id: id.to_string(),
            statement: "s".to_string(),
            verdict: Verdict::True,
            raw_confidence: 50.0,
            scale: Scale::ZeroToHundred,
            calibrated_p: Some(p),
            explanation: "because".to_string(),
            gold_label: None,
        }
    }

    /// The documented worked example: assertiveness 0.64 against certainty
    /// 0.73 leaves a gap of 0.64 − |2·0.73 − 1| = 0.18.
    #[test]
    fn gap_matches_worked_example() {
        let records = vec![certainty_record("s1", 0.73)];
        let mut assertiveness = BTreeMap::new();
        assertiveness.insert("s1".to_string(), 0.64);
        let analysis = gap_analysis(&records, &assertiveness, DEFAULT_GAP_THRESHOLD).unwrap();
        let record = &analysis.records[0];
        assert_abs_diff_eq!(record.verdict_confidence, 0.46, epsilon = 1e-12);
        assert_abs_diff_eq!(record.gap, 0.18, epsilon = 1e-12);
        assert_eq!(analysis.summary.n, 1);
        // One point cannot support a correlation.
        assert!(matches!(
            analysis.summary.p_vs_assertiveness,
            CorrelationCell::Insufficient { n: 1 }
        ));
    }

    #[test]
    fn equal_series_have_zero_gaps_and_share() {
        let ps = [0.9, 0.75, 0.6, 0.55, 0.95];
        let records: Vec<CertaintyRecord> = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| certainty_record(&format!("s{i}"), p))
            .collect();
        let assertiveness: BTreeMap<String, f64> = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| (format!("s{i}"), verdict_confidence(p)))
            .collect();
        let analysis = gap_analysis(&records, &assertiveness, 0.3).unwrap();
        assert!(analysis.records.iter().all(|r| r.gap.abs() < 1e-12));
        assert_abs_diff_eq!(analysis.summary.over_assertive_share, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(analysis.summary.mean_gap, 0.0, epsilon = 1e-12);
        // assertiveness == verdict_confidence exactly → perfect rank match.
        match &analysis.summary.confidence_vs_assertiveness {
            CorrelationCell::Result { result, .. } => {
                assert_abs_diff_eq!(result.coefficient, 1.0, epsilon = 1e-12)
            }
            other => panic!("expected perfect correlation, got {other:?}"),
        }
    }

    #[test]
    fn over_assertive_share_counts_threshold_crossers() {
        let records = vec![
            certainty_record("a", 0.5),  // confidence 0.0
            certainty_record("b", 0.5),  // confidence 0.0
            certainty_record("c", 0.75), // confidence 0.5
            certainty_record("d", 0.9),  // confidence 0.8
        ];
        let mut assertiveness = BTreeMap::new();
        assertiveness.insert("a".to_string(), 0.8); // gap 0.8
        assertiveness.insert("b".to_string(), 0.2); // gap 0.2
        assertiveness.insert("c".to_string(), 0.9); // gap 0.4
        assertiveness.insert("d".to_string(), 0.7); // gap -0.1
        let analysis = gap_analysis(&records, &assertiveness, 0.3).unwrap();
        assert_abs_diff_eq!(analysis.summary.over_assertive_share, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn join_misses_are_reported_and_excluded() {
        let records = vec![
            certainty_record("joined-1", 0.8),
            certainty_record("joined-2", 0.6),
            certainty_record("joined-3", 0.4),
            certainty_record("orphan-certainty", 0.7),
        ];
        let mut assertiveness = BTreeMap::new();
        assertiveness.insert("joined-1".to_string(), 0.9);
        assertiveness.insert("joined-2".to_string(), 0.5);
        assertiveness.insert("joined-3".to_string(), 0.3);
        assertiveness.insert("orphan-assertiveness".to_string(), 0.5);
        let analysis = gap_analysis(&records, &assertiveness, 0.3).unwrap();
        assert_eq!(analysis.summary.n, 3);
        assert_eq!(
            analysis.summary.join_misses.missing_assertiveness,
            vec!["orphan-certainty"]
        );
        assert_eq!(
            analysis.summary.join_misses.missing_certainty,
            vec!["orphan-assertiveness"]
        );
        assert!(analysis
            .records
            .iter()
            .all(|r| r.statement_id.starts_with("joined")));
    }

    /// Copula oracle: a bivariate Gaussian with r = 2·sin(ρ·π/6) has
    /// population Spearman exactly ρ, and strictly monotone maps (here the
    /// logistic) preserve it. Engineered at ρ = 0.3.
    #[test]
    fn copula_engineered_correlation_is_recovered() {
        let target_spearman: f64 = 0.3;
        let r = 2.0 * (target_spearman * std::f64::consts::PI / 6.0).sin();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let n = 10_000;
        let mut records = Vec::with_capacity(n);
        let mut assertiveness = BTreeMap::new();
        for i in 0..n {
            // Box-Muller pair, then correlate.
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            let radius = (-2.0 * u1.ln()).sqrt();
            let angle = 2.0 * std::f64::consts::PI * u2;
            let z1 = radius * angle.cos();
            let z2_independent = radius * angle.sin();
            let z2 = r * z1 + (1.0 - r * r).sqrt() * z2_independent;
            records.push(certainty_record(&format!("s{i:05}"), stats::sigmoid(z1)));
            assertiveness.insert(format!("s{i:05}"), stats::sigmoid(z2));
        }
        let analysis = gap_analysis(&records, &assertiveness, 0.3).unwrap();
        match &analysis.summary.p_vs_assertiveness {
            CorrelationCell::Result { result, .. } => {
                assert!(
                    (result.coefficient - target_spearman).abs() < 0.02,
                    "spearman {} should be within 0.02 of {}",
                    result.coefficient,
                    target_spearman
                );
            }
            other => panic!("expected a defined correlation, got {other:?}"),
        }
    }

    #[test]
    fn gap_analysis_validates_inputs() {
        let records = vec![certainty_record("a", 0.5)];
        let mut assertiveness = BTreeMap::new();
        assertiveness.insert("a".to_string(), 0.5);
        assert!(matches!(
            gap_analysis(&records, &assertiveness, 1.5),
            Err(DiagnosticsError::BadThreshold { .. })
        ));

        let mut bad = assertiveness.clone();
        bad.insert("a".to_string(), 1.2);
        assert!(matches!(
            gap_analysis(&records, &bad, 0.3),
            Err(DiagnosticsError::BadUnitValue { .. })
        ));

        let mut uncalibrated = records.clone();
        uncalibrated[0].calibrated_p = None;
        assert!(matches!(
            gap_analysis(&uncalibrated, &assertiveness, 0.3),
            Err(DiagnosticsError::MissingCalibration { .. })
        ));

        let empty_map = BTreeMap::new();
        assert!(matches!(
            gap_analysis(&records, &empty_map, 0.3),
            Err(DiagnosticsError::EmptyJoin)
        ));
    }
}
