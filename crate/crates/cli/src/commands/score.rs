//! `score`: one assertiveness score per input text, plus the score
//! distribution.

use epistemic_gauge::certainty::read_records_jsonl;
use epistemic_gauge::corpus::{load_corpus, IngestConfig};
use epistemic_gauge::diagnostics::distribution_summary;

use super::{csv_field, require_input, CmdError, CmdResult, RunContext};

pub fn run(mut ctx: RunContext) -> CmdResult {
    // The corpus doubles as forest training data, so load it whenever
    // configured even if records or texts are the scoring target.
    let corpus_samples = if ctx.config.inputs.corpus.is_empty() {
        None
    } else {
        for path in &ctx.config.inputs.corpus {
            require_input(Some(path), "corpus file")?;
        }
        Some(load_corpus(
            &ctx.config.inputs.corpus,
            &IngestConfig::default(),
        )?)
    };

    // Scoring target precedence: certainty records, then the corpus, then a
    // plain text file.
    let rows: Vec<(String, String)> = if let Some(path) = ctx.config.inputs.records.as_ref() {
        let path = require_input(Some(path), "records file")?;
        read_records_jsonl(path)?
            .into_iter()
            .map(|r| (r.statement_id, r.explanation))
            .collect()
    } else if let Some(samples) = &corpus_samples {
        samples
            .iter()
            .map(|s| (s.id.clone(), s.text.clone()))
            .collect()
    } else if let Some(path) = ctx.config.inputs.texts.as_ref() {
        let path = require_input(Some(path), "texts file")?;
        std::fs::read_to_string(path)?
            .lines()
            .filter(|line| !line.trim().is_empty())
            .enumerate()
            .map(|(i, line)| (format!("t{i:05}"), line.to_string()))
            .collect()
    } else {
        return Err(CmdError::MissingInput(
            "score needs inputs.records, inputs.corpus, or inputs.texts".to_string(),
        ));
    };
    if rows.is_empty() {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "the scoring input contains no texts"
        )));
    }

    let scorer = ctx.scorer(corpus_samples.as_deref())?;
    let mut csv = String::from("statement_id,assertiveness,raw_value,scorer_id,clamped\n");
    let mut values = Vec::with_capacity(rows.len());
    for (id, text) in &rows {
        let score = scorer.score_text(text)?;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(id),
            score.value,
            score.raw_value,
            csv_field(&score.scorer_id),
            score.clamped,
        ));
        values.push(score.value);
    }
    ctx.write_text("scores.csv", &csv)?;

    let summary = distribution_summary(&values)?;
    ctx.write_json("score_summary.json", &summary)?;
    ctx.write_text("score_distribution.csv", &summary.histogram_csv())?;
    println!(
        "score: {} texts; assertiveness mean {:.4}, std {:.4}, range [{:.4}, {:.4}]",
        values.len(),
        summary.mean,
        summary.std,
        summary.min,
        summary.max,
    );
    ctx.finish()
}
