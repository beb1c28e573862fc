//! `stimuli`: generate hedged/boosted explanation variants through the
//! adapter and assemble the rating survey around them.

use epistemic_gauge::survey::{
    assemble_survey, generate_variants, original_stimulus, StimulusConfig, StimulusItem,
    SurveyStatement,
};
use epistemic_gauge::Verdict;
use serde::Deserialize;

use super::{require_input, CmdError, CmdResult, RunContext};
use crate::seeds::derive_seed;

/// One input row: a statement with its model verdict and explanation.
#[derive(Deserialize)]
struct StatementRow {
    statement_id: String,
    statement: String,
    verdict: Verdict,
    explanation: String,
    content_question: String,
}

pub fn run(mut ctx: RunContext) -> CmdResult {
    let statements_path = require_input(ctx.config.inputs.statements.as_ref(), "statements file")?;
    let body = std::fs::read_to_string(statements_path)?;
    let mut rows = Vec::new();
    for (index, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: StatementRow = serde_json::from_str(line).map_err(|e| {
            CmdError::Failed(anyhow::anyhow!(
                "{} line {}: {e}",
                statements_path.display(),
                index + 1
            ))
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "statements file {} holds no rows",
            statements_path.display()
        )));
    }

    let adapter = ctx.adapter()?;
    let mut config = StimulusConfig::new(ctx.config.adapter.model.clone());
    config.max_retries = ctx.config.adapter.max_retries;

    let mut items: Vec<StimulusItem> = Vec::with_capacity(rows.len() * 3);
    let mut flagged = 0usize;
    for row in &rows {
        let (low, high) = generate_variants(&adapter, &config, &row.statement_id, &row.explanation)?;
        let original = original_stimulus(&row.statement_id, &row.explanation)?;
        for item in [low, original, high] {
            if item.length_flagged {
                flagged += 1;
            }
            items.push(item);
        }
    }

    let mut stimuli_jsonl = String::new();
    for item in &items {
        stimuli_jsonl.push_str(&serde_json::to_string(item)?);
        stimuli_jsonl.push('\n');
    }
    ctx.write_text("stimuli.jsonl", &stimuli_jsonl)?;

    let statements: Vec<SurveyStatement> = rows
        .iter()
        .map(|row| SurveyStatement {
            statement_id: row.statement_id.clone(),
            statement: row.statement.clone(),
            verdict: row.verdict,
            content_question: row.content_question.clone(),
        })
        .collect();
    let survey = assemble_survey(
        &statements,
        &items,
        ctx.config.analysis.n_respondents,
        derive_seed(ctx.config.seed, "stimuli.assembly"),
    )?;
    ctx.write_json("survey.json", &survey)?;

    println!(
        "stimuli: {} statements → {} items ({} length-flagged); survey fills {} slots \
         across {} respondents",
        rows.len(),
        items.len(),
        flagged,
        survey.total_slots,
        survey.n_respondents
    );
    ctx.finish()
}
