//! `diagnose`: the stratified correlation table, scatter plot data, and
//! the assertiveness−certainty gap analysis.

use std::collections::BTreeMap;
use std::path::Path;

use epistemic_gauge::certainty::read_records_jsonl;
use epistemic_gauge::diagnostics::{
    gap_analysis, stratify, ComparisonRecord, CorrelationCell, CorrelationMethod, StratifiedRow,
    StratifiedTable,
};
use serde::Serialize;

use super::{csv_field, require_input, CmdError, CmdResult, RunContext};
use crate::config::CorrelationChoice;

/// One row of the optional human comparison file.
struct HumanRow {
    level: Option<i8>,
    human_assertiveness: f64,
}

fn read_assertiveness_csv(path: &Path) -> Result<BTreeMap<String, f64>, CmdError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("statement_id") || headers.get(1) != Some("assertiveness") {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "assertiveness file {} must start with columns statement_id,assertiveness",
            path.display()
        )));
    }
    let mut map = BTreeMap::new();
    for (index, row) in reader.records().enumerate() {
        let line = index + 2;
        let row = row?;
        let id = row.get(0).unwrap_or("").trim().to_string();
        let raw = row.get(1).unwrap_or("").trim();
        let value: f64 = raw.parse().map_err(|_| {
            CmdError::Failed(anyhow::anyhow!(
                "{} line {line}: assertiveness {raw:?} is not a number",
                path.display()
            ))
        })?;
        if map.insert(id.clone(), value).is_some() {
            return Err(CmdError::Failed(anyhow::anyhow!(
                "{} line {line}: duplicate statement id {id:?}",
                path.display()
            )));
        }
    }
    Ok(map)
}

fn read_human_csv(path: &Path) -> Result<BTreeMap<String, HumanRow>, CmdError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = ["statement_id", "level", "human_assertiveness"];
    if headers.iter().take(3).ne(expected) {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "human ratings file {} must start with columns {expected:?}",
            path.display()
        )));
    }
    let mut map = BTreeMap::new();
    for (index, row) in reader.records().enumerate() {
        let line = index + 2;
        let row = row?;
        let id = row.get(0).unwrap_or("").trim().to_string();
        let level_raw = row.get(1).unwrap_or("").trim();
        let level = if level_raw.is_empty() {
            None
        } else {
            let value: i8 = level_raw.parse().map_err(|_| {
                CmdError::Failed(anyhow::anyhow!(
                    "{} line {line}: level {level_raw:?} is not an integer",
                    path.display()
                ))
            })?;
            Some(value)
        };
        let raw = row.get(2).unwrap_or("").trim();
        let human_assertiveness: f64 = raw.parse().map_err(|_| {
            CmdError::Failed(anyhow::anyhow!(
                "{} line {line}: human_assertiveness {raw:?} is not a number",
                path.display()
            ))
        })?;
        if map
            .insert(
                id.clone(),
                HumanRow {
                    level,
                    human_assertiveness,
                },
            )
            .is_some()
        {
            return Err(CmdError::Failed(anyhow::anyhow!(
                "{} line {line}: duplicate statement id {id:?}",
                path.display()
            )));
        }
    }
    Ok(map)
}

/// The headline numbers of a diagnose run, including the provenance note
/// the configuration attached to its input data.
#[derive(Serialize)]
struct DiagnoseSummary {
    n_joined: usize,
    method: CorrelationMethod,
    certainty_vs_assertiveness: CorrelationCell,
    over_assertive_share: f64,
    mean_gap: f64,
    gap_threshold: f64,
    provenance_note: Option<String>,
}

pub fn run(mut ctx: RunContext) -> CmdResult {
    let records_path = require_input(ctx.config.inputs.records.as_ref(), "records file")?;
    let records = read_records_jsonl(records_path)?;
    let assertiveness_path = require_input(
        ctx.config.inputs.assertiveness.as_ref(),
        "assertiveness file",
    )?;
    let assertiveness = read_assertiveness_csv(assertiveness_path)?;
    let human = match ctx.config.inputs.human.as_ref() {
        Some(path) => Some(read_human_csv(require_input(Some(path), "human ratings file")?)?),
        None => None,
    };

    let joined: Vec<&epistemic_gauge::CertaintyRecord> = records
        .iter()
        .filter(|r| assertiveness.contains_key(&r.statement_id))
        .collect();
    if joined.len() < 3 {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "joining records with assertiveness scores leaves n={} (need at least 3)",
            joined.len()
        )));
    }

    let method = match ctx.config.analysis.correlation {
        CorrelationChoice::Spearman => CorrelationMethod::Spearman,
        CorrelationChoice::Pearson => CorrelationMethod::Pearson,
    };

    // Gap analysis carries the join bookkeeping and the headline
    // over-assertion share.
    let gap = gap_analysis(
        &records,
        &assertiveness,
        ctx.config.analysis.gap_threshold,
    )?;

    // Stratified table: the full three-series version when human ratings
    // are present; otherwise the same shape with the human rows flagged.
    let table = match &human {
        Some(human) => {
            let comparisons: Vec<ComparisonRecord> = joined
                .iter()
                .filter_map(|r| {
                    let h = human.get(&r.statement_id)?;
                    Some(ComparisonRecord {
                        statement_id: r.statement_id.clone(),
                        level: h.level,
                        predicted_assertiveness: assertiveness[&r.statement_id],
                        human_assertiveness: h.human_assertiveness,
                        certainty_p: r.calibrated_p.unwrap_or(f64::NAN),
                    })
                })
                .collect();
            if comparisons.len() < 3 {
                return Err(CmdError::Failed(anyhow::anyhow!(
                    "joining with human ratings leaves n={} (need at least 3)",
                    comparisons.len()
                )));
            }
            stratify(&comparisons, method)?
        }
        None => {
            let no_human = || CorrelationCell::Undefined {
                detail: "no human ratings provided".to_string(),
            };
            let no_levels = || CorrelationCell::Undefined {
                detail: "no variant levels without a human ratings file".to_string(),
            };
            let xs: Vec<f64> = gap.records.iter().map(|r| r.certainty_p).collect();
            let ys: Vec<f64> = gap.records.iter().map(|r| r.assertiveness).collect();
            let rows = vec![
                StratifiedRow {
                    label: "predicted vs human".to_string(),
                    overall: no_human(),
                    low: no_human(),
                    medium: no_human(),
                    high: no_human(),
                },
                StratifiedRow {
                    label: "certainty vs predicted".to_string(),
                    overall: CorrelationCell::compute(&xs, &ys, method)?,
                    low: no_levels(),
                    medium: no_levels(),
                    high: no_levels(),
                },
                StratifiedRow {
                    label: "certainty vs human".to_string(),
                    overall: no_human(),
                    low: no_human(),
                    medium: no_human(),
                    high: no_human(),
                },
            ];
            StratifiedTable {
                method,
                rows,
                n: gap.records.len(),
            }
        }
    };

    // Plot data: one row per joined statement, ready for a scatter.
    let mut plot = String::from(
        "statement_id,certainty_p,assertiveness,verdict_confidence,gap,level,human_assertiveness\n",
    );
    for record in &gap.records {
        let (level, human_value) = match human.as_ref().and_then(|h| h.get(&record.statement_id)) {
            Some(row) => (
                row.level.map(|l| l.to_string()).unwrap_or_default(),
                row.human_assertiveness.to_string(),
            ),
            None => (String::new(), String::new()),
        };
        plot.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&record.statement_id),
            record.certainty_p,
            record.assertiveness,
            record.verdict_confidence,
            record.gap,
            level,
            human_value,
        ));
    }

    let mut gap_csv =
        String::from("statement_id,assertiveness,certainty_p,verdict_confidence,gap\n");
    for record in &gap.records {
        gap_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_field(&record.statement_id),
            record.assertiveness,
            record.certainty_p,
            record.verdict_confidence,
            record.gap,
        ));
    }

    let summary = DiagnoseSummary {
        n_joined: gap.summary.n,
        method,
        certainty_vs_assertiveness: gap.summary.p_vs_assertiveness.clone(),
        over_assertive_share: gap.summary.over_assertive_share,
        mean_gap: gap.summary.mean_gap,
        gap_threshold: gap.summary.threshold,
        provenance_note: ctx.config.analysis.provenance_note.clone(),
    };

    ctx.write_text("stratified_table.csv", &table.to_csv_string())?;
    ctx.write_json("stratified_table.json", &table)?;
    ctx.write_text("plot_data.csv", &plot)?;
    ctx.write_text("gap_records.csv", &gap_csv)?;
    ctx.write_json("gap_summary.json", &gap.summary)?;
    ctx.write_json("diagnose_summary.json", &summary)?;

    println!(
        "diagnose: n={}, certainty vs assertiveness → {}; over-assertive share {:.4} \
         (gap > {:.2}), mean gap {:.4}",
        summary.n_joined,
        summary.certainty_vs_assertiveness.render(),
        summary.over_assertive_share,
        summary.gap_threshold,
        summary.mean_gap,
    );
    ctx.finish()
}
