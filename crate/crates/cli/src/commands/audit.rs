//! `audit`: certainty-stratified sampling plans, optional model
//! direction-labelling of explanations, and model–human agreement.

use epistemic_gauge::audit::{
    build_plan, classify_assertion, cohen_kappa, read_labels_csv, AuditConfig,
};
use epistemic_gauge::certainty::read_records_jsonl;
use serde::Serialize;

use super::{csv_field, CmdError, CmdResult, RunContext};
use crate::seeds::derive_seed;

/// Agreement report between the model rater and the human rater.
#[derive(Serialize)]
struct AuditReport {
    n: usize,
    percent_agreement: f64,
    kappa: Option<f64>,
    labels: Vec<i8>,
    confusion: Vec<Vec<usize>>,
    note: Option<String>,
}

pub fn run(mut ctx: RunContext, classify: bool) -> CmdResult {
    let labels_path = ctx.config.inputs.labels.clone();
    let records_path = ctx.config.inputs.records.clone();
    if labels_path.is_none() && records_path.is_none() {
        return Err(CmdError::MissingInput(
            "audit needs inputs.labels and/or inputs.records".to_string(),
        ));
    }

    if let Some(path) = &labels_path {
        if !path.exists() {
            return Err(CmdError::MissingInput(format!(
                "labels file {} does not exist",
                path.display()
            )));
        }
        let pairs = read_labels_csv(path)?;
        let model: Vec<i8> = pairs.iter().map(|p| p.model_label).collect();
        let human: Vec<i8> = pairs.iter().map(|p| p.human_label).collect();
        let report = cohen_kappa(&model, &human)?;
        let out = AuditReport {
            n: report.n,
            percent_agreement: report.percent_agreement,
            kappa: report.kappa,
            labels: report.labels.clone(),
            confusion: report.confusion.clone(),
            note: report.note.clone(),
        };
        ctx.write_json("audit_report.json", &out)?;
        match report.kappa {
            Some(kappa) => println!(
                "audit: n={}, agreement {:.4}, kappa {:.4}",
                report.n, report.percent_agreement, kappa
            ),
            None => println!(
                "audit: n={}, agreement {:.4}, kappa undefined ({})",
                report.n,
                report.percent_agreement,
                report.note.as_deref().unwrap_or("no detail")
            ),
        }
    }

    if let Some(path) = &records_path {
        if !path.exists() {
            return Err(CmdError::MissingInput(format!(
                "records file {} does not exist",
                path.display()
            )));
        }
        let records = read_records_jsonl(path)?;

        if classify {
            let adapter = ctx.adapter()?;
            let mut config = AuditConfig::new(ctx.config.adapter.model.clone());
            config.max_retries = ctx.config.adapter.max_retries;
            let mut csv = String::from("statement_id,model_label\n");
            for record in &records {
                let label = classify_assertion(&adapter, &config, &record.explanation)?;
                csv.push_str(&format!(
                    "{},{}\n",
                    csv_field(&record.statement_id),
                    label.value
                ));
            }
            ctx.write_text("model_labels.csv", &csv)?;
            println!("audit: labelled {} explanations", records.len());
        }

        let certainties: Vec<(String, f64)> = records
            .iter()
            .map(|r| (r.statement_id.clone(), r.unit_confidence() * 100.0))
            .collect();
        let plan = build_plan(&certainties, derive_seed(ctx.config.seed, "audit.plan"))?;
        ctx.write_json("sampling_plan.json", &plan)?;
        println!(
            "audit: sampling plan draws {} of {} statements across {} bins",
            plan.total,
            records.len(),
            plan.bins.len()
        );
    }

    ctx.finish()
}
