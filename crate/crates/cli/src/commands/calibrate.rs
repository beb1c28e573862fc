//! `calibrate`: fit Platt parameters on a seeded validation split, apply
//! them to every record, and report held-out reliability.

use epistemic_gauge::certainty::{
    calibrate_records, fit_platt, read_records_jsonl, reliability, write_records_jsonl,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use super::{require_input, CmdError, CmdResult, RunContext};
use crate::seeds::derive_seed;

pub fn run(mut ctx: RunContext) -> CmdResult {
    let path = require_input(ctx.config.inputs.records.as_ref(), "records file")?;
    let mut records = read_records_jsonl(path)?;
    let n = records.len();
    if n < 2 {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "calibration needs at least 2 records, found {n}"
        )));
    }

    // Seeded validation split: fit on it, measure reliability off it.
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.config.seed, "calibrate.split"));
    indices.shuffle(&mut rng);
    let k = ((n as f64) * ctx.config.analysis.validation_fraction).round() as usize;
    let k = k.clamp(1, n - 1);
    let validation: BTreeSet<usize> = indices[..k].iter().copied().collect();

    let mut val_scores = Vec::with_capacity(k);
    let mut val_labels = Vec::with_capacity(k);
    for &i in &validation {
        let record = &records[i];
        let gold = record.gold_label.ok_or_else(|| {
            CmdError::Failed(anyhow::anyhow!(
                "record {:?} has no gold label; calibration needs labelled records",
                record.statement_id
            ))
        })?;
        val_scores.push(record.unit_confidence());
        val_labels.push(gold);
    }

    let params = fit_platt(&val_scores, &val_labels)?;
    calibrate_records(&mut records, &params);

    let holdout: Vec<_> = records
        .iter()
        .enumerate()
        .filter(|(i, _)| !validation.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    let table = reliability(&holdout, ctx.config.analysis.reliability_bins)?;

    write_records_jsonl(&records, &ctx.out_path("calibrated_records.jsonl"))?;
    ctx.note_output("calibrated_records.jsonl");
    ctx.write_json("platt.json", &params)?;
    ctx.write_text("reliability.csv", &table.to_csv_string())?;

    println!(
        "calibrate: fitted A {:.4}, B {:.4} on {} validation records ({} iterations); \
         held-out ece {:.4} over {} records",
        params.a,
        params.b,
        k,
        params.fit_meta.iterations,
        table.ece,
        table.n,
    );
    ctx.finish()
}
