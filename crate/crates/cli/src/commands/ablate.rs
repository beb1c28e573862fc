//! `ablate`: leave-one-source-out generalization matrix for the configured
//! scorer over an annotated corpus.

use std::sync::Arc;

use epistemic_gauge::corpus::{load_corpus, IngestConfig};
use epistemic_gauge::diagnostics::{ablation, AblationModelSpec, ScorerFactory};
use epistemic_gauge::scorers::{
    extract_features, train_forest, ForestParams, ForestScorer, PromptScorer, PromptScorerConfig,
    Scorer,
};
use epistemic_gauge::GenParams;

use super::{require_input, CmdError, CmdResult, RunContext};
use crate::config::ScorerKind;
use crate::seeds::derive_seed;

pub fn run(mut ctx: RunContext) -> CmdResult {
    if ctx.config.inputs.corpus.is_empty() {
        return Err(CmdError::MissingInput(
            "ablate needs inputs.corpus".to_string(),
        ));
    }
    for path in &ctx.config.inputs.corpus {
        require_input(Some(path), "corpus file")?;
    }
    let samples = load_corpus(&ctx.config.inputs.corpus, &IngestConfig::default())?;

    let spec = match ctx.config.scorer.kind {
        ScorerKind::Forest => {
            let lexicon = ctx.lexicon()?;
            let params = ForestParams {
                n_trees: ctx.config.scorer.n_trees,
                max_depth: ctx.config.scorer.max_depth,
                min_leaf: ctx.config.scorer.min_leaf,
                seed: derive_seed(ctx.config.seed, "scorer.forest"),
            };
            let factory: ScorerFactory = Box::new(move |train| {
                let mut features = Vec::with_capacity(train.len());
                for sample in train {
                    features.push(extract_features(&sample.text, &lexicon)?);
                }
                let labels: Vec<f64> = train.iter().map(|s| s.mean_score).collect();
                let model = train_forest(&features, &labels, &params)?;
                Ok(Box::new(ForestScorer {
                    model,
                    lexicon: lexicon.clone(),
                }) as Box<dyn Scorer>)
            });
            AblationModelSpec {
                name: "marker-forest".to_string(),
                factory,
            }
        }
        ScorerKind::Prompt => {
            let adapter = Arc::new(ctx.adapter()?);
            let config = PromptScorerConfig {
                model_name: ctx.config.prompt_model().to_string(),
                params: GenParams::default(),
                max_retries: ctx.config.adapter.max_retries,
            };
            let name = format!("prompt:{}", config.model_name);
            let factory: ScorerFactory = Box::new(move |_train| {
                Ok(Box::new(PromptScorer {
                    adapter: Arc::clone(&adapter),
                    config: config.clone(),
                }) as Box<dyn Scorer>)
            });
            AblationModelSpec { name, factory }
        }
    };

    let matrix = ablation(&samples, &[spec])?;

    ctx.write_text("ablation.csv", &matrix.to_csv_string())?;
    ctx.write_json("ablation.json", &matrix)?;

    println!(
        "ablate: {} samples, {} held-out sources × {} model(s)",
        samples.len(),
        matrix.sources.len(),
        matrix.rows.len()
    );
    for row in &matrix.rows {
        match row.row_mean {
            Some(mean) => println!("  {}: mean standardized MSE {:.4}", row.model, mean),
            None => println!("  {}: no successful cells", row.model),
        }
        if let Some(note) = &row.mean_note {
            println!("    note: {note}");
        }
    }
    ctx.finish()
}
