//! Shared command plumbing: the run context that owns the output
//! directory, the config snapshot, the adapter, and the closing manifest.
//!
//! Exit-code contract: 0 when every requested output was written, 2 when a
//! required input is not configured or not on disk, 1 for anything else.

pub mod ablate;
pub mod audit;
pub mod calibrate;
pub mod diagnose;
pub mod score;
pub mod stimuli;
pub mod survey_stats;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use epistemic_gauge::adapter::{AdapterConfig, ChatAdapter, HttpTransport};
use epistemic_gauge::scorers::{
    extract_features, train_forest, ForestModel, ForestParams, ForestScorer, MarkerLexicon,
    PromptScorer, PromptScorerConfig, Scorer,
};
use epistemic_gauge::{AnnotatedSample, GenParams};
use serde::Serialize;

use crate::config::{AdapterMode, RunConfig, ScorerKind};
use crate::manifest::RunManifest;
use crate::seeds::derive_seed;

/// How a command failed, mapped to the process exit code.
#[derive(Debug)]
pub enum CmdError {
    /// A required input is unconfigured or absent on disk → exit 2.
    MissingInput(String),
    /// Everything else → exit 1.
    Failed(anyhow::Error),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::MissingInput(_) => 2,
            CmdError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::MissingInput(detail) => write!(f, "missing input: {detail}"),
            CmdError::Failed(e) => write!(f, "{e:#}"),
        }
    }
}

macro_rules! failed_from {
    ($($ty:ty),+ $(,)?) => {
        $(impl From<$ty> for CmdError {
            fn from(e: $ty) -> CmdError {
                CmdError::Failed(anyhow::Error::new(e))
            }
        })+
    };
}

failed_from!(
    epistemic_gauge::AdapterError,
    epistemic_gauge::CertaintyError,
    epistemic_gauge::CorpusError,
    epistemic_gauge::DiagnosticsError,
    epistemic_gauge::ScorerError,
    epistemic_gauge::AuditError,
    epistemic_gauge::SurveyError,
    crate::config::ConfigError,
    serde_json::Error,
    std::io::Error,
    csv::Error,
);

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> CmdError {
        CmdError::Failed(e)
    }
}

pub type CmdResult = Result<(), CmdError>;

/// Quote a CSV field only when it needs it (comma, quote, or newline),
/// doubling any embedded quotes.
pub fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Require a configured input path that exists on disk.
pub fn require_input<'a>(
    value: Option<&'a PathBuf>,
    what: &str,
) -> Result<&'a Path, CmdError> {
    let path =
        value.ok_or_else(|| CmdError::MissingInput(format!("config sets no {what}")))?;
    if !path.exists() {
        return Err(CmdError::MissingInput(format!(
            "{what} {} does not exist",
            path.display()
        )));
    }
    Ok(path)
}

/// One command run: owns the validated config, tracks every file written,
/// and closes with the manifest.
pub struct RunContext {
    pub command: &'static str,
    pub config: RunConfig,
    outputs: Vec<String>,
}

impl RunContext {
    /// Create the output directory and write the effective-config snapshot.
    pub fn create(command: &'static str, config: RunConfig) -> Result<RunContext, CmdError> {
        config.validate()?;
        std::fs::create_dir_all(&config.output_dir).map_err(|e| {
            CmdError::Failed(anyhow::anyhow!(
                "cannot create output directory {}: {e}",
                config.output_dir.display()
            ))
        })?;
        let mut ctx = RunContext {
            command,
            config,
            outputs: Vec::new(),
        };
        let snapshot = to_pretty_json(&ctx.config)?;
        ctx.write_text("config_snapshot.json", &snapshot)?;
        Ok(ctx)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    /// Write one output file and track it for the manifest.
    pub fn write_text(&mut self, name: &str, contents: &str) -> CmdResult {
        let path = self.out_path(name);
        std::fs::write(&path, contents).map_err(|e| {
            CmdError::Failed(anyhow::anyhow!("cannot write {}: {e}", path.display()))
        })?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CmdResult {
        let body = to_pretty_json(value)?;
        self.write_text(name, &body)
    }

    /// Track an output file that was written by a library writer rather
    /// than through [`RunContext::write_text`].
    pub fn note_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    /// Build the chat adapter this run's settings describe. Live and record
    /// modes read `EG_API_BASE` / `EG_API_KEY`; replay opens the store and
    /// never touches the network.
    pub fn adapter(&self) -> Result<ChatAdapter, CmdError> {
        let settings = &self.config.adapter;
        let adapter_config = AdapterConfig {
            max_inflight: settings.max_inflight,
            audit_log: settings.audit_log.clone(),
            ..AdapterConfig::default()
        };
        let adapter = match settings.mode {
            AdapterMode::Live => ChatAdapter::live(
                Box::new(HttpTransport::from_env()?),
                adapter_config,
            )?,
            AdapterMode::Record => {
                let store = settings.store.as_deref().expect("validated");
                ChatAdapter::record(
                    Box::new(HttpTransport::from_env()?),
                    store,
                    adapter_config,
                )?
            }
            AdapterMode::Replay => {
                let store = require_input(settings.store.as_ref(), "replay store")?;
                ChatAdapter::replay(store, adapter_config)?
            }
        };
        Ok(adapter)
    }

    /// Build the configured assertiveness scorer. The forest engine loads a
    /// saved model or trains one on `inputs.corpus` (training is seeded
    /// from the root seed, and the trained model is written to the output
    /// directory). The prompt engine scores through the adapter.
    pub fn scorer(&mut self, corpus: Option<&[AnnotatedSample]>) -> Result<Box<dyn Scorer>, CmdError> {
        match self.config.scorer.kind {
            ScorerKind::Forest => {
                let lexicon = self.lexicon()?;
                let model = match &self.config.scorer.model_path {
                    Some(path) => {
                        let path = require_input(Some(path), "forest model")?;
                        ForestModel::load(path)?
                    }
                    None => {
                        let samples = corpus.ok_or_else(|| {
                            CmdError::MissingInput(
                                "forest training needs inputs.corpus (or scorer.model_path)"
                                    .to_string(),
                            )
                        })?;
                        let mut features = Vec::with_capacity(samples.len());
                        for sample in samples {
                            features.push(extract_features(&sample.text, &lexicon)?);
                        }
                        let labels: Vec<f64> =
                            samples.iter().map(|s| s.mean_score).collect();
                        let params = ForestParams {
                            n_trees: self.config.scorer.n_trees,
                            max_depth: self.config.scorer.max_depth,
                            min_leaf: self.config.scorer.min_leaf,
                            seed: derive_seed(self.config.seed, "scorer.forest"),
                        };
                        let model = train_forest(&features, &labels, &params)?;
                        self.write_text("forest_model.json", &model.to_json())?;
                        model
                    }
                };
                Ok(Box::new(ForestScorer { model, lexicon }))
            }
            ScorerKind::Prompt => {
                let adapter = Arc::new(self.adapter()?);
                Ok(Box::new(PromptScorer {
                    adapter,
                    config: PromptScorerConfig {
                        model_name: self.config.prompt_model().to_string(),
                        params: GenParams::default(),
                        max_retries: self.config.adapter.max_retries,
                    },
                }))
            }
        }
    }

    /// The marker lexicon: a configured file or the built-in default.
    pub fn lexicon(&self) -> Result<MarkerLexicon, CmdError> {
        match &self.config.scorer.lexicon {
            Some(path) => {
                let path = require_input(Some(path), "lexicon")?;
                Ok(MarkerLexicon::from_path(path)?)
            }
            None => Ok(MarkerLexicon::default_lexicon().clone()),
        }
    }

    /// Write the manifest and finish the run. Call last: the manifest lists
    /// every output written before it.
    pub fn finish(self) -> CmdResult {
        let manifest = RunManifest::new(
            self.command,
            self.config.seed,
            self.config.adapter.mode.to_string(),
            self.config
                .adapter
                .store
                .as_ref()
                .map(|p| p.display().to_string()),
            self.outputs.clone(),
        );
        let body = to_pretty_json(&manifest)?;
        let path = self.out_path("manifest.json");
        std::fs::write(&path, body).map_err(|e| {
            CmdError::Failed(anyhow::anyhow!("cannot write {}: {e}", path.display()))
        })?;
        Ok(())
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CmdError> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    Ok(body)
}
