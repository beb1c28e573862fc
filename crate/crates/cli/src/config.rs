//! Run configuration: one declarative JSON file per run, with CLI flags as
//! targeted overrides. Every command writes the *effective* configuration
//! (file + overrides) back out as `config_snapshot.json` so a run can be
//! reproduced from its output directory alone.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Complete configuration for one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every random stream derives from it (see `seeds`).
    #[serde(default)]
    pub seed: u64,
    /// Where all outputs land; created if missing.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub adapter: AdapterSettings,
    #[serde(default)]
    pub scorer: ScorerSettings,
    #[serde(default)]
    pub inputs: InputPaths,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

/// How model calls are made and replayed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterSettings {
    #[serde(default)]
    pub mode: AdapterMode,
    /// Exchange store; required in `record` and `replay` modes.
    #[serde(default)]
    pub store: Option<PathBuf>,
    /// Provider model name used for requests this run makes.
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_max_inflight")]
    pub max_inflight: usize,
    /// Parse-retry budget for reply protocols (scores, labels, variants).
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Optional append-only audit log of request attempts. Appends across
    /// runs, so point it outside the output directory to keep output
    /// directories byte-reproducible.
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
}

impl Default for AdapterSettings {
    fn default() -> Self {
        AdapterSettings {
            mode: AdapterMode::default(),
            store: None,
            model: default_model(),
            max_inflight: default_max_inflight(),
            max_retries: default_max_retries(),
            audit_log: None,
        }
    }
}

fn default_model() -> String {
    "gpt-4o".to_string()
}
fn default_max_inflight() -> usize {
    4
}
fn default_max_retries() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterMode {
    #[default]
    Live,
    Record,
    Replay,
}

impl fmt::Display for AdapterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdapterMode::Live => "live",
            AdapterMode::Record => "record",
            AdapterMode::Replay => "replay",
        })
    }
}

/// Which assertiveness engine `score` and `ablate` use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSettings {
    #[serde(default)]
    pub kind: ScorerKind,
    /// Marker lexicon JSON; the built-in lexicon when absent.
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Pre-trained forest model JSON; when absent the forest is trained on
    /// `inputs.corpus`.
    #[serde(default)]
    pub model_path: Option<PathBuf>,
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    /// Model name for the prompt scorer; `adapter.model` when absent.
    #[serde(default)]
    pub prompt_model: Option<String>,
}

impl Default for ScorerSettings {
    fn default() -> Self {
        ScorerSettings {
            kind: ScorerKind::default(),
            lexicon: None,
            model_path: None,
            n_trees: default_n_trees(),
            max_depth: default_max_depth(),
            min_leaf: default_min_leaf(),
            prompt_model: None,
        }
    }
}

fn default_n_trees() -> usize {
    200
}
fn default_max_depth() -> usize {
    8
}
fn default_min_leaf() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    #[default]
    Forest,
    Prompt,
}

/// Input files; each command requires the subset it documents and exits
/// with code 2 when a required one is absent or missing on disk.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    /// Annotated corpus files (CSV or JSONL) for scoring and ablation.
    #[serde(default)]
    pub corpus: Vec<PathBuf>,
    /// Plain text file, one text per line, as a scoring source.
    #[serde(default)]
    pub texts: Option<PathBuf>,
    /// Certainty records JSONL (statements, verdicts, confidences).
    #[serde(default)]
    pub records: Option<PathBuf>,
    /// Assertiveness scores CSV (`statement_id,assertiveness,...`).
    #[serde(default)]
    pub assertiveness: Option<PathBuf>,
    /// Human comparison CSV (`statement_id,level,human_assertiveness`).
    #[serde(default)]
    pub human: Option<PathBuf>,
    /// Audit labels CSV (`statement_id,model_label,human_label`).
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Stimuli statements JSONL (statement, verdict, explanation,
    /// content question).
    #[serde(default)]
    pub statements: Option<PathBuf>,
    /// Survey definition JSON produced by `stimuli`.
    #[serde(default)]
    pub survey: Option<PathBuf>,
    /// Respondent ratings CSV.
    #[serde(default)]
    pub ratings: Option<PathBuf>,
}

fn default_gap_threshold() -> f64 {
    0.3
}
fn default_reliability_bins() -> usize {
    10
}
fn default_validation_fraction() -> f64 {
    0.5
}
fn default_n_respondents() -> usize {
    467
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationChoice {
    #[default]
    Spearman,
    Pearson,
}

/// Analysis thresholds and annotations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Assertiveness−certainty gap above which a statement counts as
    /// over-assertive.
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
    /// Equal-width bins in the reliability table.
    #[serde(default = "default_reliability_bins")]
    pub reliability_bins: usize,
    /// Share of records used as the Platt validation split.
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    /// Respondents to assemble a survey for.
    #[serde(default = "default_n_respondents")]
    pub n_respondents: usize,
    #[serde(default)]
    pub correlation: CorrelationChoice,
    /// Free-form provenance of the input data (for example, that a fixture
    /// was constructed with a known correlation); echoed verbatim into the
    /// diagnose summary so reports carry their data's origin.
    #[serde(default)]
    pub provenance_note: Option<String>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            gap_threshold: default_gap_threshold(),
            reliability_bins: default_reliability_bins(),
            validation_fraction: default_validation_fraction(),
            n_respondents: default_n_respondents(),
            correlation: CorrelationChoice::default(),
            provenance_note: None,
        }
    }
}

impl RunConfig {
    /// Read and parse a config file.
    ///
    /// # Errors
    ///
    /// Unreadable file or invalid JSON (with the parse detail).
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        serde_json::from_str(&raw).map_err(|e| ConfigError::Invalid {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    /// Structural validation shared by all commands.
    ///
    /// # Errors
    ///
    /// A record/replay mode without a store path, or out-of-range
    /// thresholds.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if matches!(self.adapter.mode, AdapterMode::Record | AdapterMode::Replay)
            && self.adapter.store.is_none()
        {
            return Err(ConfigError::Constraint {
                detail: format!("adapter mode {} requires adapter.store", self.adapter.mode),
            });
        }
        if !(0.0..=1.0).contains(&self.analysis.gap_threshold) {
            return Err(ConfigError::Constraint {
                detail: format!(
                    "analysis.gap_threshold {} must be in [0, 1]",
                    self.analysis.gap_threshold
                ),
            });
        }
        if !(self.analysis.validation_fraction > 0.0 && self.analysis.validation_fraction < 1.0) {
            return Err(ConfigError::Constraint {
                detail: format!(
                    "analysis.validation_fraction {} must be in (0, 1)",
                    self.analysis.validation_fraction
                ),
            });
        }
        if self.analysis.reliability_bins < 2 {
            return Err(ConfigError::Constraint {
                detail: format!(
                    "analysis.reliability_bins {} must be at least 2",
                    self.analysis.reliability_bins
                ),
            });
        }
        Ok(())
    }

    /// The prompt-scorer model name, falling back to the adapter model.
    pub fn prompt_model(&self) -> &str {
        self.scorer
            .prompt_model
            .as_deref()
            .unwrap_or(&self.adapter.model)
    }
}

/// CLI-flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub live: bool,
    /// `forest` or `prompt:<model>`.
    pub scorer: Option<String>,
    pub max_inflight: Option<usize>,
}

impl Overrides {
    /// Apply these overrides to a loaded config.
    ///
    /// # Errors
    ///
    /// An unparseable `--scorer` value.
    pub fn apply(&self, config: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(store) = &self.replay {
            config.adapter.mode = AdapterMode::Replay;
            config.adapter.store = Some(store.clone());
        }
        if let Some(store) = &self.record {
            config.adapter.mode = AdapterMode::Record;
            config.adapter.store = Some(store.clone());
        }
        if self.live {
            config.adapter.mode = AdapterMode::Live;
        }
        if let Some(max) = self.max_inflight {
            config.adapter.max_inflight = max;
        }
        if let Some(spec) = &self.scorer {
            match spec.split_once(':') {
                None if spec == "forest" => config.scorer.kind = ScorerKind::Forest,
                None if spec == "prompt" => config.scorer.kind = ScorerKind::Prompt,
                Some(("prompt", model)) if !model.is_empty() => {
                    config.scorer.kind = ScorerKind::Prompt;
                    config.scorer.prompt_model = Some(model.to_string());
                }
                _ => {
                    return Err(ConfigError::Constraint {
                        detail: format!(
                            "--scorer {spec:?} must be \"forest\", \"prompt\", or \"prompt:<model>\""
                        ),
                    })
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {detail}")]
    Unreadable { path: PathBuf, detail: String },
    #[error("config {path} is not valid JSON for a run config: {detail}")]
    Invalid { path: PathBuf, detail: String },
    #[error("invalid configuration: {detail}")]
    Constraint { detail: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(dir: &Path) -> PathBuf {
        let path = dir.join("config.json");
        std::fs::write(&path, r#"{"output_dir": "out"}"#).unwrap();
        path
    }

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::load(&minimal_json(dir.path())).unwrap();
        assert_eq!(config.seed, 0);
        assert_eq!(config.adapter.mode, AdapterMode::Live);
        assert_eq!(config.adapter.max_inflight, 4);
        assert_eq!(config.scorer.kind, ScorerKind::Forest);
        assert_eq!(config.scorer.n_trees, 200);
        assert!((config.analysis.gap_threshold - 0.3).abs() < 1e-15);
        assert_eq!(config.analysis.reliability_bins, 10);
        assert_eq!(config.analysis.n_respondents, 467);
        config.validate().unwrap();
    }

    #[test]
    fn replay_without_store_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"output_dir": "out", "adapter": {"mode": "replay"}}"#,
        )
        .unwrap();
        let config = RunConfig::load(&path).unwrap();
        match config.validate() {
            Err(ConfigError::Constraint { detail }) => {
                assert!(detail.contains("replay"));
                assert!(detail.contains("adapter.store"));
            }
            other => panic!("expected constraint error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"output_dir": "out", "sede": 3}"#).unwrap();
        assert!(matches!(
            RunConfig::load(&path),
            Err(ConfigError::Invalid { .. })
        ));
    }

    #[test]
    fn overrides_apply_in_place() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::load(&minimal_json(dir.path())).unwrap();
        let overrides = Overrides {
            seed: Some(9),
            replay: Some(PathBuf::from("store.jsonl")),
            scorer: Some("prompt:alt-model".to_string()),
            max_inflight: Some(1),
            ..Overrides::default()
        };
        overrides.apply(&mut config).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.adapter.mode, AdapterMode::Replay);
        assert_eq!(config.adapter.store.as_deref(), Some(Path::new("store.jsonl")));
        assert_eq!(config.scorer.kind, ScorerKind::Prompt);
        assert_eq!(config.prompt_model(), "alt-model");
        assert_eq!(config.adapter.max_inflight, 1);

        let bad = Overrides {
            scorer: Some("forst".to_string()),
            ..Overrides::default()
        };
        assert!(bad.apply(&mut config).is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::load(&minimal_json(dir.path())).unwrap();
        let snapshot = serde_json::to_string_pretty(&config).unwrap();
        let reloaded: RunConfig = serde_json::from_str(&snapshot).unwrap();
        assert_eq!(
            serde_json::to_string(&reloaded).unwrap(),
            serde_json::to_string(&config).unwrap()
        );
    }
}
