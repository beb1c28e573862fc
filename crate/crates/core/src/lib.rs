//! epistemic-gauge: measure the mismatch between how assertively a language
//! model *speaks* and how certain it actually *is*.
//!
//! The library is organised around three measurements and the machinery to
//! compare them:
//!
//! | concern | module | what it produces |
//! |---------|--------|------------------|
//! | linguistic assertiveness | [`scorers`] | a score in `[0, 1]` per text, from a trained random-forest over epistemic-marker features or from a prompted model |
//! | internal certainty | [`certainty`] | a calibrated probability per statement, via verdict elicitation + Platt scaling |
//! | the gap between them | [`diagnostics`] | correlations, stratified tables, ablations, over-assertion shares |
//!
//! Supporting cast:
//!
//! * [`corpus`] — ingest and validate human-annotated assertiveness ratings,
//!   inter-coder agreement, train/test splits, fine-tune export.
//! * [`adapter`] — a chat-completion client with record/replay so every
//!   pipeline can run deterministically offline.
//! * [`audit`] — assertion-direction labelling and rater agreement (Cohen's
//!   kappa) for validating elicited explanations.
//! * [`survey`] — assertiveness-variant stimulus generation and survey
//!   assembly/analysis for human perception studies.
//! * [`prompts`] — the canonical prompt texts used across modules.
//! * [`stats`] — shared numerics: moments, ranks, quantiles, and the
//!   special functions behind t-distribution tail probabilities.
//! * [`scale`] — the score scales (unit, 0–10, 0–100) and conversions.
//!
//! Determinism is a design requirement throughout: all randomness flows
//! through explicitly seeded [`rand_chacha::ChaCha8Rng`] generators, all
//! serialised maps are ordered, and the chat adapter can replay recorded
//! exchanges byte-for-byte.

pub mod adapter;
pub mod audit;
pub mod certainty;
pub mod corpus;
pub mod diagnostics;
pub mod prompts;
pub mod scale;
pub mod scorers;
pub mod stats;
pub mod survey;

pub use adapter::{
    AdapterError, ChatAdapter, ChatExchange, ChatMessage, ChatRequest, GenParams, Role,
};
pub use audit::{AssertionLabel, AuditError, KappaReport, Rater, SamplingPlan};
pub use certainty::{CertaintyError, CertaintyRecord, PlattParams, Verdict};
pub use corpus::{AnnotatedSample, CorpusError, Source};
pub use diagnostics::{CorrelationMethod, CorrelationResult, DiagnosticsError};
pub use scale::Scale;
pub use scorers::{AssertivenessScore, Scorer, ScorerError};
pub use survey::{RespondentRecord, StimulusItem, SurveyDefinition, SurveyError};
