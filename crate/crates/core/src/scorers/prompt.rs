//! Prompt-based assertiveness scorer: ask a remote model to rate a text the
//! same way human coders were asked to.
//!
//! The request carries the verbatim coder-guidance prompt as the system
//! message and the text as the user message. Replies are free-form; the
//! first number found wins (integers, decimals, and `x/10` forms all parse
//! to their leading number). Unparseable replies are retried up to the
//! configured budget, then surfaced as an error carrying all transcripts.

use std::sync::Arc;

use crate::adapter::{ChatAdapter, ChatMessage, ChatRequest, GenParams};
use crate::prompts;
use crate::scale::Scale;

use super::{AssertivenessScore, Scorer, ScorerError};

/// Configuration for the prompted scorer.
#[derive(Debug, Clone)]
pub struct PromptScorerConfig {
    /// Provider model name (snapshot names are configuration, never
    /// hard-coded).
    pub model_name: String,
    /// Sampling parameters for scoring requests.
    pub params: GenParams,
    /// Additional attempts after an unparseable reply.
    pub max_retries: u32,
}

impl PromptScorerConfig {
    pub fn new(model_name: impl Into<String>) -> PromptScorerConfig {
        PromptScorerConfig {
            model_name: model_name.into(),
            params: GenParams::default(),
            max_retries: 2,
        }
    }
}

/// Build the scoring request for `text`. Public so fixture generators and
/// the CLI produce byte-identical requests (replay stores key on the hash).
pub fn scoring_request(
    config: &PromptScorerConfig,
    text: &str,
) -> Result<ChatRequest, ScorerError> {
    ChatRequest::new(
        config.model_name.clone(),
        vec![
            ChatMessage::system(prompts::ASSERTIVENESS_CODER_PROMPT),
            ChatMessage::user(text),
        ],
        config.params.clone(),
    )
    .map_err(ScorerError::from)
}

/// Extract the first number in a reply: an optional sign, digits, optional
/// fraction. `"7.5"`, `"Assertiveness: 8"`, and `"7/10"` all yield their
/// leading number.
pub fn parse_score_reply(reply: &str) -> Option<f64> {
    let bytes = reply.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let starts_number = b.is_ascii_digit()
            || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
            || (b == b'-'
                && bytes
                    .get(i + 1)
                    .is_some_and(|&n| n.is_ascii_digit() || n == b'.'));
        if !starts_number {
            i += 1;
            continue;
        }
        let start = i;
        if bytes[i] == b'-' {
            i += 1;
        }
        let mut seen_dot = false;
        while i < bytes.len() {
            match bytes[i] {
                b'0'..=b'9' => i += 1,
                b'.' if !seen_dot && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                    seen_dot = true;
                    i += 1;
                }
                _ => break,
            }
        }
        let token = &reply[start..i];
        if let Ok(value) = token.parse::<f64>() {
            return Some(value);
        }
        i += 1;
    }
    None
}

/// Score `text` by prompting a model, with retries on unparseable replies.
///
/// The parsed number is clamped to the 0–10 coder scale (the `clamped` flag
/// records when that happened); `value` is the clamped raw divided by 10,
/// so it is always in `[0, 1]` regardless of reply content.
pub fn prompt_score(
    adapter: &ChatAdapter,
    text: &str,
    config: &PromptScorerConfig,
) -> Result<AssertivenessScore, ScorerError> {
    let request = scoring_request(config, text)?;
    let scale = Scale::ZeroToTen;
    let mut transcripts = Vec::new();
    let attempts = config.max_retries + 1;
    for retry in 0..attempts {
        let exchange = adapter.send_chat(&request)?;
        match parse_score_reply(&exchange.reply_text) {
            Some(parsed) => {
                let clamped = !scale.contains(parsed);
                let raw_value = scale.clamp(parsed);
                return Ok(AssertivenessScore {
                    value: scale.to_unit(raw_value),
                    raw_value,
                    scorer_id: format!("prompt:{}", config.model_name),
                    clamped,
                    retries_used: retry,
                });
            }
            None => transcripts.push(exchange.reply_text),
        }
    }
    Err(ScorerError::UnparseableReply {
        attempts,
        transcripts,
    })
}

/// [`Scorer`] wrapper owning its adapter handle.
pub struct PromptScorer {
    pub adapter: Arc<ChatAdapter>,
    pub config: PromptScorerConfig,
}

impl Scorer for PromptScorer {
    fn id(&self) -> String {
        format!("prompt:{}", self.config.model_name)
    }

    fn score_text(&self, text: &str) -> Result<AssertivenessScore, ScorerError> {
        prompt_score(&self.adapter, text, &self.config)
    }
}
