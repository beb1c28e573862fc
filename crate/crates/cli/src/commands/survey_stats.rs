//! `survey-stats`: apply the respondent quality filter to collected
//! ratings and summarize perceived assertiveness per variant level.

use std::collections::BTreeMap;

use epistemic_gauge::survey::{filter_respondents, load_ratings_csv, perception_stats};
use epistemic_gauge::SurveyDefinition;

use super::{require_input, CmdError, CmdResult, RunContext};

pub fn run(mut ctx: RunContext) -> CmdResult {
    let survey_path = require_input(ctx.config.inputs.survey.as_ref(), "survey file")?;
    let survey: SurveyDefinition = serde_json::from_str(&std::fs::read_to_string(survey_path)?)
        .map_err(|e| {
            CmdError::Failed(anyhow::anyhow!(
                "cannot parse survey file {}: {e}",
                survey_path.display()
            ))
        })?;
    let level_of: BTreeMap<String, i8> = survey
        .items
        .iter()
        .map(|item| (item.item_id.clone(), item.level))
        .collect();

    let ratings_path = require_input(ctx.config.inputs.ratings.as_ref(), "ratings file")?;
    let records = load_ratings_csv(ratings_path)?;
    let total = records.len();
    let (retained, exclusions) = filter_respondents(&records);

    ctx.write_json("exclusions.json", &exclusions)?;
    if retained.is_empty() {
        return Err(CmdError::Failed(anyhow::anyhow!(
            "quality filter excluded all {total} respondents"
        )));
    }

    let stats = perception_stats(&retained, &level_of)?;
    ctx.write_text("survey_stats.csv", &stats.to_csv_string())?;
    ctx.write_json("survey_stats.json", &stats)?;

    println!(
        "survey-stats: {} respondents in, {} retained, {} excluded",
        total,
        retained.len(),
        exclusions.len()
    );
    if !stats.empty_levels.is_empty() {
        println!("  empty levels: {:?}", stats.empty_levels);
    }
    println!(
        "  monotonicity {}: {}",
        if stats.monotonicity.passed { "pass" } else { "fail" },
        stats.monotonicity.detail
    );
    ctx.finish()
}
