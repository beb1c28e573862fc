//! epistemic-gauge: score linguistic assertiveness, calibrate verdict
//! confidence into probabilities, and quantify the gap between the two.

mod commands;
mod config;
mod manifest;
mod seeds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CmdError, RunContext};
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "epistemic-gauge",
    version,
    about = "Measure the gap between how assertively a model writes and how certain it is"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Override the configured output directory.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,

    /// Override the configured root seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Replay chat exchanges from this store (no network).
    #[arg(long, value_name = "STORE", conflicts_with_all = ["record", "live"])]
    replay: Option<PathBuf>,

    /// Send live requests and append the exchanges to this store.
    #[arg(long, value_name = "STORE", conflicts_with = "live")]
    record: Option<PathBuf>,

    /// Force live adapter mode.
    #[arg(long)]
    live: bool,

    /// Scorer engine: `forest`, `prompt`, or `prompt:<model>`.
    #[arg(long, value_name = "ENGINE")]
    scorer: Option<String>,

    /// Maximum concurrent chat requests.
    #[arg(long, value_name = "N")]
    max_inflight: Option<usize>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Label each record's explanation through the adapter.
    #[arg(long)]
    classify: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Score texts or records for linguistic assertiveness.
    Score(CommonArgs),
    /// Fit the confidence calibration map and apply it to records.
    Calibrate(CommonArgs),
    /// Correlate calibrated certainty with assertiveness and report gaps.
    Diagnose(CommonArgs),
    /// Leave-one-source-out generalization matrix over an annotated corpus.
    Ablate(CommonArgs),
    /// Build certainty-stratified sampling plans and rater-agreement reports.
    Audit(AuditArgs),
    /// Generate explanation variants and assemble the rating survey.
    Stimuli(CommonArgs),
    /// Filter survey respondents and summarize perceived assertiveness.
    SurveyStats(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::Calibrate(_) => "calibrate",
            Command::Diagnose(_) => "diagnose",
            Command::Ablate(_) => "ablate",
            Command::Audit(_) => "audit",
            Command::Stimuli(_) => "stimuli",
            Command::SurveyStats(_) => "survey-stats",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Score(c)
            | Command::Calibrate(c)
            | Command::Diagnose(c)
            | Command::Ablate(c)
            | Command::Stimuli(c)
            | Command::SurveyStats(c) => c,
            Command::Audit(a) => &a.common,
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CmdError> {
    if !common.config.exists() {
        return Err(CmdError::MissingInput(format!(
            "config file {} does not exist",
            common.config.display()
        )));
    }
    let mut config = RunConfig::load(&common.config)?;
    let overrides = Overrides {
        output_dir: common.output_dir.clone(),
        seed: common.seed,
        replay: common.replay.clone(),
        record: common.record.clone(),
        live: common.live,
        scorer: common.scorer.clone(),
        max_inflight: common.max_inflight,
    };
    overrides.apply(&mut config)?;
    Ok(config)
}

fn run(command: Command) -> Result<(), CmdError> {
    let config = load_config(command.common())?;
    let ctx = RunContext::create(command.name(), config)?;
    match command {
        Command::Score(_) => commands::score::run(ctx),
        Command::Calibrate(_) => commands::calibrate::run(ctx),
        Command::Diagnose(_) => commands::diagnose::run(ctx),
        Command::Ablate(_) => commands::ablate::run(ctx),
        Command::Audit(args) => commands::audit::run(ctx, args.classify),
        Command::Stimuli(_) => commands::stimuli::run(ctx),
        Command::SurveyStats(_) => commands::survey_stats::run(ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
