//! `verity`: forge statement groups, train the verifier, calibrate it,
//! evaluate it and filter generated knowledge with it.

mod commands;
mod error;
mod settings;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

pub use error::CliError;
pub use settings::SEED_ENV;

#[derive(Parser, Debug)]
#[command(name = "verity", version, about = "Commonsense statement verifier toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Accepted by every subcommand.
#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Master seed; falls back to the config file, then VERITY_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Flat TOML file whose keys mirror the long flags (dashes become
    /// underscores). Flags win over the file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert raw datasets into statement groups.
    Forge {
        #[command(subcommand)]
        action: ForgeCommand,
    },
    /// Two-stage training of the reference verifier.
    Train(commands::TrainArgs),
    /// Score statement groups into a score file.
    Score(commands::ScoreArgs),
    /// Fit the inference temperature on a score file.
    Calibrate(commands::CalibrateArgs),
    /// Evaluate a model on every benchmark of a manifest.
    Evaluate(commands::EvaluateArgs),
    /// Keep the statements a model scores above a threshold.
    Filter(commands::FilterArgs),
    /// Render an evaluation report.
    Report(commands::ReportArgs),
}

#[derive(Subcommand, Debug)]
enum ForgeCommand {
    /// Run one input adapter.
    Convert(commands::ConvertArgs),
    /// Write a synthetic separable corpus.
    Synth(commands::SynthArgs),
}

impl Command {
    fn path(&self) -> Vec<&'static str> {
        match self {
            Command::Forge {
                action: ForgeCommand::Convert(_),
            } => vec!["forge", "convert"],
            Command::Forge {
                action: ForgeCommand::Synth(_),
            } => vec!["forge", "synth"],
            Command::Train(_) => vec!["train"],
            Command::Score(_) => vec!["score"],
            Command::Calibrate(_) => vec!["calibrate"],
            Command::Evaluate(_) => vec!["evaluate"],
            Command::Filter(_) => vec!["filter"],
            Command::Report(_) => vec!["report"],
        }
    }

    fn execute(&self) -> Result<(), CliError> {
        match self {
            Command::Forge {
                action: ForgeCommand::Convert(a),
            } => commands::convert(a),
            Command::Forge {
                action: ForgeCommand::Synth(a),
            } => commands::synth(a),
            Command::Train(a) => commands::train(a),
            Command::Score(a) => commands::score(a),
            Command::Calibrate(a) => commands::calibrate(a),
            Command::Evaluate(a) => commands::evaluate(a),
            Command::Filter(a) => commands::filter(a),
            Command::Report(a) => commands::report(a),
        }
    }
}

fn usage_of(path: &[&str]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let mut cur = &mut cmd;
    for name in path {
        cur = cur.find_subcommand_mut(name).expect("known subcommand");
    }
    cur.render_usage().to_string()
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let path = cli.command.path();
    match cli.command.execute() {
        Ok(()) => 0,
        Err(err) => {
            match &err {
                CliError::Usage { message } => {
                    eprintln!("error: {message}\n\n{}", usage_of(&path));
                }
                CliError::Runtime { kind, message } => {
                    eprintln!("error: kind={kind} command={:?} message={message:?}", path.join(" "));
                }
            }
            err.exit_code()
        }
    }
}
