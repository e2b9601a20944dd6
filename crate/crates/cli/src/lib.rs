//! Command-line front end: argument parsing, exit codes and the run orchestrator.

pub mod commands;
pub mod error;
pub mod util;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

use commands::Outcome;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sitewave", version, about = "Indoor scan to ray-traced multipath, end to end")]
pub struct Cli {
    /// Print a machine-readable JSON document on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// More logging (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Material permittivity and reflection coefficients.
    #[command(subcommand)]
    Materials(MaterialsCmd),
    /// Scene inspection.
    #[command(subcommand)]
    Scene(SceneCmd),
    /// Point cloud reconstruction.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Trace one TX-RX link through a scene.
    Trace(commands::trace::TraceArgs),
    /// Compare simulated and measured PDPs.
    Validate(commands::validate::ValidateArgs),
    /// Reconstruct, trace and validate from a run manifest.
    Run(commands::run::RunArgs),
    /// Generate bundled inputs.
    #[command(subcommand)]
    Fixture(FixtureCmd),
}

#[derive(Debug, Subcommand)]
pub enum MaterialsCmd {
    /// Evaluate permittivity and Fresnel coefficients.
    Eval(commands::materials::EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum SceneCmd {
    /// Load a scene and report mesh integrity (exit 2 when not watertight).
    Check(commands::scene::CheckArgs),
}

#[derive(Debug, Subcommand)]
pub enum PipelineCmd {
    /// Build a material-labeled scene from a labeled point cloud.
    Build(commands::pipeline::BuildArgs),
}

#[derive(Debug, Subcommand)]
pub enum FixtureCmd {
    /// Synthetic room scan, votes, meshes and run manifest.
    Room(commands::fixture::RoomArgs),
}

pub fn dispatch(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Materials(MaterialsCmd::Eval(a)) => commands::materials::eval(a),
        Command::Scene(SceneCmd::Check(a)) => commands::scene::check(a),
        Command::Pipeline(PipelineCmd::Build(a)) => commands::pipeline::build(a),
        Command::Trace(a) => commands::trace::run(a),
        Command::Validate(a) => commands::validate::run(a),
        Command::Run(a) => commands::run::run(a),
        Command::Fixture(FixtureCmd::Room(a)) => commands::fixture::room(a),
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Writes to stdout; a closed pipe is not an error worth dying over.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match dispatch(&cli.command) {
        Ok(out) => {
            if cli.json {
                emit(&format!("{}\n", serde_json::to_string_pretty(&out.json).expect("serializable")));
            } else {
                emit(&out.text);
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if cli.json {
                let doc = serde_json::json!({ "error": e });
                emit(&format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable")));
            }
            e.exit_code()
        }
    }
}
