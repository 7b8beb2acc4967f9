mod commands;
mod error;
mod report;
mod wav;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

/// Low frame-rate speech codec: encode, decode, inspect and evaluate.
#[derive(Parser, Debug)]
#[command(name = "lfsc", version)]
struct Cli {
    /// Print results as a single JSON object.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a mono 16-bit WAV into a .lfsc bitstream.
    Encode(EncodeArgs),
    /// Decode a .lfsc bitstream into a mono 16-bit WAV.
    Decode(DecodeArgs),
    /// Describe a .lfsc bitstream or a weight file.
    Info(InfoArgs),
    /// Compare a decoded WAV against its reference.
    Eval(EvalArgs),
    /// Frame, token and bit rates for a quantizer configuration.
    Rate(RateArgs),
    /// Write a weight file with seeded random parameters.
    Init(InitArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpecOverride {
    /// FSQ levels per dimension, comma separated (e.g. 8,7,6,6).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<u32>>,
    /// Number of parallel codebooks.
    #[arg(long)]
    pub codebooks: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Expected quantizer; the command fails if the model disagrees.
    #[command(flatten)]
    pub spec: SpecOverride,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// A .lfsc bitstream or a weight file.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Reference WAV.
    #[arg(long)]
    pub reference: PathBuf,
    /// WAV under test.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated subset of si_sdr, mel, stft, bandwidth, or all.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub metrics: Vec<String>,
    /// Trim both signals to the shorter length instead of failing.
    #[arg(long)]
    pub trim: bool,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,7,6,6")]
    pub levels: Vec<u32>,
    #[arg(long, default_value_t = 8)]
    pub codebooks: usize,
    #[arg(long, default_value_t = 22050)]
    pub sample_rate: u32,
    /// Samples per frame.
    #[arg(long, default_value_t = 1024)]
    pub stride: u32,
}

#[derive(Args, Debug)]
pub struct InitArgs {
    #[arg(long)]
    pub output: PathBuf,
    /// Narrow channels for fast CPU experiments.
    #[arg(long)]
    pub reduced: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub spec: SpecOverride,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail(CliError::usage(first));
        }
    };
    let result = match &cli.command {
        Command::Encode(a) => commands::encode(a),
        Command::Decode(a) => commands::decode(a),
        Command::Info(a) => commands::info(a),
        Command::Eval(a) => commands::eval(a),
        Command::Rate(a) => commands::rate(a),
        Command::Init(a) => commands::init(a),
    };
    match result {
        Ok(report) => {
            println!("{}", report.render(cli.json));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(e.code)
}
