mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;

/// Chirp-permuted AFDM secure link analyses: effective channels, guessing
/// probabilities, attack costs, BER experiments and key utilities.
#[derive(Parser, Debug)]
#[command(name = "cpafdm", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Precedence: flags, then the config
/// file, then built-in defaults.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML/JSON config file, optionally with one table per subcommand, or
    /// a run manifest to replay.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw of the run.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output format of written tables and reports.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump classic, matched and mismatched effective-channel magnitudes.
    EffectiveChannel(commands::EffectiveChannelArgs),
    /// Tables of the number of key positions a uniform guess gets right.
    GuessProb(commands::GuessProbArgs),
    /// Exhaustive-search and Grover-search cost of recovering the key.
    AttackCost(commands::AttackCostArgs),
    /// BER of Bob and Eve versus SNR.
    Ber(commands::BerArgs),
    /// Eve BER versus her exact number of correct key positions.
    BerSweepL(commands::SweepArgs),
    /// Convert between key ranks and permutations, or draw a random key.
    Key(commands::KeyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::EffectiveChannel(a) => commands::effective_channel(&cli.common, a),
        Command::GuessProb(a) => commands::guess_prob(&cli.common, a),
        Command::AttackCost(a) => commands::attack_cost(&cli.common, a),
        Command::Ber(a) => commands::ber(&cli.common, a),
        Command::BerSweepL(a) => commands::ber_sweep_l(&cli.common, a),
        Command::Key(a) => commands::key(&cli.common, a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": ").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
