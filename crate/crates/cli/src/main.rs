mod commands;
mod session;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mkthe", version, about = "Collaborative encrypted forest evaluation over multi-key BGV")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// Parameter preset: a built-in name or `<name>.preset` on MKTHE_PRESET_PATH.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Session directory for keys, ciphertexts and transcripts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for evaluation-key generation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Dealer: joint public key, joint helper and one share file per owner.
    Setup {
        #[arg(long)]
        owners: Option<usize>,
    },
    /// Client key pair and helper, over the joint key's reference rows.
    Keygen,
    /// Encrypt an owner's stump or the client's input bit.
    Encrypt {
        /// Owner index; requires --stump.
        #[arg(long, requires = "stump", conflicts_with = "client")]
        owner: Option<u32>,
        /// Threshold and labels as `y,A,B`.
        #[arg(long)]
        stump: Option<String>,
        /// The client's input bit.
        #[arg(long)]
        client: Option<u8>,
    },
    /// Evaluator: extend the uploads, evaluate the forest, write result.ct.
    Evaluate,
    /// Owner partial decryptions and the client's final step on result.ct.
    Decrypt {
        /// Ciphertext to decrypt, default `<out>/result.ct`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Every phase in memory, with a report.
    Demo {
        #[arg(long)]
        owners: Option<usize>,
        /// Write the transcript as JSON lines, payload bytes included.
        #[arg(long)]
        dump_transcript: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let err = commands::CliError::BadArgs(text.trim_start_matches("error: ").trim_end().to_string());
            eprintln!("error[{}]: {err}", err.category());
            return err.exit_code();
        }
    };
    match commands::run(cli.global, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}
