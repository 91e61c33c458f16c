use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gatutor_core::adjacency::{
    analyze, export_report, InputFile, DEFAULT_GAP_THRESHOLD, DEFAULT_MIN_MATCH_LEN,
};
use gatutor_core::graph::{parse_graph, validate_graph};
use gatutor_core::session::{read_transaction_log, ServiceConfig};
use gatutor_core::{replay, MASTERY_THRESHOLD};

#[derive(Parser)]
#[command(
    name = "gatutor",
    version,
    about = "Example-tracing tutor for the gene adjacency program"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "GATUTOR_PORT", default_value_t = 8080, value_parser = clap::value_parser!(u16).range(1..))]
        port: u16,
        #[arg(long, env = "GATUTOR_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        /// Holds problems/, sessions/ and results/.
        #[arg(long, env = "GATUTOR_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, env = "GATUTOR_GAP_THRESHOLD", default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: u64,
        #[arg(long, env = "GATUTOR_MIN_MATCH_LEN", default_value_t = DEFAULT_MIN_MATCH_LEN)]
        min_match_len: usize,
        #[arg(long, env = "GATUTOR_MASTERY_THRESHOLD", default_value_t = MASTERY_THRESHOLD)]
        mastery_threshold: f64,
        /// Treat each hint request as an error on the hinted step's skills.
        #[arg(long, env = "GATUTOR_HINTS_ARE_ERRORS")]
        hints_are_errors: bool,
    },
    /// Check a behavior graph; prints one diagnostic per line.
    Validate { graph: PathBuf },
    /// Trace a transaction log against a graph; prints one verdict per line.
    Replay { graph: PathBuf, log: PathBuf },
    /// Run the adjacency analysis on tables and print the report.
    Process {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, env = "GATUTOR_GAP_THRESHOLD", default_value_t = DEFAULT_GAP_THRESHOLD)]
        gap_threshold: u64,
        #[arg(long, env = "GATUTOR_MIN_MATCH_LEN", default_value_t = DEFAULT_MIN_MATCH_LEN)]
        min_match_len: usize,
    },
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn validate(path: &Path) -> anyhow::Result<ExitCode> {
    let graph = match parse_graph(&read(path)?) {
        Ok(g) => g,
        Err(e) => {
            println!("{}: error: {e}", path.display());
            return Ok(ExitCode::FAILURE);
        }
    };
    let diags = validate_graph(&graph);
    for d in &diags {
        println!("{}: {d}", path.display());
    }
    Ok(if diags.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn replay_log(graph: &Path, log: &Path) -> anyhow::Result<ExitCode> {
    let graph =
        parse_graph(&read(graph)?).with_context(|| format!("parsing {}", graph.display()))?;
    let txns = read_transaction_log(&read(log)?)
        .map_err(|(line, e)| anyhow::anyhow!("{}: line {line}: {e}", log.display()))?;
    for v in replay(graph, &txns)? {
        let kind = if v.is_correct() {
            "Correct"
        } else {
            "Incorrect"
        };
        match v.message {
            Some(m) => println!("{kind}\t{m}"),
            None => println!("{kind}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn process(
    files: &[PathBuf],
    gap_threshold: u64,
    min_match_len: usize,
) -> anyhow::Result<ExitCode> {
    let inputs = files
        .iter()
        .map(|p| {
            Ok(InputFile {
                name: p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                text: read(p)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let analysis = analyze(&inputs, gap_threshold, min_match_len)?;
    print!("{}", export_report(&analysis));
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Serve {
            port,
            host,
            data_dir,
            gap_threshold,
            min_match_len,
            mastery_threshold,
            hints_are_errors,
        } => {
            let config = ServiceConfig {
                port,
                data_dir,
                gap_threshold,
                min_match_len,
                mastery_threshold,
                hints_are_errors,
            };
            tokio::runtime::Runtime::new()?.block_on(gatutor_cli::serve(config, host))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { graph } => validate(&graph),
        Command::Replay { graph, log } => replay_log(&graph, &log),
        Command::Process {
            files,
            gap_threshold,
            min_match_len,
        } => process(&files, gap_threshold, min_match_len),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("GATUTOR_LOG")
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
