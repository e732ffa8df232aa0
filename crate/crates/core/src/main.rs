use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tripleid::cli::{self, CliError, RunOptions};
use tripleid::entailment::EntailmentRule;
use tripleid::generator::GenParams;

#[derive(Parser)]
#[command(name = "tripleid", version, about = "Dictionary-encoded RDF store with a brute-force search kernel")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Exec {
    /// Parallel workers for the search kernel.
    #[arg(long, env = "TRIPLEID_WORKERS")]
    workers: Option<usize>,
    /// Triples per chunk (default: sized from a 256 MiB budget).
    #[arg(long)]
    chunk_triples: Option<u64>,
}

impl Exec {
    fn options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers.filter(|&w| w > 0).unwrap_or_else(cli::default_workers),
            chunk_triples: self.chunk_triples,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode an N-Triples file into .tid/.sid/.pid/.oid files.
    Convert {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fail on the first malformed line instead of skipping it.
        #[arg(long)]
        strict: bool,
    },
    /// Run a SPARQL query file, printing TSV.
    Query {
        basename: PathBuf,
        query: PathBuf,
        #[command(flatten)]
        exec: Exec,
    },
    /// Apply one RDFS entailment rule (2, 3, 5, 7, 9 or 11).
    Entail {
        basename: PathBuf,
        #[arg(long)]
        rule: EntailmentRule,
        #[command(flatten)]
        exec: Exec,
    },
    /// Print dataset sizes and counts.
    Stats { basename: PathBuf },
    /// Write a synthetic N-Triples dataset to stdout.
    Gen {
        #[arg(long, default_value_t = 10_000)]
        triples: u64,
        #[arg(long, default_value_t = 1_000)]
        subjects: usize,
        #[arg(long, default_value_t = 40)]
        predicates: usize,
        #[arg(long, default_value_t = 1_500)]
        objects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 48)]
        iri_len: usize,
    },
    /// Time every .rq file of a directory.
    Bench {
        basename: PathBuf,
        queries_dir: PathBuf,
        #[command(flatten)]
        exec: Exec,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    match command {
        Command::Convert { input, out: base, strict } => {
            cli::cmd_convert(&input, &base, strict, &mut out, &mut err)?;
        }
        Command::Query { basename, query, exec } => {
            cli::cmd_query(&basename, &query, &exec.options(), &mut out, &mut err)?;
        }
        Command::Entail { basename, rule, exec } => {
            cli::cmd_entail(&basename, rule, &exec.options(), &mut out, &mut err)?;
        }
        Command::Stats { basename } => {
            cli::cmd_stats(&basename, &mut out)?;
        }
        Command::Gen {
            triples,
            subjects,
            predicates,
            objects,
            seed,
            iri_len,
        } => {
            let params = GenParams {
                triples,
                subjects,
                predicates,
                objects,
                seed,
                iri_len,
            };
            cli::cmd_gen(&params, &mut out)?;
        }
        Command::Bench {
            basename,
            queries_dir,
            exec,
            repeat,
        } => {
            cli::cmd_bench(&basename, &queries_dir, &exec.options(), repeat, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
