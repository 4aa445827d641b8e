//! `mixsmooth`: command-line front end of `mixsmooth-core`.
//!
//! Exit codes: 0 PASS, 1 FAIL, 2 INCONCLUSIVE, 64 usage error, 74 I/O
//! error. `MIXED_SMOOTH_THREADS` caps the worker threads (0 = one per core).

mod cli;
mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::cli::{Cli, Command, Format, OutArgs};
use crate::config::{usage, CliError};
use crate::output::Envelope;

const THREADS_VAR: &str = "MIXED_SMOOTH_THREADS";

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_VAR) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("{THREADS_VAR} must be a nonnegative integer, got '{s}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot start {threads} threads: {e}")))
}

fn emit(env: &Envelope, out: &OutArgs) -> Result<(), CliError> {
    let text = match out.format {
        Format::Json => env.render_json(),
        Format::Csv => env.render_csv().map_err(|e| CliError::Io {
            path: "csv".into(),
            source: std::io::Error::other(e),
        })?,
        Format::Human => env.render_human(),
    };
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let pool = thread_pool()?;
    let (mut env, out) = match &cli.command {
        Command::VerifyGnl(a) => (commands::verify_gnl(a, &pool)?, &a.out),
        Command::CheckEmbedding(a) => (commands::check_embedding(a, &pool)?, &a.out),
        Command::CheckTrace(a) => (commands::check_trace_cmd(a, &pool)?, &a.out),
        Command::Gallery(a) => (commands::gallery_cmd(a, &pool)?, &a.out),
        Command::Norms(a) => (commands::norms_cmd(a, &pool)?, &a.out),
    };
    if out.timing {
        env.wall_time = Some(start.elapsed().as_secs_f64());
    }
    emit(&env, out)?;
    Ok(ExitCode::from(env.overall().exit_code() as u8))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mixsmooth: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
