//! Command-line driver for `nlsmix-core`: config files, result envelopes,
//! CSV tables, the profile cache and the worker pool.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod confine;
pub mod config;
pub mod envelope;
pub mod error;
pub mod table;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::path::Path;
use std::time::Instant;

use clap::Parser;

use crate::cache::Cache;
use crate::cli::{Cli, Command};
use crate::commands::{Context, Outcome};
use crate::envelope::{input_hash, Envelope, Stats, SCHEMA_VERSION};
use crate::error::CliError;

/// Exit status when a `verify` check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;

pub fn execute(ctx: &Context, command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::GroundState(a) => commands::ground_state(ctx, a),
        Command::Scan(a) => commands::scan(ctx, a),
        Command::Sweep(a) => commands::sweep(ctx, a),
        Command::Reduce(a) => commands::reduce(ctx, a),
        Command::Confine(a) => confine::confine(ctx, a),
        Command::Verify(_) => Ok(verify::verify()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_outputs(out_dir: &Path, envelope: &Envelope, outcome: &Outcome) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    for t in &outcome.tables {
        write_file(&out_dir.join(format!("{}.csv", t.name)), &t.render())?;
    }
    let mut text = serde_json::to_string_pretty(envelope).expect("envelope serializes");
    text.push('\n');
    write_file(&out_dir.join("envelope.json"), &text)
}

/// Parses, runs and writes; returns the process exit status.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let start = Instant::now();
    let g = &cli.global;
    let threads = g.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()).min(8));
    if threads == 0 {
        eprintln!("error: --threads must be positive");
        return 2;
    }
    let cache = if g.no_cache { None } else { Some(Cache::new(Cache::resolve_dir(g.cache_dir.as_deref()))) };
    let ctx = Context::new(cache, threads);

    let outcome = match execute(&ctx, &cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                return 2;
            }
            Outcome { errors: vec![e.to_string()], ..Default::default() }
        }
    };
    let config = cli.command.echo();
    let (hits, misses, warnings) = match &ctx.cache {
        Some(c) => (c.hits(), c.misses(), c.take_warnings()),
        None => (0, 0, Vec::new()),
    };
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        command: cli.command.name().into(),
        input_hash: input_hash(cli.command.name(), &config),
        config,
        records: outcome.records.clone(),
        errors: outcome.errors.clone(),
        warnings,
        tables: outcome.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
        stats: Stats { wall_clock_seconds: start.elapsed().as_secs_f64(), threads, cache_hits: hits, cache_misses: misses },
    };
    for line in &outcome.lines {
        println!("{line}");
    }
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    if let Err(e) = write_outputs(&g.out, &envelope, &outcome) {
        eprintln!("error: {e}");
        return 3;
    }
    if !outcome.errors.is_empty() {
        3
    } else if outcome.failed_checks > 0 {
        EXIT_CHECK_FAILED
    } else {
        0
    }
}
