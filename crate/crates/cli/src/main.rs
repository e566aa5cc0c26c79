mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use anidil_core::Error;

use args::{Cli, Command};
use report::Context;

/// Exit status for a library error: 2 input, 3 numerical, 4 resolution.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotSquare { .. }
        | Error::UnsupportedDimension(_)
        | Error::NonFinite
        | Error::DimensionMismatch { .. }
        | Error::NotSymmetric { .. }
        | Error::InvalidParameter(_)
        | Error::InvalidGrid(_)
        | Error::OverlappingSupports { .. }
        | Error::KernelMismatch { .. }
        | Error::Format(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::EigenNoConvergence { .. }
        | Error::AmbiguousRank { .. }
        | Error::NonPositiveSpectrum { .. }
        | Error::NotExpansive { .. }
        | Error::NotExpansiveGenerator { .. }
        | Error::Overflow
        | Error::CertificateNotFound { .. }
        | Error::NestingFailure { .. }
        | Error::OmegaNotFound { .. }
        | Error::RootNotConverged => 3,
        Error::Truncation { .. } | Error::DerivativeUnresolved { .. } => 4,
    }
}

/// Arguments that feed the digest: everything except where the report goes and timing.
fn digest_args() -> Vec<String> {
    let mut out = Vec::new();
    let mut it = std::env::args().skip(1);
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if a == "--timing" || a.starts_with("--out=") {
            continue;
        } else {
            out.push(a);
        }
    }
    out
}

fn run(cli: Cli) -> anidil_core::Result<()> {
    let start = Instant::now();
    let mut ctx = Context::new(digest_args(), cli.seed, cli.tol.clone());
    let (name, outputs) = match &cli.command {
        Command::Analyze(a) => ("analyze", commands::analyze(&mut ctx, a)?),
        Command::Generator(a) => ("generator", commands::generator(&mut ctx, a)?),
        Command::Equiv(a) => ("equiv", commands::equiv(&mut ctx, a)?),
        Command::Classify(a) => ("classify", commands::classify(&mut ctx, a)?),
        Command::Partitions(a) => ("partitions", commands::partitions_cmd(&mut ctx, a)?),
        Command::Evolve(a) => ("evolve", commands::evolve_cmd(&mut ctx, a)?),
        Command::Maximal(a) => ("maximal", commands::maximal_cmd(&mut ctx, a)?),
        Command::Probe(a) => ("probe", commands::probe_cmd(&mut ctx, a)?),
    };
    let timing = cli.timing.then(|| start.elapsed().as_secs_f64());
    let report = ctx.finish(name, outputs, timing);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anidil: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
