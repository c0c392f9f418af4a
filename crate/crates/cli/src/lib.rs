//! Command-line front end for `blockjacobi`.

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
pub mod commands;
pub mod config;
pub mod gallery;
pub mod output;

use args::{Cli, Command};
use config::RunConfig;
use output::Output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERDICT: i32 = 2;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cmd: &Command) -> blockjacobi::Result<i32> {
    if let Command::Families = cmd {
        say(&commands::families().message);
        return Ok(EXIT_OK);
    }
    let mut cfg = match cmd.config_path() {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.overlay(cmd.overlay()?);
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(blockjacobi::Error::usage("workers must be at least 1"));
        }
        // the pool can only be configured once per process; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    let mut out = Output::new(&cfg.out_dir())?;
    let outcome = match cmd {
        Command::Spectrum(_) => commands::spectrum(&cfg, &mut out),
        Command::Count(_) => commands::count(&cfg, &mut out),
        Command::CheckA(_) => commands::check_a(&cfg, &mut out),
        Command::CheckB(_) => commands::check_b(&cfg, &mut out),
        Command::Prop1(_) => commands::prop1(&cfg, &mut out),
        Command::Transfer(_) => commands::transfer(&cfg, &mut out),
        Command::Subordinacy(_) => commands::subordinacy(&cfg, &mut out),
        Command::Probe(_) => commands::probe(&cfg, &mut out),
        Command::Reproduce(_) => commands::reproduce(&cfg, &mut out),
        Command::Families => unreachable!(),
    };
    let (code, result) = match outcome {
        Ok(o) => (if o.pass { EXIT_OK } else { EXIT_VERDICT }, Ok(o)),
        Err(e) => (EXIT_ERROR, Err(e)),
    };
    out.metadata(cmd.name(), code)?;
    let o = result?;
    if !o.message.is_empty() {
        say(&o.message);
    }
    Ok(code)
}

/// Prints a line, ignoring a closed stdout.
fn say(msg: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{msg}");
}
