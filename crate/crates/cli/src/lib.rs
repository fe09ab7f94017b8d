//! Command-line front end: config resolution, dispatch, persistence and
//! report rendering.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::Cli;
use crate::config::{parse_config, read_config_file, RunConfig};
use crate::error::{CliError, EXIT_OK};

/// Parses `argv` (program name first) and an optional config file.
pub fn resolve<I, T>(argv: I) -> Result<(RunConfig, bool), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.render().to_string().trim_end().to_string()))?;
    let file = match &cli.config {
        Some(p) => read_config_file(p)?,
        None => vec![],
    };
    let (sub, flags) = cli.command.resolve();
    Ok((parse_config(sub, flags, file)?, cli.dump_config))
}

/// Full run; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    // Help and version are successful usage, not errors.
    if let Err(e) = Cli::try_parse_from(&argv) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    }
    let result = resolve(argv).and_then(|(cfg, dump)| {
        for o in &cfg.overrides {
            let _ = writeln!(err, "note: flag value {} overrides config file value {} for {}", o.flag, o.file, o.key);
        }
        if dump {
            writeln!(out, "{}", cfg.to_json())?;
            Ok(())
        } else {
            commands::dispatch(&cfg, out, err)
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}
