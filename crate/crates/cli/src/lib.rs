//! Command-line front end: argument handling, settings and the four
//! subcommands. `main.rs` only parses and calls [`run`].

pub mod args;
mod commands;
mod output;
pub mod settings;

use std::io::Write;

pub use args::Cli;
pub use output::write_atomic;
pub use settings::RunConfig;

/// Process exit status; the numbers are a scripting contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Error = 1,
    /// Finished, but some slide or file needs attention.
    Warnings = 2,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Console<'_> {
    fn warn(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.err, "warning: {msg}");
    }
}

pub fn run(cli: Cli, console: &mut Console) -> Exit {
    let result = RunConfig::resolve(&cli.global)
        .map_err(anyhow::Error::from)
        .and_then(|config| commands::dispatch(&cli.command, &config, console));
    match result {
        Ok(exit) => exit,
        Err(e) => {
            let _ = writeln!(console.err, "error: {e:#}");
            Exit::Error
        }
    }
}
