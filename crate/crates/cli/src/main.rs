use std::process::ExitCode;

use clap::Parser;
use slidescribe_cli::{run, Cli, Console, Exit};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap would exit 2 on usage errors, which scripts read as "warnings"
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Exit::Error.code()
            } else {
                0
            });
        }
    };
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let exit = run(
        cli,
        &mut Console {
            out: &mut out,
            err: &mut err,
        },
    );
    ExitCode::from(exit.code())
}
