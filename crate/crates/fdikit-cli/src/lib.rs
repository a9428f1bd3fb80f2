//! Command-line front end for `fdikit`: model files, command dispatch and residual simulation.

pub mod args;
pub mod commands;
pub mod io;
pub mod simulate;

use clap::Parser;

/// Parses `argv`, runs the command and returns the exit code: 0 on success, 2 when
/// the problem is not solvable and 1 for any other failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
