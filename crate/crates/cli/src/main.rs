use std::io;
use std::process::ExitCode;

use clap::Parser;
use lipfree_harness::args::Cli;
use lipfree_harness::outcome::Status;

fn main() -> ExitCode {
    // clap reports usage errors with status 2, matching the input-error code
    let cli = Cli::parse();
    let status = lipfree_harness::run(&cli, &mut io::stdout().lock(), &mut io::stderr().lock());
    match status {
        Status::Success => ExitCode::SUCCESS,
        other => ExitCode::from(other.code() as u8),
    }
}
