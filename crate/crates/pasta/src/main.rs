use std::process::ExitCode;

fn main() -> ExitCode {
    pasta::cli::run(std::env::args_os())
}
