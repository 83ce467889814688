use std::process::ExitCode;

fn main() -> ExitCode {
    cavity_grover::cli::run()
}
