use std::process::ExitCode;

fn main() -> ExitCode {
    membalancer::cli::run()
}
