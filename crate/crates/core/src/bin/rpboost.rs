use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rpboost::cli::run(std::env::args_os()))
}
