use std::process::ExitCode;

fn main() -> ExitCode {
    psd_core::cli::run(std::env::args_os())
}
