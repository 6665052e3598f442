use std::process::ExitCode;

fn main() -> ExitCode {
    trustmix::cli::main_with_args(std::env::args_os())
}
