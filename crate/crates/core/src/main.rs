use std::process::ExitCode;

fn main() -> ExitCode {
    anscombe_core::cli::main()
}
