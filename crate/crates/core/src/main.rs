use std::process::ExitCode;

fn main() -> ExitCode {
    tropical_bbs::cli::main()
}
