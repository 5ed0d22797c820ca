use polymer_lab::cli::{init_threads, run, EXIT_ERROR};
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR);
    }
    let code = run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}
