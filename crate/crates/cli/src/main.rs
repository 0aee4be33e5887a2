use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = kse_cli::dispatch(std::env::args_os(), &mut io::stdout().lock());
    ExitCode::from(code)
}
