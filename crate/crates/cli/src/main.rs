use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let code = umlpp_cli::commands::run_from(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}
