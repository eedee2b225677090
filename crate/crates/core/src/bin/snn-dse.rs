use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(msg) = snn_dse::cli::configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(snn_dse::cli::EXIT_USAGE as u8);
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = snn_dse::cli::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    ExitCode::from(code as u8)
}
