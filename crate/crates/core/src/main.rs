use std::panic;
use std::process::ExitCode;

use condma::cli::{run_cli, EXIT_INTERNAL};

fn main() -> ExitCode {
    panic::set_hook(Box::new(|info| {
        eprintln!("internal error: {info}");
    }));
    let outcome = panic::catch_unwind(|| {
        let mut out = std::io::stdout().lock();
        let mut err = std::io::stderr().lock();
        run_cli(std::env::args_os(), &mut out, &mut err)
    });
    let code = outcome.unwrap_or(EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
