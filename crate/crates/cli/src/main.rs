use std::panic;
use std::process::ExitCode;

use stochreach::{exit, run};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let code = panic::catch_unwind(|| run(&argv, &mut std::io::stdout(), &mut std::io::stderr())).unwrap_or(exit::INTERNAL);
    ExitCode::from(code as u8)
}
