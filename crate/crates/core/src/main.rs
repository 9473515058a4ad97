use shlide::frontend::cli::run_cli;
use std::io;

fn main() {
    let code = run_cli(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
