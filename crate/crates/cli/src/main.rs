use clap::Parser;
use keyrate_cli::commands::{emit, run, Cli};

fn main() {
    let code = emit(&run(Cli::parse()));
    std::process::exit(code);
}
