use clap::Parser;
use regen_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli.command) {
        eprintln!("regen: {e}");
        std::process::exit(e.exit_code());
    }
}
