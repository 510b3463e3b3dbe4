use clap::Parser;

fn main() {
    std::process::exit(pglo_cli::main_with(pglo_cli::Cli::parse()));
}
