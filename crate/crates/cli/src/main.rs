use clap::Parser;

fn main() {
    std::process::exit(qdsim_cli::main_with(qdsim_cli::Cli::parse()));
}
