use clap::Parser;

fn main() {
    let cli = pentalab_core::cli::Cli::parse();
    std::process::exit(pentalab_core::cli::run(cli));
}
