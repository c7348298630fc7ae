use clap::Parser;

fn main() {
    std::process::exit(foliq::cli::run(foliq::cli::Cli::parse()));
}
