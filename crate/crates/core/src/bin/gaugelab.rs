use clap::Parser;
use gaugelab::cli::{init_logging, main_with, Cli};

fn main() {
    init_logging();
    std::process::exit(main_with(Cli::parse()));
}
