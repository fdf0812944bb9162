use clap::Parser;

use bergman_lab::cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
