use clap::Parser;

fn main() {
    let cli = kicomp::cli::Cli::parse();
    std::process::exit(kicomp::cli::run(cli));
}
