use clap::Parser;

fn main() {
    let cli = linkdelay::cli::Cli::parse();
    std::process::exit(linkdelay::cli::run(&cli));
}
