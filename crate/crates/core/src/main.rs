use clap::Parser;

fn main() {
    let cli = ringbaw::cli::Cli::parse();
    std::process::exit(ringbaw::cli::run(&cli));
}
