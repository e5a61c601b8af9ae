use clap::Parser;

fn main() {
    let cli = bellscope_cli::Cli::parse();
    std::process::exit(bellscope_cli::run(&cli));
}
