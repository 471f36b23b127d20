use clap::Parser;

fn main() {
    let cli = selfsim_cli::Cli::parse();
    std::process::exit(selfsim_cli::run(cli));
}
