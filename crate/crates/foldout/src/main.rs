use clap::Parser;

fn main() {
    let cli = foldout::cli::Cli::parse();
    std::process::exit(foldout::cli::run(cli));
}
