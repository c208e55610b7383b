use clap::Parser;

fn main() {
    let cli = slem_cli::Cli::parse();
    if let Err(e) = slem_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
