use clap::Parser;

fn main() {
    let cli = aldar_cli::Cli::parse();
    if let Err(e) = aldar_cli::run(cli) {
        eprintln!("aldar: {e}");
        std::process::exit(e.exit_code());
    }
}
