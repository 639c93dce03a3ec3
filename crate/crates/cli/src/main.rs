use clap::Parser;

fn main() {
    let cli = smallp_cli::args::Cli::parse();
    if let Err(e) = smallp_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
