use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = mnemex_cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = mnemex_cli::run(cli, &mut stdout) {
        eprintln!("mnemex: {e}");
        std::process::exit(e.code);
    }
}
