use clap::Parser;

fn main() {
    let cli = noon_cli::Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = noon_cli::run(cli, &mut out) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
