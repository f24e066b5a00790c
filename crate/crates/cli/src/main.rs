use clap::Parser;

fn main() {
    let cli = holodisk_cli::Cli::parse();
    match holodisk_cli::run(&cli) {
        Ok(summary) => print!("{summary}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
