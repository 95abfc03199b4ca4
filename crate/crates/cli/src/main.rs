use clap::Parser;
use fluxcoh_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                if !cli.quiet {
                    println!("{}", f.display());
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
