use clap::Parser;

use pipea::cli::{error_json, execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    if let Ok(threads) = std::env::var("PIPEA_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                {
                    log::warn!("could not cap threads at {n}: {e}");
                }
            }
            _ => log::warn!("ignoring PIPEA_THREADS={threads:?}"),
        }
    }

    let cli = Cli::parse();
    if let Err(e) = execute(&cli) {
        eprintln!("{}", error_json(&e));
        std::process::exit(e.exit_code());
    }
}
