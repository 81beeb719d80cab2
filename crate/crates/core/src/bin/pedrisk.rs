use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = pedrisk::cli::Cli::parse();
    if let Err(f) = pedrisk::cli::run(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}
