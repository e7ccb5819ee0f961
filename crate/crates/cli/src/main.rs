use clap::{CommandFactory, Parser};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match zml_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", zml_cli::Cli::command().render_usage());
            std::process::exit(zml_cli::EXIT_CONFIG);
        }
        Err(e) => e.exit(),
    };
    std::process::exit(zml_cli::execute(cli));
}
