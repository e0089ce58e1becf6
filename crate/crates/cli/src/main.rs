use clap::Parser;
use nint_cli::{Cli, CliError, ErrorReport};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match nint_cli::run(&cli, args) {
        Ok(manifest) => {
            for out in &manifest.outputs {
                println!("{}", out.path);
            }
        }
        Err(err) => {
            let report = ErrorReport::new(cli.command.name(), &err);
            let json = serde_json::to_string(&report).expect("plain report");
            eprintln!("{json}");
            write_error_file(&cli, &json);
            std::process::exit(err.exit_code());
        }
    }
}

/// Best effort: the output directory may be the thing that failed.
fn write_error_file(cli: &Cli, json: &str) {
    let dir = match (&cli.output, nint_cli::resolve_config(cli)) {
        (Some(out), _) => out.clone(),
        (None, Ok(config)) => config.paths.output,
        (None, Err(CliError::Config(_))) | (None, Err(_)) => return,
    };
    if std::fs::create_dir_all(&dir).is_ok() {
        let _ = std::fs::write(dir.join("error.json"), format!("{json}\n"));
    }
}
