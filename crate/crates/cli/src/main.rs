use std::io::Write;

use clap::Parser;

use powerspec_cli::{exit_code, run, Cli, ErrorReport, EXIT_ERROR};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                std::process::exit(0);
            }
            let doc = ErrorReport {
                command: std::env::args().nth(1).unwrap_or_default(),
                error: e.kind().to_string(),
            };
            emit(&serde_json::to_string_pretty(&doc).expect("plain strings serialize"));
            std::process::exit(EXIT_ERROR);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    let name = cli.command.name();
    let code = match run(&cli.command) {
        Ok(report) => {
            emit(&report.to_json());
            exit_code(&report)
        }
        Err(e) => {
            log::error!("{e:#}");
            let doc = ErrorReport {
                command: name.to_string(),
                error: format!("{e:#}"),
            };
            emit(&serde_json::to_string_pretty(&doc).expect("plain strings serialize"));
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}

/// Prints the report; a reader that closed the pipe early is not an error.
fn emit(doc: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{doc}").and_then(|_| out.flush());
}
