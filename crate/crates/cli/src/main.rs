use clap::Parser;
use fraglog_cli::args::Cli;
use fraglog_cli::{commands, CliError, RunConfig};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let result = commands::run(cfg, &mut out);
    out.flush()?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command.into_config().and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fraglog: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
