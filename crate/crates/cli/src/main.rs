mod commands;
mod config;
mod io;

use std::process::ExitCode;

use clap::Parser;
use ogp_core::OgpError;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Output(String),
    Core(OgpError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<OgpError> for CliError {
    fn from(e: OgpError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// 2 for bad inputs, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
