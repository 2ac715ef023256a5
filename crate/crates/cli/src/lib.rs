//! Library side of the `spectra-lab` binary: config ingestion and the six
//! subcommand pipelines. Every run is a pure function of config and seed.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_for, ConfigError, RunConfig, Violation, ViolationKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Zones,
    Gauge,
    Heat,
    Bloch,
    Compare,
    Validate,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Zones, Command::Gauge, Command::Heat, Command::Bloch, Command::Compare, Command::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Command::Zones => "zones",
            Command::Gauge => "gauge",
            Command::Heat => "heat",
            Command::Bloch => "bloch",
            Command::Compare => "compare",
            Command::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Commands that run the plane-wave oracle.
    pub fn needs_oracle(self) -> bool {
        matches!(self, Command::Bloch | Command::Compare | Command::Validate)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output directory; overrides `output.dir`.
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Parses the config for `cmd` and runs it; config problems map to exit 2.
pub fn run(cmd: Command, config_path: &Path, opts: &RunOptions) -> Outcome {
    match parse_config_for(config_path, Some(cmd)) {
        Ok(cfg) => dispatch(cmd, &cfg, opts),
        Err(e) => Outcome { exit_code: EXIT_CONFIG, files: vec![], summary: e.to_string() },
    }
}

pub fn dispatch(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Outcome {
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let seed = opts.seed.unwrap_or(cfg.seed);
    let res = match cmd {
        Command::Zones => commands::zones(cfg, seed, &dir),
        Command::Gauge => commands::gauge(cfg, seed, &dir),
        Command::Heat => commands::heat(cfg, &dir),
        Command::Bloch => commands::bloch(cfg, &dir),
        Command::Compare => commands::compare(cfg, &dir),
        Command::Validate => commands::validate(cfg, seed, &dir),
    };
    match res {
        Ok(r) => Outcome {
            exit_code: if r.passed { EXIT_OK } else { EXIT_CHECK_FAILED },
            files: r.files,
            summary: r.summary,
        },
        Err(commands::RunError::Core(e)) => Outcome { exit_code: EXIT_CHECK_FAILED, files: vec![], summary: e.to_string() },
        Err(commands::RunError::Io(e)) => Outcome { exit_code: EXIT_CHECK_FAILED, files: vec![], summary: e.to_string() },
    }
}
