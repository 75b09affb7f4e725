mod args;
mod commands;
mod record;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use curricula::ErrorCategory;
use record::{stable_outputs, RunLog, RunRecord};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Integrity(String),
    Config(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Integrity(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Integrity(m) | Failure::Config(m) => m,
        }
    }
}

impl From<curricula::Error> for Failure {
    fn from(e: curricula::Error) -> Self {
        let msg = e.to_string();
        match e.category() {
            ErrorCategory::Usage => Failure::Usage(msg),
            ErrorCategory::Integrity => Failure::Integrity(msg),
            ErrorCategory::Config => Failure::Config(msg),
        }
    }
}

fn execute(command: &Command, seed: u64, threads: usize) -> Result<RunRecord, Failure> {
    let start = Instant::now();
    let mut cmd = command.clone();
    let out = cmd.out_mut().expect("recordable command").clone();
    let mut log = RunLog::new(&out, seed)?;
    match &cmd {
        Command::Score(a) => commands::score(a, &mut log)?,
        Command::Correlate(a) => commands::correlate(a, &mut log)?,
        Command::Plan(a) => commands::plan(a, &mut log)?,
        Command::Build(a) => commands::build_cmd(a, &mut log)?,
        Command::Probe(a) => commands::probe(a, &mut log)?,
        Command::Report(a) => commands::report(a, &mut log)?,
        Command::Replay(_) => unreachable!("replay is not recorded"),
    }
    log.finish(cmd, threads, start.elapsed().as_secs_f64())
}

fn replay(a: &args::ReplayArgs, threads: usize) -> Result<(), Failure> {
    let old = RunRecord::load(&a.run)?;
    for (path, hash) in &old.inputs {
        let now = record::hash_file(std::path::Path::new(path))?;
        if &now != hash {
            return Err(Failure::Integrity(format!(
                "input {path} changed since the recorded run"
            )));
        }
    }
    let mut cmd = old.command.clone();
    if let (Some(out), Some(slot)) = (&a.out, cmd.out_mut()) {
        *slot = out.clone();
    }
    let new = execute(&cmd, old.seed, threads)?;
    let (before, after) = (stable_outputs(&old), stable_outputs(&new));
    if before != after {
        let differing: Vec<&str> = before
            .keys()
            .chain(after.keys())
            .filter(|k| before.get(*k) != after.get(*k))
            .copied()
            .collect();
        return Err(Failure::Integrity(format!(
            "replay differs in {}",
            differing.join(", ")
        )));
    }
    println!("replay of `{}` reproduced {} outputs", old.command.name(), after.len());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Replay(a) => replay(a, threads),
        cmd => execute(cmd, cli.seed, threads).map(|_| ()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("currictl: {}", f.message().replace('\n', " "));
            ExitCode::from(f.exit_code())
        }
    }
}
