use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use colombeau_cli::{run, Command, Invocation};

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Val,
    Wf,
    Hs,
    Bichar,
    Symbol,
    Prop,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Val => Command::Val,
            Cmd::Wf => Command::Wf,
            Cmd::Hs => Command::Hs,
            Cmd::Bichar => Command::Bichar,
            Cmd::Symbol => Command::Symbol,
            Cmd::Prop => Command::Prop,
        }
    }
}

/// Numerical experiments with Colombeau generalized functions.
#[derive(Parser)]
#[command(name = "colombeau", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Exit with 4 when an expectation in the config fails.
    #[arg(long)]
    check: bool,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `jobs` in the config.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let inv = Invocation {
        command: args.command.into(),
        config: args.config,
        check: args.check,
        out: args.out,
        jobs: args.jobs,
    };
    match run(&inv) {
        Ok(o) => {
            for c in &o.checks {
                println!(
                    "{} {}: {}",
                    if c.pass { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if let Some(g) = &o.guard {
                eprintln!("guard: {g}");
            }
            println!("wrote {}", o.out_dir.display());
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
