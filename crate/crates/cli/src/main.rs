mod args;
mod commands;
mod data;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use manifest::{Artifacts, Manifest, RunClock};

/// 2 for bad input, 3 when the solver could not finish.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<siol::Error>()) {
        Some(err) if !err.is_input_error() => 3,
        _ => 2,
    }
}

fn arguments(cmd: &Command) -> serde_json::Value {
    let v = match cmd {
        Command::Fit(a) => serde_json::to_value(a),
        Command::Cv(a) => serde_json::to_value(a),
        Command::Simulate(a) => serde_json::to_value(a),
        Command::Expand(a) => serde_json::to_value(a),
        Command::Screen(a) => serde_json::to_value(a),
        Command::Evaluate(a) => serde_json::to_value(a),
    };
    v.unwrap_or(serde_json::Value::Null)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = cli.command.common().clone();
    let threads = common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        log::warn!("could not size the thread pool: {e}");
    }

    let clock = RunClock::start();
    let mut art = Artifacts::new(&common.out);
    let result = std::fs::create_dir_all(&common.out)
        .map_err(|e| anyhow::Error::from(siol::Error::Io { path: common.out.clone(), source: e }))
        .and_then(|_| commands::run(&cli.command, &mut art));

    let (status, code, error, summary) = match result {
        Ok(o) if o.converged => ("ok", 0, None, o.summary),
        Ok(o) => {
            eprintln!("warning: solver did not converge within the iteration budget");
            ("not_converged", 3, None, o.summary)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = exit_code(&e);
            let status = if code == 2 { "input_error" } else { "solver_error" };
            (status, code, Some(format!("{e:#}")), serde_json::Value::Null)
        }
    };

    if common.out.is_dir() {
        let m = Manifest {
            tool: "siol",
            version: env!("CARGO_PKG_VERSION"),
            command: cli.command.name(),
            arguments: arguments(&cli.command),
            seed: common.seed,
            threads,
            inputs: art.inputs.clone(),
            outputs: art.written.clone(),
            status,
            exit_code: code,
            error,
            summary,
            started_unix: clock.unix(),
            elapsed_seconds: clock.elapsed(),
        };
        if let Err(e) = siol::io::write_json(&common.out.join("manifest.json"), &m) {
            eprintln!("error: could not write manifest: {e}");
        }
    }
    ExitCode::from(code)
}
