use fpheat::cli::{self, config};
use std::process::ExitCode;

const USAGE: &str = "\
fpheat — desk-scale laboratory for the degenerate fractional p-Laplace flow

USAGE:
    fpheat run <config>       run an experiment, write artifacts + manifest
    fpheat validate <config>  parse and validate a config, echo derived values
    fpheat report <out-dir>   summarize a finished run from its manifest

Exit codes: 0 = pass, 1 = contract failure, 2 = config/usage error.
Set FPHEAT_OUT_ROOT to redirect relative output directories.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [cmd, path] if cmd == "run" => run(path),
        [cmd, path] if cmd == "validate" => validate(path),
        [cmd, path] if cmd == "report" => report(path),
        _ => {
            eprint!("{USAGE}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &str) -> Result<config::ExperimentConfig, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {path}: {e}");
            return Err(ExitCode::from(2));
        }
    };
    match config::parse_config(&text) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
    }
}

fn run(path: &str) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match cli::run_experiment(&cfg) {
        Ok((dir, outcome)) => {
            println!(
                "{}: {} ({} outputs in {})",
                cfg.experiment.name(),
                if outcome.passed() { "pass" } else { "FAIL" },
                outcome.outputs.len(),
                dir.display()
            );
            for f in &outcome.failures {
                println!("  failure: {f}");
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn validate(path: &str) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    println!("config ok: experiment = {}", cfg.experiment.name());
    println!("  s = {}, p = {}, d = {}", cfg.params.s(), cfg.params.p(), cfg.params.d());
    println!("  q_c = {}", cfg.params.q_c());
    println!("  gamma_barrier = {}", cfg.params.gamma_barrier());
    println!("  alpha_predicted = {}", cfg.params.alpha_predicted());
    println!("  grid: half_width = {}, nodes = {}", cfg.grid.half_width, cfg.grid.nodes);
    println!("  evolve: t_end = {}, dt_policy = {}", cfg.evolve.t_end, cfg.dt_policy_raw);
    ExitCode::SUCCESS
}

fn report(path: &str) -> ExitCode {
    match cli::read_manifest(std::path::Path::new(path)) {
        Ok(man) => {
            println!(
                "{}: {}{}",
                man.experiment,
                if man.status_pass { "pass" } else { "FAIL" },
                man.wall_ms.map(|ms| format!(" ({ms} ms)")).unwrap_or_default()
            );
            for f in &man.failures {
                println!("  failure: {f}");
            }
            println!("  outputs:");
            for o in &man.outputs {
                println!("  - {o}");
            }
            if man.status_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
