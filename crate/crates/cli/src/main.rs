use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use wcopula_cli::commands::{
    self, COMPARE_KEYS, DEPCURVES_KEYS, FIT_KEYS, PROBS_KEYS, SIMULATE_KEYS, TRANSFORM_KEYS,
};
use wcopula_cli::config::{add_keys, Key, Settings};
use wcopula_cli::error::CliError;
use wcopula_cli::study::{self, STUDY_KEYS};

type Handler = fn(&Settings) -> Result<(), CliError>;

const COMMANDS: [(&str, &str, &[Key], Handler); 7] = [
    ("simulate", "draw pseudo-observations from a copula or blend", &SIMULATE_KEYS, commands::simulate),
    ("fit", "maximum-likelihood fit of one model to pseudo-observations", &FIT_KEYS, commands::fit),
    ("compare", "fit several models and rank them by AIC", &COMPARE_KEYS, commands::compare),
    ("depcurves", "chi(r) and eta(r) curves of a model or of data", &DEPCURVES_KEYS, commands::depcurves),
    ("transform-margins", "map raw data to the unit square with GPD-tailed margins", &TRANSFORM_KEYS, commands::transform_margins),
    ("probs", "joint and conditional region probabilities with bootstrap bands", &PROBS_KEYS, commands::probs),
    ("study", "simulation study of recovery and misspecification", &STUDY_KEYS, study::study),
];

fn cli() -> Command {
    let mut cmd = Command::new("wcop")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Weighted blends of bivariate copulas")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("threads").long("threads").global(true).value_name("N").help("worker threads"));
    for (name, about, keys, _) in COMMANDS {
        cmd = cmd.subcommand(add_keys(Command::new(name).about(about), keys));
    }
    cmd
}

fn run(m: &ArgMatches) -> Result<(), CliError> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    if let Some(t) = sub.get_one::<String>("threads") {
        let n: usize = t.parse().map_err(|_| CliError::Usage(format!("--threads expects a positive integer, got `{t}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let (cmd, _, keys, handler) = COMMANDS.iter().find(|c| c.0 == name).expect("registered subcommand");
    let settings = Settings::resolve(cmd, keys, sub)?;
    handler(&settings)
}

fn main() -> ExitCode {
    let m = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&m) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
