//! Command-line front end.
//!
//! ```text
//! qmud run        --config s.json [--trials N] [--seed S] [--out r.csv]
//! qmud sweep      --config s.json --param noise_sigma --values 0,0.1 [--trials N] [--seed S] [--out r.csv]
//! qmud povm-table --ns 1,2,4 --beta 0,0.5,1 [--out t.csv]
//! ```
//!
//! Exit codes: 0 on success, 1 for usage, configuration or validation
//! errors, 2 for failures while running.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

use crate::cdma::{Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::harness::{self, DetectorSet, MetricsReport, SweepParameter};
use crate::povm;
use crate::registers::QubitState;

/// Results CSV header.
pub const CSV_HEADER: &str = "scenario_id,detector,param_name,param_value,trials,bit_errors,ber,correct,no_message,ambiguous,inconclusive,coverage_miss,mean_reps,seed";
/// Analytic POVM table header.
pub const POVM_TABLE_HEADER: &str =
    "n_s,beta,alpha,eta1_p1,eta1_p2,eta1_p3,eta2_p1,eta2_p2,eta2_p3";

const DEFAULT_TRIALS: u64 = 1000;
const DEFAULT_POPULATIONS: [usize; 5] = [1, 2, 4, 16, 256];

#[derive(Debug, Parser)]
#[command(
    name = "qmud",
    about = "Quantum-assisted multi-user detection simulator for DS-CDMA"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one Monte Carlo experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Repeat the experiment over a list of values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// One of noise_sigma, reps_max, gamma, N_ch.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Analytic outcome probabilities on a (N_s, beta) grid. Defaults to
    /// N_s in {1, 2, 4, 16, 256} and beta in {0, 0.1, ..., 1}.
    PovmTable {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        beta: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses and validates a scenario document. Rescaling warnings go to the
/// log.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let (scenario, warnings) = Scenario::from_config(&config)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(scenario)
}

/// Pretty JSON document for `scenario`.
pub fn write_config(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&scenario.to_config()).expect("scenario config serializes")
}

/// Six significant digits, `%g` style: trailing zeros dropped, scientific
/// notation outside `[1e-4, 1e6)`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV text: one row per classical detector and one `qmud` row per report.
///
/// For `qmud` rows `bit_errors` counts every wrong-bit verdict, including
/// those of users whose state fell outside the true-bit register.
pub fn render_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let decisions = r.decisions();
        let (param_name, param_value) = match r.param {
            Some((p, v)) => (p.name().to_string(), format_sig6(v)),
            None => ("none".to_string(), String::new()),
        };
        let ratio = |n: u64| format_sig6(n as f64 / decisions as f64);
        for t in &r.detectors {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},0,0,0,0,0,{}",
                r.scenario_id,
                t.kind.name(),
                param_name,
                param_value,
                r.trials,
                t.bit_errors,
                ratio(t.bit_errors),
                decisions - t.bit_errors,
                r.seed
            );
        }
        if let Some(q) = &r.qmud {
            let errors = q.false_decisions + q.miss_bit_errors;
            let _ = writeln!(
                out,
                "{},qmud,{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario_id,
                param_name,
                param_value,
                r.trials,
                errors,
                ratio(errors),
                q.correct,
                q.no_message,
                q.ambiguous,
                q.inconclusive,
                q.coverage_miss,
                ratio(q.reps_total),
                r.seed
            );
        }
    }
    out
}

pub fn write_csv(reports: &[MetricsReport], out_path: &Path) -> Result<()> {
    fs::write(out_path, render_csv(reports))?;
    Ok(())
}

/// Analytic `(p1, p2, p3)` under the absent and present states for every
/// grid point, with `alpha` on the positivity boundary.
pub fn povm_table(populations: &[usize], betas: &[f64]) -> Result<String> {
    let mut out = String::from(POVM_TABLE_HEADER);
    out.push('\n');
    for &n in populations {
        if n == 0 {
            return Err(Error::validation("ns", "register populations must be >= 1"));
        }
        for &beta in betas {
            let alpha = povm::solve_alpha_for_beta(beta, n)
                .map_err(|e| Error::validation("beta", e.to_string()))?;
            let triple = povm::build_povm(alpha, beta, n)?;
            let absent = povm::outcome_probabilities(&triple, &QubitState::ABSENT);
            let present = povm::outcome_probabilities(&triple, &QubitState::present(n));
            let cells = [
                alpha, absent.p1, absent.p2, absent.p3, present.p1, present.p2, present.p3,
            ];
            let _ = write!(out, "{n},{}", format_sig6(beta));
            for c in cells {
                let _ = write!(out, ",{}", format_sig6(c));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::validation("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn summary(reports: &[MetricsReport]) -> String {
    let rows: usize = reports
        .iter()
        .map(|r| r.detectors.len() + usize::from(r.qmud.is_some()))
        .sum();
    let mut line = format!("{} report(s), {rows} row(s)", reports.len());
    if let Some(q) = reports.last().and_then(|r| r.qmud.as_ref()) {
        let _ = write!(
            line,
            "; last qmud: correct={} false={} inconclusive={} ambiguous={} coverage_miss={}",
            q.correct, q.false_decisions, q.inconclusive, q.ambiguous, q.coverage_miss
        );
    }
    line
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            out,
            trials,
            seed,
        } => {
            let scenario = load_scenario(&config)?;
            let seed = seed.unwrap_or(scenario.seed());
            let trials = trials.unwrap_or(DEFAULT_TRIALS);
            let report = harness::run_trials(&scenario, &DetectorSet::all(), trials, seed)?;
            let reports = [report];
            emit(&render_csv(&reports), out.as_deref())?;
            eprintln!("{}", summary(&reports));
        }
        Command::Sweep {
            config,
            out,
            trials,
            seed,
            param,
            values,
        } => {
            let scenario = load_scenario(&config)?;
            let parameter: SweepParameter = param.parse()?;
            let seed = seed.unwrap_or(scenario.seed());
            let trials = trials.unwrap_or(DEFAULT_TRIALS);
            // Validate every point before spending time on any of them.
            for &v in &values {
                parameter.apply(&scenario, v)?;
            }
            let reports = harness::sweep(
                &scenario,
                parameter,
                &values,
                &DetectorSet::all(),
                trials,
                seed,
            )?;
            emit(&render_csv(&reports), out.as_deref())?;
            eprintln!("{}", summary(&reports));
        }
        Command::PovmTable { ns, beta, out } => {
            let ns = if ns.is_empty() { DEFAULT_POPULATIONS.to_vec() } else { ns };
            let beta = if beta.is_empty() {
                (0..=10).map(|i| f64::from(i) / 10.0).collect()
            } else {
                beta
            };
            emit(&povm_table(&ns, &beta)?, out.as_deref())?;
        }
    }
    Ok(())
}

/// Entry point; returns the process exit code.
pub fn main(argv: &[String]) -> i32 {
    if argv.len() <= 1 {
        eprintln!("{}", CliConfig::command().render_long_help());
        return 1;
    }
    let cli = match CliConfig::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                1
            } else {
                2
            }
        }
    }
}
