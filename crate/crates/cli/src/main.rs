use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fsk_cli::{
    parse_input, parse_pairs, report_json, run, CliError, Command, ExampleName, ModeRequest,
    RunOptions, RunReport, SpecOptions,
};

#[derive(Parser)]
#[command(name = "fsk", version, about = "Truncated kernels on the free semigroup: dominance, consistency and extensions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validation, positivity and shift dominance.
    Check(Input),
    /// Kolmogorov ranks, compressed shifts and the interior density.
    Analyze(Input),
    /// Boundary operators and the shift-consistency checks.
    Consistency(Input),
    /// Extended kernel values on word pairs.
    Extend(Input),
    /// Extension checks on all test words.
    Verify(Input),
    /// Moment pipeline for measure or moment inputs.
    Hausdorff(Input),
    /// Regenerate a reference example and run it.
    Example {
        #[arg(value_parser = parse_example)]
        name: ExampleName,
        /// Run a single stage instead of the whole pipeline.
        #[arg(long, value_enum)]
        stage: Option<Stage>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Input {
    input: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Truncation depth L of the dilation (default N + 2).
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    psd_tol: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    residual_tol: Option<f64>,
    /// Longest test word for verify (default L − 1).
    #[arg(long)]
    test_len: Option<usize>,
    /// JSON list of word pairs, e.g. [[[1],[2]],[[],[]]].
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Write the JSON report here and print a summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    mode: Mode,
    /// Lift the default size guardrails.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Interior,
    Boundary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Check,
    Analyze,
    Consistency,
    Extend,
    Verify,
    Hausdorff,
}

fn parse_example(s: &str) -> Result<ExampleName, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn options(flags: &Flags) -> Result<RunOptions, CliError> {
    let pairs = match &flags.pairs {
        Some(path) => Some(parse_pairs(&read(path)?)?),
        None => None,
    };
    Ok(RunOptions {
        overrides: SpecOptions {
            depth: flags.depth,
            psd_tol: flags.psd_tol,
            rank_tol: flags.rank_tol,
            residual_tol: flags.residual_tol,
            test_len: flags.test_len,
            allow_large: flags.allow_large.then_some(true),
        },
        pairs,
        mode: match flags.mode {
            Mode::Auto => ModeRequest::Auto,
            Mode::Interior => ModeRequest::Interior,
            Mode::Boundary => ModeRequest::Boundary,
        },
    })
}

fn summary(report: &RunReport) -> String {
    let mut lines = vec![format!("command: {}", report.command)];
    if let Some(c) = &report.check {
        lines.push(format!(
            "check: pd min eig {:e}, dominance min eig {:e} (tolerance {:e}) -> {}",
            c.dominance.pd_full.min_eig,
            c.dominance.dominance.min_eig,
            c.dominance.dominance.tolerance,
            if c.passes { "dominated" } else { "not dominated" }
        ));
    }
    if let Some(a) = &report.analysis {
        lines.push(format!(
            "analyze: graded ranks {:?}, lambda_max(A) {:e}",
            a.graded_ranks, a.density.lambda_max
        ));
    }
    if let Some(c) = &report.consistency {
        lines.push(format!(
            "consistency: {} ({} violations, max b3 deviation {:e})",
            if c.feasible { "feasible" } else { "infeasible" },
            c.violations.len(),
            c.b3.magnitude
        ));
    }
    if let Some(e) = &report.extension {
        lines.push(format!(
            "extend: {} values in {:?} mode at depth {}",
            e.values.len(),
            e.mode,
            e.depth
        ));
    }
    if let Some(v) = &report.verification {
        lines.push(format!(
            "verify: e1 {:e}, e3 {}, e2 min eig {:e} -> {}",
            v.report.e1_max_dev.value,
            v.report
                .e3_max_dev
                .map_or("n/a".to_string(), |j| format!("{:e}", j.value)),
            v.report.e2.min_eig,
            if v.passes { "pass" } else { "fail" }
        ));
    }
    if let Some(h) = &report.hausdorff {
        lines.push(format!(
            "hausdorff: completely monotone {}, dominated {} -> {}",
            h.monotone.ok,
            h.dominance.passes(),
            if h.passes { "pass" } else { "fail" }
        ));
    }
    if let Some(e) = &report.stage_error {
        lines.push(format!("error in {}: {}", e.stage, e.reason));
    }
    lines.push(format!("exit status: {}", report.exit_status));
    lines.join("\n")
}

fn execute(cli: Cli) -> Result<(RunReport, Option<PathBuf>), CliError> {
    let (spec, command, flags) = match cli.command {
        Cmd::Check(i) => (parse_input(&read(&i.input)?)?, Command::Check, i.flags),
        Cmd::Analyze(i) => (parse_input(&read(&i.input)?)?, Command::Analyze, i.flags),
        Cmd::Consistency(i) => (parse_input(&read(&i.input)?)?, Command::Consistency, i.flags),
        Cmd::Extend(i) => (parse_input(&read(&i.input)?)?, Command::Extend, i.flags),
        Cmd::Verify(i) => (parse_input(&read(&i.input)?)?, Command::Verify, i.flags),
        Cmd::Hausdorff(i) => (parse_input(&read(&i.input)?)?, Command::Hausdorff, i.flags),
        Cmd::Example { name, stage, flags } => {
            let command = match stage {
                None => Command::Pipeline,
                Some(Stage::Check) => Command::Check,
                Some(Stage::Analyze) => Command::Analyze,
                Some(Stage::Consistency) => Command::Consistency,
                Some(Stage::Extend) => Command::Extend,
                Some(Stage::Verify) => Command::Verify,
                Some(Stage::Hausdorff) => Command::Hausdorff,
            };
            (name.spec(), command, flags)
        }
    };
    let opts = options(&flags)?;
    Ok((run(&spec, command, &opts), flags.out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok((report, out)) => {
            let json = report_json(&report);
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &json) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    println!("{}", summary(&report));
                }
                None => print!("{json}"),
            }
            ExitCode::from(report.exit_status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
