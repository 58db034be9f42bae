//! Batch front end for `fsk-core`.
//!
//! A run reads one JSON problem file, executes the stages a command needs and
//! returns a [`RunReport`]. Exit codes: 0 when every check passes, 1 when the
//! mathematics says no (dominance fails in `check`, consistency is
//! infeasible, an extension check fails), 2 when the input is unusable or a
//! stage precondition was not met.

mod pipeline;
pub mod spec;

use std::fmt;

use fsk_core::fixtures;
use fsk_core::hausdorff::{moments, AtomicMeasure};
use serde::Serialize;
use thiserror::Error;

pub use pipeline::{
    run, AnalysisStage, CheckStage, ConsistencyStage, DensityStage, ExtendStage, ExtensionValue,
    HausdorffStage, Recovery, RunReport, StageError, VerifyStage,
};
pub use spec::{parse_input, ProblemSpec, SpecOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("guardrail: {0} (set allow_large to override)")]
    Guardrail(String),
    #[error(transparent)]
    Core(#[from] fsk_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_status(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    Analyze,
    Consistency,
    Extend,
    Verify,
    Hausdorff,
    /// Every stage that applies to the input.
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Analyze => "analyze",
            Command::Consistency => "consistency",
            Command::Extend => "extend",
            Command::Verify => "verify",
            Command::Hausdorff => "hausdorff",
            Command::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the boundary of the kernel is treated by `extend` and `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeRequest {
    /// Boundary mode when consistency is feasible, interior mode otherwise.
    Auto,
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub overrides: SpecOptions,
    pub pairs: Option<Vec<(fsk_core::Word, fsk_core::Word)>>,
    pub mode: ModeRequest,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            overrides: SpecOptions::default(),
            pairs: None,
            mode: ModeRequest::Auto,
        }
    }
}

/// Parses a pairs file: `[[[1], [2]], [[], [1, 1]]]`.
pub fn parse_pairs(document: &str) -> Result<Vec<(fsk_core::Word, fsk_core::Word)>, CliError> {
    let raw: Vec<(Vec<usize>, Vec<usize>)> =
        serde_json::from_str(document).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(raw
        .into_iter()
        .map(|(a, b)| (fsk_core::Word::from_letters(a), fsk_core::Word::from_letters(b)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleName {
    D1,
    D2,
    DeltaHalf,
}

impl ExampleName {
    pub const ALL: [ExampleName; 3] = [ExampleName::D1, ExampleName::D2, ExampleName::DeltaHalf];

    pub fn file_name(self) -> &'static str {
        match self {
            ExampleName::D1 => "example_d1.json",
            ExampleName::D2 => "example_d2.json",
            ExampleName::DeltaHalf => "delta_half.json",
        }
    }

    /// The problem spec rebuilt from its defining data.
    pub fn spec(self) -> ProblemSpec {
        match self {
            ExampleName::D1 => ProblemSpec::from_kernel(&fixtures::example_d1()),
            ExampleName::D2 => ProblemSpec::from_kernel(&fixtures::example_d2()),
            ExampleName::DeltaHalf => {
                let mu = AtomicMeasure::new(vec![(0.5, 1.0)]).expect("valid measure");
                ProblemSpec::Moments(spec::MomentsSpec {
                    s: moments(&mu, 4).0,
                    level: Some(2),
                    options: SpecOptions::default(),
                })
            }
        }
    }
}

impl std::str::FromStr for ExampleName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "d1" => Ok(ExampleName::D1),
            "d2" => Ok(ExampleName::D2),
            "delta-half" => Ok(ExampleName::DeltaHalf),
            other => Err(CliError::Input(format!(
                "unknown example {other:?}; expected d1, d2 or delta-half"
            ))),
        }
    }
}

/// Deterministic pretty JSON with a trailing newline.
pub fn report_json(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}
