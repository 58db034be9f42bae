//! Problem files: JSON in, validated specs out.

use fsk_core::hausdorff::{hankel_kernel, AtomicMeasure, MomentSequence};
use fsk_core::kernel::{validate_kernel, KernelEntry, RawKernel, ValidationReport};
use fsk_core::words::lambda_count;
use fsk_core::{CMat, ToleranceConfig, TruncatedKernel, Word, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MAX_D: usize = 4;
pub const MAX_LEVEL: usize = 6;
pub const MAX_DEPTH: usize = 12;
/// Level used for measure specs that do not name one.
pub const DEFAULT_MEASURE_LEVEL: usize = 2;

/// A complex scalar written as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex(pub f64, pub f64);

/// Row-major `dim_h × dim_h` block.
pub type Block = Vec<Vec<Complex>>;

pub fn block_from_matrix(m: &CMat) -> Block {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Complex(m[(i, j)].re, m[(i, j)].im)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrySpec {
    pub row: Vec<usize>,
    pub col: Vec<usize>,
    pub block: Block,
}

/// Run options that may be stored in the problem file; command-line flags
/// take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    /// Longest test word used by `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_large: Option<bool>,
}

impl SpecOptions {
    fn is_empty(&self) -> bool {
        *self == SpecOptions::default()
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(&self, over: &SpecOptions) -> SpecOptions {
        SpecOptions {
            depth: over.depth.or(self.depth),
            psd_tol: over.psd_tol.or(self.psd_tol),
            rank_tol: over.rank_tol.or(self.rank_tol),
            residual_tol: over.residual_tol.or(self.residual_tol),
            test_len: over.test_len.or(self.test_len),
            allow_large: over.allow_large.or(self.allow_large),
        }
    }

    pub fn tolerances(&self) -> Result<ToleranceConfig, CliError> {
        let base = ToleranceConfig::default();
        let cfg = ToleranceConfig {
            psd_tol: self.psd_tol.unwrap_or(base.psd_tol),
            rank_tol: self.rank_tol.unwrap_or(base.rank_tol),
            residual_tol: self.residual_tol.unwrap_or(base.residual_tol),
        };
        cfg.validate().map_err(CliError::Core)?;
        Ok(cfg)
    }

    pub fn allow_large(&self) -> bool {
        self.allow_large.unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub d: usize,
    #[serde(rename = "N")]
    pub level: usize,
    pub dim_h: usize,
    pub entries: Vec<EntrySpec>,
    #[serde(default, skip_serializing_if = "SpecOptions::is_empty")]
    pub options: SpecOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub atoms: Vec<AtomSpec>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "SpecOptions::is_empty")]
    pub options: SpecOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSpec {
    pub s: Vec<f64>,
    /// Defaults to the largest level the moments support.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "SpecOptions::is_empty")]
    pub options: SpecOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSpec {
    Kernel(KernelSpec),
    Measure(MeasureSpec),
    Moments(MomentsSpec),
}

impl ProblemSpec {
    pub fn options(&self) -> &SpecOptions {
        match self {
            ProblemSpec::Kernel(k) => &k.options,
            ProblemSpec::Measure(m) => &m.options,
            ProblemSpec::Moments(m) => &m.options,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Kernel(_) => "kernel",
            ProblemSpec::Measure(_) => "measure",
            ProblemSpec::Moments(_) => "moments",
        }
    }

    /// `(d, N)` of the kernel this spec describes.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ProblemSpec::Kernel(k) => (k.d, k.level),
            ProblemSpec::Measure(m) => (1, m.level.unwrap_or(DEFAULT_MEASURE_LEVEL)),
            ProblemSpec::Moments(m) => (1, moments_level(m)),
        }
    }

    pub fn measure(&self) -> Result<Option<AtomicMeasure>, CliError> {
        match self {
            ProblemSpec::Measure(m) => AtomicMeasure::new(m.atoms.iter().map(|a| (a.x, a.w)).collect())
                .map(Some)
                .map_err(CliError::Core),
            _ => Ok(None),
        }
    }

    /// Moment sequence `s₀..s_{2N}` for measure and moment specs.
    pub fn moment_sequence(&self) -> Result<Option<MomentSequence>, CliError> {
        match self {
            ProblemSpec::Kernel(_) => Ok(None),
            ProblemSpec::Measure(_) => {
                let mu = self.measure()?.expect("measure spec");
                Ok(Some(fsk_core::hausdorff::moments(&mu, 2 * self.shape().1)))
            }
            ProblemSpec::Moments(m) => Ok(Some(MomentSequence(m.s.clone()))),
        }
    }

    /// The kernel to analyze: the given one, or the Hankel kernel of the moments.
    pub fn kernel(&self) -> Result<(TruncatedKernel, ValidationReport), CliError> {
        match self {
            ProblemSpec::Kernel(k) => validate_kernel(&raw_kernel(k)?).map_err(CliError::Core),
            _ => {
                let s = self.moment_sequence()?.expect("moment-based spec");
                let k = hankel_kernel(&s, self.shape().1).map_err(CliError::Core)?;
                let raw = RawKernel {
                    d: 1,
                    level: k.level(),
                    dim_h: 1,
                    entries: k
                        .entries()
                        .map(|(a, b, block)| KernelEntry {
                            row: a.clone(),
                            col: b.clone(),
                            block: block.clone(),
                        })
                        .collect(),
                };
                validate_kernel(&raw).map_err(CliError::Core)
            }
        }
    }

    /// Canonical kernel spec holding the entries `α ≤ β` of `k`.
    pub fn from_kernel(k: &TruncatedKernel) -> ProblemSpec {
        ProblemSpec::Kernel(KernelSpec {
            d: k.d(),
            level: k.level(),
            dim_h: k.dim_h(),
            entries: k
                .upper_entries()
                .into_iter()
                .map(|((a, b), block)| EntrySpec {
                    row: a.letters().to_vec(),
                    col: b.letters().to_vec(),
                    block: block_from_matrix(&block),
                })
                .collect(),
            options: SpecOptions::default(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("spec serializes");
        text.push('\n');
        text
    }
}

fn moments_level(m: &MomentsSpec) -> usize {
    m.level.unwrap_or(m.s.len().saturating_sub(1) / 2)
}

fn raw_kernel(k: &KernelSpec) -> Result<RawKernel, CliError> {
    let mut entries = Vec::with_capacity(k.entries.len());
    for e in &k.entries {
        let bad_shape = || {
            CliError::Input(format!(
                "block for ({:?}, {:?}) is not {}×{}",
                e.row, e.col, k.dim_h, k.dim_h
            ))
        };
        if e.block.len() != k.dim_h {
            return Err(bad_shape());
        }
        let mut block = CMat::zeros(k.dim_h, k.dim_h);
        for (i, row) in e.block.iter().enumerate() {
            if row.len() != k.dim_h {
                return Err(bad_shape());
            }
            for (j, z) in row.iter().enumerate() {
                block[(i, j)] = C64::new(z.0, z.1);
            }
        }
        entries.push(KernelEntry {
            row: Word::new(e.row.clone(), k.d).map_err(CliError::Core)?,
            col: Word::new(e.col.clone(), k.d).map_err(CliError::Core)?,
            block,
        });
    }
    Ok(RawKernel {
        d: k.d,
        level: k.level,
        dim_h: k.dim_h,
        entries,
    })
}

/// Rejects specs outside the default size limits unless `allow_large` is set.
pub fn check_guardrails(spec: &ProblemSpec, options: &SpecOptions) -> Result<(), CliError> {
    if options.allow_large() {
        return Ok(());
    }
    let (d, level) = spec.shape();
    if d > MAX_D {
        return Err(CliError::Guardrail(format!("d = {d} exceeds {MAX_D}")));
    }
    if level > MAX_LEVEL {
        return Err(CliError::Guardrail(format!("N = {level} exceeds {MAX_LEVEL}")));
    }
    if let Some(depth) = options.depth {
        if depth > MAX_DEPTH {
            return Err(CliError::Guardrail(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
    }
    Ok(())
}

/// Parses and fully validates a problem file.
pub fn parse_input(document: &str) -> Result<ProblemSpec, CliError> {
    let spec: ProblemSpec =
        serde_json::from_str(document).map_err(|e| CliError::Input(e.to_string()))?;
    check_guardrails(&spec, spec.options())?;
    spec.options().tolerances()?;
    match &spec {
        ProblemSpec::Kernel(k) => {
            if k.d == 0 {
                return Err(CliError::Core(fsk_core::Error::ZeroAlphabet));
            }
            lambda_count(k.d, k.level).map_err(CliError::Core)?;
        }
        ProblemSpec::Measure(_) => {
            spec.measure()?;
        }
        ProblemSpec::Moments(m) => {
            if m.s.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Input("moments must be finite".into()));
            }
            if m.s.is_empty() {
                return Err(CliError::Input("at least one moment is required".into()));
            }
        }
    }
    spec.kernel()?;
    Ok(spec)
}
