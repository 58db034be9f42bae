use fsk_core::consistency::{solve_boundary_shifts, ConsistencyReport, FamilyMax, RowContraction, Violation};
use fsk_core::dilation::{
    build_dilation, extend_kernel, verify_extension, DilationInvariants, ExtensionMode,
    ExtensionReport, Judged, TruncatedDilation, EXTENSION_TOL,
};
use fsk_core::hausdorff::{check_complete_monotone, MonotoneCheck};
use fsk_core::kernel::{check_dominance, gram_level, shifted_kernel, DominanceReport, ValidationReport};
use fsk_core::kolmogorov::{
    build_space, compressed_shifts, interior_density, KolmogorovSpace, ShiftSystem, IDENTITY_TOL,
};
use fsk_core::words::enumerate_words;
use fsk_core::{ToleranceConfig, TruncatedKernel, Word};
use serde::Serialize;

use crate::spec::{block_from_matrix, check_guardrails, Block, ProblemSpec, SpecOptions};
use crate::{Command, ModeRequest, RunOptions};

/// Matrices up to this size are copied into reports.
const MAX_REPORTED_GRAM: usize = 64;
/// Default bound on the dilation space dimension.
const MAX_DILATION_DIM: usize = 2_000_000;
/// Default bound on the size of the test-word Gram matrix in `verify`.
const MAX_TEST_GRAM: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageError {
    pub stage: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckStage {
    pub dominance: DominanceReport,
    /// `Gram(K, Λ_{N−1})`, when small.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior_gram: Option<Block>,
    /// `Gram(K_Σ, Λ_{N−1})`, when small.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted_gram: Option<Block>,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStage {
    /// Eigenvalues of `A_{N−1} = Σ B_i* B_i`, ascending.
    pub spectrum: Vec<f64>,
    pub lambda_max: f64,
    /// `A_{N−1} ≤ I` is accepted up to `1 + lambda_tolerance`.
    pub lambda_tolerance: f64,
    /// `max ‖V_α* A V_β − K_Σ(α, β)‖_F` on `Λ_{N−2}`.
    pub identity_deviation: f64,
    pub identity_tolerance: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisStage {
    pub rank: usize,
    pub graded_ranks: Vec<usize>,
    pub rank_tolerance: f64,
    pub gram_scale: f64,
    /// Singular values of each `B_i`, descending.
    pub shift_singular_values: Vec<Vec<f64>>,
    pub density: DensityStage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyStage {
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub b2: FamilyMax,
    pub anchors: FamilyMax,
    pub b3: FamilyMax,
    pub contraction: RowContraction,
    pub compression: FamilyMax,
}

impl From<&ConsistencyReport> for ConsistencyStage {
    fn from(r: &ConsistencyReport) -> Self {
        ConsistencyStage {
            feasible: r.feasible,
            violations: r.violations.clone(),
            b2: r.b2.clone(),
            anchors: r.anchors.clone(),
            b3: r.b3.clone(),
            contraction: r.contraction,
            compression: r.compression.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionValue {
    pub row: Word,
    pub col: Word,
    pub block: Block,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtendStage {
    pub mode: ExtensionMode,
    pub requested: ModeRequest,
    /// Boundary mode was requested but consistency is infeasible.
    pub fallback: bool,
    pub depth: usize,
    pub invariants: DilationInvariants,
    pub values: Vec<ExtensionValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyStage {
    pub requested: ModeRequest,
    pub invariants: DilationInvariants,
    pub report: ExtensionReport,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    /// `max |K̃(m, n) − s_{m+n}|` for `m, n ≤ N−1`.
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffStage {
    pub moments: Vec<f64>,
    pub level: usize,
    pub monotone: MonotoneCheck,
    pub dominance: DominanceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery: Option<Recovery>,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub input_kind: &'static str,
    pub tolerances: ToleranceConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtendStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifyStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<HausdorffStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage_error: Option<StageError>,
    pub exit_status: i32,
}

type StageResult<T> = std::result::Result<T, StageError>;

fn fail(stage: &'static str) -> impl Fn(fsk_core::Error) -> StageError {
    move |e| StageError {
        stage,
        reason: e.to_string(),
    }
}

fn small_block(k: &TruncatedKernel, level: usize) -> StageResult<Option<Block>> {
    let g = gram_level(k, level).map_err(fail("check"))?;
    Ok((g.dim() <= MAX_REPORTED_GRAM).then(|| block_from_matrix(g.matrix())))
}

fn dilation_dim(d: usize, r: usize, depth: usize) -> Option<usize> {
    let mut total = r;
    let mut words = 1usize;
    for _ in 0..depth {
        total = total.checked_add(words.checked_mul(d)?.checked_mul(r)?)?;
        words = words.checked_mul(d)?;
    }
    Some(total)
}

/// Lazily computed stages shared by the commands of one run.
struct Session<'a> {
    spec: &'a ProblemSpec,
    options: SpecOptions,
    pairs: Option<Vec<(Word, Word)>>,
    cfg: ToleranceConfig,
    kernel: TruncatedKernel,
    dominance: Option<DominanceReport>,
    space: Option<KolmogorovSpace>,
    compressed: Option<ShiftSystem>,
    consistency: Option<ConsistencyReport>,
    report: RunReport,
}

impl<'a> Session<'a> {
    fn depth(&self) -> usize {
        self.options.depth.unwrap_or(self.kernel.level() + 2)
    }

    fn dominance(&mut self) -> StageResult<&DominanceReport> {
        if self.dominance.is_none() {
            self.dominance = Some(check_dominance(&self.kernel, &self.cfg).map_err(fail("check"))?);
        }
        Ok(self.dominance.as_ref().expect("just computed"))
    }

    fn check(&mut self) -> StageResult<i32> {
        let dominance = self.dominance()?.clone();
        let level = self.kernel.level();
        let interior_gram = small_block(&self.kernel, level - 1)?;
        let shifted = shifted_kernel(&self.kernel).map_err(fail("check"))?;
        let shifted_gram = small_block(&shifted, level - 1)?;
        let passes = dominance.passes();
        self.report.check = Some(CheckStage {
            dominance,
            interior_gram,
            shifted_gram,
            passes,
        });
        Ok(if passes { 0 } else { 1 })
    }

    /// Stages past `check` need a dominated kernel.
    fn require_dominance(&mut self, stage: &'static str) -> StageResult<()> {
        if self.report.check.is_none() {
            self.check()?;
        }
        let d = self.dominance()?;
        if !d.passes() {
            return Err(StageError {
                stage,
                reason: format!(
                    "kernel is not dominated (pd min eig {:e}, dominance min eig {:e}, tolerance {:e})",
                    d.pd_full.min_eig, d.dominance.min_eig, d.dominance.tolerance
                ),
            });
        }
        Ok(())
    }

    fn space(&mut self, stage: &'static str) -> StageResult<&KolmogorovSpace> {
        if self.space.is_none() {
            self.space = Some(build_space(&self.kernel, &self.cfg).map_err(fail(stage))?);
        }
        Ok(self.space.as_ref().expect("just computed"))
    }

    fn compressed(&mut self, stage: &'static str) -> StageResult<&ShiftSystem> {
        if self.compressed.is_none() {
            self.space(stage)?;
            let space = self.space.as_ref().expect("built");
            let b = compressed_shifts(space, &self.kernel, &self.cfg).map_err(fail(stage))?;
            self.compressed = Some(b);
        }
        Ok(self.compressed.as_ref().expect("just computed"))
    }

    fn analyze(&mut self) -> StageResult<i32> {
        self.require_dominance("analyze")?;
        self.compressed("analyze")?;
        let space = self.space.as_ref().expect("built");
        let b = self.compressed.as_ref().expect("built");
        let ks = shifted_kernel(&self.kernel).map_err(fail("analyze"))?;
        let density = interior_density(b, space, &ks, &self.cfg).map_err(fail("analyze"))?;
        let lambda_max = density.spectrum.last().copied().unwrap_or(0.0);
        let identity_tolerance = IDENTITY_TOL * space.gram_scale();
        let passes =
            lambda_max <= 1.0 + self.cfg.psd_tol && density.identity_deviation <= identity_tolerance;
        let shift_singular_values = b
            .ops()
            .iter()
            .map(|op| {
                let mut sv: Vec<f64> = op.clone().svd(false, false).singular_values.iter().copied().collect();
                sv.sort_by(|x, y| y.total_cmp(x));
                sv
            })
            .collect();
        self.report.analysis = Some(AnalysisStage {
            rank: space.rank(),
            graded_ranks: space.graded_ranks().to_vec(),
            rank_tolerance: self.cfg.rank_tol,
            gram_scale: space.gram_scale(),
            shift_singular_values,
            density: DensityStage {
                spectrum: density.spectrum.clone(),
                lambda_max,
                lambda_tolerance: self.cfg.psd_tol,
                identity_deviation: density.identity_deviation,
                identity_tolerance,
                passes,
            },
        });
        Ok(if passes { 0 } else { 1 })
    }

    fn consistency(&mut self, stage: &'static str) -> StageResult<&ConsistencyReport> {
        if self.consistency.is_none() {
            self.require_dominance(stage)?;
            self.space(stage)?;
            let space = self.space.as_ref().expect("built");
            let report = solve_boundary_shifts(&self.kernel, space, &self.cfg).map_err(fail(stage))?;
            self.report.consistency = Some(ConsistencyStage::from(&report));
            self.consistency = Some(report);
        }
        Ok(self.consistency.as_ref().expect("just computed"))
    }

    fn run_consistency(&mut self) -> StageResult<i32> {
        Ok(if self.consistency("consistency")?.feasible { 0 } else { 1 })
    }

    /// Resolves the requested mode; `None` when boundary mode was demanded but
    /// consistency is infeasible.
    fn dilation(
        &mut self,
        stage: &'static str,
        requested: ModeRequest,
    ) -> StageResult<Option<(ExtensionMode, TruncatedDilation)>> {
        self.require_dominance(stage)?;
        let mode = match requested {
            ModeRequest::Interior => ExtensionMode::Interior,
            ModeRequest::Boundary | ModeRequest::Auto => {
                if self.consistency(stage)?.feasible {
                    ExtensionMode::Boundary
                } else if requested == ModeRequest::Boundary && stage == "verify" {
                    return Ok(None);
                } else {
                    ExtensionMode::Interior
                }
            }
        };
        let shifts = match mode {
            ExtensionMode::Interior => self.compressed(stage)?.clone(),
            ExtensionMode::Boundary => self
                .consistency
                .as_ref()
                .and_then(|c| c.ts.clone())
                .expect("feasible report carries T"),
        };
        let depth = self.depth();
        let size = dilation_dim(shifts.d(), shifts.dim(), depth);
        if !self.options.allow_large() && size.is_none_or(|n| n > MAX_DILATION_DIM) {
            return Err(StageError {
                stage,
                reason: format!(
                    "dilation space of dimension {} exceeds {MAX_DILATION_DIM}; set allow_large to override",
                    size.map_or("overflow".to_string(), |n| n.to_string())
                ),
            });
        }
        let dil = build_dilation(&shifts, depth, &self.cfg).map_err(fail(stage))?;
        Ok(Some((mode, dil)))
    }

    fn extend(&mut self, requested: ModeRequest) -> StageResult<i32> {
        let (mode, dil) = self.dilation("extend", requested)?.expect("extend never refuses");
        let pairs = match &self.pairs {
            Some(p) => p.clone(),
            None => {
                let words = self.kernel.words().words();
                words
                    .iter()
                    .enumerate()
                    .flat_map(|(a, wa)| words[a..].iter().map(move |wb| (wa.clone(), wb.clone())))
                    .collect()
            }
        };
        let space = self.space.as_ref().expect("built by dilation");
        let values = extend_kernel(&dil, space, &pairs).map_err(fail("extend"))?;
        let values = pairs
            .iter()
            .map(|p| ExtensionValue {
                row: p.0.clone(),
                col: p.1.clone(),
                block: block_from_matrix(&values[p]),
            })
            .collect();
        self.report.extension = Some(ExtendStage {
            mode,
            requested,
            fallback: requested == ModeRequest::Boundary && mode == ExtensionMode::Interior,
            depth: dil.depth(),
            invariants: *dil.invariants(),
            values,
        });
        Ok(0)
    }

    fn verify(&mut self, requested: ModeRequest) -> StageResult<i32> {
        let Some((mode, dil)) = self.dilation("verify", requested)? else {
            // boundary mode demanded, consistency infeasible: an analytic negative
            return Ok(1);
        };
        let test_len = self.options.test_len.unwrap_or(dil.depth() - 1);
        let tests = enumerate_words(self.kernel.d(), test_len).map_err(fail("verify"))?;
        let gram_size = tests.len().saturating_mul(self.kernel.dim_h());
        if !self.options.allow_large() && gram_size > MAX_TEST_GRAM {
            return Err(StageError {
                stage: "verify",
                reason: format!(
                    "test-word Gram of size {gram_size} exceeds {MAX_TEST_GRAM}; lower test_len or set allow_large"
                ),
            });
        }
        let space = self.space.as_ref().expect("built by dilation");
        let report = verify_extension(&self.kernel, &dil, space, mode, tests.words(), &self.cfg)
            .map_err(fail("verify"))?;
        let passes = report.passes() && dil.invariants().passes();
        self.report.verification = Some(VerifyStage {
            requested,
            invariants: *dil.invariants(),
            report,
            passes,
        });
        Ok(if passes { 0 } else { 1 })
    }

    fn hausdorff(&mut self) -> StageResult<i32> {
        let s = self
            .spec
            .moment_sequence()
            .map_err(|e| StageError {
                stage: "hausdorff",
                reason: e.to_string(),
            })?
            .ok_or_else(|| StageError {
                stage: "hausdorff",
                reason: "needs a measure or moments input".into(),
            })?;
        let monotone = check_complete_monotone(&s, &self.cfg);
        let dominance = self.dominance()?.clone();
        let level = self.kernel.level();
        let recovery = if dominance.passes() {
            self.compressed("hausdorff")?;
            let b = self.compressed.as_ref().expect("built");
            let dil = build_dilation(b, self.depth(), &self.cfg).map_err(fail("hausdorff"))?;
            let space = self.space.as_ref().expect("built");
            let interior = self.kernel.words().up_to(level - 1);
            let pairs: Vec<(Word, Word)> = interior
                .iter()
                .flat_map(|a| interior.iter().map(move |b| (a.clone(), b.clone())))
                .collect();
            let values = extend_kernel(&dil, space, &pairs).map_err(fail("hausdorff"))?;
            let max_deviation = values
                .iter()
                .map(|((a, b), v)| (v[(0, 0)] - fsk_core::C64::new(s.0[a.len() + b.len()], 0.0)).norm())
                .fold(0.0, f64::max);
            let tolerance = EXTENSION_TOL * space.gram_scale();
            let judged = Judged::at_most(max_deviation, tolerance);
            Some(Recovery {
                max_deviation,
                tolerance,
                pass: judged.pass,
            })
        } else {
            None
        };
        let passes = monotone.ok && dominance.passes() && recovery.as_ref().is_none_or(|r| r.pass);
        self.report.hausdorff = Some(HausdorffStage {
            moments: s.0.clone(),
            level,
            monotone,
            dominance,
            recovery,
            passes,
        });
        Ok(if passes { 0 } else { 1 })
    }

    fn pipeline(&mut self, mode: ModeRequest) -> StageResult<i32> {
        let mut status = self.check()?;
        if status != 0 {
            return Ok(status);
        }
        status = status.max(self.analyze()?);
        status = status.max(self.run_consistency()?);
        status = status.max(self.extend(mode)?);
        status = status.max(self.verify(mode)?);
        if self.spec.kind() != "kernel" {
            status = status.max(self.hausdorff()?);
        }
        Ok(status)
    }
}

/// Executes `command` on a parsed spec. Never fails: errors become a
/// `stage_error` with exit status 2.
pub fn run(spec: &ProblemSpec, command: Command, options: &RunOptions) -> RunReport {
    let merged = spec.options().merged(&options.overrides);
    let mut report = RunReport {
        command,
        input_kind: spec.kind(),
        tolerances: ToleranceConfig::default(),
        validation: None,
        check: None,
        analysis: None,
        consistency: None,
        extension: None,
        verification: None,
        hausdorff: None,
        stage_error: None,
        exit_status: 2,
    };
    let input_error = |report: &mut RunReport, reason: String| {
        report.stage_error = Some(StageError {
            stage: "input",
            reason,
        });
    };
    if let Err(e) = check_guardrails(spec, &merged) {
        input_error(&mut report, e.to_string());
        return report;
    }
    let cfg = match merged.tolerances() {
        Ok(cfg) => cfg,
        Err(e) => {
            input_error(&mut report, e.to_string());
            return report;
        }
    };
    report.tolerances = cfg;
    let (kernel, validation) = match spec.kernel() {
        Ok(v) => v,
        Err(e) => {
            report.stage_error = Some(StageError {
                stage: "validation",
                reason: e.to_string(),
            });
            return report;
        }
    };
    report.validation = Some(validation);
    let mut session = Session {
        spec,
        options: merged,
        pairs: options.pairs.clone(),
        cfg,
        kernel,
        dominance: None,
        space: None,
        compressed: None,
        consistency: None,
        report,
    };
    let outcome = if session.kernel.level() == 0 && command != Command::Hausdorff {
        Err(StageError {
            stage: command.name(),
            reason: fsk_core::Error::NoRoomToShift.to_string(),
        })
    } else {
        match command {
            Command::Check => session.check(),
            Command::Analyze => session.analyze(),
            Command::Consistency => session.run_consistency(),
            Command::Extend => session.extend(options.mode),
            Command::Verify => session.verify(options.mode),
            Command::Hausdorff => {
                if session.kernel.level() == 0 {
                    Err(StageError {
                        stage: "hausdorff",
                        reason: fsk_core::Error::NoRoomToShift.to_string(),
                    })
                } else {
                    session.hausdorff()
                }
            }
            Command::Pipeline => session.pipeline(options.mode),
        }
    };
    let mut report = session.report;
    match outcome {
        Ok(status) => report.exit_status = status,
        Err(e) => {
            report.stage_error = Some(e);
            report.exit_status = 2;
        }
    }
    report
}
