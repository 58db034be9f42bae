//! Truncated row-isometric dilation and the Cuntz–Toeplitz extension.
//!
//! Given a tuple `(op₁, …, op_d)` on the interior space with
//! `Σ opᵢ* opᵢ ≤ I`, set `Aᵢ = opᵢ*` (a row contraction) and
//! `Δ = (I − R* R)^{1/2}` for the row `R = [A₁ ⋯ A_d]`, acting on `d` copies
//! of the base space. The dilation space is
//!
//! ```text
//! K_L = H_base ⊕ level₀ ⊕ … ⊕ level_{L−1},   levelₙ = ℂ^{dⁿ} ⊗ ℂ^{d·r}
//! ```
//!
//! and `Sᵢ (h, f₀, f₁, …) = (Aᵢ h, Δ ιᵢ h, eᵢ ⊗ f₀, eᵢ ⊗ f₁, …)`, where `eᵢ ⊗`
//! prefixes the letter `i` to the word index and overflow from level `L−1`
//! is dropped. With `J` the inclusion of the base, `Sᵢ* J = J opᵢ`, and
//! `Sᵢ* Sⱼ = δᵢⱼ I` on every vector supported below level `L−1`.
//!
//! The extended kernel is `K̃(α, β) = W* S^α P (S^β)* W` with `P = J J*` and
//! `W = J V_∅`. Since `(S^β)* W` never leaves the base and `S^α` raises at
//! most `|α|` levels, every value with `|α|, |β| ≤ L` is exact.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::TruncatedKernel;
use crate::kolmogorov::{KolmogorovSpace, ShiftKind, ShiftSystem};
use crate::numerics::{
    eigh, psd_sqrt, psd_verdict, CMat, HermitianMatrix, PsdCheck, ToleranceConfig, C64,
};
use crate::words::{enumerate_words, Word};

/// Bound on the exact dilation identities.
pub const DILATION_TOL: f64 = 1e-10;

/// Relative bound on extension deviations.
pub const EXTENSION_TOL: f64 = 1e-9;

/// Column-compressed sparse complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl SparseOp {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column(&self, j: usize) -> &[(usize, C64)] {
        &self.cols[j]
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim, x.ncols());
        for c in 0..x.ncols() {
            for (j, col) in self.cols.iter().enumerate() {
                let xj = x[(j, c)];
                if xj == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(row, v) in col {
                    out[(row, c)] += v * xj;
                }
            }
        }
        out
    }

    /// `self · x` for `x` supported on the first `x.nrows()` coordinates,
    /// keeping the first `out_rows` coordinates of the result; the caller
    /// guarantees the image has no mass beyond them.
    fn apply_leading(&self, x: &CMat, out_rows: usize) -> CMat {
        let mut out = CMat::zeros(out_rows, x.ncols());
        for c in 0..x.ncols() {
            for (j, col) in self.cols.iter().enumerate().take(x.nrows()) {
                let xj = x[(j, c)];
                if xj == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(row, v) in col {
                    out[(row, c)] += v * xj;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> SparseOp {
        let mut cols = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(row, v) in col {
                cols[row].push((j, v.conj()));
            }
        }
        SparseOp {
            dim: self.dim,
            cols,
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut out = CMat::zeros(self.dim, self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(row, v) in col {
                out[(row, j)] += v;
            }
        }
        out
    }
}

/// Orthogonal decomposition of the truncated dilation space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DilationLayout {
    pub base_dim: usize,
    pub defect_dim: usize,
    /// Offset of level `n` for `n = 0..L`, followed by the total dimension.
    pub level_offsets: Vec<usize>,
}

impl DilationLayout {
    fn new(d: usize, depth: usize, base_dim: usize) -> Result<Self> {
        let overflow = || Error::Overflow { d, level: depth };
        let defect_dim = d.checked_mul(base_dim).ok_or_else(overflow)?;
        let mut level_offsets = Vec::with_capacity(depth + 1);
        let mut offset = base_dim;
        let mut words = 1usize;
        for _ in 0..depth {
            level_offsets.push(offset);
            let size = words.checked_mul(defect_dim).ok_or_else(overflow)?;
            offset = offset.checked_add(size).ok_or_else(overflow)?;
            words = words.checked_mul(d).ok_or_else(overflow)?;
        }
        level_offsets.push(offset);
        Ok(DilationLayout {
            base_dim,
            defect_dim,
            level_offsets,
        })
    }

    pub fn total_dim(&self) -> usize {
        *self.level_offsets.last().expect("at least the total")
    }

    /// End of the truncation-safe region (base and levels `0..L−1`).
    pub fn safe_end(&self) -> usize {
        let n = self.level_offsets.len();
        if n >= 2 {
            self.level_offsets[n - 2]
        } else {
            self.base_dim
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationInvariants {
    /// `‖J* J − I‖_F`.
    pub embedding: f64,
    /// `maxᵢ ‖Sᵢ* J − J opᵢ‖_F`.
    pub intertwining: f64,
    /// `max_{i,j} ‖(Sᵢ* Sⱼ − δᵢⱼ I)|_safe‖_F`.
    pub isometry: f64,
    pub tolerance: f64,
}

impl DilationInvariants {
    pub fn passes(&self) -> bool {
        self.embedding <= self.tolerance
            && self.intertwining <= self.tolerance
            && self.isometry <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedDilation {
    d: usize,
    depth: usize,
    kind: ShiftKind,
    layout: DilationLayout,
    base_ops: Vec<CMat>,
    defect: HermitianMatrix,
    shifts: Vec<SparseOp>,
    adjoints: Vec<SparseOp>,
    invariants: DilationInvariants,
}

impl TruncatedDilation {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn base_dim(&self) -> usize {
        self.layout.base_dim
    }

    pub fn layout(&self) -> &DilationLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// `Δ = (I − R* R)^{1/2}` on `d` copies of the base.
    pub fn defect(&self) -> &HermitianMatrix {
        &self.defect
    }

    /// `S_i` for `i` in `1..=d`.
    pub fn shift(&self, i: usize) -> &SparseOp {
        &self.shifts[i - 1]
    }

    pub fn shift_adjoint(&self, i: usize) -> &SparseOp {
        &self.adjoints[i - 1]
    }

    pub fn invariants(&self) -> &DilationInvariants {
        &self.invariants
    }

    /// `J`, the inclusion of the base as the leading coordinates.
    pub fn embedding(&self) -> CMat {
        let mut j = CMat::zeros(self.dim(), self.base_dim());
        for k in 0..self.base_dim() {
            j[(k, k)] = C64::new(1.0, 0.0);
        }
        j
    }

    /// `P x = J J* x`.
    pub fn project(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(x.nrows(), x.ncols());
        let r = self.base_dim();
        out.rows_mut(0, r).copy_from(&x.rows(0, r));
        out
    }

    /// `W = J V_∅`.
    pub fn w(&self, space: &KolmogorovSpace) -> Result<CMat> {
        self.check_space(space)?;
        let v0 = space.interior_coords(&Word::empty())?;
        let mut w = CMat::zeros(self.dim(), v0.ncols());
        w.rows_mut(0, self.base_dim()).copy_from(&v0);
        Ok(w)
    }

    fn check_space(&self, space: &KolmogorovSpace) -> Result<()> {
        if space.interior_dim() != self.base_dim() || space.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "dilation base has dimension {} over {} letters, space interior has {} over {}",
                self.base_dim(),
                self.d,
                space.interior_dim(),
                space.d()
            )));
        }
        Ok(())
    }

    fn check_len(&self, w: &Word) -> Result<()> {
        if w.len() > self.depth {
            return Err(Error::TruncationDepth {
                len: w.len(),
                depth: self.depth,
            });
        }
        if w.max_letter() > self.d {
            return Err(Error::LetterOutOfRange {
                letter: w.max_letter(),
                d: self.d,
            });
        }
        Ok(())
    }

    /// `S^α x = S_{i₁} ⋯ S_{i_k} x`.
    pub fn apply_word(&self, w: &Word, x: &CMat) -> CMat {
        w.letters()
            .iter()
            .rev()
            .fold(x.clone(), |acc, &i| self.shift(i).apply(&acc))
    }

    /// `(S^α)* x = S_{i_k}* ⋯ S_{i₁}* x`.
    pub fn apply_word_adjoint(&self, w: &Word, x: &CMat) -> CMat {
        w.letters()
            .iter()
            .fold(x.clone(), |acc, &i| self.shift_adjoint(i).apply(&acc))
    }
}

/// Builds the depth-`L` dilation of `shifts` and verifies its invariants.
pub fn build_dilation(
    shifts: &ShiftSystem,
    depth: usize,
    cfg: &ToleranceConfig,
) -> Result<TruncatedDilation> {
    if depth == 0 {
        return Err(Error::TruncationDepth { len: 1, depth });
    }
    let d = shifts.d();
    if d == 0 {
        return Err(Error::ZeroAlphabet);
    }
    let r = shifts.dim();
    let e = d * r;
    let layout = DilationLayout::new(d, depth, r)?;

    let lambda_max = shifts.column_gram().eigenvalues().last().copied().unwrap_or(0.0);
    if lambda_max > 1.0 + cfg.psd_tol {
        return Err(Error::ContractivityFailure {
            lambda_max,
            tolerance: cfg.psd_tol,
        });
    }
    let row_ops: Vec<CMat> = shifts.ops().iter().map(|op| op.adjoint()).collect();
    // I − R*R, block (i, j) = A_i* A_j = op_i op_j*
    let mut gap = CMat::identity(e, e);
    for i in 0..d {
        for j in 0..d {
            let block = row_ops[i].adjoint() * &row_ops[j];
            let mut view = gap.view_mut((i * r, j * r), (r, r));
            view -= block;
        }
    }
    let defect = psd_sqrt(&HermitianMatrix::new(gap)?, cfg)?;

    let total = layout.total_dim();
    let mut shift_ops = Vec::with_capacity(d);
    for i in 1..=d {
        let a = &row_ops[i - 1];
        let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); total];
        let zero = C64::new(0.0, 0.0);
        for (k, col) in cols.iter_mut().enumerate().take(r) {
            for row in 0..r {
                if a[(row, k)] != zero {
                    col.push((row, a[(row, k)]));
                }
            }
            for row in 0..e {
                let v = defect.matrix()[(row, (i - 1) * r + k)];
                if v != zero {
                    col.push((layout.level_offsets[0] + row, v));
                }
            }
        }
        let mut words_at_level = 1usize;
        for n in 0..depth.saturating_sub(1) {
            let from = layout.level_offsets[n];
            let to = layout.level_offsets[n + 1];
            for w in 0..words_at_level {
                let target_word = (i - 1) * words_at_level + w;
                for c in 0..e {
                    cols[from + w * e + c].push((to + target_word * e + c, C64::new(1.0, 0.0)));
                }
            }
            words_at_level *= d;
        }
        shift_ops.push(SparseOp { dim: total, cols });
    }
    let adjoints: Vec<SparseOp> = shift_ops.iter().map(SparseOp::adjoint).collect();

    let mut dil = TruncatedDilation {
        d,
        depth,
        kind: shifts.kind(),
        layout,
        base_ops: shifts.ops().to_vec(),
        defect,
        shifts: shift_ops,
        adjoints,
        invariants: DilationInvariants {
            embedding: 0.0,
            intertwining: 0.0,
            isometry: 0.0,
            tolerance: DILATION_TOL,
        },
    };
    dil.invariants = measure_invariants(&dil);
    if !dil.invariants.passes() {
        let inv = dil.invariants;
        return Err(Error::IdentityMismatch {
            identity: "dilation invariants",
            location: format!(
                "embedding {:e}, intertwining {:e}, isometry {:e}",
                inv.embedding, inv.intertwining, inv.isometry
            ),
            magnitude: inv.embedding.max(inv.intertwining).max(inv.isometry),
        });
    }
    Ok(dil)
}

/// Recomputes the three dilation invariants from the assembled operators.
pub fn measure_invariants(dil: &TruncatedDilation) -> DilationInvariants {
    let r = dil.base_dim();
    let j = dil.embedding();
    let embedding = (j.adjoint() * &j - CMat::identity(r, r)).norm();

    let mut intertwining: f64 = 0.0;
    for i in 1..=dil.d {
        let adj = dil.shift_adjoint(i);
        let op = &dil.base_ops[i - 1];
        let mut sq = 0.0;
        for k in 0..r {
            let mut col = vec![C64::new(0.0, 0.0); r];
            for &(row, v) in adj.column(k) {
                if row < r {
                    col[row] += v;
                } else {
                    sq += v.norm_sqr();
                }
            }
            for (row, value) in col.iter().enumerate() {
                sq += (value - op[(row, k)]).norm_sqr();
            }
        }
        intertwining = intertwining.max(sq.sqrt());
    }

    let safe = dil.layout.safe_end();
    let total = dil.dim();
    let mut isometry: f64 = 0.0;
    let mut scratch = vec![C64::new(0.0, 0.0); total];
    let mut touched: Vec<usize> = Vec::new();
    for i in 1..=dil.d {
        let adj = dil.shift_adjoint(i);
        for jj in 1..=dil.d {
            let s = dil.shift(jj);
            let mut sq = 0.0;
            for k in 0..safe {
                for &(mid, v) in s.column(k) {
                    for &(row, u) in adj.column(mid) {
                        if scratch[row] == C64::new(0.0, 0.0) {
                            touched.push(row);
                        }
                        scratch[row] += u * v;
                    }
                }
                if i == jj {
                    if scratch[k] == C64::new(0.0, 0.0) {
                        touched.push(k);
                    }
                    scratch[k] -= C64::new(1.0, 0.0);
                }
                for &row in &touched {
                    sq += scratch[row].norm_sqr();
                    scratch[row] = C64::new(0.0, 0.0);
                }
                touched.clear();
            }
            isometry = isometry.max(sq.sqrt());
        }
    }
    DilationInvariants {
        embedding,
        intertwining,
        isometry,
        tolerance: DILATION_TOL,
    }
}

/// `K̃(α, β) = W* S^α P (S^β)* W`, evaluated as written.
pub fn extend_kernel(
    dil: &TruncatedDilation,
    space: &KolmogorovSpace,
    pairs: &[(Word, Word)],
) -> Result<BTreeMap<(Word, Word), CMat>> {
    let w = dil.w(space)?;
    let mut adjoint_images: BTreeMap<Word, CMat> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (alpha, beta) in pairs {
        dil.check_len(alpha)?;
        dil.check_len(beta)?;
        if !adjoint_images.contains_key(beta) {
            let img = dil.project(&dil.apply_word_adjoint(beta, &w));
            adjoint_images.insert(beta.clone(), img);
        }
        // S^α P x lives on the base and the first |α| levels
        let r = dil.base_dim();
        let mut raised = adjoint_images[beta].rows(0, r).into_owned();
        for (step, &i) in alpha.letters().iter().rev().enumerate() {
            let bound = dil.layout.level_offsets[(step + 1).min(dil.depth)];
            raised = dil.shift(i).apply_leading(&raised, bound);
        }
        let value = w.rows(0, r).adjoint() * raised.rows(0, r);
        out.insert((alpha.clone(), beta.clone()), value);
    }
    Ok(out)
}

/// `J* (S^γ)* W` for every `γ` of length `≤ max_len`, computed by walking the
/// word tree; `K̃(α, β)` is the product of the adjoint of row `α` with row `β`.
#[derive(Debug, Clone)]
pub struct ExtensionTable {
    words: Vec<Word>,
    base: Vec<CMat>,
    /// `max ‖(I − P)(S^γ)* W‖_F`; zero up to rounding when `Sᵢ* J = J opᵢ`.
    pub off_base: f64,
}

impl ExtensionTable {
    pub fn build(dil: &TruncatedDilation, space: &KolmogorovSpace, max_len: usize) -> Result<Self> {
        if max_len > dil.depth {
            return Err(Error::TruncationDepth {
                len: max_len,
                depth: dil.depth,
            });
        }
        let words = enumerate_words(dil.d, max_len)?;
        let w = dil.w(space)?;
        let r = dil.base_dim();
        let mut base = vec![CMat::zeros(0, 0); words.len()];
        let mut off_base: f64 = 0.0;
        // depth-first so that only one full-size vector per level is alive
        let mut stack: Vec<(Word, CMat)> = vec![(Word::empty(), w)];
        while let Some((word, full)) = stack.pop() {
            let idx = words.index_of(&word).expect("enumerated");
            let tail = full.rows(r, full.nrows() - r).norm();
            off_base = off_base.max(tail);
            base[idx] = full.rows(0, r).into_owned();
            if word.len() < max_len {
                for i in (1..=dil.d).rev() {
                    stack.push((word.append(i), dil.shift_adjoint(i).apply(&full)));
                }
            }
        }
        Ok(ExtensionTable {
            words: words.words().to_vec(),
            base,
            off_base,
        })
    }

    fn index(&self, w: &Word) -> Option<usize> {
        self.words.binary_search(w).ok()
    }

    /// `J* (S^γ)* W`.
    pub fn base_block(&self, gamma: &Word) -> Option<&CMat> {
        self.index(gamma).map(|k| &self.base[k])
    }

    pub fn value(&self, alpha: &Word, beta: &Word) -> Option<CMat> {
        let a = self.index(alpha)?;
        let b = self.index(beta)?;
        Some(self.base[a].adjoint() * &self.base[b])
    }

    /// `[J* (S^γ)* W]_{γ ∈ words}` side by side.
    fn stacked(&self, words: &[Word]) -> Option<CMat> {
        let first = self.base.first()?;
        let (r, m) = first.shape();
        let mut out = CMat::zeros(r, words.len() * m);
        for (k, w) in words.iter().enumerate() {
            out.columns_mut(k * m, m).copy_from(&self.base[self.index(w)?]);
        }
        Some(out)
    }
}

/// `max ‖values(α, β) − K(α, β)‖_F` over `α, β ∈ words`.
pub fn max_block_deviation(
    values: &BTreeMap<(Word, Word), CMat>,
    k: &TruncatedKernel,
    words: &[Word],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in words {
        for b in words {
            let target = k.get(a, b).ok_or_else(|| Error::WordOutsideDomain {
                word: if k.words().contains(a) { b.clone() } else { a.clone() },
                level: k.level(),
            })?;
            let got = values.get(&(a.clone(), b.clone())).ok_or_else(|| {
                Error::MissingEntry {
                    row: a.clone(),
                    col: b.clone(),
                }
            })?;
            worst = worst.max((got - target).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionMode {
    Interior,
    Boundary,
}

impl ExtensionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExtensionMode::Interior => "interior",
            ExtensionMode::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Judged {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Judged {
    pub fn at_most(value: f64, tolerance: f64) -> Self {
        Judged {
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionReport {
    pub mode: ExtensionMode,
    pub depth: usize,
    /// `max ‖K̃ − K‖_F` on `Λ_{N−1} × Λ_{N−1}`.
    pub e1_max_dev: Judged,
    /// `max ‖K̃ − K‖_F` on `Λ_N × Λ_N`, boundary mode only.
    pub e3_max_dev: Option<Judged>,
    /// Positivity of `Gram(K̃ − K̃_Σ)` over the test words.
    pub e2: PsdCheck,
    /// Positivity of `Gram(K̃)` over the test words.
    pub positivity: PsdCheck,
    pub test_words: usize,
    /// Mass of `(S^γ)* W` outside the base, over all evaluated words.
    pub off_base: f64,
}

impl ExtensionReport {
    pub fn passes(&self) -> bool {
        self.e1_max_dev.pass
            && self.e3_max_dev.is_none_or(|j| j.pass)
            && self.e2.is_psd
            && self.positivity.is_psd
    }
}

/// Checks interior preservation, shift dominance on `test_words` and, in
/// boundary mode, agreement on all of `Λ_N`.
pub fn verify_extension(
    k: &TruncatedKernel,
    dil: &TruncatedDilation,
    space: &KolmogorovSpace,
    mode: ExtensionMode,
    test_words: &[Word],
    cfg: &ToleranceConfig,
) -> Result<ExtensionReport> {
    let expected_kind = match mode {
        ExtensionMode::Interior => ShiftKind::CompressedB,
        ExtensionMode::Boundary => ShiftKind::BoundaryT,
    };
    if dil.kind() != expected_kind {
        return Err(Error::ModeMismatch {
            mode: mode.name(),
            expected: match expected_kind {
                ShiftKind::CompressedB => "compressed-B",
                ShiftKind::BoundaryT => "boundary-T",
            },
        });
    }
    if k.level() == 0 {
        return Err(Error::NoRoomToShift);
    }
    let test_len = test_words.iter().map(Word::len).max().unwrap_or(0);
    if test_len + 1 > dil.depth() {
        return Err(Error::TruncationDepth {
            len: test_len + 1,
            depth: dil.depth(),
        });
    }
    if k.level() > dil.depth() {
        return Err(Error::TruncationDepth {
            len: k.level(),
            depth: dil.depth(),
        });
    }
    let table = ExtensionTable::build(dil, space, (test_len + 1).max(k.level()))?;
    let dev_tol = EXTENSION_TOL * space.gram_scale();

    let agreement = |level: usize| -> Result<f64> {
        let words = k.words().up_to(level);
        let mut worst: f64 = 0.0;
        for a in words {
            for b in words {
                let got = table.value(a, b).expect("table covers Λ_N");
                worst = worst.max((got - k.get(a, b).expect("in Λ_N")).norm());
            }
        }
        Ok(worst)
    };
    let e1 = Judged::at_most(agreement(k.level() - 1)?, dev_tol);
    let e3 = match mode {
        ExtensionMode::Boundary => Some(Judged::at_most(agreement(k.level())?, dev_tol)),
        ExtensionMode::Interior => None,
    };

    let z = table
        .stacked(test_words)
        .unwrap_or_else(|| CMat::zeros(0, 0));
    let mut gram = if z.nrows() == 0 {
        CMat::zeros(test_words.len() * k.dim_h(), test_words.len() * k.dim_h())
    } else {
        z.adjoint() * &z
    };
    let positivity = psd_verdict(&eigh(&HermitianMatrix::gram_of(&z)).values, cfg);
    for i in 1..=dil.d() {
        let grown: Vec<Word> = test_words.iter().map(|w| w.append(i)).collect();
        if let Some(zi) = table.stacked(&grown) {
            gram -= zi.adjoint() * &zi;
        }
    }
    let e2 = psd_verdict(&eigh(&HermitianMatrix::new(gram)?).values, cfg);

    Ok(ExtensionReport {
        mode,
        depth: dil.depth(),
        e1_max_dev: e1,
        e3_max_dev: e3,
        e2,
        positivity,
        test_words: test_words.len(),
        off_base: table.off_base,
    })
}
