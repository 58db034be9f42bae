use thiserror::Error;

use crate::words::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 1")]
    ZeroAlphabet,
    #[error("letter {letter} outside alphabet 1..={d}")]
    LetterOutOfRange { letter: usize, d: usize },
    #[error("word count for d={d}, N={level} overflows usize")]
    Overflow { d: usize, level: usize },
    #[error("invalid tolerance {name} = {value}: must be finite and > 0")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max deviation {max_deviation:e}")]
    NotHermitian { max_deviation: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e} below -{tolerance:e}")]
    NotPsd { min_eig: f64, tolerance: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("missing kernel entry K({row}, {col})")]
    MissingEntry { row: Word, col: Word },
    #[error("duplicate kernel entry K({row}, {col})")]
    DuplicateEntry { row: Word, col: Word },
    #[error("block K({row}, {col}) has shape {rows}x{cols}, expected {expected}x{expected}")]
    ShapeMismatch {
        row: Word,
        col: Word,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("K({row}, {col}) is not the adjoint of K({col}, {row}): deviation {deviation:e}")]
    SymmetryViolation { row: Word, col: Word, deviation: f64 },
    #[error("word {word} is outside the index set of length <= {level}")]
    WordOutsideDomain { word: Word, level: usize },
    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("kernel at level 0 has no room to shift")]
    NoRoomToShift,
    #[error("compressed shift B_{letter} is not well defined: residual {residual:e}")]
    WellDefinednessFailure { letter: usize, residual: f64 },
    #[error("identity {identity} fails at {location}: magnitude {magnitude:e}")]
    IdentityMismatch {
        identity: &'static str,
        location: String,
        magnitude: f64,
    },
    #[error("tuple is not contractive: lambda_max {lambda_max} exceeds 1 + {tolerance:e}")]
    ContractivityFailure { lambda_max: f64, tolerance: f64 },
    #[error("word of length {len} exceeds dilation depth {depth}")]
    TruncationDepth { len: usize, depth: usize },
    #[error("extension mode {mode} needs {expected} shifts")]
    ModeMismatch {
        mode: &'static str,
        expected: &'static str,
    },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("Hankel kernel at level {level} needs {needed} moments, got {got}")]
    InsufficientMoments {
        level: usize,
        needed: usize,
        got: usize,
    },
}
