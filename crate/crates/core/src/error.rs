use thiserror::Error;

/// Everything that can go wrong in the truncated arithmetic and the
/// algorithms built on top of it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted: {available} trusted digits, floor is {floor}")]
    PrecisionExhausted { available: i32, floor: i32 },
    #[error("element is not a unit at the available precision")]
    NonUnit,
    #[error("determinant vanishes at the available precision")]
    NonUnitDeterminant,
    #[error("target is not a conj-fixed principal unit: {0}")]
    NotPrincipalUnit(String),
    #[error("element does not lie in the expected compact subgroup: {0}")]
    NotInCompact(String),
    #[error("residue order exceeds the configured bound {0}")]
    OrderOverflow(u64),
    #[error("element is not topologically unipotent")]
    NotTopUnipotent,
    #[error("element is not topologically semisimple")]
    NotTopSemisimple,
    #[error("semisimplicity could not be certified at this precision")]
    NotCertifiedSemisimple,
    #[error("no admissible alpha found on the search ladder")]
    SectionSearchExhausted,
    #[error("no unit found in the Hilbert 90 kernel module after {0} trials")]
    NoUnitInKernel(usize),
    #[error("fast norm-section path needs q > N (q = {q}, N = {n})")]
    FastPathUnavailable { q: u64, n: usize },
    #[error("result violates the expected block shape: {0}")]
    NotInShape(String),
    #[error("eigenvalue 1 is missing from the middle block")]
    MiddleEigenvalueMissing,
    #[error("norm equation on the middle vector failed: {0}")]
    NormEquationFailure(String),
    #[error("residue search exhausted without a match")]
    ResidueSearchExhausted,
    #[error("residue characteristic polynomial is not squarefree; strong regularity not certified")]
    NotStronglyRegular,
    #[error("relation failed on re-verification: {0}")]
    RelationFailed(String),
    #[error("Newton lift obstructed at level {0}")]
    LiftObstruction(u32),
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
