use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not a projection: {0}")]
    NotAProjection(String),
    #[error("matrix is not a partial isometry")]
    NotAPartialIsometry,
    #[error("rank {rank} is out of range for dimension {dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("algebra shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid algebra shape: m = {m}, n = {n}")]
    BadShape { m: usize, n: usize },
    #[error("block index {index} out of range for {m} blocks")]
    BadBlockIndex { index: usize, m: usize },
    #[error("projection is zero")]
    ZeroProjection,
    #[error("projection is not over the center atom {0}")]
    NotOverBeta(usize),
    #[error("operator is not central")]
    NotCentral,
    #[error("module vector block {block} has norm {norm}, expected 0 or 1")]
    NotSubnormalized { block: usize, norm: f64 },
    #[error("projection is not abelian")]
    NotAbelian,
    #[error("partial isometry domain projection is not in the quasipoint")]
    NotInDomain,
    #[error("operator is not unitary")]
    NotUnitary,
    #[error("quasipoints lie over different center atoms ({0} and {1})")]
    DifferentFibre(usize, usize),
    #[error("projections do not form a filter base: total meet is zero")]
    NotAFilterBase,
    #[error("center atom {0} is not in the support of the total meet")]
    AtomNotAdmissible(usize),
    #[error("lattice has {size} elements, cap is {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("m·n = {size} exceeds the cap {cap} (set STONESPEC_CAP to raise it)")]
    ShapeCapExceeded { size: usize, cap: usize },
    #[error("generators {0} and {1} do not commute")]
    NotCommuting(usize, usize),
    #[error("sublattice closure exceeded {0} elements")]
    ClosureCapExceeded(usize),
    #[error("operation requires n >= 2")]
    RequiresNGe2,
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("zero vector cannot define a ray")]
    ZeroVector,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
