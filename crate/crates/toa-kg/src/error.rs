use thiserror::Error;

/// Errors surfaced by the library. The CLI maps validation/regime variants to
/// exit status 2 and tolerance failures to exit status 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("momentum must be non-negative, got {0}")]
    NegativeMomentum(f64),
    #[error("momentum must be strictly positive, got {0}")]
    NonPositiveMomentum(f64),
    #[error("mass must be finite and non-negative, got {0}")]
    InvalidMass(f64),
    #[error("regularization cutoff epsilon must be finite and positive, got {0}")]
    InvalidCutoff(f64),
    #[error("sigma must be strictly positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids are incompatible between the two operands")]
    GridMismatch,
    #[error("operation requires a uniform-Z radial grid")]
    NotUniformZ,
    #[error(
        "grid too coarse for the derivative stencil: self-test error {err:.3e} exceeds {tol:.1e} at probe frequency {probe:.3}"
    )]
    GridTooCoarse { err: f64, tol: f64, probe: f64 },
    #[error("packet must be normalized (KG norm deviates from 1 by {0:.3e})")]
    UnnormalizedPacket(f64),
    #[error("improper (non-normalizable) state not allowed here")]
    ImproperState,
    #[error("t grid must be uniform (max spacing deviation {0:.3e})")]
    NonUniformTGrid(f64),
    #[error("interval [{t1}, {t2}] is reversed or empty")]
    ReversedInterval { t1: f64, t2: f64 },
    #[error("interval [{t1}, {t2}] lies outside the sampled window [{lo}, {hi}]")]
    IntervalOutOfWindow { t1: f64, t2: f64, lo: f64, hi: f64 },
    #[error(
        "T window too narrow: edge density is {edge_ratio:.3e} of the peak (must be < {limit:.1e})"
    )]
    WindowTooNarrow { edge_ratio: f64, limit: f64 },
    #[error("t grid too coarse for the Z window: dt = {dt:.3e} exceeds the alias-free limit {limit:.3e}")]
    AliasingTGrid { dt: f64, limit: f64 },
    #[error("conditional mean undefined: total detection probability {0:.3e} vanishes")]
    UndefinedConditionalMean(f64),
    #[error("zero momentum: the particle never reaches the detector, or sits in it forever")]
    ZeroMomentumClassical,
    #[error("non-relativistic regime violated: kmax = {kmax} must be < m/2 = {limit}")]
    RegimeViolated { kmax: f64, limit: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
