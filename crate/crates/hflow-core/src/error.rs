//! Error type shared across the crate.

use core::fmt;

/// Everything that can go wrong while building or running a flow.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid spacing must be strictly positive.
    NonpositiveSpacing,
    /// Bounding box has a zero or negative side.
    DegenerateBox,
    /// A sublevel set contains no grid node.
    EmptyDomain,
    /// The sublevel set reaches the outer frame of the grid, so the domain
    /// is not compactly contained.
    NotCompact,
    /// The initial graph has non-positive mean curvature somewhere.
    NotMeanConvex { node: usize },
    /// Mean curvature dropped to zero or below during a run. The run must
    /// abort; clamping would hide a violated invariant.
    NonpositiveH { node: usize, time: f64 },
    /// CFL safety factor outside (0, 1].
    SafetyOutOfRange,
    /// An explicit step was requested with a step size above the stability
    /// bound.
    DtTooLarge { dt: f64, limit: f64 },
    /// A localization window reaches into the band where the equation is
    /// modified, so the audited bound does not apply.
    WindowTooHigh,
    /// The standing gradient hypothesis `w >= 2 w_lower` fails on the
    /// support of the localization function.
    GradientHypothesisFailed { observed_min_w: f64, required: f64 },
    /// The standing two-sided speed hypothesis `c <= H^alpha / 2 <= 1/c`
    /// fails on the support of the localization function.
    HHypothesisFailed,
    /// A cascade needs at least two heights.
    NeedTwoHeights,
    /// Identity verification needs at least three stored snapshots.
    InsufficientSnapshots,
    /// A marker curve lost strict convexity (kappa <= 0).
    NonpositiveKappa { marker: usize },
    /// Argument outside the domain of a closed-form solution.
    OutOfDomain,
    /// A shrinking curve was queried at or past its extinction time.
    Extinct,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonpositiveSpacing => write!(f, "grid spacing must be > 0"),
            Error::DegenerateBox => write!(f, "bounding box is degenerate"),
            Error::EmptyDomain => write!(f, "sublevel set contains no interior node"),
            Error::NotCompact => write!(f, "sublevel set is not compactly contained in the grid"),
            Error::NotMeanConvex { node } => {
                write!(f, "initial graph not mean convex (H <= 0 at node {node})")
            }
            Error::NonpositiveH { node, time } => {
                write!(f, "mean curvature <= 0 at node {node}, t = {time}")
            }
            Error::SafetyOutOfRange => write!(f, "CFL safety factor must lie in (0, 1]"),
            Error::DtTooLarge { dt, limit } => {
                write!(f, "time step {dt} exceeds stability limit {limit}")
            }
            Error::WindowTooHigh => {
                write!(f, "localization window reaches the modified-equation band")
            }
            Error::GradientHypothesisFailed {
                observed_min_w,
                required,
            } => write!(
                f,
                "gradient hypothesis failed: min w = {observed_min_w} < {required}"
            ),
            Error::HHypothesisFailed => write!(f, "two-sided H^alpha hypothesis failed"),
            Error::NeedTwoHeights => write!(f, "need at least two cascade heights"),
            Error::InsufficientSnapshots => write!(f, "need at least three snapshots"),
            Error::NonpositiveKappa { marker } => {
                write!(f, "curvature <= 0 at marker {marker}")
            }
            Error::OutOfDomain => write!(f, "argument outside the solution's domain"),
            Error::Extinct => write!(f, "curve is extinct at the requested time"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
