use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A stencil at this node would leave the grid.
    OutOfStencil { node: usize },
    /// A ball radius is below the resolution floor of four cells.
    UnderResolved { radius: f64, min: f64 },
    /// A ball or box leaves the grid.
    Domain,
    /// Two fields live on different grids.
    IncompatibleGrid,
    /// Invalid grid or parameter.
    InvalidInput(&'static str),
    /// The rasterized interface self-intersects or pinches off.
    DegenerateInterface(&'static str),
    /// The relaxation solver hit its sweep budget.
    SolverStall { sweeps: usize, residual: f64 },
    /// Both functions vanish on the fitting region, or a slope is zero.
    DegenerateFit,
    /// Operation only implemented in two dimensions.
    UnsupportedDimension(usize),
    /// Nothing qualified (empty stratum, all centers gated out, ...).
    Empty(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfStencil { node } => write!(f, "stencil at node {node} leaves the grid"),
            Error::UnderResolved { radius, min } => {
                write!(f, "radius {radius} is below the resolved scale {min}")
            }
            Error::Domain => write!(f, "ball leaves the grid"),
            Error::IncompatibleGrid => write!(f, "fields are sampled on different grids"),
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
            Error::DegenerateInterface(what) => write!(f, "degenerate interface: {what}"),
            Error::SolverStall { sweeps, residual } => {
                write!(f, "solver stalled after {sweeps} sweeps (residual {residual:e})")
            }
            Error::DegenerateFit => write!(f, "degenerate fit"),
            Error::UnsupportedDimension(n) => write!(f, "unsupported dimension {n}"),
            Error::Empty(what) => write!(f, "empty: {what}"),
        }
    }
}

impl core::error::Error for Error {}
