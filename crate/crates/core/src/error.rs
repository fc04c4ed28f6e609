use thiserror::Error;

/// Which of the three breakdown alternatives a halt or flag refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownCondition {
    /// Control norms of the moving boundary grow without bound.
    ControlNorms,
    /// The time integral of the sup of the vorticity diverges.
    Vorticity,
    /// The flattening map degenerates, the surface reaches the bottom, or the surface turns.
    Geometry,
}

impl std::fmt::Display for BreakdownCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BreakdownCondition::ControlNorms => "a",
            BreakdownCondition::Vorticity => "b'",
            BreakdownCondition::Geometry => "c",
        };
        write!(f, "condition ({s})")
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("inadmissible cutoff: {0}")]
    InvalidCutoff(String),

    #[error("degenerate geometry: min d3phi = {min_d3phi:.3e}, depth margin = {depth_margin:.3e}")]
    DegenerateGeometry { min_d3phi: f64, depth_margin: f64 },

    #[error("elliptic solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("incompatible Neumann data: flux defect {defect:.3e} exceeds {tolerance:.3e}")]
    IncompatibleNeumann { defect: f64, tolerance: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("evolution halted under {condition}: {reason}")]
    Halt {
        condition: BreakdownCondition,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
