//! Crate-wide error type.
//!
//! Every fallible operation returns `Result<_, QsympError>`. Variants are
//! grouped by failure mode so the CLI can map them onto exit codes: config
//! and schema problems exit 2, numerical failures exit 3, and warnings that
//! a `--strict` run escalates exit 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QsympError {
    /// Invalid configuration: schema violations, dimension mismatches,
    /// unparseable constants, inconsistent schedules.
    #[error("config: {0}")]
    Config(String),

    /// A Fourier mode with nonzero coefficient lies in the kernel of the
    /// frequency matrix, so the field cannot be ergodically averaged.
    #[error("resonant mode {mode:?}: |m A| = 0 with nonzero coefficient")]
    ResonantMode { mode: Vec<i64> },

    /// The pulled-back gradient vanishes identically; there is nothing
    /// to enumerate.
    #[error("degenerate field: pulled-back gradient is identically zero")]
    DegenerateField,

    /// The generating perturbation is too steep for an invertible fiber
    /// equation, or the implicit solve failed to contract.
    #[error("twist violation: {0}")]
    TwistViolation(String),

    /// The upper-left block of a hat-map Jacobian is numerically singular,
    /// so the block transform back to phase-space derivatives is undefined.
    #[error("degenerate hat-jacobian: |det A-block| = {det:e}")]
    DegenerateHatJacobian { det: f64 },

    /// The fixed-point equation for the hat displacement failed to contract.
    #[error("non-twist displacement: {0}")]
    NonTwistDisplacement(String),

    /// Arclength budget exhausted before a level-set component closed up.
    #[error("open component: arclength {arclength} exceeded budget without closure")]
    OpenComponent { arclength: f64 },

    /// The level set fails the regular-value condition at a traced point.
    #[error("degenerate level set at {location:?}: surface jacobian {jacobian:e}")]
    DegenerateLevelSet { location: Vec<f64>, jacobian: f64 },

    /// Level-set geometry is only implemented for codimension 0 and 1.
    #[error("unsupported codimension: torus dim {torus_dim} - map dim {map_dim} must be 0 or 1")]
    UnsupportedCodimension { torus_dim: usize, map_dim: usize },

    /// Requested momentum leaves the annulus fiber of the 2D twist map.
    #[error("outside annulus: no fiber solution for (q, p) = ({q}, {p})")]
    OutsideAnnulus { q: f64, p: f64 },

    /// A census over a region that should contain points came back unusable.
    #[error("incomplete census: {0}")]
    IncompleteCensus(String),

    /// Step-halving certificate failed for the flow integrator.
    #[error("step too large: halving changed the result by {error:e} (tolerance {tolerance:e})")]
    StepTooLarge { error: f64, tolerance: f64 },

    /// Generic numerical failure (non-convergent iteration, singular solve).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl QsympError {
    /// Process exit code the CLI maps this error onto.
    pub fn exit_code(&self) -> i32 {
        match self {
            QsympError::Config(_) | QsympError::Json(_) => 2,
            _ => 3,
        }
    }
}
