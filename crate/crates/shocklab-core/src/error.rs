//! Error taxonomy shared by every module in the crate.
//!
//! The variants are deliberately coarse: callers match on the *kind* of
//! failure (bad input vs. numerical breakdown vs. a physical stop condition),
//! and the payload carries enough detail to reconstruct what happened without
//! re-running.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input left its admissible range. `variable` names the offender.
    #[error("domain error: {variable} = {value:.6e} outside [{min:.6e}, {max:.6e}]")]
    Domain {
        variable: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// An iterative or adaptive method stopped short of its tolerance.
    #[error("numerical error in {context}: achieved {achieved:.3e}, required {required:.3e}")]
    Numerical {
        context: String,
        achieved: f64,
        required: f64,
    },

    /// Configuration is structurally valid JSON but semantically wrong.
    #[error("config error: {0}")]
    Config(String),

    /// Grid construction or grid/stencil compatibility failure.
    #[error("grid error: {0}")]
    Grid(String),

    /// The eikonal front lost its graph structure (|∇u| under the floor).
    #[error("degenerate front: min |grad u| = {min_grad:.3e} below floor {floor:.3e}")]
    DegenerateFront { min_grad: f64, floor: f64 },

    /// The dynamic frame failed a consistency identity beyond tolerance.
    #[error("frame consistency: {0}")]
    FrameConsistency(String),

    /// The acoustical metric lost invertibility at a probed point.
    #[error("metric degeneracy: |det g| = {det:.3e} at {location}")]
    MetricDegenerate { det: f64, location: String },

    /// A state was requested at or beyond the first singular time.
    #[error("shock reached: requested t = {requested:.6} but first singularity at t = {t_sing:.6}")]
    ShockReached { requested: f64, t_sing: f64 },

    /// The time integrator stopped because the state left its admissible box
    /// or a stop condition tripped mid-step.
    #[error("integration abort at t = {time:.6}, step {step}: {reason}")]
    Abort {
        reason: String,
        time: f64,
        step: usize,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
