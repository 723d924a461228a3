//! shocklab-core: a numerical laboratory for acoustic shock formation in the
//! 3D compressible Euler equations with vorticity and entropy.
//!
//! The crate simulates smooth solutions up to the first gradient singularity,
//! tracks the geometry of acoustic characteristics (an eikonal function, the
//! inverse foliation density μ, and a dynamic null-adapted frame), verifies a
//! wave–transport reformulation of the system term by term, and measures the
//! quantitative signatures of stable shock formation: the blowup time for
//! simple plane waves, the linear decay of min μ, the boundedness of
//! characteristic-aligned derivatives while Cartesian gradients blow up, and
//! the survival of Hölder-1/3 regularity through the singularity.
//!
//! Modules, bottom up:
//!
//! * [`error`] — shared error taxonomy.
//! * [`eos`] — equation-of-state closures (polytropic, Chaplygin, tabulated).
//! * [`kernel`] — grid, high-order stencils, deterministic reductions, filter.
//! * [`io`] — field snapshots (JSON header + little-endian f64 payload).
//! * [`plane_wave`] — exact 1D simple-wave solutions, blowup time, δ*.
//! * [`state`] — the evolved fluid state and wave-variable changes of basis.
//! * [`euler3d`] — RK4 method-of-lines integrator for the 3D system.
//! * [`geometry`] — eikonal co-evolution, μ, the dynamic frame {L, X, Y, Z}.
//! * [`reformulate`] — acoustical metric, covariant wave operator, and the
//!   residual checkers for the wave–transport reformulation identities.
//! * [`diagnostics`] — sup-norm tables, blowup correlations, Hölder
//!   seminorms, energies, singular-set sampling.
//! * [`config`] — run configuration, validation, scenario drivers.

pub mod config;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod euler3d;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod plane_wave;
pub mod reformulate;
pub mod state;

pub use error::{Error, Result};
