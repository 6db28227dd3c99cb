//! Phase-field simulation of mean curvature flow with a transport term.
//!
//! The solver advances the Allen-Cahn equation
//!
//! ```text
//!   dphi/dt + u_eps . grad(phi) = lap(phi) - W'(phi)/eps^2
//! ```
//!
//! on the periodic unit torus, and the diagnostics modules measure the
//! geometric quantities that control the sharp-interface limit: the diffused
//! surface measure and its discrepancy, ball density ratios, the truncated
//! backward-heat-kernel functional, the BV projection of the phase field, and
//! the extracted zero level set.
//!
//! Module map:
//! - [`potential`]: double-well potentials, the 1-D standing wave, surface
//!   tension, and the BV projection map.
//! - [`grid`]: periodic lattice, fields, discrete operators, ball geometry.
//! - [`transport`]: transport fields, mixed Sobolev norms, mollification.
//! - [`init`]: initial data from a hypersurface via truncated signed distance.
//! - [`solver`]: explicit and semi-implicit time stepping.
//! - [`measures`]: energy density, discrepancy, density ratios, BV projection,
//!   and the per-step weak motion-law residual.
//! - [`monotonicity`]: truncated backward heat kernel and monotonicity audits.
//! - [`interface`]: level-set extraction, circle/sphere fits, local density.
//! - [`harness`]: scenario configs, orchestration, CSV reports, and the CLI.

pub mod grid;
pub mod harness;
pub mod init;
pub mod interface;
pub mod measures;
pub mod monotonicity;
pub mod potential;
pub mod solver;
pub mod transport;
pub mod util;
