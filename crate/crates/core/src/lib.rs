//! Birkhoff sums of the singular observable `phi(x) = 1/x + 1/(1-x)` over
//! irrational rotations of the circle.
//!
//! * [`cf`]: exact continued fractions, convergents and fixed-point angles.
//! * [`criterion`]: the `W_n(alpha)` series and a heuristic convergence verdict.
//! * [`orbit`]: certified 128-bit orbit points and closest returns to zero.
//! * [`birkhoff`]: streaming Birkhoff sums, extravagance ratios, `Theta_N`
//!   series and runtime checks of the Denjoy–Koksma type bounds.
//! * [`flow`]: the time-changed linear flow on the two-torus and its
//!   empirical measures.
//! * [`cli`]: the experiment runner behind the `extravagance` binary.

pub mod birkhoff;
pub mod cf;
pub mod cli;
pub mod criterion;
pub mod error;
pub mod flow;
pub mod numeric;
pub mod orbit;

pub use error::{Error, Result};
