//! Numerical laboratory for invasion fronts in the coupled system
//!
//! ```text
//!   u_t = d u_xx + alpha u (1 - u) + beta v
//!   v_t =   v_xx +       v (1 - v)
//! ```
//!
//! where v invades independently at speed 2 and feeds the u-equation. The
//! crate computes linear spreading speeds from the dispersion relation,
//! classifies the (d, alpha) parameter plane by which invasion mode wins,
//! builds explicit comparison functions (sub- and super-solutions) that pin
//! the nonlinear front speed from both sides, and runs direct simulations to
//! measure the realized speed.

pub mod bounds;
pub mod error;
pub mod front;
pub mod interp;
pub mod linear;
pub mod ode;
pub mod params;
pub mod quad;
pub mod sim;
pub mod speed;

pub use error::{Error, Result};
pub use linear::{DoubleRoot, Regime, RootLabel, SpeedPrediction};
pub use params::Params;
