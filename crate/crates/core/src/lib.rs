//! Chordal Loewner evolution driven by a shared Brownian sample across a
//! range of κ, with numerical checks of sup-norm perturbation bounds,
//! derivative moments, box-image decay and Hölder continuity in `t` and κ.
//!
//! The library is organised bottom-up:
//!
//! * [`loewner`]: elementary slit maps, the reverse flow `f_t`, its
//!   derivative, the forward flow `g_t` and trace extraction.
//! * [`driving`]: reproducible dyadic Brownian samples and sampled driving
//!   functions, with a small text file format.
//! * [`perturbation`]: sup-norm bounds between two flows and a harness that
//!   checks them.
//! * [`exponents`]: the exponent functions of `(κ, β)` and the derived
//!   thresholds and Hölder lower bounds.
//! * [`whitney`]: dyadic boxes in `(t, y, κ)`, their image diameters and
//!   decay fits.
//! * [`montecarlo`]: moment, tail and continuity scans.
//! * [`cli`]: the `sle-kappa` command-line tool.

pub mod cli;
pub mod driving;
pub mod error;
pub mod exponents;
pub mod loewner;
pub mod montecarlo;
pub mod perturbation;
pub mod rng;
pub mod roots;
pub mod stats;
pub mod whitney;

pub use driving::{BrownianSample, DrivingTerm, Interpolation, TimeGrid};
pub use error::{Error, Result};
pub use exponents::ExponentParams;
pub use loewner::{HalfPlanePoint, LoewnerChain, Trace};
pub use whitney::{CornerPoint, WhitneyBox};
