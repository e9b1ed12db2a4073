//! Distinct-digit statistics for affine full-branch countable iterated
//! function systems with regularly varying branch weights.
//!
//! The crate is organised around the objects one needs to study how many
//! distinct digits appear in such expansions:
//!
//! * [`weights`]: probability sequences `p_k` with regularly varying tails,
//!   tail sums, tilted sums, the `s_K` roots and empirical Potter constants.
//! * [`codec`]: the affine full-branch map on `[0,1)`, digit encoding and
//!   cylinder intervals (including the classical Lüroth layout).
//! * [`occupancy`]: distinct-digit counters, exact occupancy expectations and
//!   Monte Carlo checks of the `n^{1/ρ}` law.
//! * [`linear`]: the block-concatenation construction for linear
//!   distinctness rates and its uniform block measure.
//! * [`sublinear`]: the forced-digit construction for sublinear profiles and
//!   its product measure.
//! * [`tilt`]: tilted digit laws and the cylinder sums `S_n(s, θ)`.
//! * [`verify`]: named invariant suites used by the command-line front end.

pub mod codec;
pub mod error;
pub mod linear;
pub mod numeric;
pub mod occupancy;
pub mod rate;
pub mod rng;
pub mod sampler;
pub mod sublinear;
pub mod tilt;
pub mod verify;
pub mod weights;

pub use codec::{Cylinder, DigitWord, Layout};
pub use error::{Error, Result};
pub use rate::Rate;
pub use weights::{ModelSpec, WeightModel};
