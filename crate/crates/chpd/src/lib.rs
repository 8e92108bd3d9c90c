//! Combined heat-and-power dispatch over coupled electricity and district
//! heating networks.
//!
//! The library models a radial feeder (branch-flow second-order-cone form)
//! together with a supply/return hot-water network (static hydraulics plus
//! first-order thermal pipe dynamics), relaxes the bilinear couplings with
//! piecewise polyhedral envelopes, and solves the result as a (mixed-integer)
//! second-order cone program via the `conic` crate.
//!
//! Layout:
//! - [`case`]: case model, file schema, validation, bundled test cases.
//! - [`sim`]: reference pipe-temperature simulators (plug-flow parcel
//!   tracking and the simplified dynamics used inside the optimizer).
//! - [`model`]: constraint builders (hydraulics, power, thermal) and
//!   residual evaluators.
//! - [`relax`]: the convexification layer (loss cones, pump regions,
//!   product envelopes) and the partition bookkeeping for refinement.
//! - [`driver`]: dispatch entry points — the convex solve, the adaptive
//!   refinement loop, feasibility recovery, and the constant-flow
//!   benchmark.

pub mod case;
pub mod driver;
pub mod model;
pub mod relax;
pub mod sim;
