//! Motion-controlled tactile recording toolkit.
//!
//! The crate covers the whole offline pipeline for sliding-sweep tactile
//! data over garments:
//!
//! - [`protocol`]: the direction × speed × force recording grid and shared
//!   domain types.
//! - [`motion`]: trapezoidal sweep trajectories inside the attachment area.
//! - [`fabricsim`]: a parametric anisotropic fabric model that produces the
//!   contact/reference audio, triaxial acceleration and force streams a sweep
//!   would record.
//! - [`datastore`]: on-disk dataset layout, manifest, checksums and splits.
//! - [`features`]: log spectrograms, reference-microphone spectral
//!   subtraction and the motion-parameter vector.
//! - [`classifier`]: a small CNN with motion fusion trained from scratch, and
//!   the modality × motion ablation harness.

pub mod classifier;
pub mod datastore;
pub mod dsp;
pub mod error;
pub mod fabricsim;
pub mod features;
pub mod motion;
pub mod protocol;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
