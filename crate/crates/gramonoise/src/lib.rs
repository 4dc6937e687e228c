//! # gramonoise
//!
//! Synthesis of gramophone-record noise textures with a continuous-time
//! variance-preserving diffusion model, trained at desk scale on any mono
//! WAV corpus. Three sampling modes are provided:
//!
//! - **Unconditional**: draw one disk revolution of noise from the prior.
//! - **Guided**: refine a classically synthesized draft (hiss, clicks,
//!   thumps, hum, rumble) by truncated reverse diffusion from a step τ₀.
//! - **Variations**: bifurcate one trajectory at a step τ_p into N
//!   correlated revolutions and assemble them into an endless track.
//!
//! The crate also ships the classical-DSP guide synthesizer itself and an
//! analysis suite (temporal envelopes, Bark-smoothed spectral envelopes,
//! pairwise deviation profiles, log-spectrograms) used to characterize how
//! far refined samples drift from their guides.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `gramonoise` binary for the command-line front end.

pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod denoiser;
pub mod error;
pub mod guides;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod trainer;

pub use error::{Error, Result};
