//! Simulation and analysis toolkit for secret key generation over
//! block-fading channels assisted by a reconfigurable intelligent surface
//! (RIS).
//!
//! Alice and Bob probe their reciprocal channel with pilots while the RIS
//! re-randomizes its phase configuration every `t_s` symbols. Each switching
//! period yields one least-squares channel estimate per node; the phases of
//! those estimates are quantized into key bits. Eve observes passively.
//!
//! The crate is organized bottom-up:
//!
//! * [`params`]: validated system parameters, derived quantities and the
//!   seeding contract.
//! * [`channel`]: Rayleigh block realizations, RIS phase schedules and the
//!   aggregate (direct + cascaded) channels.
//! * [`estimation`]: LS channel estimates at Alice, Bob and Eve.
//! * [`keygen`]: phase quantization, key assembly and match statistics.
//! * [`theory`]: closed-form secret-key-rate lower bound and an independent
//!   Gaussian mutual-information oracle.
//! * [`experiment`], [`presets`], [`config`], [`selftest`]: Monte Carlo
//!   orchestration, CSV output and the pieces behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod experiment;
pub mod keygen;
pub mod params;
pub mod presets;
pub mod selftest;
pub mod theory;

pub use error::{Error, Result};
pub use params::{DerivedParams, ParamError, RandomSource, SystemParams};
