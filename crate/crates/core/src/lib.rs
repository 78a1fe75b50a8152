//! Electric network frequency (ENF) modeling, synthesis, estimation and
//! time-stamp matching.
//!
//! The modules follow the processing chain: [`model`] describes and fits
//! ENF series, [`synthesis`] turns them into noisy ENF or waveforms,
//! [`estimation`] recovers ENF from waveforms, [`matching`] locates a test
//! inside a reference, and [`harness`] runs Monte Carlo accuracy sweeps over
//! all of it. [`io`] reads and writes the file formats and keeps a
//! time-indexed reference store.
//!
//! ```
//! use enf_core::matching::match_cc;
//! use enf_core::model::{synthesize_ar1, Ar1Params};
//!
//! let reference = synthesize_ar1(3600, Ar1Params::new(0.99, 0.007)?, 1.0, 50.0, 1)?;
//! let test = reference.slice(600, 300)?;
//! assert_eq!(match_cc(&test, &reference)?.k_hat, 600);
//! # Ok::<(), enf_core::EnfError>(())
//! ```

pub mod error;
pub mod estimation;
pub mod harness;
pub mod io;
pub mod matching;
pub mod model;
pub mod rng;
pub mod synthesis;

pub use error::{EnfError, Result};
