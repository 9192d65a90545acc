//! Numerics for the statistics of quantum interference under decoherence:
//! completely positive maps built by coupling an n-dimensional system to
//! a thermal spin environment through Haar-random joint unitaries, the
//! interference measure of those maps, closed-form ensemble moments with
//! an exact Weingarten oracle, and parallel reproducible Monte Carlo.
//!
//! The three evaluation routes cross-check each other:
//!
//! ```
//! use cuemap_core::{cue, interference, moments, propagator, thermal};
//!
//! // One realization: a 4-level system coupled to a 2-level spin at x = 0.1.
//! let env = thermal::ThermalEnvironment::new(2, 1, 0.1)?;
//! let joint = cue::sample_cue(8, cue::SeedSpec::new(42, 0))?;
//!
//! // Fast path and full superoperator agree.
//! let fast = interference::interference_fast(&joint, &env, 4)?;
//! let map = propagator::build_propagator(&joint, &env, 4)?;
//! assert!((fast - interference::interference_of_map(&map)).abs() < 1e-12);
//!
//! // The ensemble mean of that quantity has a closed form.
//! let mean = moments::mean_interference(4, 2, 1, 0.1)?;
//! assert!((mean - 0.572855).abs() < 1e-6);
//! # Ok::<(), cuemap_core::Error>(())
//! ```

pub mod cue;
pub mod diagrams;
pub mod ensemble;
pub mod error;
pub mod interference;
pub mod linalg;
pub mod moments;
pub mod perm;
pub mod propagator;
pub mod stats;
pub mod thermal;
pub mod weingarten;

pub use error::{Error, Result};
