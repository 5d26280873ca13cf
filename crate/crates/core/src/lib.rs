//! Exact and asymptotic distributional quantities for a Cox process whose
//! intensity is a Poisson shot-noise process.
//!
//! The crate provides, for a model `(nu, rho, g)`:
//!
//! * closed-form kernel integrals ([`model`]),
//! * the limiting and finite-horizon cumulant generating functions with the
//!   limiting function `psi` and a convergence-gap diagnostic ([`cgf`]),
//! * the Legendre transform / saddle-point machinery ([`rate`]),
//! * an exact probability mass oracle by probability-generating-function
//!   inversion on roots of unity ([`exactdist`]),
//! * sharp large- and moderate-deviation estimates ([`asymptotics`]),
//! * an exact, reproducible Monte Carlo simulator ([`sim`]).

pub mod asymptotics;
pub mod cgf;
pub mod config;
pub mod error;
pub mod exactdist;
pub mod fft;
pub mod model;
pub mod quad;
pub mod rate;
pub mod rng;
pub mod sim;
pub mod stats;

pub use asymptotics::{DeviationEstimate, Regime};
pub use cgf::Cgf;
pub use error::{Error, Result};
pub use exactdist::{IncrementLaw, PmfTable, TailEstimate};
pub use model::{Kernel, ModelParams};
pub use rate::SaddlePoint;
pub use sim::{SimBatch, SimConfig, SimMode, Summary};
