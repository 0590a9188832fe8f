//! Numerical laboratory for nodal sets of band-limited Gaussian fields.
//!
//! The crate has three layers:
//!
//! * explicit constants: moment integrals over symbol bodies, the
//!   `rho`/`theta` infima, transversality prices and the double-exponential
//!   lower-bound chains, all in log-domain arithmetic ([`spectral_domain`],
//!   [`constants`], [`logreal`]);
//! * the constructive local model: Hermite polynomials, Gaussian-polynomial
//!   barriers, their band-limited truncations and grid certifications
//!   ([`local_model`], [`transversality`]);
//! * a Monte Carlo ensemble of band-limited random sections on flat tori
//!   `T^n = (R/2piZ)^n`, `n = 1, 2`, with nodal extraction and estimators
//!   ([`simulator`]).

pub mod constants;
pub mod local_model;
pub mod logreal;
pub mod nodal;
pub mod optim;
pub mod output;
pub mod quad;
pub mod report;
pub mod simulator;
pub mod special;
pub mod spectral_domain;
pub mod transversality;

pub use logreal::LogReal;
pub use spectral_domain::{MultiIndex, SymbolBody};
