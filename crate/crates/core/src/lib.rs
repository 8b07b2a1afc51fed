//! Emission-aware scheduling of distributed grid-scale battery storage.
//!
//! The crate is organised around the data flow of a day-ahead experiment:
//!
//! * [`domain`] holds the value types shared everywhere (time grid, transformers,
//!   storage, load series, schedules) and the emission accounting helpers.
//! * [`carbon`] turns hourly locational marginal prices into per-fuel marginal
//!   factors and therefore a marginal carbon intensity series.
//! * [`forecast`] fits a ridge-regularised autoregressive load model and derives
//!   per-slot deviation bands.
//! * [`optimize`] compiles a day into a linear program (nominal or robust under a
//!   budget of uncertainty) and solves it.
//! * [`sim`] runs the scheduling policies over a multi-day horizon and accounts
//!   the realized savings.
//! * [`io`], [`config`] and [`synth`] cover file formats, run configuration and
//!   the seeded synthetic dataset.

pub mod carbon;
pub mod config;
pub mod domain;
pub mod error;
pub mod forecast;
pub mod io;
pub mod optimize;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
