//! Estimates of how many items two independent searchers both missed.
//!
//! The crate covers exact posterior moments of the missed count under
//! several prior and search-procedure scenarios ([`moments`]), the classical
//! capture-recapture estimators ([`classical`]), a numerical posterior used
//! as an independent oracle ([`posterior`]) and a Monte Carlo harness
//! ([`simulator`]).

pub mod classical;
pub mod counts;
pub mod error;
pub mod moments;
pub mod posterior;
pub mod simulator;
pub mod special;

pub use classical::{chapman, lincoln_petersen, seber_variance, ClassicalReport, Estimate};
pub use counts::{Scenario, SearchCounts};
pub use error::{CountsError, PosteriorError, SimError};
pub use moments::{Moment, MomentReport};
pub use posterior::{build_table, PosteriorTable, WeightFamily};
