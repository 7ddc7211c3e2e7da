//! Monte Carlo samplers, distributional identities, limit-theorem constants
//! and large-deviation rate functions for Euclidean norms of random
//! projections of lp-balls, plus the verification harness that checks them.

pub mod ball;
pub mod error;
pub mod fluctuation;
pub mod gof;
pub mod ldp;
pub mod moments;
pub mod numeric;
pub mod parallel;
pub mod projection;
pub mod rng;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
pub use rng::{Provenance, RngStream};
pub use sampling::{PExponent, ScaleConvention, WSpec};
