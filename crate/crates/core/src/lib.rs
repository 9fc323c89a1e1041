//! Missing-value estimation by exponential-weight filtering and the seasonal
//! Box-Jenkins workflow: transform, identify, estimate, diagnose, forecast and
//! evaluate a monthly series.

pub mod correlogram;
pub mod diagnostics;
pub mod evaluate;
pub mod filter;
pub mod ingest;
pub mod sarima;
pub mod series;
pub mod special;

pub use series::{Series, Transform};
