//! Homogenization of the oscillating contact angle: stage constants, the first
//! upper candidate, numerical sandwiches and exponent fits.

pub mod fit;
pub mod sandwich;
pub mod schedule;
pub mod upper;

pub use fit::{fit_exponent, fit_reports, ErrorMetric, LineFit};
pub use sandwich::{
    run_sandwich, run_sandwich_with, sweep, SandwichConfig, SandwichPoint, SandwichReport,
};
pub use schedule::{schedule, Schedule};
pub use upper::UpperCandidate;
