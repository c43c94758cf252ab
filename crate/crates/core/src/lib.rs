pub mod bracket;
pub mod dybe;
pub mod error;
pub mod evalrep;
pub mod identities;
pub mod modes;
pub mod ope;
pub mod params;
pub mod qseries;
pub mod report;
pub mod rmatrix;
pub mod scaled;
pub mod suites;

pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
pub use report::{Case, Report};
pub use suites::{run, RunConfig, Suite};
pub use params::{make_params, DynParams, EllipticParams, IntervalSums, Level, Star, Truncation};
