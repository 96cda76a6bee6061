//! Exact symbolic calculus for Nambu-Poisson structures on a single
//! coordinate chart.
//!
//! Every coefficient is a [`RationalFunction`] over the rationals in the chart
//! coordinates (plus optional constant parameters), so every identity check
//! reduces to an exact zero test on a canonical form.

pub mod calculus;
pub mod chart;
pub mod coeffs;
pub mod error;
pub mod exterior;
pub mod gauge;
pub mod linalg;
pub mod nambu;
pub mod reduction;

pub use chart::Chart;
pub use coeffs::{MultiPoly, Rational, RationalFunction};
pub use error::{Error, Result};
pub use exterior::{Form, MultiIndex, Multivector};
pub use nambu::{FiStatus, NambuStructure};
