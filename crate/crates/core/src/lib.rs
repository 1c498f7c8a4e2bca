//! Riley representation systems for 2-bridge knots, real branch tracing on
//! the Riley curve, and certificates for intervals of Dehn-surgery slopes
//! realized by non-abelian SL(2, R) representations.

pub mod certify;
pub mod continuation;
pub mod error;
pub mod identities;
pub mod knotspec;
pub mod laurent;
pub mod numeric;
pub mod riley;
pub mod roots;

pub use error::{Error, ErrorClass, Result};
pub use knotspec::{validate_knot, ContinuedFraction, TwoBridgeKnot, WangFamilySpec};
pub use laurent::{BivarPoly, Mat2, UPoly};
pub use numeric::Precision;
pub use riley::{riley_system, RileySystem};
