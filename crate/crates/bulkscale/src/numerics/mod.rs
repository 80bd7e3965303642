//! Extended-precision arithmetic, Gauss–Legendre quadrature and power series.

pub mod quad;
pub mod series;
pub mod xreal;

pub use quad::{composite_nodes, composite_quad, legendre_rule, QuadError, QuadratureRule};
pub use series::{Poly, Series};
pub use xreal::{Precision, XReal};
