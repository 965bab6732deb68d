//! Shared numerical kernels: quadrature, bracketed root finding, Hermite
//! interpolation, special functions, and small least-squares fits.

pub mod fit;
pub mod interp;
pub mod quad;
pub mod roots;
pub mod special;

pub use fit::{linear_fit_ln, loglog_trend_slope};
pub use interp::{hermite_eval, Antiderivative};
pub use quad::{adaptive_simpson, composite_simpson};
pub use roots::{bisect, brent, expand_bracket};
pub use special::{gauss_quarter_integral, ln_factorial, ln_plus};
