//! Exact scalars, bi-polynomials, exterior forms and their text syntax.

pub mod form;
pub mod gauss;
pub mod linear;
pub mod poly;
pub mod scalar;
pub mod text;
pub mod unit;

pub use form::{form_wedge, Form, FormBasis};
pub use gauss::GaussRat;
pub use poly::{wirtinger_derive, BiPoly, CPoly, Coeff, Mono, Poly};
pub use scalar::{Scalar, ScalarSum};
pub use unit::SmoothUnit;
