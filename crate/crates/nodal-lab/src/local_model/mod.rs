//! Local model around the product-of-spheres singularities: Hermite
//! machinery, Gaussian-weighted polynomials, band-limited truncation with
//! explicit error bounds, and grid certifications.

pub mod bounds;
pub mod certify;
pub mod gauss_poly;
pub mod hermite;
pub mod truncate;

pub use bounds::{cor4_l2_bound, lemma6_check, prop3_bounds, Prop3Bounds};
pub use certify::{corollary4_certify, lemma5_certify, TopologyReport};
pub use gauss_poly::{make_product_spheres_poly, GaussPoly, LocalModelError};
pub use hermite::{hermite, HermitePoly};
pub use truncate::{BandLimited, GridEval, TruncationSpec};
