// NaN must fail validation, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebraic;
pub mod certificate;
pub mod checks;
pub mod circle;
pub mod constants;
pub mod error;
pub mod measure;
pub mod par;
pub mod sl2;
pub mod suite;
pub mod walk;

pub use algebraic::{ExactMatrix, ExactScalar, HeightReport};
pub use certificate::{CertificateReport, Family};
pub use checks::CheckReport;
pub use circle::{CircleMeasure, DerivativeKernel};
pub use error::{Error, Result};
pub use measure::{Atom, MeasureSpec};
pub use sl2::{CartanForm, GroupElement, LieVector, ProjectivePoint};
pub use walk::{LyapunovEstimate, StationaryEstimate};
