//! Column-major matrix primitives, file formats, and QR machinery.

pub mod io;
mod matrix;
mod qr;

pub use matrix::DenseMatrix;
pub use qr::{
    solve_upper_triangular, GivensRotation, HouseholderReflector, QrWorkspace, Transform,
};
