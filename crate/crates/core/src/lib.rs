//! Exact finite-field machinery and spectral measurements for graded-poset
//! expansion: the matrix poset over GF(2^b), Grassmannian complexes built
//! from low-rank matrices, the Cayley simplicial complexes they generate,
//! the associated weight-3 LDPC code pair, and F2 1-homology with its
//! quotienting procedure.

pub mod bits;
pub mod cayley;
pub mod codes;
pub mod error;
pub mod gf;
pub mod grassmann;
pub mod homology;
pub mod matrix_poset;
pub mod poset;
pub mod verify;
pub mod walks;

pub use error::HdxError;
