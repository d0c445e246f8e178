//! Column-skeleton low-rank approximation: interpolative decompositions,
//! randomized SVD, rank-revealing QR and a suite of a-posteriori error
//! bounds tied to the coherence of the dominant right singular subspace.
//!
//! ```
//! use skelet_core::{id, testgen::{build_test_matrix, SpectrumProfile, SubspaceKind, TestMatrixSpec}};
//!
//! let spec = TestMatrixSpec::new(64, SpectrumProfile::default_geometric(), 0.3, SubspaceKind::MixedHadamardPermutation, 1);
//! let t = build_test_matrix(&spec).unwrap();
//! let decomposition = id::gks(&t.a, 8, id::Pivoter::default()).unwrap();
//! assert!(decomposition.error_spectral(&t.a) >= t.s[8] * (1.0 - 1e-10));
//! ```

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod id;
pub mod kv;
pub mod linalg;
pub mod matrix;
pub mod pivoting;
pub mod sketch;
pub mod testgen;

pub use error::{Error, Result};
pub use matrix::Matrix;
