//! Target localization for a multistatic MIMO radar whose receive arrays are
//! coprime L-shaped arrays.
//!
//! The observed data of every receive array is a third-order tensor
//! (sensor × sample × pulse). All tensors share the transmit-side factor, so
//! together they admit a coupled CPD. The solver turns that decomposition into
//! a joint eigenvalue problem by exploiting the shift invariance of the four
//! uniform subarrays of each receive array, recovers the receive steering
//! matrices, reads direction cosines off them, and intersects the resulting
//! bearing lines to place every target in 3-D.
//!
//! Pipeline, one module per stage:
//!
//! 1. [`geometry`]: array layouts, index sets, steering vectors.
//! 2. [`scene`]: targets, fluctuating RCS, waveforms, observation tensors.
//! 3. [`tensor`]: unfoldings, Khatri–Rao products, compression.
//! 4. [`ccpd`]: target matrices, joint EVD, factor recovery.
//! 5. [`doa`]: generator estimation and coprime ambiguity resolution.
//! 6. [`localization`]: least-squares line fusion and target matching.
//! 7. [`bench`]: seeded Monte Carlo harness and CSV reporting.
//!
//! All lengths are expressed in wavelengths.

pub mod bench;
pub mod ccpd;
pub mod doa;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod localization;
pub mod scene;
pub mod tensor;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Real 3-vector (positions and directions, wavelength units).
pub type Vec3 = nalgebra::Vector3<f64>;
