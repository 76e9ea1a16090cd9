//! Toolkit for studying incremental data-uploading (IDU) quantum classifiers.
//!
//! The crate bundles everything needed to train and analyse 10-qubit
//! variational circuits on downscaled image data:
//!
//! - [`qsim`] — dense statevector simulation with analytic adjoint gradients,
//! - [`circuits`] — builders for the IDU and data re-uploading (DRU)
//!   architectures and their encoding variants,
//! - [`data`] — IDX ingestion, bilinear downscaling, angle scaling, splits
//!   and the binary angle cache,
//! - [`train`] — softmax readout, cross-entropy, ADAM and multi-seed
//!   experiment runs,
//! - [`analysis`] — empirical Fisher information, effective dimension and a
//!   Fourier-spectrum probe for small circuits.

pub mod analysis;
pub mod circuits;
pub mod data;
pub mod qsim;
pub mod rng;
pub mod train;
