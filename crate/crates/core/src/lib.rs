//! Mammographic mass detection and classification pipeline.
//!
//! The crate covers every stage from raw region-of-interest images to the
//! benchmark tables:
//!
//! * [`dataio`] – image loading, manifests, phantom generation, balancing
//! * [`morphology`] – grayscale morphology and the pattern spectrum
//! * [`wavelets`] – separable 2D Mallat decomposition
//! * [`zernike`] – Zernike polynomials and moment magnitudes
//! * [`features`] – feature extractors, normalization and CSV persistence
//! * [`classifiers`] – ELM, SVM, k-NN, CART and MLP
//! * [`evaluation`] – folds, cross-validation protocol, t-tests, reports

pub mod classifiers;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod image;
pub mod morphology;
pub mod wavelets;
pub mod zernike;

pub use error::{Error, Result};
pub use image::{GrayImage, Plane};
