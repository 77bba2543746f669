//! Symplectic linear algebra: matrices, the ⋄-product, spectra with Krein
//! signatures, basic normal forms, and iteration classification.

mod classify;
mod matrix;
mod normal_form;
mod spectrum;

pub use classify::{
    angle_rationality, classify_decomposition, classify_iteration, classify_iteration_with, IterationClass,
    Rationality,
};
pub use matrix::{diamond, diamond_all, diamond_slot_indices, slot_block, symplectic_residual, SymplecticMatrix};
pub use normal_form::{decompose_normal_form, make_normal_form, BasicNormalForm, NormalFormDecomposition};
pub use spectrum::{nullity_omega, spectral_data, EigenCluster, SpectralData};

pub(crate) use spectrum::spectral_data_lenient;
