//! Commuting operator blocks for the quantized spherical pendulum and the
//! Jaynes–Cummings model, Hermitian eigensolvers and joint spectra.

mod blocks;
mod commute;
mod eigen;
mod spectrum;

pub use blocks::{
    build_jc_blocks, build_pendulum_blocks, build_toric_blocks, quantize, x3_element, BasisDescriptor,
    OperatorBlock, QuantizationParams,
};
pub use commute::{
    assemble_blocks, check_commutation, commutator_ratio, jc_coherent_state, jc_commutation,
    jc_space, JcSpace, SparseOperator,
};
pub use eigen::{
    eigensolve, hermiticity_defect, hermitian_eigen, jacobi_symmetric, tridiagonal_ql, Eigensystem,
};
pub use spectrum::{joint_spectrum, JointSpectrum, SpectralPoint, Truncation, MERGE_TOL};
