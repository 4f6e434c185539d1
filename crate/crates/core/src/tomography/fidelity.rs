//! Uhlmann fidelity F = ( Tr sqrt( sqrt(rho1) rho2 sqrt(rho1) ) )^2.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fock::FockDensityMatrix;
use crate::error::Result;

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig
        .eigenvalues
        .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// States with different cutoffs are zero-padded to the larger one.
pub fn fidelity(rho_a: &FockDensityMatrix, rho_b: &FockDensityMatrix) -> Result<f64> {
    let dim = rho_a.dim().max(rho_b.dim());
    let a = rho_a.padded(dim).to_dmatrix();
    let b = rho_b.padded(dim).to_dmatrix();

    let sqrt_a = hermitian_sqrt(&a);
    let inner = &sqrt_a * b * &sqrt_a;
    let eig = inner.symmetric_eigen();
    let trace_root: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((trace_root * trace_root).clamp(0.0, 1.0))
}
