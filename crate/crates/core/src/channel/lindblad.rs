//! Continuous-time Lindblad generator of the chain, used only to validate
//! the collision limit of the layer channel at small N.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::dense::embed_site_operator;
use crate::error::{QcaError, Result};
use crate::linalg::{dagger, expm, identity, kron, ComplexMatrix};
use crate::model::{build_jump_operator, pauli, JumpParams, ModelParams};

/// Open-chain Hamiltonian sum_k (Omega/2) sigma^z_k - (V/4) sum_k sigma^x_k sigma^x_{k+1}.
pub fn chain_hamiltonian(params: &ModelParams) -> Result<ComplexMatrix> {
    let n = params.n_sites;
    if n == 0 || n > 6 {
        return Err(QcaError::TooLargeForDense { n_sites: n, max: 6 });
    }
    let dim = 1 << n;
    let mut h = Array2::zeros((dim, dim));
    for k in 0..n {
        h = h + embed_site_operator(&pauli::z(), k, n)?.mapv(|z| z * (params.omega / 2.0));
    }
    for k in 0..n.saturating_sub(1) {
        let xx = embed_site_operator(&pauli::x(), k, n)?.dot(&embed_site_operator(&pauli::x(), k + 1, n)?);
        h = h - xx.mapv(|z| z * (params.v / 4.0));
    }
    Ok(h)
}

/// Row-major superoperator of the generator.
pub fn lindbladian(params: &ModelParams, jp: &JumpParams) -> Result<ComplexMatrix> {
    params.validate()?;
    let n = params.n_sites;
    let h = chain_hamiltonian(params)?;
    let dim = 1 << n;
    let id = identity(dim);
    let minus_i = C64::new(0.0, -1.0);
    let mut l = (kron(&h, &id)? - kron(&id, &h.t().to_owned())?).mapv(|z| z * minus_i);
    let jump = build_jump_operator(jp, params.kappa);
    for k in 0..n {
        let j = embed_site_operator(&jump, k, n)?;
        let jdj = dagger(&j).dot(&j);
        l = l + kron(&j, &j.mapv(|z| z.conj()))?
            - kron(&jdj, &id)?.mapv(|z| z * 0.5)
            - kron(&id, &jdj.t().to_owned())?.mapv(|z| z * 0.5);
    }
    Ok(l)
}

/// exp(L dt) as a row-major superoperator.
pub fn lindblad_step(params: &ModelParams, jp: &JumpParams) -> Result<ComplexMatrix> {
    let l = lindbladian(params, jp)?;
    expm(&l.mapv(|z| z * params.dt))
}
