//! Change of basis between row-major vectorized operators and the real
//! orthonormal Pauli basis {I, X, Y, Z}/sqrt(2).
//!
//! In the Pauli basis a Hermitian operator has real coefficients and a
//! Hermiticity-preserving map has a real transfer matrix. The basis is
//! orthonormal, so Frobenius norms agree between both representations.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{QcaError, Result};
use crate::linalg::ComplexMatrix;
use crate::model::pauli;

/// Imaginary parts above this mark a map as not Hermiticity-preserving.
const REAL_TOLERANCE: f64 = 1e-10;

/// T[mu, 2i + j] = conj(P_mu[i][j]) / sqrt(2), so that T vec(rho) lists the
/// Pauli coefficients of a single-qubit operator.
pub fn site_transform() -> ComplexMatrix {
    let mut t = Array2::zeros((4, 4));
    for (mu, p) in pauli::basis().iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                t[[mu, 2 * i + j]] = p[[i, j]].conj() / 2f64.sqrt();
            }
        }
    }
    t
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 || n > 8 {
        return Err(QcaError::TooLargeForDense { n_sites: n, max: 8 });
    }
    Ok(())
}

/// Maps a row-major index (i, j) of a 2^n x 2^n operator onto the
/// interleaved digit index (i_1 j_1, ..., i_n j_n), site 1 most significant.
fn interleave(i: usize, j: usize, n: usize) -> usize {
    let mut out = 0;
    for s in 0..n {
        let shift = n - 1 - s;
        let d = (((i >> shift) & 1) << 1) | ((j >> shift) & 1);
        out = (out << 2) | d;
    }
    out
}

/// Applies a 4x4 matrix to the base-4 digit of `site` (0-based, most
/// significant first) in a vector of length 4^n.
fn apply_to_digit(v: &mut [C64], m: &ComplexMatrix, site: usize, n: usize) {
    let stride = 4usize.pow((n - 1 - site) as u32);
    let block = 4 * stride;
    let mut buf = [C64::new(0.0, 0.0); 4];
    for start in (0..v.len()).step_by(block) {
        for off in 0..stride {
            for d in 0..4 {
                buf[d] = v[start + d * stride + off];
            }
            for r in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for d in 0..4 {
                    acc += m[[r, d]] * buf[d];
                }
                v[start + r * stride + off] = acc;
            }
        }
    }
}

fn transform_all_sites(v: &mut [C64], m: &ComplexMatrix, n: usize) {
    for site in 0..n {
        apply_to_digit(v, m, site, n);
    }
}

fn n_from_dim(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(QcaError::ShapeMismatch(format!("operator dimension {dim} is not 2^n")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Pauli-string coefficients Tr(P_mu1 ... P_mun op) / 2^(n/2).
pub fn to_pauli_coefficients(op: &ComplexMatrix) -> Result<Array1<C64>> {
    let (rows, cols) = op.dim();
    if rows != cols {
        return Err(QcaError::NotSquare { rows, cols });
    }
    let n = n_from_dim(rows)?;
    check_sites(n)?;
    let mut v = vec![C64::new(0.0, 0.0); rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            v[interleave(i, j, n)] = op[[i, j]];
        }
    }
    transform_all_sites(&mut v, &site_transform(), n);
    Ok(Array1::from(v))
}

pub fn from_pauli_coefficients(coeffs: &Array1<C64>) -> Result<ComplexMatrix> {
    let len = coeffs.len();
    if len < 4 || !len.is_power_of_two() || len.trailing_zeros() % 2 != 0 {
        return Err(QcaError::ShapeMismatch(format!("{len} is not 4^n")));
    }
    let n = len.trailing_zeros() as usize / 2;
    check_sites(n)?;
    let mut v = coeffs.to_vec();
    let t_dag = site_transform().t().mapv(|z| z.conj());
    transform_all_sites(&mut v, &t_dag, n);
    let dim = 1 << n;
    let mut op = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            op[[i, j]] = v[interleave(i, j, n)];
        }
    }
    Ok(op)
}

/// Applies `f` to every column of `m`.
fn map_columns(m: &ComplexMatrix, f: impl Fn(&mut [C64])) -> ComplexMatrix {
    let mut out = m.clone();
    for mut col in out.columns_mut() {
        let mut buf = col.to_vec();
        f(&mut buf);
        for (o, b) in col.iter_mut().zip(buf) {
            *o = b;
        }
    }
    out
}

fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.t().mapv(|z| z.conj())
}

/// Row-major superoperator (vec(L rho) = S vec(rho)) to the real Pauli
/// transfer matrix. Fails when the map does not preserve Hermiticity.
pub fn superoperator_to_ptm(s: &ComplexMatrix) -> Result<Array2<f64>> {
    let (rows, cols) = s.dim();
    if rows != cols {
        return Err(QcaError::NotSquare { rows, cols });
    }
    let dim = (rows as f64).sqrt().round() as usize;
    if dim * dim != rows {
        return Err(QcaError::ShapeMismatch(format!("superoperator dimension {rows} is not 4^n")));
    }
    let n = n_from_dim(dim)?;
    check_sites(n)?;
    let perm: Vec<usize> = (0..rows).map(|r| interleave(r / dim, r % dim, n)).collect();
    let mut permuted = Array2::zeros((rows, rows));
    for r in 0..rows {
        for c in 0..rows {
            permuted[[perm[r], perm[c]]] = s[[r, c]];
        }
    }
    let t = site_transform();
    // R = T S' T^dagger = (T (T S')^dagger)^dagger
    let left = map_columns(&permuted, |v| transform_all_sites(v, &t, n));
    let full = dagger(&map_columns(&dagger(&left), |v| transform_all_sites(v, &t, n)));
    let max_imag = full.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if max_imag > REAL_TOLERANCE {
        return Err(QcaError::InvalidParameter(format!(
            "map is not Hermiticity-preserving (imaginary part {max_imag:e})"
        )));
    }
    Ok(full.mapv(|z| z.re))
}

pub fn ptm_to_superoperator(r: &Array2<f64>) -> Result<ComplexMatrix> {
    let (rows, cols) = r.dim();
    if rows != cols {
        return Err(QcaError::NotSquare { rows, cols });
    }
    let dim = (rows as f64).sqrt().round() as usize;
    if dim * dim != rows {
        return Err(QcaError::ShapeMismatch(format!("transfer matrix dimension {rows} is not 4^n")));
    }
    let n = n_from_dim(dim)?;
    check_sites(n)?;
    let t_dag = dagger(&site_transform());
    let rc = r.mapv(C64::from);
    // S' = T^dagger R T = (T^dagger (T^dagger R)^dagger)^dagger
    let left = map_columns(&rc, |v| transform_all_sites(v, &t_dag, n));
    let permuted = dagger(&map_columns(&dagger(&left), |v| transform_all_sites(v, &t_dag, n)));
    let perm: Vec<usize> = (0..rows).map(|r| interleave(r / dim, r % dim, n)).collect();
    let mut s = Array2::zeros((rows, rows));
    for r in 0..rows {
        for c in 0..rows {
            s[[r, c]] = permuted[[perm[r], perm[c]]];
        }
    }
    Ok(s)
}
