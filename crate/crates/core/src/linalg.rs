//! Dense complex linear algebra shared by the gate builders, the dense
//! oracle, and the tensor-network engine.
//!
//! Multi-qubit operators use one fixed ordering everywhere: in `kron(a, b)`
//! the factor `a` acts on the more significant index, so in a register the
//! first listed qubit (site 1) is the most significant bit of a basis index.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{QcaError, Result};

pub type ComplexMatrix = Array2<C64>;

pub fn identity(n: usize) -> ComplexMatrix {
    Array2::eye(n)
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn one_norm(a: &ComplexMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Kronecker product; `a` indexes the more significant block.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let rows = ar.checked_mul(br);
    let cols = ac.checked_mul(bc);
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some() => (r, c),
        _ => {
            return Err(QcaError::DimensionOverflow {
                rows: rows.unwrap_or(usize::MAX),
                cols: cols.unwrap_or(usize::MAX),
            })
        }
    };
    let mut out = Array2::zeros((rows, cols));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            block.zip_mut_with(b, |o, &bv| *o = aij * bv);
        }
    }
    Ok(out)
}

/// Kronecker product of a list of factors, first factor most significant.
pub fn kron_all(factors: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let mut acc = identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The input is scaled to 1-norm at most 1/2, where a truncated Taylor series
/// reaches full double precision within ~20 terms.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(QcaError::NotSquare { rows, cols });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QcaError::InvalidParameter("non-finite matrix entry in expm".into()));
    }
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings as i32));

    let mut result = identity(rows);
    let mut term = identity(rows);
    for k in 1..=60 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if one_norm(&term) <= f64::EPSILON * 1e-3 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

/// ‖U U† − I‖_F.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let prod = u.dot(&dagger(u));
    frobenius_norm(&(prod - identity(u.nrows())))
}

/// Element types accepted by the decomposition kernels.
pub trait DecompScalar: ndarray::LinalgScalar + Send + Sync {
    fn is_finite_value(&self) -> bool;
    fn scale_real(self, s: f64) -> Self;
    /// Thin SVD `A = U diag(s) V^dagger`, returned as (U, s, V^dagger).
    #[doc(hidden)]
    fn thin_svd(a: &Array2<Self>) -> Result<(Array2<Self>, Vec<f64>, Array2<Self>)>;
}

macro_rules! impl_decomp {
    ($t:ty, $re:expr) => {
        impl DecompScalar for $t {
            fn is_finite_value(&self) -> bool {
                let v: $t = *self;
                ($re)(v).is_finite() && ($re)(v * v).is_finite()
            }

            fn scale_real(self, s: f64) -> Self {
                self * s
            }

            fn thin_svd(a: &Array2<Self>) -> Result<(Array2<Self>, Vec<f64>, Array2<Self>)> {
                let (m, n) = a.dim();
                let mat = faer::Mat::<$t>::from_fn(m, n, |i, j| a[[i, j]]);
                let svd = mat
                    .thin_svd()
                    .map_err(|e| QcaError::Decomposition(format!("SVD did not converge: {e:?}")))?;
                let k = m.min(n);
                let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
                let u = Array2::from_shape_fn((m, k), |(i, j)| u[(i, j)]);
                let vh = Array2::from_shape_fn((k, n), |(i, j)| {
                    let x: $t = v[(j, i)];
                    conj_of(x)
                });
                let s = (0..k).map(|i| ($re)(s[i])).collect();
                Ok((u, s, vh))
            }
        }
    };
}

trait Conj {
    fn conj_value(self) -> Self;
}

impl Conj for f64 {
    fn conj_value(self) -> Self {
        self
    }
}

impl Conj for C64 {
    fn conj_value(self) -> Self {
        self.conj()
    }
}

fn conj_of<T: Conj>(x: T) -> T {
    x.conj_value()
}

impl_decomp!(f64, |x: f64| x);
impl_decomp!(C64, |x: C64| x.re);

/// Truncated singular value decomposition `A ≈ U diag(s) V^dagger`.
///
/// `discarded_weight` is the square root of the sum of squared singular
/// values that were dropped, which equals the Frobenius reconstruction error.
#[derive(Debug, Clone)]
pub struct SvdResult<A> {
    pub u: Array2<A>,
    pub singular_values: Array1<f64>,
    pub vt: Array2<A>,
    pub discarded_weight: f64,
}

impl<A: DecompScalar> SvdResult<A> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> Array2<A> {
        let mut us = self.u.clone();
        for (mut col, &s) in us.columns_mut().into_iter().zip(self.singular_values.iter()) {
            col.mapv_inplace(|x| x.scale_real(s));
        }
        us.dot(&self.vt)
    }
}

/// Keep at most `chi` singular values.
pub fn truncated_svd<A: DecompScalar>(a: &Array2<A>, chi: usize) -> Result<SvdResult<A>> {
    truncated_svd_with_cutoff(a, chi, 0.0)
}

/// Keep at most `chi` singular values, additionally dropping those below
/// `rel_cutoff` times the largest one. At least one value is always kept.
pub fn truncated_svd_with_cutoff<A: DecompScalar>(
    a: &Array2<A>,
    chi: usize,
    rel_cutoff: f64,
) -> Result<SvdResult<A>> {
    if chi == 0 {
        return Err(QcaError::InvalidParameter("SVD truncation rank must be >= 1".into()));
    }
    if a.is_empty() {
        return Err(QcaError::ShapeMismatch("SVD of an empty matrix".into()));
    }
    if a.iter().any(|x| !x.is_finite_value()) {
        return Err(QcaError::Decomposition("non-finite entry passed to SVD".into()));
    }
    let (u, s, vt) = A::thin_svd(a)?;
    if s.iter().any(|x| !x.is_finite()) {
        return Err(QcaError::Decomposition("SVD produced non-finite singular values".into()));
    }
    let smax = s.first().copied().unwrap_or(0.0);
    let mut keep = chi.min(s.len()).max(1);
    if rel_cutoff > 0.0 {
        let above = s.iter().take_while(|&&x| x > rel_cutoff * smax).count();
        keep = keep.min(above.max(1));
    }
    let discarded_weight = s.iter().skip(keep).map(|x| x * x).sum::<f64>().sqrt();
    Ok(SvdResult {
        u: u.slice(s![.., ..keep]).to_owned(),
        singular_values: Array1::from(s[..keep].to_vec()),
        vt: vt.slice(s![..keep, ..]).to_owned(),
        discarded_weight,
    })
}

/// Eigenvalues of a Hermitian matrix in ascending order (lower triangle read).
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(QcaError::NotSquare { rows, cols });
    }
    let mat = faer::Mat::<C64>::from_fn(rows, cols, |i, j| a[[i, j]]);
    mat.self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| QcaError::Decomposition(format!("eigensolver did not converge: {e:?}")))
}
