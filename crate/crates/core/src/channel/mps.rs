//! Vectorized layer density matrices as matrix product states.
//!
//! Each site carries the four real Pauli coefficients of its local operator
//! space. Between public operations the state is right-canonical with the
//! orthogonality centre on site 1.

use ndarray::{s, Array1, Array2, Array3, Axis as NdAxis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::basis::{from_pauli_coefficients, to_pauli_coefficients};
use super::mpo::ChannelMpo;
use super::Axis;
use crate::error::{QcaError, Result};
use crate::linalg::{truncated_svd_with_cutoff, ComplexMatrix};

/// Singular values below this fraction of the largest are dropped even when
/// the bond dimension would allow keeping them.
pub const DEFAULT_REL_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSettings {
    pub chi_mps: usize,
    pub rel_cutoff: f64,
}

impl TruncationSettings {
    pub fn new(chi_mps: usize) -> Self {
        Self { chi_mps, rel_cutoff: DEFAULT_REL_CUTOFF }
    }
}

/// Truncation record for one channel application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerTruncation {
    /// Largest discarded weight over all bonds of the application.
    pub max_bond: f64,
    /// Square root of the summed squared discarded weights.
    pub total: f64,
    /// Trace of the output before renormalization.
    pub trace_before: f64,
    pub max_bond_dimension: usize,
}

#[derive(Debug, Clone)]
pub struct VectorizedLayerState {
    /// (chi_left, 4, chi_right) site tensors.
    sites: Vec<Array3<f64>>,
    log: Vec<LayerTruncation>,
}

fn trace_vector() -> [f64; 4] {
    [2f64.sqrt(), 0.0, 0.0, 0.0]
}

fn axis_vector(axis: Axis) -> [f64; 4] {
    let mut v = [0.0; 4];
    v[axis.pauli_index()] = 2f64.sqrt();
    v
}

/// Contracts a site tensor with a local covector: (chi_left, chi_right).
fn contract_site(t: &Array3<f64>, v: &[f64; 4]) -> Array2<f64> {
    let mut out = Array2::zeros((t.dim().0, t.dim().2));
    for (d, &w) in v.iter().enumerate() {
        if w != 0.0 {
            out.scaled_add(w, &t.index_axis(NdAxis(1), d));
        }
    }
    out
}

impl VectorizedLayerState {
    /// N-fold product of the same single-site Pauli coefficients.
    pub fn product_from_coefficients(site: [f64; 4], n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(QcaError::InvalidParameter("a layer needs at least one site".into()));
        }
        if site.iter().any(|x| !x.is_finite()) {
            return Err(QcaError::InvalidParameter("non-finite site coefficients".into()));
        }
        let norm = site.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QcaError::InvalidParameter("zero site operator".into()));
        }
        let unit = Array3::from_shape_vec((1, 4, 1), site.iter().map(|x| x / norm).collect()).expect("4 entries");
        let mut sites = vec![unit; n_sites];
        // right-canonical: all weight on site 1
        sites[0].mapv_inplace(|x| x * norm.powi(n_sites as i32));
        Ok(Self { sites, log: Vec::new() })
    }

    /// Product of identical qubits with Bloch magnetizations m = <sigma>/2.
    pub fn product_from_bloch(mx: f64, my: f64, mz: f64, n_sites: usize) -> Result<Self> {
        let r = 2f64.sqrt();
        Self::product_from_coefficients([1.0 / r, r * mx, r * my, r * mz], n_sites)
    }

    /// Product of identical copies of a 2x2 Hermitian density matrix.
    pub fn product_from_density(rho: &ComplexMatrix, n_sites: usize) -> Result<Self> {
        if rho.dim() != (2, 2) {
            return Err(QcaError::ShapeMismatch("site density matrix must be 2x2".into()));
        }
        let c = to_pauli_coefficients(rho)?;
        if c.iter().any(|z| z.im.abs() > 1e-12) {
            return Err(QcaError::InvalidParameter("site density matrix is not Hermitian".into()));
        }
        Self::product_from_coefficients([c[0].re, c[1].re, c[2].re, c[3].re], n_sites)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.sites.iter().skip(1).map(|t| t.dim().0).collect()
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.bond_dimensions().into_iter().max().unwrap_or(1)
    }

    pub fn truncation_log(&self) -> &[LayerTruncation] {
        &self.log
    }

    /// Contraction against the vectorized identity on every site.
    pub fn trace(&self) -> f64 {
        let tv = trace_vector();
        let mut env = Array2::<f64>::ones((1, 1));
        for t in &self.sites {
            env = env.dot(&contract_site(t, &tv));
        }
        env[[0, 0]]
    }

    /// <sigma_k^axis> for every site, normalized by the trace.
    pub fn site_expectations(&self, axis: Axis) -> Vec<f64> {
        let n = self.n_sites();
        let tv = trace_vector();
        let av = axis_vector(axis);
        let traced: Vec<Array2<f64>> = self.sites.iter().map(|t| contract_site(t, &tv)).collect();
        // right environments: right[k] = product of traced sites k..n
        let mut right = vec![Array2::<f64>::ones((1, 1)); n + 1];
        for k in (0..n).rev() {
            right[k] = traced[k].dot(&right[k + 1]);
        }
        let trace = right[0][[0, 0]];
        let mut left = Array2::<f64>::ones((1, 1));
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let val = left.dot(&contract_site(&self.sites[k], &av)).dot(&right[k + 1])[[0, 0]];
            out.push(val / trace);
            left = left.dot(&traced[k]);
        }
        out
    }

    /// (1/2N) sum_k <sigma_k^axis>.
    pub fn magnetization(&self, axis: Axis) -> f64 {
        let e = self.site_expectations(axis);
        e.iter().sum::<f64>() / (2.0 * e.len() as f64)
    }

    /// Reduced density matrix of one site (0-based).
    pub fn site_density(&self, site: usize) -> Result<ComplexMatrix> {
        if site >= self.n_sites() {
            return Err(QcaError::SiteOutOfRange { site: site + 1, n_sites: self.n_sites() });
        }
        let tv = trace_vector();
        let mut left = Array2::<f64>::ones((1, 1));
        for t in &self.sites[..site] {
            left = left.dot(&contract_site(t, &tv));
        }
        let mut right = Array2::<f64>::ones((1, 1));
        for t in self.sites[site + 1..].iter().rev() {
            right = contract_site(t, &tv).dot(&right);
        }
        let mut coeffs = Array1::<C64>::zeros(4);
        for d in 0..4 {
            let mut v = [0.0; 4];
            v[d] = 1.0;
            coeffs[d] = C64::from(left.dot(&contract_site(&self.sites[site], &v)).dot(&right)[[0, 0]]);
        }
        let rho = from_pauli_coefficients(&coeffs)?;
        let tr = rho[[0, 0]] + rho[[1, 1]];
        Ok(rho.mapv(|z| z / tr))
    }

    /// Conjugation by the product of sigma_z: X and Y components flip sign.
    pub fn z2_partner(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.sites {
            t.slice_mut(s![.., 1..3, ..]).mapv_inplace(|x| -x);
        }
        out
    }

    /// Full Pauli coefficient vector (site 1 most significant digit).
    pub fn to_coefficients(&self) -> Result<Array1<f64>> {
        let n = self.n_sites();
        if n > 8 {
            return Err(QcaError::TooLargeForDense { n_sites: n, max: 8 });
        }
        // acc[(digits), chi]
        let mut acc = Array2::<f64>::ones((1, 1));
        for t in &self.sites {
            let (cl, d, cr) = t.dim();
            let m = t.to_shape((cl, d * cr)).expect("contiguous").to_owned();
            let next = acc.dot(&m);
            let rows = next.nrows();
            acc = next.into_shape_with_order((rows * d, cr)).expect("row-major regroup");
        }
        Ok(acc.column(0).to_owned())
    }

    /// Dense density matrix (small layers only).
    pub fn to_density_matrix(&self) -> Result<ComplexMatrix> {
        let c = self.to_coefficients()?.mapv(C64::from);
        from_pauli_coefficients(&c)
    }

    /// Applies the channel with zip-up truncation to `trunc.chi_mps`, then
    /// renormalizes the trace and restores right-canonical form.
    pub fn apply_channel(&mut self, channel: &ChannelMpo, trunc: &TruncationSettings) -> Result<()> {
        let n = self.n_sites();
        if channel.n_sites() != n {
            return Err(QcaError::ShapeMismatch(format!("state has {n} sites, channel {}", channel.n_sites())));
        }
        if trunc.chi_mps == 0 {
            return Err(QcaError::InvalidParameter("chi_mps must be >= 1".into()));
        }
        let mut sq_total = 0.0;
        let mut max_bond: f64 = 0.0;
        for (k, bond) in channel.bonds().iter().enumerate() {
            let a = &self.sites[k];
            let b = &self.sites[k + 1];
            let (cl, _, cm) = a.dim();
            let cr = b.dim().2;
            // theta[(l, s), (t, r)]
            let theta = a
                .to_shape((cl * 4, cm))
                .expect("contiguous")
                .dot(&b.to_shape((cm, 4 * cr)).expect("contiguous"));
            // regroup to [(s, t), (l, r)], apply the bond map, regroup back
            let grouped = theta
                .into_shape_with_order((cl, 4, 4, cr))
                .expect("row-major")
                .permuted_axes([1, 2, 0, 3]);
            let grouped = grouped.as_standard_layout().into_owned().into_shape_with_order((16, cl * cr)).expect("standard");
            let mapped = bond.map.dot(&grouped);
            let back = mapped
                .into_shape_with_order((4, 4, cl, cr))
                .expect("row-major")
                .permuted_axes([2, 0, 1, 3]);
            let m = back.as_standard_layout().into_owned().into_shape_with_order((cl * 4, 4 * cr)).expect("standard");
            let svd = truncated_svd_with_cutoff(&m, trunc.chi_mps, trunc.rel_cutoff)?;
            sq_total += svd.discarded_weight.powi(2);
            max_bond = max_bond.max(svd.discarded_weight);
            let keep = svd.rank();
            let mut sv = svd.vt;
            for (mut row, &sigma) in sv.rows_mut().into_iter().zip(svd.singular_values.iter()) {
                row *= sigma;
            }
            self.sites[k] = svd.u.into_shape_with_order((cl, 4, keep)).expect("row-major");
            self.sites[k + 1] = sv.into_shape_with_order((keep, 4, cr)).expect("row-major");
        }
        // closing single-site map on the last site
        let last = &self.sites[n - 1];
        let (cl, _, cr) = last.dim();
        let grouped = last.view().permuted_axes([1, 0, 2]).as_standard_layout().into_owned();
        let mapped = channel.tail().dot(&grouped.into_shape_with_order((4, cl * cr)).expect("standard"));
        self.sites[n - 1] = mapped
            .into_shape_with_order((4, cl, cr))
            .expect("row-major")
            .permuted_axes([1, 0, 2])
            .as_standard_layout()
            .into_owned();

        let trace = self.trace();
        if !trace.is_finite() || trace.abs() < 1e-300 {
            return Err(QcaError::Decomposition(format!("channel output has trace {trace}")));
        }
        self.sites[n - 1].mapv_inplace(|x| x / trace);

        // right-to-left sweep back to right-canonical form
        for k in (1..n).rev() {
            let t = &self.sites[k];
            let (cl, _, cr) = t.dim();
            let m = t.to_shape((cl, 4 * cr)).expect("contiguous").to_owned();
            let svd = truncated_svd_with_cutoff(&m, trunc.chi_mps, trunc.rel_cutoff)?;
            sq_total += svd.discarded_weight.powi(2);
            max_bond = max_bond.max(svd.discarded_weight);
            let keep = svd.rank();
            let mut us = svd.u;
            for (mut col, &sigma) in us.columns_mut().into_iter().zip(svd.singular_values.iter()) {
                col *= sigma;
            }
            self.sites[k] = svd.vt.into_shape_with_order((keep, 4, cr)).expect("row-major");
            let prev = &self.sites[k - 1];
            let (pl, _, _) = prev.dim();
            let merged = prev.to_shape((pl * 4, cl)).expect("contiguous").dot(&us);
            self.sites[k - 1] = merged.into_shape_with_order((pl, 4, keep)).expect("row-major");
        }

        self.log.push(LayerTruncation {
            max_bond,
            total: sq_total.sqrt(),
            trace_before: trace,
            max_bond_dimension: self.max_bond_dimension(),
        });
        Ok(())
    }
}
