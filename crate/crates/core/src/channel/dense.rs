//! Dense reference implementation of the one-layer channel for small layers.
//!
//! Register layout for the two-layer pure state: old sites 1..N followed by
//! new sites 1..N, old site 1 the most significant qubit.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::Axis;
use crate::error::{QcaError, Result};
use crate::linalg::{dagger, frobenius_norm, hermitian_eigenvalues, identity, kron, kron_all, ComplexMatrix};
use crate::model::{build_gate_sequence, pauli, JumpParams, Leg, LocalGate, ModelParams};

pub const MAX_DENSE_SITES: usize = 6;

fn check_dense(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_SITES {
        return Err(QcaError::TooLargeForDense { n_sites: n, max: MAX_DENSE_SITES });
    }
    Ok(())
}

/// Operator acting as `op` on `site` (0-based) of an n-qubit register.
pub fn embed_site_operator(op: &ComplexMatrix, site: usize, n: usize) -> Result<ComplexMatrix> {
    if site >= n {
        return Err(QcaError::SiteOutOfRange { site: site + 1, n_sites: n });
    }
    let id = identity(2);
    let factors: Vec<&ComplexMatrix> = (0..n).map(|s| if s == site { op } else { &id }).collect();
    kron_all(&factors)
}

/// Density matrix of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerState {
    rho: ComplexMatrix,
    n_sites: usize,
}

impl DenseLayerState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        let (rows, cols) = rho.dim();
        if rows != cols {
            return Err(QcaError::NotSquare { rows, cols });
        }
        if !rows.is_power_of_two() || rows < 2 {
            return Err(QcaError::ShapeMismatch(format!("dimension {rows} is not 2^N")));
        }
        let n_sites = rows.trailing_zeros() as usize;
        check_dense(n_sites)?;
        Ok(Self { rho, n_sites })
    }

    /// N-fold product of a single-qubit density matrix.
    pub fn product(site_rho: &ComplexMatrix, n_sites: usize) -> Result<Self> {
        check_dense(n_sites)?;
        let factors: Vec<&ComplexMatrix> = (0..n_sites).map(|_| site_rho).collect();
        Self::new(kron_all(&factors)?)
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn trace(&self) -> C64 {
        self.rho.diag().sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        frobenius_norm(&(&self.rho - &dagger(&self.rho)))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let herm = (&self.rho + &dagger(&self.rho)).mapv(|z| z * 0.5);
        Ok(hermitian_eigenvalues(&herm)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn site_expectation(&self, op: &ComplexMatrix, site: usize) -> Result<C64> {
        let full = embed_site_operator(op, site, self.n_sites)?;
        Ok(full.dot(&self.rho).diag().sum())
    }

    /// (1/2N) sum_k <sigma_k^axis>.
    pub fn magnetization(&self, axis: Axis) -> f64 {
        let op = axis.pauli();
        let total: f64 = (0..self.n_sites)
            .map(|k| self.site_expectation(&op, k).map(|z| z.re).unwrap_or(f64::NAN))
            .sum();
        total / (2.0 * self.n_sites as f64)
    }

    /// Conjugation by the product of sigma_z over the layer.
    pub fn z2_partner(&self) -> Self {
        let z = pauli::z();
        let factors: Vec<&ComplexMatrix> = (0..self.n_sites).map(|_| &z).collect();
        let p = kron_all(&factors).expect("layer size already validated");
        Self { rho: p.dot(&self.rho).dot(&p), n_sites: self.n_sites }
    }
}

/// Applies a gate acting on the given register positions (0 = most
/// significant, first listed leg = most significant gate index) to a state
/// vector of `n_qubits` qubits.
pub fn apply_gate_to_vector(psi: &mut [C64], gate: &ComplexMatrix, positions: &[usize], n_qubits: usize) {
    let l = positions.len();
    let bits: Vec<usize> = positions.iter().map(|p| n_qubits - 1 - p).collect();
    let mask: usize = bits.iter().map(|b| 1 << b).sum();
    let local_dim = 1 << l;
    let offset = |local: usize| -> usize {
        let mut idx = 0;
        for (q, b) in bits.iter().enumerate() {
            if (local >> (l - 1 - q)) & 1 == 1 {
                idx |= 1 << b;
            }
        }
        idx
    };
    let offsets: Vec<usize> = (0..local_dim).map(offset).collect();
    let mut buf = vec![C64::new(0.0, 0.0); local_dim];
    for base in 0..psi.len() {
        if base & mask != 0 {
            continue;
        }
        for (b, off) in buf.iter_mut().zip(&offsets) {
            *b = psi[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, b) in buf.iter().enumerate() {
                acc += gate[[r, c]] * b;
            }
            psi[base | off] = acc;
        }
    }
}

fn leg_position(leg: &Leg, n: usize) -> usize {
    match *leg {
        Leg::Old(k) => k - 1,
        Leg::New(k) => n + k - 1,
    }
}

/// Kraus representation of the layer channel, built by pushing every old-layer
/// basis state through the gate sequence and reading off the isometry.
#[derive(Debug, Clone)]
pub struct DenseChannel {
    pub params: ModelParams,
    pub jump: JumpParams,
    kraus: Vec<ComplexMatrix>,
}

impl DenseChannel {
    pub fn build(params: &ModelParams, jp: &JumpParams) -> Result<Self> {
        let gates = build_gate_sequence(params, jp)?;
        Self::from_gates(params, jp, &gates)
    }

    /// Same construction from an explicit gate list (used to inject faults in
    /// validation runs).
    pub fn from_gates(params: &ModelParams, jp: &JumpParams, gates: &[LocalGate]) -> Result<Self> {
        let n = params.n_sites;
        check_dense(n)?;
        let layer = 1usize << n;
        let total = 2 * n;
        let mut isometry = Array2::<C64>::zeros((layer * layer, layer));
        for x in 0..layer {
            let mut psi = vec![C64::new(0.0, 0.0); layer * layer];
            psi[x * layer] = C64::new(1.0, 0.0);
            for g in gates {
                let positions: Vec<usize> = g.legs.iter().map(|l| leg_position(l, n)).collect();
                apply_gate_to_vector(&mut psi, &g.matrix, &positions, total);
            }
            for (r, amp) in psi.into_iter().enumerate() {
                isometry[[r, x]] = amp;
            }
        }
        let kraus = (0..layer)
            .map(|m| isometry.slice(ndarray::s![m * layer..(m + 1) * layer, ..]).to_owned())
            .collect();
        Ok(Self { params: *params, jump: *jp, kraus })
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }

    pub fn kraus_operators(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, state: &DenseLayerState) -> Result<DenseLayerState> {
        if state.n_sites != self.n_sites() {
            return Err(QcaError::ShapeMismatch(format!(
                "state has {} sites, channel {}",
                state.n_sites,
                self.n_sites()
            )));
        }
        let mut out = Array2::zeros(state.rho.dim());
        for k in &self.kraus {
            out = out + k.dot(&state.rho).dot(&dagger(k));
        }
        Ok(DenseLayerState { rho: out, n_sites: state.n_sites })
    }

    /// Row-major superoperator: vec(L rho) = S vec(rho), S = sum_m K_m (x) conj(K_m).
    pub fn superoperator(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << (2 * self.n_sites());
        let mut s = Array2::zeros((dim, dim));
        for k in &self.kraus {
            s = s + kron(k, &k.mapv(|z| z.conj()))?;
        }
        Ok(s)
    }

    /// ‖sum_m K_m^dagger K_m − I‖_F.
    pub fn trace_preservation_defect(&self) -> f64 {
        let dim = 1usize << self.n_sites();
        let mut acc = Array2::zeros((dim, dim));
        for k in &self.kraus {
            acc = acc + dagger(k).dot(k);
        }
        frobenius_norm(&(acc - identity(dim)))
    }

    /// Choi matrix sum_{ij} |i><j| (x) L(|i><j|), input index most significant.
    pub fn choi_matrix(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n_sites();
        let mut choi = Array2::zeros((dim * dim, dim * dim));
        for k in &self.kraus {
            // vec of K_m in row-major order is the column |K_m>> of the Choi sum
            let mut v = Array2::zeros((dim * dim, 1));
            for i in 0..dim {
                for o in 0..dim {
                    v[[i * dim + o, 0]] = k[[o, i]];
                }
            }
            choi = choi + v.dot(&dagger(&v));
        }
        Ok(choi)
    }

    pub fn choi_eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.choi_matrix()?)
    }

    /// ‖S P − P S‖_F with P the superoperator of the layer-wise sigma_z conjugation.
    pub fn z2_commutator_norm(&self) -> Result<f64> {
        let s = self.superoperator()?;
        let p = z2_superoperator(self.n_sites())?;
        Ok(frobenius_norm(&(s.dot(&p) - p.dot(&s))))
    }
}

pub fn z2_superoperator(n: usize) -> Result<ComplexMatrix> {
    let z = pauli::z();
    let factors: Vec<&ComplexMatrix> = (0..n).map(|_| &z).collect();
    let zn = kron_all(&factors)?;
    kron(&zn, &zn)
}
