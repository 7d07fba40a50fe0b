//! Physical operators and the local three-leg gate of the automaton.
//!
//! Basis convention: index 0 is the vacuum, which is the sigma_z = -1 state.
//! `sigma_minus` maps the excited state (index 1) onto the vacuum, so pure
//! decay drives a layer towards m_z = -1/2.

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::linalg::{dagger, expm, identity, kron, kron_all, ComplexMatrix};

pub mod pauli {
    use super::*;

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn x() -> ComplexMatrix {
        array![[O, ONE], [ONE, O]]
    }

    pub fn y() -> ComplexMatrix {
        array![[O, I], [-I, O]]
    }

    pub fn z() -> ComplexMatrix {
        array![[-ONE, O], [O, ONE]]
    }

    /// (sigma_x - i sigma_y) / 2 = |0><1|.
    pub fn sigma_minus() -> ComplexMatrix {
        array![[O, ONE], [O, O]]
    }

    /// (sigma_x + i sigma_y) / 2 = |1><0|. Also the raising operator applied
    /// to the fresh qubit of the next layer.
    pub fn sigma_plus() -> ComplexMatrix {
        array![[O, O], [ONE, O]]
    }

    /// The four Pauli matrices in the order I, X, Y, Z.
    pub fn basis() -> [ComplexMatrix; 4] {
        [super::identity(2), x(), y(), z()]
    }
}

/// Physical couplings and lattice geometry. All rates are in units of
/// `kappa`; `dt` is the dimensionless step kappa*dt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub v: f64,
    pub kappa: f64,
    pub dt: f64,
    pub n_sites: usize,
    pub depth: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { omega: 3.0, v: 15.0, kappa: 1.0, dt: 0.1, n_sites: 10, depth: 10 }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(QcaError::InvalidParameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(QcaError::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !self.omega.is_finite() || !self.v.is_finite() {
            return Err(QcaError::InvalidParameter("omega and v must be finite".into()));
        }
        if self.n_sites == 0 {
            return Err(QcaError::InvalidParameter("a layer needs at least one site".into()));
        }
        Ok(())
    }

    pub fn with_sites(self, n_sites: usize) -> Self {
        Self { n_sites, ..self }
    }

    pub fn with_depth(self, depth: usize) -> Self {
        Self { depth, ..self }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }
}

/// Trainable jump operator J(a, b) = sqrt(kappa) (a sigma_x + i b sigma_y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    pub a: f64,
    pub b: f64,
}

impl JumpParams {
    /// Reproduces J = sqrt(kappa) sigma_minus.
    pub const TEACHER: JumpParams = JumpParams { a: 0.5, b: -0.5 };
    pub const UNTRAINED: JumpParams = JumpParams { a: -0.15, b: -1.0 };

    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn negated(self) -> Self {
        Self { a: -self.a, b: -self.b }
    }
}

/// Which lattice qubit a gate leg acts on. Sites are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Leg {
    Old(usize),
    New(usize),
}

/// A local gate G_k. Bond gates (k < N) act on (old k, old k+1, new k) and
/// are 8x8; the closing gate k = N acts on (old N, new N) and is 4x4.
#[derive(Debug, Clone)]
pub struct LocalGate {
    pub site: usize,
    pub legs: Vec<Leg>,
    pub matrix: ComplexMatrix,
}

fn scale(a: &ComplexMatrix, s: C64) -> ComplexMatrix {
    a.mapv(|z| z * s)
}

/// Field term of one site, (Omega/2) sigma_z.
fn field(params: &ModelParams) -> ComplexMatrix {
    scale(&pauli::z(), C64::from(params.omega / 2.0))
}

/// H_k on old-layer sites (k, k+1) with open boundaries. The field of site N
/// is folded into the last bond so every site sees it exactly once.
pub fn build_local_hamiltonian(params: &ModelParams, k: usize) -> Result<ComplexMatrix> {
    let n = params.n_sites;
    if k == 0 || k + 1 > n {
        return Err(QcaError::SiteOutOfRange { site: k, n_sites: n });
    }
    let id = identity(2);
    let mut h = kron(&field(params), &id)?;
    if k == n - 1 {
        h = h + kron(&id, &field(params))?;
    }
    let xx = kron(&pauli::x(), &pauli::x())?;
    Ok(h - scale(&xx, C64::from(params.v / 4.0)))
}

pub fn build_jump_operator(jp: &JumpParams, kappa: f64) -> ComplexMatrix {
    let j = scale(&pauli::x(), C64::from(jp.a)) + scale(&pauli::y(), C64::new(0.0, jp.b));
    scale(&j, C64::from(kappa.sqrt()))
}

/// Permutation matrix exchanging qubits `p` and `q` of an `n`-qubit register.
fn swap_matrix(n: usize, p: usize, q: usize) -> ComplexMatrix {
    let dim = 1 << n;
    let mut m = Array2::zeros((dim, dim));
    let (bp, bq) = (n - 1 - p, n - 1 - q);
    for i in 0..dim {
        let (xp, xq) = ((i >> bp) & 1, (i >> bq) & 1);
        let j = (i & !(1 << bp) & !(1 << bq)) | (xq << bp) | (xp << bq);
        m[[j, i]] = C64::new(1.0, 0.0);
    }
    m
}

/// G_k = SWAP · exp(-i sqrt(dt) (J ⊗ s+ + h.c.)) · exp(-i dt H_k ⊗ 1).
pub fn build_local_gate(params: &ModelParams, jp: &JumpParams, k: usize) -> Result<LocalGate> {
    params.validate()?;
    let n = params.n_sites;
    if k == 0 || k > n {
        return Err(QcaError::SiteOutOfRange { site: k, n_sites: n });
    }
    let id = identity(2);
    let jump = build_jump_operator(jp, params.kappa);
    let s_plus = pauli::sigma_plus();
    let minus_i = C64::new(0.0, -1.0);

    let (legs, hamiltonian, coupling, swap) = if k < n {
        let h = kron(&build_local_hamiltonian(params, k)?, &id)?;
        let c = kron_all(&[&jump, &id, &s_plus])?;
        (vec![Leg::Old(k), Leg::Old(k + 1), Leg::New(k)], h, c, swap_matrix(3, 0, 2))
    } else {
        let h_site = if n == 1 { field(params) } else { Array2::zeros((2, 2)) };
        let h = kron(&h_site, &id)?;
        let c = kron(&jump, &s_plus)?;
        (vec![Leg::Old(k), Leg::New(k)], h, c, swap_matrix(2, 0, 1))
    };

    let coherent = expm(&scale(&hamiltonian, minus_i * params.dt))?;
    let generator = &coupling + &dagger(&coupling);
    let collision = expm(&scale(&generator, minus_i * params.dt.sqrt()))?;
    let matrix = swap.dot(&collision).dot(&coherent);
    Ok(LocalGate { site: k, legs, matrix })
}

/// All gates of one layer update in application order (ascending k).
pub fn build_gate_sequence(params: &ModelParams, jp: &JumpParams) -> Result<Vec<LocalGate>> {
    (1..=params.n_sites).map(|k| build_local_gate(params, jp, k)).collect()
}
