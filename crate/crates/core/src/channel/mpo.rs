//! Matrix-product form of the layer channel in the real Pauli basis.
//!
//! The ascending gate sequence factorizes into a staircase of two-site maps:
//! map k injects the vacuum on new site k, applies G_k and traces old site k,
//! acting on layer positions (k, k+1). The closing map at site N is single-site.
//! Splitting every two-site map by SVD across its two sites gives the MPO;
//! its bond dimension never exceeds 16.

use ndarray::{s, Array2, Array3, Array4};
use num_complex::Complex64 as C64;

use super::basis::superoperator_to_ptm;
use crate::error::{QcaError, Result};
use crate::linalg::{kron, truncated_svd, ComplexMatrix};
use crate::model::{build_gate_sequence, JumpParams, LocalGate, ModelParams};

/// Bond factors of one two-site map, truncated to the MPO bond dimension.
#[derive(Debug, Clone)]
pub struct BondMap {
    /// (out, in, alpha) on the left site.
    pub left: Array3<f64>,
    /// (alpha, out, in) on the right site.
    pub right: Array3<f64>,
    /// Reconstruction from the truncated factors, rows (out_l, out_r), columns (in_l, in_r).
    pub map: Array2<f64>,
    pub discarded_weight: f64,
}

impl BondMap {
    fn from_map(full: &Array2<f64>, chi_mpo: usize) -> Result<Self> {
        // regroup E[(s,t),(s',t')] as M[(s,s'),(t,t')]
        let mut m = Array2::<f64>::zeros((16, 16));
        for s in 0..4 {
            for t in 0..4 {
                for sp in 0..4 {
                    for tp in 0..4 {
                        m[[s * 4 + sp, t * 4 + tp]] = full[[s * 4 + t, sp * 4 + tp]];
                    }
                }
            }
        }
        let svd = truncated_svd(&m, chi_mpo)?;
        let r = svd.rank();
        let mut left = Array3::zeros((4, 4, r));
        let mut right = Array3::zeros((r, 4, 4));
        for a in 0..r {
            let w = svd.singular_values[a].sqrt();
            for s in 0..4 {
                for sp in 0..4 {
                    left[[s, sp, a]] = svd.u[[s * 4 + sp, a]] * w;
                }
            }
            for t in 0..4 {
                for tp in 0..4 {
                    right[[a, t, tp]] = svd.vt[[a, t * 4 + tp]] * w;
                }
            }
        }
        let mut map = Array2::zeros((16, 16));
        for s in 0..4 {
            for t in 0..4 {
                for sp in 0..4 {
                    for tp in 0..4 {
                        map[[s * 4 + t, sp * 4 + tp]] =
                            (0..r).map(|a| left[[s, sp, a]] * right[[a, t, tp]]).sum::<f64>();
                    }
                }
            }
        }
        Ok(Self { left, right, map, discarded_weight: svd.discarded_weight })
    }

    pub fn rank(&self) -> usize {
        self.left.dim().2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpoSettings {
    pub chi_mpo: usize,
    /// Bond discarded weights above this are logged as warnings.
    pub warn_discarded: f64,
}

impl Default for MpoSettings {
    fn default() -> Self {
        Self { chi_mpo: 16, warn_discarded: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct ChannelMpo {
    pub params: ModelParams,
    pub jump: JumpParams,
    pub chi_mpo: usize,
    bonds: Vec<BondMap>,
    /// Single-site closing map (out, in).
    tail: Array2<f64>,
}

/// Kraus operators of a two-site map from the three-leg gate
/// (old k, old k+1, new k): K_m[(c, b), (x, y)] = G[(m, b, c), (x, y, 0)].
fn bond_kraus(gate: &ComplexMatrix) -> Vec<ComplexMatrix> {
    (0..2)
        .map(|m| {
            let mut k = Array2::zeros((4, 4));
            for c in 0..2 {
                for b in 0..2 {
                    for x in 0..2 {
                        for y in 0..2 {
                            k[[c * 2 + b, x * 2 + y]] = gate[[m * 4 + b * 2 + c, x * 4 + y * 2]];
                        }
                    }
                }
            }
            k
        })
        .collect()
}

/// Kraus operators of the closing map from the two-leg gate (old N, new N).
fn tail_kraus(gate: &ComplexMatrix) -> Vec<ComplexMatrix> {
    (0..2)
        .map(|m| {
            let mut k = Array2::zeros((2, 2));
            for c in 0..2 {
                for x in 0..2 {
                    k[[c, x]] = gate[[m * 2 + c, x * 2]];
                }
            }
            k
        })
        .collect()
}

fn kraus_ptm(kraus: &[ComplexMatrix]) -> Result<Array2<f64>> {
    let dim = kraus[0].nrows();
    let mut s = Array2::<C64>::zeros((dim * dim, dim * dim));
    for k in kraus {
        s = s + kron(k, &k.mapv(|z| z.conj()))?;
    }
    superoperator_to_ptm(&s)
}

impl ChannelMpo {
    pub fn build(params: &ModelParams, jp: &JumpParams, settings: &MpoSettings) -> Result<Self> {
        let gates = build_gate_sequence(params, jp)?;
        Self::from_gates(params, jp, &gates, settings)
    }

    pub fn from_gates(
        params: &ModelParams,
        jp: &JumpParams,
        gates: &[LocalGate],
        settings: &MpoSettings,
    ) -> Result<Self> {
        params.validate()?;
        if settings.chi_mpo == 0 {
            return Err(QcaError::InvalidParameter("chi_mpo must be >= 1".into()));
        }
        let n = params.n_sites;
        if gates.len() != n {
            return Err(QcaError::ShapeMismatch(format!("{} gates for {n} sites", gates.len())));
        }
        let mut bonds = Vec::with_capacity(n - 1);
        for (k, gate) in gates[..n - 1].iter().enumerate() {
            if gate.matrix.dim() != (8, 8) {
                return Err(QcaError::ShapeMismatch(format!("gate {} is not 8x8", k + 1)));
            }
            let bond = BondMap::from_map(&kraus_ptm(&bond_kraus(&gate.matrix))?, settings.chi_mpo)?;
            if bond.discarded_weight > settings.warn_discarded {
                log::warn!(
                    "MPO bond {} discarded weight {:e} exceeds {:e}",
                    k + 1,
                    bond.discarded_weight,
                    settings.warn_discarded
                );
            }
            bonds.push(bond);
        }
        let last = &gates[n - 1].matrix;
        if last.dim() != (4, 4) {
            return Err(QcaError::ShapeMismatch("closing gate is not 4x4".into()));
        }
        let tail = kraus_ptm(&tail_kraus(last))?;
        Ok(Self { params: *params, jump: *jp, chi_mpo: settings.chi_mpo, bonds, tail })
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }

    pub fn bonds(&self) -> &[BondMap] {
        &self.bonds
    }

    pub fn tail(&self) -> &Array2<f64> {
        &self.tail
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        self.bonds.iter().map(BondMap::rank).collect()
    }

    pub fn discarded_weights(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| b.discarded_weight).collect()
    }

    /// MPO site tensors W_k[alpha_left, out, in, alpha_right]; at site k the
    /// right factor of map k-1 acts first, then the left factor of map k.
    pub fn site_tensors(&self) -> Vec<Array4<f64>> {
        let n = self.n_sites();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            // incoming factor: (alpha_left, mid, in)
            let incoming: Array3<f64> = if k == 0 {
                let mut id = Array3::zeros((1, 4, 4));
                for d in 0..4 {
                    id[[0, d, d]] = 1.0;
                }
                id
            } else {
                self.bonds[k - 1].right.clone()
            };
            // outgoing factor: (out, mid, alpha_right)
            let outgoing: Array3<f64> = if k + 1 == n {
                self.tail.clone().into_shape_with_order((4, 4, 1)).expect("4x4 reshapes")
            } else {
                self.bonds[k].left.clone()
            };
            let (al, ar) = (incoming.dim().0, outgoing.dim().2);
            let mut w = Array4::zeros((al, 4, 4, ar));
            for a in 0..al {
                for o in 0..4 {
                    for i in 0..4 {
                        for b in 0..ar {
                            w[[a, o, i, b]] = (0..4).map(|m| outgoing[[o, m, b]] * incoming[[a, m, i]]).sum();
                        }
                    }
                }
            }
            out.push(w);
        }
        out
    }

    /// Contracts the MPO into the dense 4^N x 4^N transfer matrix
    /// (Pauli-string indices, site 1 most significant).
    pub fn to_dense(&self) -> Result<Array2<f64>> {
        let n = self.n_sites();
        if n > 6 {
            return Err(QcaError::TooLargeForDense { n_sites: n, max: 6 });
        }
        let tensors = self.site_tensors();
        // acc[(out, in), alpha] with out/in accumulating site digits
        let mut acc = Array3::<f64>::ones((1, 1, 1));
        for w in &tensors {
            let (d_out, d_in, a) = acc.dim();
            let b = w.dim().3;
            let mut next = Array3::zeros((d_out * 4, d_in * 4, b));
            for po in 0..d_out {
                for pi in 0..d_in {
                    for al in 0..a {
                        let v = acc[[po, pi, al]];
                        if v == 0.0 {
                            continue;
                        }
                        for o in 0..4 {
                            for i in 0..4 {
                                for be in 0..b {
                                    next[[po * 4 + o, pi * 4 + i, be]] += v * w[[al, o, i, be]];
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
        }
        let dim = acc.dim().0;
        Ok(acc.slice(s![.., .., 0]).to_owned().into_shape_with_order((dim, dim)).expect("square"))
    }
}
