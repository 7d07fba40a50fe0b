//! The one-layer channel and its two representations.

pub mod basis;
pub mod dense;
pub mod lindblad;
pub mod mpo;
pub mod mps;

use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{pauli, JumpParams, ModelParams};

pub use dense::{DenseChannel, DenseLayerState};
pub use mpo::{ChannelMpo, MpoSettings};
pub use mps::{LayerTruncation, TruncationSettings, VectorizedLayerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> ComplexMatrix {
        match self {
            Axis::X => pauli::x(),
            Axis::Y => pauli::y(),
            Axis::Z => pauli::z(),
        }
    }

    /// Position in the {I, X, Y, Z} basis.
    pub fn pauli_index(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ChannelOperator {
    Dense(DenseChannel),
    Mpo(ChannelMpo),
}

impl ChannelOperator {
    pub fn dense(params: &ModelParams, jp: &JumpParams) -> Result<Self> {
        Ok(Self::Dense(DenseChannel::build(params, jp)?))
    }

    pub fn mpo(params: &ModelParams, jp: &JumpParams, chi_mpo: usize) -> Result<Self> {
        Ok(Self::Mpo(ChannelMpo::build(params, jp, &MpoSettings { chi_mpo, ..Default::default() })?))
    }

    pub fn params(&self) -> &ModelParams {
        match self {
            Self::Dense(d) => &d.params,
            Self::Mpo(m) => &m.params,
        }
    }

    pub fn jump(&self) -> &JumpParams {
        match self {
            Self::Dense(d) => &d.jump,
            Self::Mpo(m) => &m.jump,
        }
    }

    /// Row-major superoperator (MPO form contracted when small enough).
    pub fn superoperator(&self) -> Result<ComplexMatrix> {
        match self {
            Self::Dense(d) => d.superoperator(),
            Self::Mpo(m) => basis::ptm_to_superoperator(&m.to_dense()?),
        }
    }

    pub fn apply_dense(&self, state: &DenseLayerState) -> Result<DenseLayerState> {
        match self {
            Self::Dense(d) => d.apply(state),
            Self::Mpo(_) => Err(QcaError::InvalidParameter("MPO channel acts on vectorized states".into())),
        }
    }

    pub fn apply_vectorized(&self, state: &mut VectorizedLayerState, trunc: &TruncationSettings) -> Result<()> {
        match self {
            Self::Mpo(m) => state.apply_channel(m, trunc),
            Self::Dense(_) => Err(QcaError::InvalidParameter("dense channel acts on dense states".into())),
        }
    }
}

/// Layer magnetizations m_t^x for t = 0..=depth plus per-layer truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub mx: Vec<f64>,
    pub truncation: Vec<LayerTruncation>,
}

impl Trajectory {
    pub fn final_mx(&self) -> f64 {
        *self.mx.last().expect("trajectory holds the input layer")
    }

    pub fn max_discarded(&self) -> f64 {
        self.truncation.iter().fold(0.0, |a, l| a.max(l.max_bond))
    }
}

/// Evolves `state0` through `depth` layers of an already built channel.
pub fn evolve_with(
    channel: &ChannelMpo,
    state0: &VectorizedLayerState,
    depth: usize,
    trunc: &TruncationSettings,
) -> Result<Trajectory> {
    let mut state = state0.clone();
    let mut mx = Vec::with_capacity(depth + 1);
    mx.push(state.magnetization(Axis::X));
    for _ in 0..depth {
        state.apply_channel(channel, trunc)?;
        mx.push(state.magnetization(Axis::X));
    }
    let skip = state0.truncation_log().len();
    Ok(Trajectory { mx, truncation: state.truncation_log()[skip..].to_vec() })
}

pub fn evolve_trajectory(
    state0: &VectorizedLayerState,
    params: &ModelParams,
    jp: &JumpParams,
    chi_mps: usize,
    chi_mpo: usize,
) -> Result<Trajectory> {
    if params.depth == 0 {
        return Err(QcaError::InvalidParameter("depth must be >= 1".into()));
    }
    let channel = ChannelMpo::build(params, jp, &MpoSettings { chi_mpo, ..Default::default() })?;
    evolve_with(&channel, state0, params.depth, &TruncationSettings::new(chi_mps))
}
