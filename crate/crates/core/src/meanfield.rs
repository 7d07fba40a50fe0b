//! Mean-field equations of motion for the magnetization and the stationary
//! phase diagram they imply.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::model::ModelParams;
use crate::ode::{self, RelaxSettings};

/// Order parameters at or below this are reported as exactly zero once the
/// flow has converged.
pub const PARAMAGNETIC_SNAP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationVector {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl MagnetizationVector {
    pub const fn new(mx: f64, my: f64, mz: f64) -> Self {
        Self { mx, my, mz }
    }

    /// The all-vacuum (fully decayed) state.
    pub const PARAMAGNET: Self = Self::new(0.0, 0.0, -0.5);

    /// Symmetry-broken start used for stationary-state searches.
    pub fn seed(sign: f64) -> Self {
        Self::new(sign.signum() * 0.1, 0.0, -0.4)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.mx, self.my, self.mz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.mx * self.mx + self.my * self.my + self.mz * self.mz
    }

    /// Image under the Z2 conjugation (mx, my flip).
    pub fn z2_partner(self) -> Self {
        Self::new(-self.mx, -self.my, self.mz)
    }
}

/// Time derivative of the magnetization for coordination number `q`.
pub fn mf_rhs(m: &MagnetizationVector, params: &ModelParams, q: f64) -> MagnetizationVector {
    let (om, vq, k) = (params.omega, params.v * q, params.kappa);
    MagnetizationVector {
        mx: -om * m.my - 0.5 * k * m.mx,
        my: om * m.mx + vq * m.mx * m.mz - 0.5 * k * m.my,
        mz: -vq * m.mx * m.my - k * (m.mz + 0.5),
    }
}

fn check_q(q: f64, min: f64) -> Result<()> {
    if q >= min && q.is_finite() {
        Ok(())
    } else {
        Err(QcaError::InvalidParameter(format!("coordination number must be >= {min}, got {q}")))
    }
}

pub fn integrate(
    m0: MagnetizationVector,
    params: &ModelParams,
    q: f64,
    t_final: f64,
    dt_ode: f64,
) -> Result<Vec<MagnetizationVector>> {
    check_q(q, 1.0)?;
    let rhs = |y: &[f64; 3]| mf_rhs(&MagnetizationVector::from_array(*y), params, q).to_array();
    Ok(ode::integrate(rhs, m0.to_array(), t_final, dt_ode)?
        .into_iter()
        .map(MagnetizationVector::from_array)
        .collect())
}

/// Outcome of relaxing from a symmetry-broken seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    /// |mx| at termination (snapped to zero at the paramagnetic point).
    pub abs_mx: f64,
    pub converged: bool,
    pub t: f64,
    pub residual: f64,
}

impl StationaryPoint {
    pub(crate) fn from_relaxed(mx: f64, t: f64, residual: f64, converged: bool) -> Self {
        let abs = mx.abs();
        let abs_mx = if converged && abs <= PARAMAGNETIC_SNAP { 0.0 } else { abs };
        Self { abs_mx, converged, t, residual }
    }

    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.abs_mx)
        } else {
            Err(QcaError::NotConverged { t: self.t, abs_mx: self.abs_mx, residual: self.residual })
        }
    }
}

pub fn stationary_point(
    params: &ModelParams,
    q: f64,
    seed_sign: f64,
    settings: &RelaxSettings,
) -> Result<StationaryPoint> {
    check_q(q, 1.0)?;
    let rhs = |y: &[f64; 3]| mf_rhs(&MagnetizationVector::from_array(*y), params, q).to_array();
    let r = ode::relax(rhs, MagnetizationVector::seed(seed_sign).to_array(), settings)?;
    Ok(StationaryPoint::from_relaxed(r.state[0], r.t, r.residual, r.converged))
}

/// |mx_∞| reached from the seed (±0.1, 0, -0.4) with the default RK4
/// settings. Slow critical relaxation surfaces as `NotConverged`.
pub fn stationary_order_parameter(params: &ModelParams, q: f64, seed_sign: f64) -> Result<f64> {
    stationary_point(params, q, seed_sign, &RelaxSettings::default())?.into_result()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    #[serde(rename = "mf")]
    MeanField,
    #[serde(rename = "nn")]
    NearestNeighbor,
}

impl Closure {
    pub fn tag(self) -> &'static str {
        match self {
            Closure::MeanField => "mf",
            Closure::NearestNeighbor => "nn",
        }
    }
}

/// |mx_∞| on an (Omega, V) grid. Entries are stored omega-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiagramGrid {
    pub closure: Closure,
    pub q: f64,
    pub omega: Vec<f64>,
    pub v: Vec<f64>,
    pub abs_mx: Vec<f64>,
    /// False where the relaxation hit `t_max` first; the stored value is
    /// then the order parameter at termination.
    pub converged: Vec<bool>,
}

impl PhaseDiagramGrid {
    pub fn get(&self, i_omega: usize, i_v: usize) -> f64 {
        self.abs_mx[i_omega * self.v.len() + i_v]
    }

    pub fn is_converged(&self, i_omega: usize, i_v: usize) -> bool {
        self.converged[i_omega * self.v.len() + i_v]
    }

    pub fn non_converged(&self) -> Vec<(f64, f64)> {
        self.points().filter(|p| !p.3).map(|p| (p.0, p.1)).collect()
    }

    /// (omega, v, |mx|, converged) in storage order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64, bool)> + '_ {
        let nv = self.v.len();
        self.abs_mx.iter().zip(&self.converged).enumerate().map(move |(idx, (&m, &c))| {
            (self.omega[idx / nv], self.v[idx % nv], m, c)
        })
    }

    /// CSV with header `omega,v,abs_mx`; the nearest-neighbour closure adds a
    /// trailing `closure` column holding `nn`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match self.closure {
            Closure::MeanField => w.write_record(["omega", "v", "abs_mx"])?,
            Closure::NearestNeighbor => w.write_record(["omega", "v", "abs_mx", "closure"])?,
        }
        for (om, v, m, _) in self.points() {
            let mut rec = vec![fmt17(om), fmt17(v), fmt17(m)];
            if self.closure == Closure::NearestNeighbor {
                rec.push("nn".to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Seventeen significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub(crate) fn sweep_grid<F>(
    omega_range: (f64, f64),
    v_range: (f64, f64),
    grid: (usize, usize),
    base: &ModelParams,
    point: F,
) -> Result<(Vec<f64>, Vec<f64>, Vec<StationaryPoint>)>
where
    F: Fn(&ModelParams) -> Result<StationaryPoint> + Sync,
{
    if grid.0 < 2 || grid.1 < 2 {
        return Err(QcaError::InvalidParameter(format!(
            "phase diagram grid must be at least 2x2, got {}x{}",
            grid.0, grid.1
        )));
    }
    let omegas = linspace(omega_range.0, omega_range.1, grid.0);
    let vs = linspace(v_range.0, v_range.1, grid.1);
    let results = (0..grid.0 * grid.1)
        .into_par_iter()
        .map(|idx| {
            let p = ModelParams { omega: omegas[idx / grid.1], v: vs[idx % grid.1], ..*base };
            point(&p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((omegas, vs, results))
}

pub fn phase_diagram(
    omega_range: (f64, f64),
    v_range: (f64, f64),
    grid: (usize, usize),
    q: f64,
    kappa: f64,
    settings: &RelaxSettings,
) -> Result<PhaseDiagramGrid> {
    let base = ModelParams { kappa, ..ModelParams::default() };
    let (omega, v, pts) =
        sweep_grid(omega_range, v_range, grid, &base, |p| stationary_point(p, q, 1.0, settings))?;
    Ok(PhaseDiagramGrid {
        closure: Closure::MeanField,
        q,
        omega,
        v,
        abs_mx: pts.iter().map(|p| p.abs_mx).collect(),
        converged: pts.iter().map(|p| p.converged).collect(),
    })
}
