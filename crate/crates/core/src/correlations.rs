//! Twelve-equation closure that keeps single-bond two-point moments exact
//! and treats the remaining q-1 neighbours in mean field.
//!
//! Two-point moments are m^{μν} = <σ^μ_a σ^ν_b>/4 on a nearest-neighbour
//! bond (a, b); one-point moments are m^μ = <σ^μ>/2.

use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};
use crate::meanfield::{sweep_grid, Closure, MagnetizationVector, PhaseDiagramGrid, StationaryPoint};
use crate::model::ModelParams;
use crate::ode::{self, RelaxSettings};

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedMoments {
    pub m: MagnetizationVector,
    /// c[μ][ν] = m^{μν}, μ indexing site a.
    pub c: [[f64; 3]; 3],
}

impl CorrelatedMoments {
    /// Uncorrelated start, m^{μν} = m^μ m^ν.
    pub fn product(m: MagnetizationVector) -> Self {
        let v = m.to_array();
        let mut c = [[0.0; 3]; 3];
        for mu in 0..3 {
            for nu in 0..3 {
                c[mu][nu] = v[mu] * v[nu];
            }
        }
        Self { m, c }
    }

    pub fn all_down() -> Self {
        Self::product(MagnetizationVector::PARAMAGNET)
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&self.m.to_array());
        for mu in 0..3 {
            out[3 + 3 * mu..6 + 3 * mu].copy_from_slice(&self.c[mu]);
        }
        out
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        let mut c = [[0.0; 3]; 3];
        for mu in 0..3 {
            c[mu].copy_from_slice(&a[3 + 3 * mu..6 + 3 * mu]);
        }
        Self { m: MagnetizationVector::new(a[0], a[1], a[2]), c }
    }

    /// Image under the Z2 conjugation: components with an odd number of
    /// x/y labels flip sign.
    pub fn z2_partner(&self) -> Self {
        let mut out = *self;
        out.m = self.m.z2_partner();
        for mu in 0..3 {
            for nu in 0..3 {
                let odd = ((mu == Z) as usize + (nu == Z) as usize) == 1;
                if odd {
                    out.c[mu][nu] = -self.c[mu][nu];
                }
            }
        }
        out
    }

    pub fn max_abs_two_point(&self) -> f64 {
        self.c.iter().flatten().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

pub fn corr_rhs(s: &CorrelatedMoments, params: &ModelParams, q: f64) -> CorrelatedMoments {
    let (om, v, k) = (params.omega, params.v, params.kappa);
    let vq = v * (q - 1.0);
    let (mx, my, mz) = (s.m.mx, s.m.my, s.m.mz);
    let c = &s.c;
    let (xx, xy, xz) = (c[X][X], c[X][Y], c[X][Z]);
    let (yx, yy, yz) = (c[Y][X], c[Y][Y], c[Y][Z]);
    let (zx, zy, zz) = (c[Z][X], c[Z][Y], c[Z][Z]);

    let m = MagnetizationVector {
        mx: -om * my - 0.5 * k * mx,
        my: om * mx + vq * mx * mz + v * zx - 0.5 * k * my,
        mz: -vq * mx * my - v * yx - k * (0.5 + mz),
    };
    let mut d = [[0.0; 3]; 3];
    d[X][X] = -om * (yx + xy) - 2.0 * k * xx;
    d[X][Y] = -om * (yy - xx) + vq * mx * zx + 0.25 * v * mz - 2.0 * k * xy;
    d[X][Z] = -om * yz - vq * mx * xy - 0.25 * v * my - 2.0 * k * xz - 0.5 * k * mx;
    d[Y][X] = om * (xx - yy) + vq * mx * zx + 0.25 * v * mz - 2.0 * k * yx;
    d[Y][Y] = om * (xy + yx) + vq * mx * (yz + zy) - 2.0 * k * yy;
    d[Y][Z] = om * xz - vq * mx * (yy - zz) - 2.0 * k * yz - 0.5 * k * my;
    d[Z][X] = -om * zy - vq * mx * yx - 0.25 * v * my - 2.0 * k * zx - 0.5 * k * mx;
    d[Z][Y] = om * zx + vq * mx * (zz - yy) - 2.0 * k * zy - 0.5 * k * my;
    d[Z][Z] = -vq * mx * (zy + yz) - k * (mz + 2.0 * zz);
    CorrelatedMoments { m, c: d }
}

fn check_q(q: f64) -> Result<()> {
    if q >= 2.0 && q.is_finite() {
        Ok(())
    } else {
        Err(QcaError::InvalidParameter(format!("nearest-neighbour closure needs q >= 2, got {q}")))
    }
}

pub fn corr_integrate(
    s0: CorrelatedMoments,
    params: &ModelParams,
    q: f64,
    t_final: f64,
    dt_ode: f64,
) -> Result<Vec<CorrelatedMoments>> {
    check_q(q)?;
    let rhs = |y: &[f64; 12]| corr_rhs(&CorrelatedMoments::from_array(y), params, q).to_array();
    Ok(ode::integrate(rhs, s0.to_array(), t_final, dt_ode)?
        .iter()
        .map(CorrelatedMoments::from_array)
        .collect())
}

pub fn corr_stationary_point(
    params: &ModelParams,
    q: f64,
    seed_sign: f64,
    settings: &RelaxSettings,
) -> Result<StationaryPoint> {
    check_q(q)?;
    let rhs = |y: &[f64; 12]| corr_rhs(&CorrelatedMoments::from_array(y), params, q).to_array();
    let seed = CorrelatedMoments::product(MagnetizationVector::seed(seed_sign));
    let r = ode::relax(rhs, seed.to_array(), settings)?;
    Ok(StationaryPoint::from_relaxed(r.state[0], r.t, r.residual, r.converged))
}

pub fn corr_stationary_order_parameter(params: &ModelParams, q: f64, seed_sign: f64) -> Result<f64> {
    corr_stationary_point(params, q, seed_sign, &RelaxSettings::default())?.into_result()
}

pub fn corr_phase_diagram(
    omega_range: (f64, f64),
    v_range: (f64, f64),
    grid: (usize, usize),
    q: f64,
    kappa: f64,
    settings: &RelaxSettings,
) -> Result<PhaseDiagramGrid> {
    let base = ModelParams { kappa, ..ModelParams::default() };
    let (omega, v, pts) =
        sweep_grid(omega_range, v_range, grid, &base, |p| corr_stationary_point(p, q, 1.0, settings))?;
    Ok(PhaseDiagramGrid {
        closure: Closure::NearestNeighbor,
        q,
        omega,
        v,
        abs_mx: pts.iter().map(|p| p.abs_mx).collect(),
        converged: pts.iter().map(|p| p.converged).collect(),
    })
}
