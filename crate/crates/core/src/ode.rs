//! Fixed-step RK4 shared by the mean-field and correlation closures.

use serde::{Deserialize, Serialize};

use crate::error::{QcaError, Result};

pub fn rk4_step<const D: usize, F>(rhs: &F, y: &[f64; D], h: f64) -> [f64; D]
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    let axpy = |y: &[f64; D], k: &[f64; D], s: f64| {
        let mut out = *y;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, &k1, h / 2.0));
    let k3 = rhs(&axpy(y, &k2, h / 2.0));
    let k4 = rhs(&axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Trajectory sampled every `dt` from t = 0 up to `t_final` (inclusive when
/// `t_final` is a multiple of `dt`).
pub fn integrate<const D: usize, F>(rhs: F, y0: [f64; D], t_final: f64, dt: f64) -> Result<Vec<[f64; D]>>
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(QcaError::InvalidParameter(format!(
            "need dt > 0 and t_final >= 0 (dt = {dt}, t_final = {t_final})"
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for step in 0..steps {
        y = rk4_step(&rhs, &y, dt);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(QcaError::Diverged { t: (step + 1) as f64 * dt });
        }
        out.push(y);
    }
    Ok(out)
}

/// Settings for relaxing towards a stationary state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxSettings {
    pub dt: f64,
    pub t_max: f64,
    /// Stop once the Euclidean norm of the time derivative drops below this.
    pub tol: f64,
}

impl Default for RelaxSettings {
    fn default() -> Self {
        Self { dt: 1e-3, t_max: 200.0, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Relaxed<const D: usize> {
    pub state: [f64; D],
    pub t: f64,
    pub residual: f64,
    pub converged: bool,
}

pub fn relax<const D: usize, F>(rhs: F, y0: [f64; D], settings: &RelaxSettings) -> Result<Relaxed<D>>
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    let norm = |v: &[f64; D]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut y = y0;
    let mut t = 0.0;
    let mut step = 0usize;
    loop {
        let residual = norm(&rhs(&y));
        if residual < settings.tol {
            return Ok(Relaxed { state: y, t, residual, converged: true });
        }
        if t > settings.t_max {
            return Ok(Relaxed { state: y, t, residual, converged: false });
        }
        y = rk4_step(&rhs, &y, settings.dt);
        step += 1;
        t = step as f64 * settings.dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(QcaError::Diverged { t });
        }
    }
}
