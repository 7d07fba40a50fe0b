//! Order-parameter loss, finite-difference descent on the jump parameters
//! and loss-landscape sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{run_ensemble, EngineSettings};
use crate::error::{QcaError, Result};
use crate::meanfield::linspace;
use crate::model::{JumpParams, ModelParams};
use crate::sampling::ProductStateSpec;

pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DIVERGENCE_STREAK: usize = 5;
/// Loss increases below this are re-evolution noise, not divergence.
pub const LOSS_NOISE_FLOOR: f64 = 1e-12;
/// Teacher targets spanning less than this are treated as one class.
pub const DEGENERATE_SPREAD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: ProductStateSpec,
    pub target_mx: f64,
}

impl TrainingPair {
    pub fn new(input: ProductStateSpec, target_mx: f64) -> Result<Self> {
        if !(target_mx.abs() <= 0.5) {
            return Err(QcaError::InvalidParameter(format!("target {target_mx} outside [-1/2, 1/2]")));
        }
        Ok(Self { input, target_mx })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientScheme {
    pub method: String,
    pub step: f64,
}

impl GradientScheme {
    pub fn central_difference(step: f64) -> Self {
        Self { method: "central-difference".into(), step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRun {
    /// Parameters before each update and after the last one.
    pub params: Vec<JumpParams>,
    /// Loss at each entry of `params`.
    pub losses: Vec<f64>,
    pub gradients: Vec<(f64, f64)>,
    pub epsilon: f64,
    pub repetitions: usize,
    pub gradient_scheme: GradientScheme,
    pub engine: EngineSettings,
}

impl TrainingRun {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("run holds the initial point")
    }

    pub fn final_params(&self) -> JumpParams {
        *self.params.last().expect("run holds the initial point")
    }
}

/// Four parity-balanced inputs at m0x = +-0.4, +-0.25 with m0y = 0, m0z > 0.
pub fn default_training_inputs() -> Vec<ProductStateSpec> {
    [0.4, -0.4, 0.25, -0.25]
        .iter()
        .enumerate()
        .map(|(i, &m)| ProductStateSpec::in_xz_plane(i, m).expect("|m0x| < 1/2"))
        .collect()
}

fn output_magnetizations(
    jp: &JumpParams,
    inputs: &[ProductStateSpec],
    params: &ModelParams,
    engine: &EngineSettings,
) -> Result<Vec<f64>> {
    Ok(run_ensemble(inputs, params, jp, engine)?.iter().map(|r| r.trajectory.final_mx()).collect())
}

/// Targets are the teacher's layer-`depth` magnetizations.
pub fn generate_training_data(
    teacher: &JumpParams,
    inputs: &[ProductStateSpec],
    params: &ModelParams,
    engine: &EngineSettings,
) -> Result<Vec<TrainingPair>> {
    let targets = output_magnetizations(teacher, inputs, params, engine)?;
    inputs.iter().zip(targets).map(|(s, t)| TrainingPair::new(*s, t)).collect()
}

pub fn target_spread(pairs: &[TrainingPair]) -> f64 {
    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.target_mx), hi.max(p.target_mx)));
    if pairs.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Rejects sets whose targets have collapsed onto a single value.
pub fn check_training_set(pairs: &[TrainingPair]) -> Result<()> {
    let spread = target_spread(pairs);
    if spread < DEGENERATE_SPREAD {
        return Err(QcaError::DegenerateTrainingSet { spread, threshold: DEGENERATE_SPREAD });
    }
    Ok(())
}

/// Mean squared deviation of the layer-`depth` magnetization from the targets.
pub fn loss(jp: &JumpParams, pairs: &[TrainingPair], params: &ModelParams, engine: &EngineSettings) -> Result<f64> {
    if pairs.is_empty() {
        return Err(QcaError::InvalidParameter("loss needs at least one training pair".into()));
    }
    let inputs: Vec<ProductStateSpec> = pairs.iter().map(|p| p.input).collect();
    let out = output_magnetizations(jp, &inputs, params, engine)?;
    let sum: f64 = out.iter().zip(pairs).map(|(m, p)| (m - p.target_mx).powi(2)).sum();
    Ok(sum / pairs.len() as f64)
}

/// Central differences in a and b with step `h`.
pub fn gradient(
    jp: &JumpParams,
    pairs: &[TrainingPair],
    params: &ModelParams,
    engine: &EngineSettings,
    h: f64,
) -> Result<(f64, f64)> {
    central_gradient(&|p: &JumpParams| loss(p, pairs, params, engine), jp, h)
}

fn central_gradient<F>(f: &F, jp: &JumpParams, h: f64) -> Result<(f64, f64)>
where
    F: Fn(&JumpParams) -> Result<f64> + Sync,
{
    if !(h > 0.0) {
        return Err(QcaError::InvalidParameter(format!("finite-difference step {h} must be positive")));
    }
    let probes = [
        JumpParams::new(jp.a + h, jp.b),
        JumpParams::new(jp.a - h, jp.b),
        JumpParams::new(jp.a, jp.b + h),
        JumpParams::new(jp.a, jp.b - h),
    ];
    let l: Vec<f64> = probes.par_iter().map(f).collect::<Result<_>>()?;
    Ok(((l[0] - l[1]) / (2.0 * h), (l[2] - l[3]) / (2.0 * h)))
}

/// Fixed-rate steepest descent (a, b) <- (a, b) - epsilon * grad.
pub fn train(
    init: &JumpParams,
    pairs: &[TrainingPair],
    params: &ModelParams,
    epsilon: f64,
    repetitions: usize,
    engine: &EngineSettings,
    h: f64,
) -> Result<TrainingRun> {
    let f = |p: &JumpParams| loss(p, pairs, params, engine);
    let (params_hist, losses, gradients) = descend(&f, init, epsilon, repetitions, h)?;
    Ok(TrainingRun {
        params: params_hist,
        losses,
        gradients,
        epsilon,
        repetitions,
        gradient_scheme: GradientScheme::central_difference(h),
        engine: *engine,
    })
}

type DescentHistory = (Vec<JumpParams>, Vec<f64>, Vec<(f64, f64)>);

fn descend<F>(f: &F, init: &JumpParams, epsilon: f64, repetitions: usize, h: f64) -> Result<DescentHistory>
where
    F: Fn(&JumpParams) -> Result<f64> + Sync,
{
    if repetitions == 0 {
        return Err(QcaError::InvalidParameter("repetitions must be >= 1".into()));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(QcaError::InvalidParameter(format!("learning rate {epsilon} must be finite and >= 0")));
    }
    let mut params = vec![*init];
    let mut losses = vec![f(init)?];
    let mut gradients = Vec::with_capacity(repetitions);
    let mut streak = 0;
    for step in 0..repetitions {
        let jp = params[step];
        let (ga, gb) = central_gradient(f, &jp, h)?;
        let next = JumpParams::new(jp.a - epsilon * ga, jp.b - epsilon * gb);
        let l = f(&next)?;
        streak = if l > losses[step] + LOSS_NOISE_FLOOR { streak + 1 } else { 0 };
        log::debug!("step {step}: (a, b) = ({:.6}, {:.6}), loss = {l:.6e}", next.a, next.b);
        gradients.push((ga, gb));
        params.push(next);
        losses.push(l);
        if !l.is_finite() || streak >= DIVERGENCE_STREAK {
            return Err(QcaError::TrainingDiverged { step, streak, loss: l });
        }
    }
    if losses[repetitions] > losses[0] + LOSS_NOISE_FLOOR {
        log::warn!("final loss {:e} exceeds initial loss {:e}", losses[repetitions], losses[0]);
    }
    Ok((params, losses, gradients))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossLandscape {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Row-major in a: `loss[i * b.len() + j]` is at (a[i], b[j]).
    pub loss: Vec<f64>,
}

pub const DEFAULT_A_RANGE: (f64, f64) = (-1.0, 1.0);
pub const DEFAULT_B_RANGE: (f64, f64) = (-1.5, 0.5);
pub const DEFAULT_LANDSCAPE_GRID: usize = 41;

pub fn loss_landscape(
    a_range: (f64, f64),
    b_range: (f64, f64),
    grid: (usize, usize),
    pairs: &[TrainingPair],
    params: &ModelParams,
    engine: &EngineSettings,
) -> Result<LossLandscape> {
    if grid.0 < 2 || grid.1 < 2 {
        return Err(QcaError::InvalidParameter("landscape grid needs >= 2 points per axis".into()));
    }
    let a = linspace(a_range.0, a_range.1, grid.0);
    let b = linspace(b_range.0, b_range.1, grid.1);
    let points: Vec<JumpParams> = a.iter().flat_map(|&x| b.iter().map(move |&y| JumpParams::new(x, y))).collect();
    let loss = points.par_iter().map(|p| loss(p, pairs, params, engine)).collect::<Result<_>>()?;
    Ok(LossLandscape { a, b, loss })
}

impl LossLandscape {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.loss[i * self.b.len() + j]
    }

    /// Grid index of the smallest loss.
    pub fn argmin(&self) -> (usize, usize) {
        let k = (0..self.loss.len()).min_by(|&x, &y| self.loss[x].total_cmp(&self.loss[y])).expect("non-empty grid");
        (k / self.b.len(), k % self.b.len())
    }

    pub fn min_loss(&self) -> f64 {
        let (i, j) = self.argmin();
        self.at(i, j)
    }

    /// 4-connected component of {loss <= level} containing `seed`.
    pub fn sublevel_component(&self, seed: (usize, usize), level: f64) -> Vec<(usize, usize)> {
        let (na, nb) = (self.a.len(), self.b.len());
        let mut seen = vec![false; na * nb];
        let mut out = Vec::new();
        if self.at(seed.0, seed.1) > level {
            return out;
        }
        let mut stack = vec![seed];
        seen[seed.0 * nb + seed.1] = true;
        while let Some((i, j)) = stack.pop() {
            out.push((i, j));
            let mut nbrs = Vec::with_capacity(4);
            if i > 0 {
                nbrs.push((i - 1, j));
            }
            if i + 1 < na {
                nbrs.push((i + 1, j));
            }
            if j > 0 {
                nbrs.push((i, j - 1));
            }
            if j + 1 < nb {
                nbrs.push((i, j + 1));
            }
            for (x, y) in nbrs {
                if !seen[x * nb + y] && self.at(x, y) <= level {
                    seen[x * nb + y] = true;
                    stack.push((x, y));
                }
            }
        }
        out
    }

    /// Number of grid cells spanned along (a, b) by a set of grid points.
    pub fn extent(cells: &[(usize, usize)]) -> (usize, usize) {
        if cells.is_empty() {
            return (0, 0);
        }
        let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
        for &(i, j) in cells {
            i0 = i0.min(i);
            i1 = i1.max(i);
            j0 = j0.min(j);
            j1 = j1.max(j);
        }
        (i1 - i0, j1 - j0)
    }

    /// CSV `a,b,loss`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["a", "b", "loss"])?;
        for (i, a) in self.a.iter().enumerate() {
            for (j, b) in self.b.iter().enumerate() {
                wtr.write_record([a.to_string(), b.to_string(), self.at(i, j).to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}
