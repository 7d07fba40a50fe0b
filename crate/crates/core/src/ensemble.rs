//! Parallel evolution of product-state ensembles.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{evolve_with, ChannelMpo, MpoSettings, Trajectory, TruncationSettings};
use crate::error::{QcaError, Result};
use crate::model::{JumpParams, ModelParams};
use crate::sampling::ProductStateSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    pub chi_mps: usize,
    pub chi_mpo: usize,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self { chi_mps: 48, chi_mpo: 16 }
    }
}

impl EngineSettings {
    pub fn validate(&self) -> Result<()> {
        if self.chi_mps == 0 || self.chi_mpo == 0 {
            return Err(QcaError::InvalidParameter("bond dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn truncation(&self) -> TruncationSettings {
        TruncationSettings::new(self.chi_mps)
    }

    pub fn build_channel(&self, params: &ModelParams, jp: &JumpParams) -> Result<ChannelMpo> {
        self.validate()?;
        ChannelMpo::build(params, jp, &MpoSettings { chi_mpo: self.chi_mpo, ..Default::default() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrajectory {
    pub sample_id: usize,
    pub trajectory: Trajectory,
}

/// Evolves every spec through `params.depth` layers of one shared channel.
/// Output order follows `specs`; depth 0 returns the input magnetizations.
pub fn run_ensemble(
    specs: &[ProductStateSpec],
    params: &ModelParams,
    jp: &JumpParams,
    engine: &EngineSettings,
) -> Result<Vec<SampleTrajectory>> {
    let channel = engine.build_channel(params, jp)?;
    let trunc = engine.truncation();
    specs
        .par_iter()
        .map(|spec| {
            let state0 = spec.to_layer_state(params.n_sites)?;
            let trajectory = evolve_with(&channel, &state0, params.depth, &trunc)?;
            Ok(SampleTrajectory { sample_id: spec.sample_id, trajectory })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    sample_id: usize,
    layer: usize,
    mx: f64,
}

/// Long-format CSV `sample_id,layer,mx`.
pub fn write_trajectories<W: Write>(runs: &[SampleTrajectory], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for run in runs {
        for (layer, &mx) in run.trajectory.mx.iter().enumerate() {
            wtr.serialize(TrajectoryRow { sample_id: run.sample_id, layer, mx })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the long-format CSV back as layer -> (sample_id -> mx).
pub fn read_trajectories<R: Read>(r: R) -> Result<BTreeMap<usize, BTreeMap<usize, f64>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for rec in rdr.deserialize() {
        let row: TrajectoryRow = rec?;
        if !row.mx.is_finite() {
            return Err(QcaError::MalformedInput(format!("non-finite mx for sample {}", row.sample_id)));
        }
        if out.entry(row.layer).or_default().insert(row.sample_id, row.mx).is_some() {
            return Err(QcaError::MalformedInput(format!(
                "duplicate row for sample {} at layer {}",
                row.sample_id, row.layer
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_initial_states;

    #[test]
    fn ensemble_is_parity_symmetric_and_round_trips() {
        let p = ModelParams::default().with_sites(4).with_depth(3);
        let specs = sample_initial_states(3, 9).unwrap();
        let runs = run_ensemble(&specs, &p, &JumpParams::TEACHER, &EngineSettings { chi_mps: 16, chi_mpo: 16 }).unwrap();
        assert_eq!(runs.len(), 6);
        for l in 0..3 {
            assert_eq!(runs[l + 3].sample_id, l + 3);
            for (a, b) in runs[l].trajectory.mx.iter().zip(&runs[l + 3].trajectory.mx) {
                assert!((a + b).abs() < 1e-10);
            }
        }
        let mut buf = Vec::new();
        write_trajectories(&runs, &mut buf).unwrap();
        assert!(buf.starts_with(b"sample_id,layer,mx\n"));
        let back = read_trajectories(&buf[..]).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back[&3][&1], runs[1].trajectory.mx[3]);
    }

    #[test]
    fn zero_depth_returns_inputs() {
        let p = ModelParams::default().with_sites(3).with_depth(0);
        let specs = sample_initial_states(2, 1).unwrap();
        let runs = run_ensemble(&specs, &p, &JumpParams::TEACHER, &EngineSettings::default()).unwrap();
        for (r, s) in runs.iter().zip(&specs) {
            assert_eq!(r.trajectory.mx.len(), 1);
            assert!((r.trajectory.mx[0] - s.m0x).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let text = "sample_id,layer,mx\n0,1,0.1\n0,1,0.2\n";
        assert!(matches!(read_trajectories(text.as_bytes()), Err(QcaError::MalformedInput(_))));
    }
}
