use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use anyhow::Context;
use qca_core::ensemble::{read_trajectories, run_ensemble, write_trajectories};
use qca_core::histogram::Histogram;
use qca_core::meanfield::{phase_diagram, Closure};
use qca_core::ode::RelaxSettings;
use qca_core::correlations::corr_phase_diagram;
use qca_core::sampling::{sample_initial_states, write_manifest};
use qca_core::training::{
    check_training_set, default_training_inputs, generate_training_data, loss, loss_landscape, train, LossLandscape,
};
use qca_core::validation::run_oracle_check;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::output::{write_atomic, write_metadata};

pub fn evolve(cfg: &RunConfig, out: &Path, manifest: Option<&Path>) -> anyhow::Result<()> {
    let params = cfg.model();
    let pairs = cfg.samples / 2;
    if cfg.samples % 2 == 1 {
        log::warn!("odd sample count {}; running {} parity pairs", cfg.samples, pairs);
    }
    let specs = sample_initial_states(pairs, cfg.seed)?;
    log::info!("evolving {} samples through {} layers of {} sites", specs.len(), params.depth, params.n_sites);
    let runs = run_ensemble(&specs, &params, &cfg.jump(), &cfg.engine())?;
    write_atomic(out, |w| Ok(write_trajectories(&runs, w)?))?;
    if let Some(m) = manifest {
        write_atomic(m, |w| Ok(write_manifest(&specs, w)?))?;
    }
    let mut per_layer = vec![0.0f64; params.depth];
    for r in &runs {
        for (slot, t) in per_layer.iter_mut().zip(&r.trajectory.truncation) {
            *slot = slot.max(t.max_bond);
        }
    }
    let max_discarded = per_layer.iter().copied().fold(0.0, f64::max);
    let max_bond = runs
        .iter()
        .flat_map(|r| r.trajectory.truncation.iter().map(|t| t.max_bond_dimension))
        .max()
        .unwrap_or(1);
    write_metadata(
        out,
        "evolve",
        cfg,
        json!({
            "trajectories": runs.len(),
            "max_discarded_weight": max_discarded,
            "max_discarded_weight_per_layer": per_layer,
            "max_bond_dimension": max_bond,
        }),
    )?;
    println!("wrote {} trajectories to {} (max discarded weight {:.2e})", runs.len(), out.display(), max_discarded);
    Ok(())
}

pub fn hist(cfg: &RunConfig, input: &Path, out: &Path) -> anyhow::Result<()> {
    let file = File::open(input).map_err(|e| ConfigError(format!("cannot open {}: {e}", input.display())))?;
    let layers = read_trajectories(BufReader::new(file))?;
    let at = layers.get(&cfg.layer).ok_or_else(|| {
        ConfigError(format!("layer {} not present in {} (has {:?})", cfg.layer, input.display(), layers.keys().collect::<Vec<_>>()))
    })?;
    let values: Vec<f64> = at.values().copied().collect();
    let h = Histogram::from_values(&values, cfg.bin_width)?.coarsen(cfg.coarsen)?;
    let report = h.bimodality();
    write_atomic(out, |w| Ok(h.write_csv(w)?))?;
    write_metadata(out, "hist", cfg, json!({ "input": input.display().to_string(), "samples": values.len(), "bimodality": report }))?;
    println!("layer {}: {} samples in {} bins of width {}", cfg.layer, values.len(), h.n_bins(), h.bin_width);
    for p in &report.highest {
        println!("  local maximum at {:+.4} (count {})", p.center, p.count);
    }
    if let Some(t) = report.trough {
        println!("  minimum between at {:+.4} (count {})", t.center, t.count);
    }
    println!("  {}", if report.bimodal { "bimodal" } else { "not bimodal" });
    Ok(())
}

pub fn phase(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let settings = RelaxSettings::default();
    let (om, v, grid) = ((cfg.omega_min, cfg.omega_max), (cfg.v_min, cfg.v_max), (cfg.grid_omega, cfg.grid_v));
    let d = match cfg.closure {
        Closure::MeanField => phase_diagram(om, v, grid, cfg.q, cfg.kappa, &settings)?,
        Closure::NearestNeighbor => corr_phase_diagram(om, v, grid, cfg.q, cfg.kappa, &settings)?,
    };
    write_atomic(out, |w| Ok(d.write_csv(w)?))?;
    let non_converged = d.non_converged();
    write_metadata(out, "phase-diagram", cfg, json!({ "closure": d.closure.tag(), "non_converged": non_converged }))?;
    let fm = d.abs_mx.iter().filter(|&&m| m > 1e-3).count();
    println!(
        "{} phase diagram: {} of {} points ferromagnetic, {} not converged",
        d.closure.tag(),
        fm,
        d.abs_mx.len(),
        non_converged.len()
    );
    Ok(())
}

fn teacher_pairs(cfg: &RunConfig) -> anyhow::Result<Vec<qca_core::training::TrainingPair>> {
    let pairs = generate_training_data(&cfg.jump(), &default_training_inputs(), &cfg.model(), &cfg.engine())?;
    check_training_set(&pairs)?;
    Ok(pairs)
}

pub fn train_cmd(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let pairs = teacher_pairs(cfg)?;
    log::info!("training from ({}, {}) with epsilon {}", cfg.init_a, cfg.init_b, cfg.epsilon);
    let run = train(&cfg.init_jump(), &pairs, &cfg.model(), cfg.epsilon, cfg.repetitions, &cfg.engine(), cfg.h)?;
    write_atomic(out, |w| {
        serde_json::to_writer_pretty(&mut *w, &run)?;
        writeln!(w)?;
        Ok(())
    })?;
    let fin = run.final_params();
    write_metadata(
        out,
        "train",
        cfg,
        json!({ "pairs": pairs, "initial_loss": run.initial_loss(), "final_loss": run.final_loss(), "final_params": fin }),
    )?;
    println!(
        "loss {:.4e} -> {:.4e} after {} updates; (a, b) = ({:.5}, {:.5})",
        run.initial_loss(),
        run.final_loss(),
        run.repetitions,
        fin.a,
        fin.b
    );
    Ok(())
}

pub fn landscape(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let pairs = teacher_pairs(cfg)?;
    let params = cfg.model();
    let engine = cfg.engine();
    let l: LossLandscape =
        loss_landscape((cfg.a_min, cfg.a_max), (cfg.b_min, cfg.b_max), (cfg.grid_a, cfg.grid_b), &pairs, &params, &engine)?;
    write_atomic(out, |w| Ok(l.write_csv(w)?))?;
    let (i, j) = l.argmin();
    let init_loss = loss(&cfg.init_jump(), &pairs, &params, &engine).context("loss at the initial point")?;
    write_metadata(
        out,
        "landscape",
        cfg,
        json!({ "pairs": pairs, "min_loss": l.min_loss(), "argmin": [l.a[i], l.b[j]], "loss_at_init": init_loss }),
    )?;
    println!("grid minimum {:.4e} at (a, b) = ({:.4}, {:.4}); loss at init {:.4e}", l.min_loss(), l.a[i], l.b[j], init_loss);
    Ok(())
}

/// Returns the process exit code: 0, or the code of the first failed check.
pub fn oracle_check(cfg: &RunConfig, json_out: Option<&Path>, gate_fault: Option<f64>) -> anyhow::Result<i32> {
    if cfg.n > qca_core::validation::ORACLE_MAX_SITES {
        return Err(ConfigError(format!("oracle check supports n <= {}", qca_core::validation::ORACLE_MAX_SITES)).into());
    }
    let report = run_oracle_check(&cfg.model(), &cfg.jump(), &cfg.engine(), gate_fault)?;
    print!("{}", report.render_text());
    if let Some(p) = json_out {
        write_atomic(p, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    Ok(report.exit_code())
}
