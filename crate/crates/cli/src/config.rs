use std::fmt;
use std::path::Path;

use clap::Args;
use qca_core::ensemble::EngineSettings;
use qca_core::histogram::Histogram;
use qca_core::meanfield::Closure;
use qca_core::model::{JumpParams, ModelParams};
use serde::{Deserialize, Serialize};

pub const THREADS_ENV: &str = "QCA_THREADS";

/// Invalid user input; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Every physical and numerical knob of a run. Unset keys take the defaults
/// below, which reproduce the bimodal ensemble setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub v: f64,
    pub kappa: f64,
    pub dt: f64,
    pub n: usize,
    pub depth: usize,

    pub chi_mps: usize,
    pub chi_mpo: usize,
    pub seed: u64,
    pub samples: usize,
    pub threads: Option<usize>,

    /// Jump parameters of the simulated QCA; the teacher when training.
    pub a: f64,
    pub b: f64,
    pub init_a: f64,
    pub init_b: f64,
    pub epsilon: f64,
    pub repetitions: usize,
    pub h: f64,

    pub layer: usize,
    pub bin_width: f64,
    pub coarsen: usize,

    pub closure: Closure,
    pub q: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub grid_omega: usize,
    pub grid_v: usize,

    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub grid_a: usize,
    pub grid_b: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelParams::default();
        let e = EngineSettings::default();
        Self {
            omega: m.omega,
            v: m.v,
            kappa: m.kappa,
            dt: m.dt,
            n: m.n_sites,
            depth: m.depth,
            chi_mps: e.chi_mps,
            chi_mpo: e.chi_mpo,
            seed: 2024,
            samples: 2000,
            threads: None,
            a: JumpParams::TEACHER.a,
            b: JumpParams::TEACHER.b,
            init_a: JumpParams::UNTRAINED.a,
            init_b: JumpParams::UNTRAINED.b,
            epsilon: 20.0,
            repetitions: 100,
            h: qca_core::training::DEFAULT_FD_STEP,
            layer: 8,
            bin_width: qca_core::histogram::FINE_BIN_WIDTH,
            coarsen: 1,
            closure: Closure::MeanField,
            q: 2.0,
            omega_min: 0.0,
            omega_max: 4.0,
            v_min: 0.0,
            v_max: 10.0,
            grid_omega: 41,
            grid_v: 41,
            a_min: qca_core::training::DEFAULT_A_RANGE.0,
            a_max: qca_core::training::DEFAULT_A_RANGE.1,
            b_min: qca_core::training::DEFAULT_B_RANGE.0,
            b_max: qca_core::training::DEFAULT_B_RANGE.1,
            grid_a: qca_core::training::DEFAULT_LANDSCAPE_GRID,
            grid_b: qca_core::training::DEFAULT_LANDSCAPE_GRID,
        }
    }
}

/// Command-line overrides; each set flag replaces the config-file value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML file with run parameters
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub v: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Sites per layer
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of layers
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub chi_mps: Option<usize>,
    #[arg(long, global = true)]
    pub chi_mpo: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Total ensemble size (half samples, half parity partners)
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads (also settable through QCA_THREADS)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub init_a: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub init_b: Option<f64>,
    /// Learning rate
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub repetitions: Option<usize>,
    /// Finite-difference step
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true)]
    pub layer: Option<usize>,
    #[arg(long, global = true)]
    pub bin_width: Option<f64>,
    /// Merge this many adjacent bins before reporting
    #[arg(long, global = true)]
    pub coarsen: Option<usize>,
    /// mf or nn
    #[arg(long, global = true)]
    pub closure: Option<String>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub omega_min: Option<f64>,
    #[arg(long, global = true)]
    pub omega_max: Option<f64>,
    #[arg(long, global = true)]
    pub v_min: Option<f64>,
    #[arg(long, global = true)]
    pub v_max: Option<f64>,
    #[arg(long, global = true)]
    pub grid_omega: Option<usize>,
    #[arg(long, global = true)]
    pub grid_v: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a_max: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b_max: Option<f64>,
    #[arg(long, global = true)]
    pub grid_a: Option<usize>,
    #[arg(long, global = true)]
    pub grid_b: Option<usize>,
}

pub fn parse_closure(s: &str) -> anyhow::Result<Closure> {
    match s {
        "mf" => Ok(Closure::MeanField),
        "nn" => Ok(Closure::NearestNeighbor),
        other => Err(bad(format!("unknown closure '{other}' (expected mf or nn)"))),
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// File (if any), then QCA_THREADS, then flags.
    pub fn resolve(o: &Overrides) -> anyhow::Result<Self> {
        let mut c = match &o.config {
            Some(p) => Self::from_toml_file(p)?,
            None => Self::default(),
        };
        if let Ok(t) = std::env::var(THREADS_ENV) {
            let t = t.trim().parse().map_err(|_| bad(format!("{THREADS_ENV}='{t}' is not a thread count")))?;
            c.threads = Some(t);
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(x) = o.$f { c.$f = x; } )* };
        }
        take!(
            omega, v, kappa, dt, n, depth, chi_mps, chi_mpo, seed, samples, a, b, init_a, init_b, epsilon, repetitions, h,
            layer, bin_width, coarsen, q, omega_min, omega_max, v_min, v_max, grid_omega, grid_v, a_min, a_max, b_min,
            b_max, grid_a, grid_b
        );
        if o.threads.is_some() {
            c.threads = o.threads;
        }
        if let Some(s) = &o.closure {
            c.closure = parse_closure(s)?;
        }
        Ok(c)
    }

    pub fn model(&self) -> ModelParams {
        ModelParams { omega: self.omega, v: self.v, kappa: self.kappa, dt: self.dt, n_sites: self.n, depth: self.depth }
    }

    pub fn engine(&self) -> EngineSettings {
        EngineSettings { chi_mps: self.chi_mps, chi_mpo: self.chi_mpo }
    }

    pub fn jump(&self) -> JumpParams {
        JumpParams::new(self.a, self.b)
    }

    pub fn init_jump(&self) -> JumpParams {
        JumpParams::new(self.init_a, self.init_b)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let positive = [("kappa", self.kappa), ("dt", self.dt), ("h", self.h), ("bin_width", self.bin_width), ("q", self.q)];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(bad(format!("{name} must be positive, got {x}")));
            }
        }
        let finite = [
            ("omega", self.omega),
            ("v", self.v),
            ("a", self.a),
            ("b", self.b),
            ("init_a", self.init_a),
            ("init_b", self.init_b),
        ];
        for (name, x) in finite {
            if !x.is_finite() {
                return Err(bad(format!("{name} must be finite")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(bad(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        let counts = [
            ("n", self.n, 2),
            ("chi_mps", self.chi_mps, 1),
            ("chi_mpo", self.chi_mpo, 1),
            ("samples", self.samples, 2),
            ("repetitions", self.repetitions, 1),
            ("coarsen", self.coarsen, 1),
            ("grid_omega", self.grid_omega, 2),
            ("grid_v", self.grid_v, 2),
            ("grid_a", self.grid_a, 2),
            ("grid_b", self.grid_b, 2),
        ];
        for (name, x, min) in counts {
            if x < min {
                return Err(bad(format!("{name} must be >= {min}, got {x}")));
            }
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be >= 1"));
        }
        let ranges = [
            ("omega", self.omega_min, self.omega_max),
            ("v", self.v_min, self.v_max),
            ("a", self.a_min, self.a_max),
            ("b", self.b_min, self.b_max),
        ];
        for (name, lo, hi) in ranges {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(bad(format!("{name} range [{lo}, {hi}] is empty")));
            }
        }
        let h = Histogram::from_values(&[], self.bin_width).map_err(|e| bad(e.to_string()))?;
        if h.n_bins() % self.coarsen != 0 {
            return Err(bad(format!("coarsen {} does not divide {} bins", self.coarsen, h.n_bins())));
        }
        Ok(())
    }
}
