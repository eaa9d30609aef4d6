//! Run configuration: defaults, overlaid by a TOML file, overlaid by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::AlphaMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PcMethod {
    Alpha,
    Direct,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Combinatorics,
    Level,
    Oracle,
    Coupling,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    Point,
    Fiber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AlphaModeArg {
    Point,
    Fiber,
    Sphere,
}

impl From<AlphaModeArg> for AlphaMode {
    fn from(m: AlphaModeArg) -> Self {
        match m {
            AlphaModeArg::Point => AlphaMode::Point,
            AlphaModeArg::Fiber => AlphaMode::Fiber,
            AlphaModeArg::Sphere => AlphaMode::SphereFiber,
        }
    }
}

/// Every knob of every subcommand. Keys of the config file are the field
/// names; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: u32,
    pub seed: u64,
    pub trials: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub site_budget: usize,
    pub min_hits: Option<u64>,

    pub p: Vec<f64>,
    pub n: Vec<u32>,
    pub k: Option<u32>,
    pub tau_mode: TauMode,

    pub n_max: u32,
    pub m_max: u32,
    pub alpha_mode: AlphaModeArg,
    pub half_widths: Vec<u32>,
    pub tree_radii: Vec<u32>,
    pub tree_slack: u32,
    pub fit_from: Option<u32>,
    pub eps_stab: f64,

    pub k_cut: u32,
    pub n_cut: u32,
    pub half_width: u32,
    pub z: Vec<f64>,

    pub method: PcMethod,
    pub tol: f64,
    pub scan_step: f64,
    pub r_max: u32,

    pub suite: Suite,
    pub instance: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 3,
            seed: 1,
            trials: 10_000,
            workers: None,
            out: PathBuf::from("."),
            site_budget: 5_000_000,
            min_hits: None,
            p: vec![0.25],
            n: vec![1, 2, 3, 4],
            k: None,
            tau_mode: TauMode::Point,
            n_max: 12,
            m_max: 10,
            alpha_mode: AlphaModeArg::Sphere,
            half_widths: vec![6, 12, 24],
            tree_radii: vec![3, 6, 12],
            tree_slack: 3,
            fit_from: None,
            eps_stab: 1e-3,
            k_cut: 6,
            n_cut: 10,
            half_width: 12,
            z: vec![0.5, 1.0],
            method: PcMethod::Both,
            tol: 0.02,
            scan_step: 0.05,
            r_max: 40,
            suite: Suite::All,
            instance: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::Config(format!("d = {} must be at least 3", self.d)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("p = {p} is not a probability")));
        }
        if let Some(z) = self.z.iter().find(|z| !(**z > 0.0)) {
            return Err(Error::Config(format!("z = {z} must be positive")));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }
}
