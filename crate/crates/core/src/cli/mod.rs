//! The `percolab` command line.
//!
//! Every run writes its data file(s) to the output directory together with
//! `<command>.manifest.json`, which echoes the resolved configuration and
//! holds the only run-dependent values (timestamps, wall time, workers).

pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::combinatorics::an_table;
use crate::error::{Error, Result};
use crate::estimators::{
    alpha_curve, estimate_alpha, estimate_beta, estimate_i_series, estimate_j, estimate_tau, estimate_tau_fiber, AlphaConfig,
    BetaConfig, McConfig, RateEstimate,
};
use crate::inversion::{
    estimate_pc_direct, estimate_pc_via_alpha, AlphaRouteConfig, BisectionConfig, DirectRouteConfig, PcReport, PcStatus, ProbeRecord,
};
use crate::lattice::{Lattice, RegionShape};
use crate::oracle::{exact_probability, shipped_instances, ExactPolynomial};
use crate::percolation::ConnectionEvent;

pub use config::{AlphaModeArg, PcMethod, RunConfig, Suite, TauMode};

/// Environment variable read when `--workers` is absent.
pub const WORKERS_ENV: &str = "PERCOLAB_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_UNDECIDED: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Encoding(_) => EXIT_CONFIG,
        Error::Resource(_) | Error::Io(_) => EXIT_RESOURCE,
        Error::Undecided(_) => EXIT_UNDECIDED,
    }
}

#[derive(Debug, Parser)]
#[command(name = "percolab", version, about = "Bond percolation on the product of a regular tree and the line")]
pub struct Cli {
    /// TOML file with any of the run keys; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tree degree.
    #[arg(long, global = true)]
    d: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads (falls back to PERCOLAB_WORKERS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sites an invasion may visit before the trial is censored.
    #[arg(long, global = true)]
    site_budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-point function τ(o, (v_n, 0)) or its fiber version.
    Tau(TauArgs),
    /// Horizontal decay rate α(p).
    Alpha(AlphaArgs),
    /// Vertical decay rate β(p).
    Beta(BetaArgs),
    /// Layer-summed profile I_n(p) and its rate η(p).
    Eta(EtaArgs),
    /// Level-weighted profile J_m(p, z) and its rate φ(p, z).
    Jm(JmArgs),
    /// Table of a_n(z) by direct sum and closed form.
    AnTable(AnTableArgs),
    /// Critical probability by α-inversion and/or direct survival scan.
    Pc(PcArgs),
    /// Built-in self-checks.
    Verify(VerifyArgs),
    /// Exact connection probabilities on the shipped small regions.
    Oracle(OracleArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Tau(_) => "tau",
            Command::Alpha(_) => "alpha",
            Command::Beta(_) => "beta",
            Command::Eta(_) => "eta",
            Command::Jm(_) => "jm",
            Command::AnTable(_) => "an_table",
            Command::Pc(_) => "pc",
            Command::Verify(_) => "verify",
            Command::Oracle(_) => "oracle",
        }
    }
}

#[derive(Debug, Args)]
pub struct TauArgs {
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Ball radius (point mode) or strip tree radius (fiber mode); defaults to max n.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<TauMode>,
    /// Strip half-width in fiber mode.
    #[arg(long)]
    half_width: Option<u32>,
    /// Stop adding trials once this many hits are seen.
    #[arg(long)]
    min_hits: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AlphaArgs {
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long = "nmax")]
    n_max: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<AlphaModeArg>,
    #[arg(long, value_delimiter = ',')]
    half_widths: Option<Vec<u32>>,
    #[arg(long)]
    tree_slack: Option<u32>,
    #[arg(long)]
    fit_from: Option<u32>,
    #[arg(long)]
    eps_stab: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long = "mmax")]
    m_max: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    tree_radii: Option<Vec<u32>>,
    #[arg(long)]
    fit_from: Option<u32>,
    #[arg(long)]
    eps_stab: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EtaArgs {
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long = "nmax")]
    n_max: Option<u32>,
    #[arg(long = "kcut")]
    k_cut: Option<u32>,
    #[arg(long)]
    half_width: Option<u32>,
    /// Largest m for the β estimate behind the tail bound.
    #[arg(long = "mmax")]
    m_max: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    tree_radii: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct JmArgs {
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,
    #[arg(long = "mmax")]
    m_max: Option<u32>,
    #[arg(long = "ncut")]
    n_cut: Option<u32>,
    #[arg(long)]
    half_width: Option<u32>,
    /// Largest n for the α estimate behind the z-window and tail bound.
    #[arg(long = "nmax")]
    n_max: Option<u32>,
}

#[derive(Debug, Args)]
pub struct AnTableArgs {
    #[arg(long = "nmax")]
    n_max: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PcArgs {
    #[arg(long, value_enum)]
    method: Option<PcMethod>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    scan_step: Option<f64>,
    #[arg(long = "rmax")]
    r_max: Option<u32>,
    #[arg(long = "nmax")]
    n_max: Option<u32>,
    #[arg(long)]
    half_width: Option<u32>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Option<Suite>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Shipped instance names (all when absent).
    #[arg(long, value_delimiter = ',')]
    instance: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    set(&mut c.d, cli.d);
    set(&mut c.seed, cli.seed);
    set(&mut c.trials, cli.trials);
    set(&mut c.out, cli.out.clone());
    set(&mut c.site_budget, cli.site_budget);
    if cli.workers.is_some() {
        c.workers = cli.workers;
    } else if c.workers.is_none() {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            c.workers = Some(v.parse().map_err(|_| Error::Config(format!("{WORKERS_ENV} = {v:?} is not a positive integer")))?);
        }
    }
    match &cli.command {
        Command::Tau(a) => {
            set(&mut c.n, a.n.clone());
            set(&mut c.p, a.p.clone());
            if a.k.is_some() {
                c.k = a.k;
            }
            set(&mut c.tau_mode, a.mode);
            set(&mut c.half_width, a.half_width);
            if a.min_hits.is_some() {
                c.min_hits = a.min_hits;
            }
        }
        Command::Alpha(a) => {
            set(&mut c.p, a.p.clone());
            set(&mut c.n_max, a.n_max);
            set(&mut c.alpha_mode, a.mode);
            set(&mut c.half_widths, a.half_widths.clone());
            set(&mut c.tree_slack, a.tree_slack);
            if a.fit_from.is_some() {
                c.fit_from = a.fit_from;
            }
            set(&mut c.eps_stab, a.eps_stab);
        }
        Command::Beta(a) => {
            set(&mut c.p, a.p.clone());
            set(&mut c.m_max, a.m_max);
            set(&mut c.tree_radii, a.tree_radii.clone());
            if a.fit_from.is_some() {
                c.fit_from = a.fit_from;
            }
            set(&mut c.eps_stab, a.eps_stab);
        }
        Command::Eta(a) => {
            set(&mut c.p, a.p.clone());
            set(&mut c.n_max, a.n_max);
            set(&mut c.k_cut, a.k_cut);
            set(&mut c.half_width, a.half_width);
            set(&mut c.m_max, a.m_max);
            set(&mut c.tree_radii, a.tree_radii.clone());
        }
        Command::Jm(a) => {
            set(&mut c.p, a.p.clone());
            set(&mut c.z, a.z.clone());
            set(&mut c.m_max, a.m_max);
            set(&mut c.n_cut, a.n_cut);
            set(&mut c.half_width, a.half_width);
            set(&mut c.n_max, a.n_max);
        }
        Command::AnTable(a) => {
            set(&mut c.n_max, a.n_max);
            set(&mut c.z, a.z.clone());
        }
        Command::Pc(a) => {
            set(&mut c.method, a.method);
            set(&mut c.tol, a.tol);
            set(&mut c.scan_step, a.scan_step);
            set(&mut c.r_max, a.r_max);
            set(&mut c.n_max, a.n_max);
            set(&mut c.half_width, a.half_width);
        }
        Command::Verify(a) => set(&mut c.suite, a.suite),
        Command::Oracle(a) => {
            set(&mut c.instance, a.instance.clone());
            set(&mut c.p, a.p.clone());
        }
    }
    c.validate()?;
    Ok(c)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("percolab: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command; returns the exit code for completed runs.
pub fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve(cli)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    fs::create_dir_all(&cfg.out)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let name = cli.command.name();
    let outcome = pool.install(|| dispatch(&cli.command, &cfg))?;
    let manifest = Manifest {
        tool: "percolab",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        config: &cfg,
        outputs: outcome.files.iter().map(|f| f.display().to_string()).collect(),
        started_unix: started,
        wall_time: clock.elapsed().as_secs_f64(),
        workers: pool.current_num_threads(),
        extra: outcome.manifest_extra,
    };
    write_json(&cfg.out.join(format!("{name}.manifest.json")), &manifest)?;
    Ok(outcome.code)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    outputs: Vec<String>,
    started_unix: f64,
    wall_time: f64,
    workers: usize,
    extra: serde_json::Value,
}

struct Outcome {
    files: Vec<PathBuf>,
    code: i32,
    manifest_extra: serde_json::Value,
}

impl Outcome {
    fn ok(files: Vec<PathBuf>) -> Self {
        Outcome { files, code: EXIT_OK, manifest_extra: serde_json::Value::Null }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    Ok(w)
}

fn put<T: Serialize>(w: &mut csv::Writer<fs::File>, row: T) -> Result<()> {
    w.serialize(row).map_err(|e| Error::Io(e.to_string()))
}

fn finish(mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

const SERIES_HEADER: [&str; 9] = ["quantity", "n", "p", "mean", "ci_low", "ci_high", "trials", "region", "seed"];
const RATE_HEADER: [&str; 15] = [
    "quantity", "n", "p", "mean", "ci_low", "ci_high", "trials", "region", "seed", "sup_root", "inf_root", "fit_from", "stabilized",
    "capped", "censored",
];

type SeriesRow<'a> = (&'a str, u32, f64, f64, f64, f64, u64, &'a str, u64);
type RateRow<'a> = (&'a str, u32, f64, f64, f64, f64, u64, &'a str, u64, f64, f64, u32, bool, bool, u64);

fn rate_row<'a>(name: &'a str, r: &'a RateEstimate, seed: u64) -> RateRow<'a> {
    (
        name,
        r.fit_window.1,
        r.p,
        r.slope_fit,
        r.ci_band.0,
        r.ci_band.1,
        r.trials,
        &r.region,
        seed,
        r.sup_root,
        r.inf_root,
        r.fit_window.0,
        r.stabilized,
        r.capped,
        r.censored_trials,
    )
}

fn mc_config(cfg: &RunConfig) -> McConfig {
    McConfig { trials: cfg.trials, seed: cfg.seed, site_budget: cfg.site_budget, min_hits: cfg.min_hits, ..McConfig::default() }
}

fn alpha_config(cfg: &RunConfig) -> AlphaConfig {
    AlphaConfig {
        n_max: cfg.n_max,
        mode: cfg.alpha_mode.into(),
        half_widths: cfg.half_widths.clone(),
        tree_slack: cfg.tree_slack,
        fit_from: cfg.fit_from,
        eps_stab: cfg.eps_stab,
    }
}

fn beta_config(cfg: &RunConfig) -> BetaConfig {
    BetaConfig { m_max: cfg.m_max, tree_radii: cfg.tree_radii.clone(), fit_from: cfg.fit_from, eps_stab: cfg.eps_stab, ..BetaConfig::default() }
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let lattice = Lattice::new(cfg.d)?;
    let mc = mc_config(cfg);
    let out = &cfg.out;
    match cmd {
        Command::Tau(_) => {
            let path = out.join("tau.csv");
            let mut w = csv_writer(&path, &SERIES_HEADER)?;
            let n_top = cfg.n.iter().copied().max().unwrap_or(1);
            let k = cfg.k.unwrap_or(n_top);
            for &n in &cfg.n {
                for &p in &cfg.p {
                    let (name, e, region) = match cfg.tau_mode {
                        TauMode::Point => ("tau_horizontal", estimate_tau(lattice, n, p, k, &mc)?, RegionShape::ProductBall { radius: k }),
                        TauMode::Fiber => {
                            let shape = RegionShape::Strip { tree_radius: k, half_width: cfg.half_width };
                            ("tau_fiber", estimate_tau_fiber(lattice, n, p, shape.clone(), &mc)?, shape)
                        }
                    };
                    let label = region.label();
                    let row: SeriesRow = (name, n, p, e.mean, e.ci_low, e.ci_high, e.trials, &label, cfg.seed);
                    put(&mut w, row)?;
                }
            }
            finish(w)?;
            Ok(Outcome::ok(vec![path]))
        }
        Command::Alpha(_) => {
            let rates = alpha_curve(lattice, &cfg.p, &alpha_config(cfg), &mc)?;
            let series = out.join("alpha_series.csv");
            let mut w = csv_writer(&series, &SERIES_HEADER)?;
            for r in &rates {
                if let Some(s) = &r.series {
                    for pt in &s.points {
                        let e = &pt.estimate;
                        put(&mut w, (s.quantity.name(), pt.index, r.p, e.mean, e.ci_low, e.ci_high, e.trials, pt.region.as_str(), s.seed))?;
                    }
                }
            }
            finish(w)?;
            let path = out.join("alpha.csv");
            let mut w = csv_writer(&path, &RATE_HEADER)?;
            for r in &rates {
                put(&mut w, rate_row("alpha", r, cfg.seed))?;
            }
            finish(w)?;
            Ok(Outcome::ok(vec![series, path]))
        }
        Command::Beta(_) => {
            let bcfg = beta_config(cfg);
            let rates = cfg.p.iter().map(|&p| estimate_beta(lattice, p, &bcfg, &mc)).collect::<Result<Vec<_>>>()?;
            let series = out.join("beta_series.csv");
            let mut w = csv_writer(&series, &["quantity", "m", "p", "mean", "ci_low", "ci_high", "trials", "region", "seed"])?;
            for r in &rates {
                if let Some(s) = &r.series {
                    for pt in &s.points {
                        let e = &pt.estimate;
                        put(&mut w, (s.quantity.name(), pt.index, r.p, e.mean, e.ci_low, e.ci_high, e.trials, pt.region.as_str(), s.seed))?;
                    }
                }
            }
            finish(w)?;
            let path = out.join("beta.csv");
            let mut header = RATE_HEADER;
            header[1] = "m";
            let mut w = csv_writer(&path, &header)?;
            for r in &rates {
                put(&mut w, rate_row("beta", r, cfg.seed))?;
            }
            finish(w)?;
            Ok(Outcome::ok(vec![series, path]))
        }
        Command::Eta(_) => {
            let path = out.join("eta.csv");
            let mut w = csv_writer(&path, &["quantity", "n", "p", "mean", "ci_low", "ci_high", "trials", "region", "seed", "k_cut", "tail_bound"])?;
            let bcfg = beta_config(cfg);
            let shape = RegionShape::Strip { tree_radius: cfg.n_max + cfg.tree_slack, half_width: cfg.half_width.max(cfg.k_cut) };
            for &p in &cfg.p {
                let beta = estimate_beta(lattice, p, &bcfg, &mc)?;
                let s = estimate_i_series(lattice, p, cfg.n_max, cfg.k_cut, shape.clone(), &beta, &mc)?;
                for v in &s.values {
                    let e = &v.value;
                    put(&mut w, ("I_n", v.n, p, e.mean, e.ci_low, e.ci_high, e.trials, v.region.as_str(), cfg.seed, v.k_cut, v.tail_bound))?;
                }
                let r = &s.eta;
                put(&mut w, ("eta", r.fit_window.1, p, r.slope_fit, r.ci_band.0, r.ci_band.1, r.trials, r.region.as_str(), cfg.seed, cfg.k_cut, s.values[0].tail_bound))?;
                put(&mut w, ("eta_inf_root", r.fit_window.1, p, r.inf_root, r.inf_root, r.inf_root, r.trials, r.region.as_str(), cfg.seed, cfg.k_cut, s.values[0].tail_bound))?;
            }
            finish(w)?;
            Ok(Outcome::ok(vec![path]))
        }
        Command::Jm(_) => {
            let path = out.join("jm.csv");
            let mut w = csv_writer(
                &path,
                &["quantity", "m", "p", "z", "n_cut", "mean", "ci_low", "ci_high", "tail_bound", "trials", "region", "seed"],
            )?;
            let acfg = AlphaConfig { half_widths: vec![cfg.half_width], ..alpha_config(cfg) };
            for &p in &cfg.p {
                let alpha = estimate_alpha(lattice, p, &acfg, &mc)?;
                let profiles = estimate_j(lattice, p, &cfg.z, cfg.m_max, cfg.n_cut, cfg.half_width.max(cfg.m_max), alpha.ci_upper(), &mc)?;
                for prof in &profiles {
                    for v in &prof.values {
                        let e = &v.value;
                        put(&mut w, ("J_m", v.m, p, v.z, v.n_cut, e.mean, e.ci_low, e.ci_high, v.tail_bound, e.trials, v.region.as_str(), cfg.seed))?;
                    }
                    let r = &prof.phi;
                    put(&mut w, ("phi", r.fit_window.1, p, prof.z, cfg.n_cut, r.slope_fit, r.ci_band.0, r.ci_band.1, prof.values[0].tail_bound, r.trials, r.region.as_str(), cfg.seed))?;
                }
            }
            finish(w)?;
            Ok(Outcome::ok(vec![path]))
        }
        Command::AnTable(_) => {
            let path = out.join("an_table.csv");
            let mut w = csv_writer(&path, &["n", "z", "direct", "closed", "reflected"])?;
            for row in an_table(cfg.n_max, &cfg.z, lattice.branching())? {
                put(&mut w, (row.n, row.z, row.direct, row.closed, row.reflected))?;
            }
            finish(w)?;
            Ok(Outcome::ok(vec![path]))
        }
        Command::Pc(_) => run_pc(cfg, &mc),
        Command::Verify(_) => {
            let report = verify::run_suite(cfg.suite, cfg.trials, cfg.seed)?;
            let path = out.join("verify.json");
            write_json(&path, &report)?;
            let code = if report.passed { EXIT_OK } else { EXIT_FAILED };
            Ok(Outcome { code, ..Outcome::ok(vec![path]) })
        }
        Command::Oracle(_) => {
            let path = out.join("oracle.json");
            write_json(&path, &oracle_report(cfg)?)?;
            Ok(Outcome::ok(vec![path]))
        }
    }
}

/// The `pc` verdict; timing lives in the manifest so reruns compare equal.
#[derive(Serialize)]
struct PcOutput<'a> {
    d: u32,
    method: &'a str,
    interval: [f64; 2],
    status: PcStatus,
    target: f64,
    probes: &'a [ProbeRecord],
    seed: u64,
}

impl<'a> From<&'a PcReport> for PcOutput<'a> {
    fn from(r: &'a PcReport) -> Self {
        PcOutput { d: r.d, method: &r.method, interval: r.interval, status: r.status, target: r.target, probes: &r.probes, seed: r.seed }
    }
}

#[derive(Serialize)]
struct PcBoth<'a> {
    d: u32,
    method: &'static str,
    /// Intersection of the two intervals, absent when they are disjoint.
    interval: Option<[f64; 2]>,
    overlap: bool,
    routes: [PcOutput<'a>; 2],
    seed: u64,
}

fn run_pc(cfg: &RunConfig, mc: &McConfig) -> Result<Outcome> {
    let bis = BisectionConfig { tol: cfg.tol, scan_step: cfg.scan_step };
    let alpha_route = || {
        let route = AlphaRouteConfig {
            alpha: AlphaConfig { n_max: cfg.n_max, tree_slack: cfg.tree_slack, fit_from: cfg.fit_from, ..AlphaConfig::default() },
            half_width: cfg.half_width,
            ..AlphaRouteConfig::default()
        };
        estimate_pc_via_alpha(cfg.d, &bis, &route, mc)
    };
    let direct_route = || estimate_pc_direct(cfg.d, &bis, &DirectRouteConfig { r_max: cfg.r_max, ..DirectRouteConfig::default() }, mc);
    let reports = match cfg.method {
        PcMethod::Alpha => vec![alpha_route()?],
        PcMethod::Direct => vec![direct_route()?],
        PcMethod::Both => vec![alpha_route()?, direct_route()?],
    };
    let path = cfg.out.join("pc.json");
    if let [r] = reports.as_slice() {
        write_json(&path, &PcOutput::from(r))?;
    } else {
        let (a, b) = (&reports[0], &reports[1]);
        let lo = a.interval[0].max(b.interval[0]);
        let hi = a.interval[1].min(b.interval[1]);
        let overlap = lo <= hi;
        write_json(
            &path,
            &PcBoth { d: cfg.d, method: "both", interval: overlap.then_some([lo, hi]), overlap, routes: [a.into(), b.into()], seed: cfg.seed },
        )?;
    }
    let undecided = reports.iter().any(|r| r.status == PcStatus::Undecided);
    let wall: Vec<serde_json::Value> = reports.iter().map(|r| serde_json::json!({"method": r.method, "wall_time": r.wall_time})).collect();
    Ok(Outcome { files: vec![path], code: if undecided { EXIT_UNDECIDED } else { EXIT_OK }, manifest_extra: serde_json::Value::Array(wall) })
}

#[derive(Serialize)]
struct OracleEvent {
    event: ConnectionEvent,
    law: ExactPolynomial,
    probabilities: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct OracleInstance {
    instance: &'static str,
    region: RegionShape,
    edges: u64,
    events: Vec<OracleEvent>,
}

fn oracle_report(cfg: &RunConfig) -> Result<Vec<OracleInstance>> {
    if cfg.d != 3 {
        return Err(Error::Config("the shipped oracle instances are defined for d = 3".into()));
    }
    let instances = shipped_instances();
    for name in &cfg.instance {
        if !instances.iter().any(|i| i.name == name) {
            let known: Vec<&str> = instances.iter().map(|i| i.name).collect();
            return Err(Error::Config(format!("unknown instance {name:?}; known: {}", known.join(", "))));
        }
    }
    instances
        .into_iter()
        .filter(|i| cfg.instance.is_empty() || cfg.instance.iter().any(|n| n == i.name))
        .map(|inst| {
            let events = inst
                .events
                .iter()
                .map(|ev| {
                    let law = exact_probability(ev, &inst.region)?;
                    let probabilities = cfg.p.iter().map(|&p| (p, law.eval(p))).collect();
                    Ok(OracleEvent { event: ev.clone(), law, probabilities })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OracleInstance { instance: inst.name, region: inst.region.shape().clone(), edges: inst.region.edge_count(), events })
        })
        .collect()
}
