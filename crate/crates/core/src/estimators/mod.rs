//! Monte Carlo estimators of the two-point function and its decay rates:
//! τ, α (point, fiber and sphere-averaged fiber forms), β, the summed
//! profiles I_n and J_m, and their rates η and φ.
//!
//! Every estimator samples minimax thresholds (see [`sampler`]), so one set
//! of trials answers a whole grid of `p` values with exactly monotone
//! coupling. Trial `t` always uses the weight field `(seed, t)`.

pub mod sampler;
pub mod stats;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::combinatorics::a_n_closed;
use crate::error::{Error, Result};
use crate::lattice::{build_region, Lattice, Region, RegionShape, SiteCoord, TreeVertex};
use crate::percolation::{occurs, ConfigurationView, ConnectionEvent, WeightField};

pub use sampler::{Hit, Moments, Probe, ThresholdSample, TrialRecord};
pub use stats::{wilson, Estimate, MeanEstimate, Z95};

/// Shared Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    /// Trials per estimate (the cap when `min_hits` is set).
    pub trials: u64,
    pub seed: u64,
    /// Invasions stop after this many sites; the trial is then censored.
    pub site_budget: usize,
    /// Normal quantile for the intervals.
    pub z: f64,
    /// Adaptive single-point estimates stop once this many hits are seen.
    pub min_hits: Option<u64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { trials: 10_000, seed: 1, site_budget: 5_000_000, z: Z95, min_hits: None }
    }
}

/// Regions explored lazily by invasion are never enumerated, so their size
/// is not budgeted; the site budget bounds the work instead.
fn lazy_region(lattice: Lattice, shape: RegionShape) -> Result<Arc<Region>> {
    Ok(Arc::new(build_region(lattice, shape, u64::MAX)?))
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} is not a probability")));
    }
    Ok(())
}

/// Single-index estimate from a binary probe, doubling trials from 1/16 of
/// the cap while fewer than `min_hits` hits have been seen.
fn adaptive_point(region: Arc<Region>, probe: Probe, index: u32, p: f64, mc: &McConfig) -> Result<Estimate> {
    let start = match mc.min_hits {
        Some(_) => (mc.trials / 16).max(1),
        None => mc.trials,
    };
    let mut sample = ThresholdSample::collect(region, probe, p, mc.seed, start, mc.site_budget)?;
    loop {
        let m = sample.index_moments(p)?;
        let hits = m.sum[index as usize - 1] as u64;
        let enough = mc.min_hits.is_none_or(|h| hits >= h);
        if enough || sample.trials() >= mc.trials {
            return Ok(Estimate::binomial(hits, m.trials, mc.z));
        }
        sample.extend_to((sample.trials() * 2).min(mc.trials));
    }
}

/// `P_p(o ↔ (v_n, 0))` inside `ProductBall(k)`.
pub fn estimate_tau(lattice: Lattice, n: u32, p: f64, k: u32, mc: &McConfig) -> Result<Estimate> {
    check_p(p)?;
    if k < n {
        return Err(Error::Domain(format!("target (v_{n}, 0) lies outside ProductBall({k}), the event is impossible")));
    }
    if n == 0 {
        return Ok(Estimate::binomial(mc.trials, mc.trials, mc.z));
    }
    let region = lazy_region(lattice, RegionShape::ProductBall { radius: k })?;
    adaptive_point(region, Probe::RayPoint { n_max: n }, n, p, mc)
}

/// Per-`p` Bernoulli cross-check of [`estimate_tau`]: an independent
/// breadth-first search for every trial.
pub fn estimate_tau_bernoulli(lattice: Lattice, n: u32, p: f64, k: u32, mc: &McConfig) -> Result<Estimate> {
    check_p(p)?;
    if k < n {
        return Err(Error::Domain(format!("target (v_{n}, 0) lies outside ProductBall({k}), the event is impossible")));
    }
    let region = build_region(lattice, RegionShape::ProductBall { radius: k }, u64::MAX)?;
    let event = ConnectionEvent::site(SiteCoord::ORIGIN, SiteCoord::new(TreeVertex::ray(n), 0));
    let mut hits = 0;
    for t in 0..mc.trials {
        let field = WeightField::new(lattice, mc.seed, t);
        hits += occurs(&event, &ConfigurationView::new(&field, p, &region)?)? as u64;
    }
    Ok(Estimate::binomial(hits, mc.trials, mc.z))
}

/// `P_p(o ↔ π⁻¹(v_n))` inside the given region.
pub fn estimate_tau_fiber(lattice: Lattice, n: u32, p: f64, shape: RegionShape, mc: &McConfig) -> Result<Estimate> {
    check_p(p)?;
    let region = lazy_region(lattice, shape)?;
    if !region.contains(&SiteCoord::new(TreeVertex::ray(n), 0)) {
        return Err(Error::Domain(format!("fiber of v_{n} lies outside {}", region.label())));
    }
    if n == 0 {
        return Ok(Estimate::binomial(mc.trials, mc.trials, mc.z));
    }
    adaptive_point(region, Probe::RayFiber { n_max: n }, n, p, mc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    TauHorizontal,
    TauFiber,
    TauVertical,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::TauHorizontal => "tau_horizontal",
            Quantity::TauFiber => "tau_fiber",
            Quantity::TauVertical => "tau_vertical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub index: u32,
    pub estimate: Estimate,
    pub region: String,
}

/// Connection probabilities along one direction at a fixed `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    pub quantity: Quantity,
    pub p: f64,
    pub seed: u64,
    pub points: Vec<SeriesPoint>,
}

/// One value of a summed or averaged profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub index: u32,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
}

/// An exponential rate read off a sequence `s_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    pub p: f64,
    /// `max_n s_n^(1/n)`.
    pub sup_root: f64,
    /// `min_n s_n^(1/n)`.
    pub inf_root: f64,
    /// `exp` of the least-squares slope of `ln s_n` over `fit_window`.
    pub slope_fit: f64,
    /// Interval for `slope_fit` (delta method with the sample covariance of
    /// the `s_n`).
    pub ci_band: (f64, f64),
    pub fit_window: (u32, u32),
    pub capped: bool,
    pub stabilized: bool,
    pub censored_trials: u64,
    pub region: String,
    pub trials: u64,
    pub method_note: String,
    pub points: Vec<RatePoint>,
    pub series: Option<DecaySeries>,
}

impl RateEstimate {
    pub fn ci_upper(&self) -> f64 {
        self.ci_band.1
    }

    pub fn ci_lower(&self) -> f64 {
        self.ci_band.0
    }
}

/// Rate from slot moments: slot `i` holds index `indices[i]` with
/// `scale[i]` samples per trial.
fn rate_from_moments(
    p: f64,
    m: &Moments,
    indices: &[u32],
    scale: &[f64],
    window: (u32, u32),
    z: f64,
    region: &str,
) -> RateEstimate {
    let points: Vec<RatePoint> = indices
        .iter()
        .enumerate()
        .map(|(i, &index)| {
            let mean = m.mean(i) / scale[i];
            let se = m.cov_of_means(i, i).max(0.0).sqrt() / scale[i];
            RatePoint { index, mean, ci_low: (mean - z * se).max(0.0), ci_high: mean + z * se, std_error: se }
        })
        .collect();
    let roots: Vec<f64> = points.iter().map(|pt| pt.mean.powf(1.0 / pt.index as f64)).collect();
    let sup_root = roots.iter().copied().fold(0.0, f64::max);
    let inf_root = roots.iter().copied().fold(f64::INFINITY, f64::min);

    let sel: Vec<usize> = (0..indices.len())
        .filter(|&i| indices[i] >= window.0 && indices[i] <= window.1 && points[i].mean > 0.0)
        .collect();
    let x: Vec<f64> = sel.iter().map(|&i| indices[i] as f64).collect();
    let y: Vec<f64> = sel.iter().map(|&i| m.mean(i)).collect();
    let cov: Vec<Vec<f64>> = sel.iter().map(|&i| sel.iter().map(|&j| m.cov_of_means(i, j)).collect()).collect();
    // The per-index sample sizes only shift ln s_n by a term linear in n for
    // spheres, which the slope has to see: refit on s_n itself.
    let y_scaled: Vec<f64> = sel.iter().zip(&y).map(|(&i, v)| v / scale[i]).collect();
    let cov_scaled: Vec<Vec<f64>> =
        sel.iter().enumerate().map(|(a, &i)| sel.iter().enumerate().map(|(b, &j)| cov[a][b] / (scale[i] * scale[j])).collect()).collect();
    let mut note = String::new();
    let (mut slope_fit, mut band) = match stats::log_slope(&x, &y_scaled, &cov_scaled) {
        Some(fit) => {
            note.push_str(&format!("log-slope over n in [{}, {}]", x[0], x[x.len() - 1]));
            (fit.slope.exp(), ((fit.slope - z * fit.std_error).exp(), (fit.slope + z * fit.std_error).exp()))
        }
        None => {
            // Too few positive points: fall back on the last index's root.
            let last = indices.iter().rposition(|&n| n <= window.1).unwrap_or(indices.len() - 1);
            let n = indices[last] as f64;
            let hits = m.sum[last] as u64;
            let upper = if hits == 0 {
                (wilson(0, m.trials, z).1 / scale[last]).powf(1.0 / n)
            } else {
                points[last].ci_high.min(1.0).powf(1.0 / n)
            };
            note.push_str("fewer than two positive points, root of the last index");
            (sup_root, (points[last].ci_low.powf(1.0 / n), upper.max(sup_root)))
        }
    };
    let capped = slope_fit > 1.0;
    if capped {
        note.push_str("; warning: series does not decay, rate capped at 1");
        slope_fit = 1.0;
    }
    band = (band.0.min(1.0), band.1.min(1.0));
    RateEstimate {
        p,
        sup_root: sup_root.min(1.0),
        inf_root: if inf_root.is_finite() { inf_root.min(1.0) } else { 0.0 },
        slope_fit,
        ci_band: band,
        fit_window: window,
        capped,
        stabilized: true,
        censored_trials: m.censored,
        region: region.to_string(),
        trials: m.trials,
        method_note: note,
        points,
        series: None,
    }
}

/// Which two-point function the α estimator follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// `P(o ↔ (v_n, 0))`.
    Point,
    /// `P(o ↔ π⁻¹(v_n))`.
    Fiber,
    /// `|S(n)|⁻¹ Σ_{|x| = n} P(o ↔ π⁻¹(x))`, equal to the fiber probability by
    /// homogeneity of the tree and far less noisy.
    SphereFiber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaConfig {
    pub n_max: u32,
    pub mode: AlphaMode,
    /// Strip half-widths tried in turn until the estimate stabilises.
    pub half_widths: Vec<u32>,
    /// Extra tree depth beyond `n_max` kept in the region.
    pub tree_slack: u32,
    /// Smallest `n` in the slope fit (default `max(2, n_max / 3)`).
    pub fit_from: Option<u32>,
    pub eps_stab: f64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        AlphaConfig {
            n_max: 12,
            mode: AlphaMode::SphereFiber,
            half_widths: vec![6, 12, 24],
            tree_slack: 3,
            fit_from: None,
            eps_stab: 1e-3,
        }
    }
}

impl AlphaConfig {
    pub fn window(&self) -> (u32, u32) {
        let from = self.fit_from.unwrap_or((self.n_max / 3).max(2)).min(self.n_max.saturating_sub(1)).max(1);
        (from, self.n_max)
    }

    pub fn shape(&self, half_width: u32) -> RegionShape {
        RegionShape::Strip { tree_radius: self.n_max + self.tree_slack, half_width }
    }

    fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if self.half_widths.is_empty() {
            return Err(Error::Config("the half-width schedule is empty".into()));
        }
        Ok(())
    }
}

/// A threshold sample for α at one strip half-width, reusable for every
/// `p` below its cap and extendable in trials.
#[derive(Debug, Clone)]
pub struct AlphaSampler {
    lattice: Lattice,
    cfg: AlphaConfig,
    half_width: u32,
    z: f64,
    sample: ThresholdSample,
}

impl AlphaSampler {
    pub fn new(lattice: Lattice, cfg: &AlphaConfig, half_width: u32, cap: f64, mc: &McConfig) -> Result<Self> {
        cfg.validate()?;
        check_p(cap)?;
        let shape = cfg.shape(half_width);
        let region = lazy_region(lattice, shape)?;
        let probe = match cfg.mode {
            AlphaMode::Point => Probe::RayPoint { n_max: cfg.n_max },
            AlphaMode::Fiber => Probe::RayFiber { n_max: cfg.n_max },
            AlphaMode::SphereFiber => Probe::SphereFiber { n_max: cfg.n_max },
        };
        let sample = ThresholdSample::collect(region, probe, cap, mc.seed, mc.trials, mc.site_budget)?;
        Ok(AlphaSampler { lattice, cfg: cfg.clone(), half_width, z: mc.z, sample })
    }

    pub fn extend_to(&mut self, trials: u64) {
        self.sample.extend_to(trials);
    }

    pub fn trials(&self) -> u64 {
        self.sample.trials()
    }

    pub fn cap(&self) -> f64 {
        self.sample.cap()
    }

    pub fn config(&self) -> &AlphaConfig {
        &self.cfg
    }

    pub fn half_width(&self) -> u32 {
        self.half_width
    }

    pub fn rate(&self, p: f64) -> Result<RateEstimate> {
        let m = self.sample.index_moments(p)?;
        let n_max = self.cfg.n_max;
        let indices: Vec<u32> = (1..=n_max).collect();
        let scale: Vec<f64> = match self.cfg.mode {
            AlphaMode::SphereFiber => indices.iter().map(|&n| self.lattice.sphere_size(n).map(|s| s as f64)).collect::<Result<_>>()?,
            _ => vec![1.0; n_max as usize],
        };
        let label = self.sample.region().label();
        let mut rate = rate_from_moments(p, &m, &indices, &scale, self.cfg.window(), self.z, &label);
        let quantity = match self.cfg.mode {
            AlphaMode::Point => Quantity::TauHorizontal,
            _ => Quantity::TauFiber,
        };
        let points = indices
            .iter()
            .enumerate()
            .map(|(i, &n)| SeriesPoint {
                index: n,
                estimate: Estimate::pooled(m.sum[i].round() as u64, m.trials, scale[i] as u64, m.cov_of_means(i, i), self.z),
                region: label.clone(),
            })
            .collect();
        rate.series = Some(DecaySeries { quantity, p, seed: self.sample.seed(), points });
        rate.method_note = format!("{:?} mode, {}", self.cfg.mode, rate.method_note);
        Ok(rate)
    }
}

/// α(p) with the region stabilisation rule: the strip half-width runs
/// through the schedule until the slope-fit estimate moves by less than
/// `eps_stab`.
pub fn estimate_alpha(lattice: Lattice, p: f64, cfg: &AlphaConfig, mc: &McConfig) -> Result<RateEstimate> {
    Ok(alpha_curve(lattice, &[p], cfg, mc)?.remove(0))
}

/// [`estimate_alpha`] over a grid of `p` from one coupled set of trials; the
/// stabilisation test uses the largest change over the grid.
pub fn alpha_curve(lattice: Lattice, ps: &[f64], cfg: &AlphaConfig, mc: &McConfig) -> Result<Vec<RateEstimate>> {
    cfg.validate()?;
    if ps.is_empty() {
        return Err(Error::Config("empty p grid".into()));
    }
    for &p in ps {
        check_p(p)?;
    }
    let cap = ps.iter().copied().fold(0.0, f64::max);
    let mut prev: Option<Vec<RateEstimate>> = None;
    for &w in &cfg.half_widths {
        let sampler = AlphaSampler::new(lattice, cfg, w, cap, mc)?;
        let cur = ps.iter().map(|&p| sampler.rate(p)).collect::<Result<Vec<_>>>()?;
        if let Some(prev) = prev.as_ref() {
            let change = cur.iter().zip(prev).map(|(a, b)| (a.slope_fit - b.slope_fit).abs()).fold(0.0, f64::max);
            if change < cfg.eps_stab {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    let mut out = prev.unwrap();
    if cfg.half_widths.len() > 1 {
        for r in &mut out {
            r.stabilized = false;
            r.method_note.push_str("; region schedule exhausted before stabilisation");
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BetaConfig {
    pub m_max: u32,
    /// Tree radii tried in turn until the estimate stabilises.
    pub tree_radii: Vec<u32>,
    pub layer_slack: u32,
    pub fit_from: Option<u32>,
    pub eps_stab: f64,
}

impl Default for BetaConfig {
    fn default() -> Self {
        BetaConfig { m_max: 10, tree_radii: vec![3, 6, 12], layer_slack: 3, fit_from: None, eps_stab: 1e-3 }
    }
}

/// β(p) from `P(o ↔ (o, m))`, with the tree radius of the strip grown until
/// the estimate stabilises.
pub fn estimate_beta(lattice: Lattice, p: f64, cfg: &BetaConfig, mc: &McConfig) -> Result<RateEstimate> {
    check_p(p)?;
    if cfg.m_max < 1 || cfg.tree_radii.is_empty() {
        return Err(Error::Config("m_max must be at least 1 and the radius schedule nonempty".into()));
    }
    let window = (cfg.fit_from.unwrap_or((cfg.m_max / 3).max(2)).min(cfg.m_max - 1).max(1), cfg.m_max);
    let indices: Vec<u32> = (1..=cfg.m_max).collect();
    let scale = vec![1.0; indices.len()];
    let mut prev: Option<RateEstimate> = None;
    for &r in &cfg.tree_radii {
        let region = lazy_region(lattice, RegionShape::Strip { tree_radius: r, half_width: cfg.m_max + cfg.layer_slack })?;
        let label = region.label();
        let sample = ThresholdSample::collect(region, Probe::Vertical { m_max: cfg.m_max }, p, mc.seed, mc.trials, mc.site_budget)?;
        let m = sample.index_moments(p)?;
        let mut rate = rate_from_moments(p, &m, &indices, &scale, window, mc.z, &label);
        rate.series = Some(DecaySeries {
            quantity: Quantity::TauVertical,
            p,
            seed: mc.seed,
            points: indices
                .iter()
                .enumerate()
                .map(|(i, &k)| SeriesPoint { index: k, estimate: Estimate::binomial(m.sum[i] as u64, m.trials, mc.z), region: label.clone() })
                .collect(),
        });
        if let Some(prev) = prev.as_ref() {
            if (rate.slope_fit - prev.slope_fit).abs() < cfg.eps_stab {
                return Ok(rate);
            }
        }
        prev = Some(rate);
    }
    let mut out = prev.unwrap();
    if cfg.tree_radii.len() > 1 {
        out.stabilized = false;
        out.method_note.push_str("; region schedule exhausted before stabilisation");
    }
    Ok(out)
}

/// Layer-summed connection probabilities `I_n^(K) = Σ_{|k| ≤ K} τ(o, (x, k))`
/// with `|x| = n`, averaged over the sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummedValue {
    pub n: u32,
    pub p: f64,
    pub k_cut: u32,
    pub value: MeanEstimate,
    /// `I_n^(m)` for `m = 0..=k_cut`.
    pub truncations: Vec<f64>,
    /// Bound on `I_n - I_n^(K)` from the upper end of the β interval.
    pub tail_bound: f64,
    /// `τ(o, (x, k))` for `k = -K..=K`.
    pub layers: Vec<(i32, RatePoint)>,
    pub region: String,
}

/// The `I_n` profile for `1 ≤ n ≤ n_max`, plus its rate η.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummedSeries {
    pub values: Vec<SummedValue>,
    pub eta: RateEstimate,
    pub beta_upper: f64,
}

/// `2 b^(K+1) / (1 - b)`.
pub fn vertical_tail_bound(beta_upper: f64, k_cut: u32) -> f64 {
    2.0 * beta_upper.powi(k_cut as i32 + 1) / (1.0 - beta_upper)
}

/// `I_n` for `1 ≤ n ≤ n_max` on `Strip(n_max + slack, half_width)` with the
/// tail accounted by `beta` (whose interval must clear 1).
pub fn estimate_i_series(
    lattice: Lattice,
    p: f64,
    n_max: u32,
    k_cut: u32,
    shape: RegionShape,
    beta: &RateEstimate,
    mc: &McConfig,
) -> Result<SummedSeries> {
    check_p(p)?;
    if n_max < 1 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    let beta_upper = beta.ci_upper();
    if beta_upper >= 1.0 {
        return Err(Error::Domain(format!("vertical decay not established: the beta interval reaches {beta_upper}")));
    }
    let region = lazy_region(lattice, shape)?;
    let corner = SiteCoord::new(TreeVertex::ray(n_max), k_cut as i32);
    if !region.contains(&corner) || !region.contains(&SiteCoord::new(corner.tree, -(k_cut as i32))) {
        return Err(Error::Domain(format!("{} does not contain the layers |k| <= {k_cut} over S({n_max})", region.label())));
    }
    let label = region.label();
    let sample = ThresholdSample::collect(region, Probe::SphereSites { n_max, k_cut }, p, mc.seed, mc.trials, mc.site_budget)?;
    let sizes: Vec<f64> = (1..=n_max).map(|n| lattice.sphere_size(n).map(|s| s as f64)).collect::<Result<_>>()?;
    let width = 2 * k_cut as usize + 1;
    let per_layer = sample.moments(p, n_max as usize * width, |h| {
        Some(((h.index as usize - 1) * width + (h.aux + k_cut as i32) as usize, 1.0))
    })?;
    let totals = sample.index_moments(p)?;
    let tail = vertical_tail_bound(beta_upper, k_cut);
    let t = totals.trials;
    let values = (1..=n_max)
        .map(|n| {
            let i = n as usize - 1;
            let s = sizes[i];
            let layer_mean = |k: i32| per_layer.mean(i * width + (k + k_cut as i32) as usize) / s;
            let mut truncations = Vec::with_capacity(k_cut as usize + 1);
            let mut acc = 0.0;
            for m in 0..=k_cut as i32 {
                acc += if m == 0 { layer_mean(0) } else { layer_mean(m) + layer_mean(-m) };
                truncations.push(acc);
            }
            let layers = (-(k_cut as i32)..=k_cut as i32)
                .map(|k| {
                    let slot = i * width + (k + k_cut as i32) as usize;
                    let mean = per_layer.mean(slot) / s;
                    let se = per_layer.cov_of_means(slot, slot).max(0.0).sqrt() / s;
                    (k, RatePoint { index: n, mean, ci_low: (mean - mc.z * se).max(0.0), ci_high: mean + mc.z * se, std_error: se })
                })
                .collect();
            SummedValue {
                n,
                p,
                k_cut,
                value: MeanEstimate::new(totals.mean(i) / s, totals.cov_of_means(i, i) / (s * s), t, mc.z),
                truncations,
                tail_bound: tail,
                layers,
                region: label.clone(),
            }
        })
        .collect();
    let indices: Vec<u32> = (1..=n_max).collect();
    let window = ((n_max / 3).max(1).min(n_max.saturating_sub(1)).max(1), n_max);
    let mut eta = rate_from_moments(p, &totals, &indices, &sizes, window, mc.z, &label);
    eta.method_note.push_str(&format!("; I_n truncated at |k| <= {k_cut}, tail <= {tail:.3e}"));
    Ok(SummedSeries { values, eta, beta_upper })
}

/// `I_n` alone; see [`estimate_i_series`].
pub fn estimate_i_n(
    lattice: Lattice,
    n: u32,
    p: f64,
    k_cut: u32,
    shape: RegionShape,
    beta: &RateEstimate,
    mc: &McConfig,
) -> Result<SummedValue> {
    let mut s = estimate_i_series(lattice, p, n, k_cut, shape, beta, mc)?;
    Ok(s.values.pop().unwrap())
}

/// η(p) as the rate of `I_n`; the relevant root is `inf_root`.
pub fn estimate_eta(
    lattice: Lattice,
    p: f64,
    n_max: u32,
    k_cut: u32,
    shape: RegionShape,
    beta: &RateEstimate,
    mc: &McConfig,
) -> Result<RateEstimate> {
    Ok(estimate_i_series(lattice, p, n_max, k_cut, shape, beta, mc)?.eta)
}

/// `J_m(p, z) = Σ_x τ(o, (x, m)) z^L(x)` truncated at `|x| ≤ n_cut`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JValue {
    pub m: u32,
    pub p: f64,
    pub z: f64,
    pub n_cut: u32,
    pub value: MeanEstimate,
    /// Bound on the terms `|x| > n_cut` from the upper end of the α interval.
    pub tail_bound: f64,
    pub region: String,
}

/// `J_m` for `0 ≤ m ≤ m_max` at one `z`, plus the rate φ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JProfile {
    pub z: f64,
    pub values: Vec<JValue>,
    pub phi: RateEstimate,
}

/// The window `(a, 1/(a b))` of `z` where the truncated `J_m` sum has a finite tail bound.
pub fn j_window(alpha_upper: f64, b: u32) -> Result<(f64, f64)> {
    let hi = 1.0 / (alpha_upper * b as f64);
    if !(alpha_upper < hi) {
        return Err(Error::Domain(format!(
            "the z-window is empty: the alpha upper bound {alpha_upper:.4} is not below 1/sqrt(d-1) = {:.4}",
            1.0 / (b as f64).sqrt()
        )));
    }
    Ok((alpha_upper, hi))
}

/// `Σ_{n > n_cut} a^n a_n(z)`.
pub fn level_tail_bound(alpha_upper: f64, z: f64, b: u32, n_cut: u32) -> Result<f64> {
    let (lo, hi) = j_window(alpha_upper, b)?;
    if !(z > lo && z < hi) {
        return Err(Error::Domain(format!("z = {z} lies outside the window ({lo:.4}, {hi:.4}) set by alpha upper {alpha_upper:.4}")));
    }
    let mut sum = 0.0;
    let mut n = n_cut + 1;
    loop {
        let term = alpha_upper.powi(n as i32) * a_n_closed(n, z, b)?;
        sum += term;
        if term <= 1e-16 * sum || n > n_cut + 100_000 {
            break;
        }
        n += 1;
    }
    Ok(sum)
}

/// `J_m(p, z)` for `0 ≤ m ≤ m_max` and each `z` in `zs`, averaging the
/// layers `±m`. One set of trials serves every `m` and `z`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_j(
    lattice: Lattice,
    p: f64,
    zs: &[f64],
    m_max: u32,
    n_cut: u32,
    half_width: u32,
    alpha_upper: f64,
    mc: &McConfig,
) -> Result<Vec<JProfile>> {
    check_p(p)?;
    let b = lattice.branching();
    let tails = zs.iter().map(|&z| level_tail_bound(alpha_upper, z, b, n_cut)).collect::<Result<Vec<_>>>()?;
    j_profiles(lattice, p, zs, &tails, m_max, n_cut, half_width, mc)
}

/// The truncated sums `J_m^(n_cut)` alone, for any `z > 0`. Without an α
/// bound the tail is unknown and `tail_bound` is infinite.
pub fn estimate_j_truncated(
    lattice: Lattice,
    p: f64,
    zs: &[f64],
    m_max: u32,
    n_cut: u32,
    half_width: u32,
    mc: &McConfig,
) -> Result<Vec<JProfile>> {
    if let Some(z) = zs.iter().find(|z| !(**z > 0.0)) {
        return Err(Error::Domain(format!("z = {z} must be positive")));
    }
    j_profiles(lattice, p, zs, &vec![f64::INFINITY; zs.len()], m_max, n_cut, half_width, mc)
}

#[allow(clippy::too_many_arguments)]
fn j_profiles(
    lattice: Lattice,
    p: f64,
    zs: &[f64],
    tails: &[f64],
    m_max: u32,
    n_cut: u32,
    half_width: u32,
    mc: &McConfig,
) -> Result<Vec<JProfile>> {
    check_p(p)?;
    if half_width < m_max {
        return Err(Error::Domain(format!("half-width {half_width} does not reach layer {m_max}")));
    }
    let region = lazy_region(lattice, RegionShape::Strip { tree_radius: n_cut, half_width })?;
    let label = region.label();
    let sample = ThresholdSample::collect(region, Probe::Layers { m_max, n_cut }, p, mc.seed, mc.trials, mc.site_budget)?;
    let mut out = Vec::with_capacity(zs.len());
    for (&z, &tail) in zs.iter().zip(tails) {
        let mom = sample.moments(p, m_max as usize + 1, |h| {
            let w = z.powi(h.aux) * if h.index == 0 { 1.0 } else { 0.5 };
            Some((h.index as usize, w))
        })?;
        let values: Vec<JValue> = (0..=m_max)
            .map(|m| JValue {
                m,
                p,
                z,
                n_cut,
                value: MeanEstimate::new(mom.mean(m as usize), mom.cov_of_means(m as usize, m as usize), mom.trials, mc.z),
                tail_bound: tail,
                region: label.clone(),
            })
            .collect();
        // φ from m ≥ 1: drop slot 0 by shifting.
        let shifted = Moments {
            trials: mom.trials,
            sum: mom.sum[1..].to_vec(),
            cross: mom.cross[1..].iter().map(|r| r[1..].to_vec()).collect(),
            censored: mom.censored,
        };
        let indices: Vec<u32> = (1..=m_max).collect();
        let scale = vec![1.0; m_max as usize];
        let mut phi = rate_from_moments(p, &shifted, &indices, &scale, (1, m_max), mc.z, &label);
        phi.capped = false;
        phi.method_note = format!("phi as the log-slope of J_m over m in [1, {m_max}]");
        out.push(JProfile { z, values, phi });
    }
    Ok(out)
}

/// One row of the α(p) against `1/√(d-1)` diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchonmannRow {
    pub p: f64,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    /// `below`, `above` or `crosses`.
    pub verdict: &'static str,
}

/// Reports α̂(p) against `1/√(d-1)` on a grid. Diagnostic only.
pub fn alpha_schonmann_check(lattice: Lattice, ps: &[f64], cfg: &AlphaConfig, mc: &McConfig) -> Result<Vec<SchonmannRow>> {
    let bound = 1.0 / (lattice.branching() as f64).sqrt();
    Ok(alpha_curve(lattice, ps, cfg, mc)?
        .into_iter()
        .map(|r| SchonmannRow {
            p: r.p,
            alpha: r.slope_fit,
            ci_low: r.ci_band.0,
            ci_high: r.ci_band.1,
            bound,
            verdict: if r.ci_band.1 < bound {
                "below"
            } else if r.ci_band.0 > bound {
                "above"
            } else {
                "crosses"
            },
        })
        .collect())
}
