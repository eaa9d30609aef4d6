//! Estimation of p_c: by bisection on α̂(p) against 1/(d-1), and by a direct
//! finite-size scan of the survival to distance R.
//!
//! Both routes use a statistical bisection: a probe only moves the bracket
//! when its confidence interval clears the decision threshold. Otherwise the
//! sampling effort is escalated and the probe repeated; once the escalation
//! schedule is spent the bracket is returned as undecided.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{AlphaConfig, AlphaSampler, McConfig, Probe, ThresholdSample};
use crate::lattice::{build_region, Lattice, RegionShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Above,
    Straddle,
}

/// One classification of one `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub p: f64,
    pub side: Side,
    /// α̂ for the alpha route, the rescaled survival difference for the direct route.
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    /// Escalation level in force.
    pub level: u32,
    pub detail: String,
}

/// Bracket `[lo, hi]` with `lo` classified below and `hi` above.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionState {
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    pub history: Vec<ProbeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcStatus {
    Converged,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcReport {
    pub d: u32,
    pub method: String,
    pub interval: [f64; 2],
    pub status: PcStatus,
    pub target: f64,
    pub probes: Vec<ProbeRecord>,
    pub seed: u64,
    pub wall_time: f64,
}

impl PcReport {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.interval[0] + self.interval[1])
    }

    pub fn width(&self) -> f64 {
        self.interval[1] - self.interval[0]
    }
}

/// A noisy monotone test of `p` against the critical point.
pub trait Classifier {
    /// Makes every `p <= cap` answerable.
    fn prepare(&mut self, cap: f64) -> Result<()>;
    fn classify(&mut self, p: f64) -> Result<ProbeRecord>;
    /// Moves to the next escalation level; `false` once the schedule is spent.
    fn escalate(&mut self) -> Result<bool>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BisectionConfig {
    pub tol: f64,
    /// Step of the initial upward scan from `p = 0`.
    pub scan_step: f64,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig { tol: 0.02, scan_step: 0.05 }
    }
}

fn decide<C: Classifier>(c: &mut C, p: f64, history: &mut Vec<ProbeRecord>) -> Result<Side> {
    loop {
        let rec = c.classify(p)?;
        let side = rec.side;
        history.push(rec);
        if side != Side::Straddle || !c.escalate()? {
            return Ok(side);
        }
    }
}

/// Generic CI-separated bisection.
pub fn bisect<C: Classifier>(c: &mut C, target: f64, cfg: &BisectionConfig) -> Result<(BisectionState, PcStatus)> {
    if !(cfg.tol > 0.0) || !(cfg.scan_step > 0.0 && cfg.scan_step <= 1.0) {
        return Err(Error::Config("tol and scan_step must be positive, scan_step at most 1".into()));
    }
    let mut history = Vec::new();
    c.prepare(0.0)?;
    if decide(c, 0.0, &mut history)? != Side::Below {
        return Err(Error::Undecided("p = 0 is not classified below the critical point".into()));
    }
    let (mut lo, mut hi) = (0.0, f64::NAN);
    let mut k = 1;
    while hi.is_nan() {
        let p = (k as f64 * cfg.scan_step).min(1.0);
        c.prepare(p)?;
        // No escalation while scanning: an undecided grid point simply stays
        // inside the bracket.
        let rec = c.classify(p)?;
        let side = rec.side;
        history.push(rec);
        match side {
            Side::Below => lo = p,
            Side::Above => hi = p,
            Side::Straddle => {}
        }
        if p >= 1.0 && hi.is_nan() {
            return Err(Error::Undecided("no scanned p was classified above the critical point".into()));
        }
        k += 1;
    }
    c.prepare(hi)?;
    let mut status = PcStatus::Converged;
    while hi - lo > cfg.tol {
        let w = hi - lo;
        let mid = 0.5 * (lo + hi);
        match decide(c, mid, &mut history)? {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Straddle => {
                // The midpoint sits within resolution of the critical point;
                // the quarter points are then typically decidable, and
                // bracketing by them still halves the width.
                let (a, b) = (mid - 0.25 * w, mid + 0.25 * w);
                let sa = decide(c, a, &mut history)?;
                let sb = decide(c, b, &mut history)?;
                if sa == Side::Below {
                    lo = a;
                }
                if sb == Side::Above {
                    hi = b;
                }
                if hi - lo >= w {
                    status = PcStatus::Undecided;
                    break;
                }
            }
        }
    }
    Ok((BisectionState { lo, hi, target, history }, status))
}

/// Escalation schedule for the alpha route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaRouteConfig {
    pub alpha: AlphaConfig,
    /// Strip half-width of the sampling region.
    pub half_width: u32,
    pub trial_doublings: u32,
    pub n_max_step: u32,
    pub n_max_increments: u32,
    pub widenings: u32,
}

impl Default for AlphaRouteConfig {
    fn default() -> Self {
        AlphaRouteConfig {
            alpha: AlphaConfig { n_max: 12, ..AlphaConfig::default() },
            half_width: 12,
            trial_doublings: 3,
            n_max_step: 2,
            n_max_increments: 1,
            widenings: 1,
        }
    }
}

/// Classifies `p` by whether the α̂ interval lies below or above `1/(d-1)`.
pub struct AlphaClassifier {
    lattice: Lattice,
    cfg: AlphaRouteConfig,
    mc: McConfig,
    target: f64,
    sampler: Option<AlphaSampler>,
    cap: f64,
    level: u32,
}

impl AlphaClassifier {
    pub fn new(lattice: Lattice, cfg: AlphaRouteConfig, mc: McConfig) -> Self {
        AlphaClassifier { lattice, target: lattice.critical_alpha(), cfg, mc, sampler: None, cap: 0.0, level: 0 }
    }

    fn rebuild(&mut self) -> Result<()> {
        let w = self.cfg.half_width;
        self.sampler = Some(AlphaSampler::new(self.lattice, &self.cfg.alpha, w, self.cap, &self.mc)?);
        Ok(())
    }
}

impl Classifier for AlphaClassifier {
    fn prepare(&mut self, cap: f64) -> Result<()> {
        if self.sampler.is_none() || cap != self.cap {
            self.cap = cap;
            self.rebuild()?;
        }
        Ok(())
    }

    fn classify(&mut self, p: f64) -> Result<ProbeRecord> {
        let sampler = self.sampler.as_ref().ok_or_else(|| Error::Config("classifier not prepared".into()))?;
        let r = sampler.rate(p)?;
        let side = if r.ci_band.1 < self.target {
            Side::Below
        } else if r.ci_band.0 > self.target {
            Side::Above
        } else {
            Side::Straddle
        };
        Ok(ProbeRecord {
            p,
            side,
            value: r.slope_fit,
            ci_low: r.ci_band.0,
            ci_high: r.ci_band.1,
            trials: r.trials,
            level: self.level,
            detail: format!("n_max {} on {}, sup-root {:.5}", sampler.config().n_max, r.region, r.sup_root),
        })
    }

    fn escalate(&mut self) -> Result<bool> {
        let c = &self.cfg;
        let l = self.level;
        if l < c.trial_doublings {
            self.mc.trials *= 2;
            if let Some(s) = self.sampler.as_mut() {
                s.extend_to(self.mc.trials);
            }
        } else if l < c.trial_doublings + c.n_max_increments {
            self.cfg.alpha.n_max += c.n_max_step;
            self.rebuild()?;
        } else if l < c.trial_doublings + c.n_max_increments + c.widenings {
            self.cfg.half_width *= 2;
            self.rebuild()?;
        } else {
            return Ok(false);
        }
        self.level += 1;
        Ok(true)
    }
}

/// p_c as the point where α̂(p) crosses `1/(d-1)`.
pub fn estimate_pc_via_alpha(d: u32, bisection: &BisectionConfig, route: &AlphaRouteConfig, mc: &McConfig) -> Result<PcReport> {
    let start = Instant::now();
    let lattice = Lattice::new(d)?;
    let mut c = AlphaClassifier::new(lattice, route.clone(), *mc);
    let target = lattice.critical_alpha();
    let (state, status) = bisect(&mut c, target, bisection)?;
    Ok(PcReport {
        d,
        method: "alpha_inversion".into(),
        interval: [state.lo, state.hi],
        status,
        target,
        probes: state.history,
        seed: mc.seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectRouteConfig {
    pub r_max: u32,
    pub trial_doublings: u32,
    /// Times `r_max` is grown by half after the doublings.
    pub radius_growths: u32,
}

impl Default for DirectRouteConfig {
    fn default() -> Self {
        DirectRouteConfig { r_max: 40, trial_doublings: 3, radius_growths: 1 }
    }
}

/// Classifies `p` by comparing `R θ_R(p)` at `R = r_max/2` and `R = r_max`,
/// with `θ_R = P(o ↔ ∂ProductBall(R))`. At criticality the one-arm
/// probability falls like `1/R`, so the rescaled survival decreases in `R`
/// below p_c (where θ_R decays exponentially) and increases above it (where
/// θ_R tends to a positive limit). Both radii come from the same invasion,
/// so the comparison is coupled trial by trial.
pub struct DirectClassifier {
    lattice: Lattice,
    cfg: DirectRouteConfig,
    mc: McConfig,
    sample: Option<ThresholdSample>,
    cap: f64,
    level: u32,
}

impl DirectClassifier {
    pub fn new(lattice: Lattice, cfg: DirectRouteConfig, mc: McConfig) -> Result<Self> {
        if cfg.r_max < 2 {
            return Err(Error::Config("r_max must be at least 2".into()));
        }
        Ok(DirectClassifier { lattice, cfg, mc, sample: None, cap: 0.0, level: 0 })
    }

    fn rebuild(&mut self) -> Result<()> {
        let region = Arc::new(build_region(self.lattice, RegionShape::ProductBall { radius: self.cfg.r_max }, u64::MAX)?);
        let probe = Probe::Boundary { r_max: self.cfg.r_max };
        self.sample = Some(ThresholdSample::collect(region, probe, self.cap, self.mc.seed, self.mc.trials, self.mc.site_budget)?);
        Ok(())
    }
}

impl Classifier for DirectClassifier {
    fn prepare(&mut self, cap: f64) -> Result<()> {
        if self.sample.is_none() || cap != self.cap {
            self.cap = cap;
            self.rebuild()?;
        }
        Ok(())
    }

    fn classify(&mut self, p: f64) -> Result<ProbeRecord> {
        let sample = self.sample.as_ref().ok_or_else(|| Error::Config("classifier not prepared".into()))?;
        let r2 = self.cfg.r_max;
        let r1 = r2 / 2;
        let m = sample.moments(p, 2, |h| {
            if h.index == r1 {
                Some((0, 1.0))
            } else if h.index == r2 {
                Some((1, 1.0))
            } else {
                None
            }
        })?;
        let (a, b) = (r1 as f64, r2 as f64);
        let value = b * m.mean(1) - a * m.mean(0);
        let var = b * b * m.cov_of_means(1, 1) + a * a * m.cov_of_means(0, 0) - 2.0 * a * b * m.cov_of_means(0, 1);
        let half = self.mc.z * var.max(0.0).sqrt();
        let (lo, hi) = (value - half, value + half);
        let side = if m.sum[0] == 0.0 || hi < 0.0 {
            // No trial reaches even R/2: the survival has collapsed.
            Side::Below
        } else if lo > 0.0 {
            Side::Above
        } else {
            Side::Straddle
        };
        Ok(ProbeRecord {
            p,
            side,
            value,
            ci_low: lo,
            ci_high: hi,
            trials: m.trials,
            level: self.level,
            detail: format!("theta_{r1} = {:.5}, theta_{r2} = {:.5}, censored {}", m.mean(0), m.mean(1), m.censored),
        })
    }

    fn escalate(&mut self) -> Result<bool> {
        let l = self.level;
        if l < self.cfg.trial_doublings {
            self.mc.trials *= 2;
            if let Some(s) = self.sample.as_mut() {
                s.extend_to(self.mc.trials);
            }
        } else if l < self.cfg.trial_doublings + self.cfg.radius_growths {
            self.cfg.r_max += self.cfg.r_max / 2;
            self.rebuild()?;
        } else {
            return Ok(false);
        }
        self.level += 1;
        Ok(true)
    }
}

/// p_c from the finite-size crossing of `R θ_R(p)`.
pub fn estimate_pc_direct(d: u32, bisection: &BisectionConfig, route: &DirectRouteConfig, mc: &McConfig) -> Result<PcReport> {
    let start = Instant::now();
    let lattice = Lattice::new(d)?;
    let mut c = DirectClassifier::new(lattice, route.clone(), *mc)?;
    let (state, status) = bisect(&mut c, 0.0, bisection)?;
    Ok(PcReport {
        d,
        method: "direct_survival".into(),
        interval: [state.lo, state.hi],
        status,
        target: 0.0,
        probes: state.history,
        seed: mc.seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
