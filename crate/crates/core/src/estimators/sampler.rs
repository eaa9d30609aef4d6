//! Coupled threshold sampling: one invasion per trial records the minimax
//! threshold of every watched target, which answers every `p` below the cap.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, SiteCoord};
use crate::percolation::{invade, InvasionEnd, Visit, WeightField};

/// What an invasion watches for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case")]
pub enum Probe {
    /// The sites `(v_n, 0)` on the canonical ray, `1 ≤ n ≤ n_max`.
    RayPoint { n_max: u32 },
    /// The fibers over `v_n`, `1 ≤ n ≤ n_max`.
    RayFiber { n_max: u32 },
    /// The sites `(o, m)`, `1 ≤ m ≤ m_max`.
    Vertical { m_max: u32 },
    /// Every fiber over the tree sphere of radius `n`, `1 ≤ n ≤ n_max`.
    SphereFiber { n_max: u32 },
    /// Every site `(x, k)` with `1 ≤ |x| ≤ n_max` and `|k| ≤ k_cut`;
    /// `aux` is the layer `k`.
    SphereSites { n_max: u32, k_cut: u32 },
    /// Every site `(x, ±m)` with `|m| ≤ m_max` and `|x| ≤ n_cut`, index `|m|`,
    /// `aux` the level `L(x)`.
    Layers { m_max: u32, n_cut: u32 },
    /// The first site at graph distance `r` from the origin, `1 ≤ r ≤ r_max`.
    Boundary { r_max: u32 },
}

impl Probe {
    fn max_index(&self) -> u32 {
        match *self {
            Probe::RayPoint { n_max } | Probe::RayFiber { n_max } | Probe::SphereFiber { n_max } => n_max,
            Probe::SphereSites { n_max, .. } => n_max,
            Probe::Vertical { m_max } | Probe::Layers { m_max, .. } => m_max,
            Probe::Boundary { r_max } => r_max,
        }
    }
}

/// A watched site reached in the invasion. The source is recorded with
/// threshold `-1` (connected at every `p`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub index: u32,
    pub aux: i32,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub hits: Vec<Hit>,
    /// Set when the site budget ran out; records are exact only for
    /// `p <= censored_at`.
    pub censored_at: Option<f64>,
}

fn run_trial(region: &Region, probe: Probe, cap: f64, seed: u64, trial: u64, site_budget: usize) -> TrialRecord {
    let lattice = *region.lattice();
    let field = WeightField::new(lattice, seed, trial);
    let max = probe.max_index();
    let mut hits = Vec::new();
    let mut found = vec![false; max as usize + 1];
    let mut remaining = max as usize;
    let mut fibers: FxHashSet<crate::lattice::TreeVertex> = FxHashSet::default();
    let mut last = 0.0f64;
    // The source is connected at every p, including p = cap = 0.
    let end = invade(&field, region, &SiteCoord::ORIGIN, cap.max(f64::MIN_POSITIVE), site_budget, |x, w| {
        last = w;
        let thr = if x == &SiteCoord::ORIGIN { -1.0 } else { w };
        let depth = x.tree.depth;
        match probe {
            Probe::RayPoint { .. } | Probe::RayFiber { .. } | Probe::Vertical { .. } => {
                let idx = match probe {
                    Probe::RayPoint { .. } if x.layer == 0 && x.tree.on_ray() => depth,
                    Probe::RayFiber { .. } if x.tree.on_ray() => depth,
                    Probe::Vertical { .. } if x.tree.is_origin() && x.layer > 0 => x.layer as u32,
                    _ => 0,
                };
                if idx >= 1 && idx <= max && !found[idx as usize] {
                    found[idx as usize] = true;
                    hits.push(Hit { index: idx, aux: 0, threshold: thr });
                    remaining -= 1;
                    if remaining == 0 {
                        return Visit::Stop;
                    }
                }
            }
            Probe::Boundary { .. } => {
                let r = lattice.norm(x) as u32;
                if r >= 1 && r <= max && !found[r as usize] {
                    found[r as usize] = true;
                    hits.push(Hit { index: r, aux: 0, threshold: thr });
                    if r == max {
                        return Visit::Stop;
                    }
                }
            }
            Probe::SphereFiber { .. } => {
                if depth >= 1 && depth <= max && fibers.insert(x.tree) {
                    hits.push(Hit { index: depth, aux: 0, threshold: thr });
                }
            }
            Probe::SphereSites { k_cut, .. } => {
                if depth >= 1 && depth <= max && x.layer.unsigned_abs() <= k_cut {
                    hits.push(Hit { index: depth, aux: x.layer, threshold: thr });
                }
            }
            Probe::Layers { n_cut, .. } => {
                let m = x.layer.unsigned_abs();
                if m <= max && depth <= n_cut {
                    hits.push(Hit { index: m, aux: lattice.level(&x.tree) as i32, threshold: thr });
                }
            }
        }
        Visit::Continue
    });
    TrialRecord { hits, censored_at: (end == InvasionEnd::Budget).then_some(last) }
}

/// First and second moments of per-trial slot totals at one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub trials: u64,
    pub sum: Vec<f64>,
    pub cross: Vec<Vec<f64>>,
    /// Trials whose records are only lower bounds at this `p`.
    pub censored: u64,
}

impl Moments {
    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.trials as f64
    }

    /// Covariance of the slot means `i` and `j`.
    pub fn cov_of_means(&self, i: usize, j: usize) -> f64 {
        let t = self.trials as f64;
        if self.trials < 2 {
            return 0.0;
        }
        (self.cross[i][j] - t * self.mean(i) * self.mean(j)) / (t - 1.0) / t
    }
}

/// Threshold records of a range of trials for one probe on one region.
#[derive(Debug, Clone)]
pub struct ThresholdSample {
    region: Arc<Region>,
    probe: Probe,
    cap: f64,
    seed: u64,
    site_budget: usize,
    records: Vec<TrialRecord>,
}

impl ThresholdSample {
    /// Runs trials `0..trials`. Only `p < cap` can be queried afterwards.
    pub fn collect(region: Arc<Region>, probe: Probe, cap: f64, seed: u64, trials: u64, site_budget: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&cap) {
            return Err(Error::Domain(format!("cap {cap} is not a probability")));
        }
        let mut sample = ThresholdSample { region, probe, cap, seed, site_budget, records: Vec::new() };
        sample.extend_to(trials);
        Ok(sample)
    }

    /// Adds trials up to `trials` in total.
    pub fn extend_to(&mut self, trials: u64) {
        let start = self.records.len() as u64;
        if trials <= start {
            return;
        }
        let more = self.run(start..trials);
        self.records.extend(more);
    }

    fn run(&self, range: Range<u64>) -> Vec<TrialRecord> {
        let (region, probe, cap, seed, budget) = (&*self.region, self.probe, self.cap, self.seed, self.site_budget);
        range.into_par_iter().map(|t| run_trial(region, probe, cap, seed, t, budget)).collect()
    }

    pub fn trials(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn probe(&self) -> Probe {
        self.probe
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    fn check_p(&self, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("p = {p} is not a probability")));
        }
        if p > self.cap {
            return Err(Error::Domain(format!("p = {p} lies above the sampling cap {}", self.cap)));
        }
        Ok(())
    }

    /// Moments over `slots` slots, where `slot(hit)` routes a hit (present
    /// at `p`) to a slot with a weight.
    pub fn moments(&self, p: f64, slots: usize, slot: impl Fn(&Hit) -> Option<(usize, f64)>) -> Result<Moments> {
        self.check_p(p)?;
        let mut m = Moments { trials: self.trials(), sum: vec![0.0; slots], cross: vec![vec![0.0; slots]; slots], censored: 0 };
        let mut x = vec![0.0; slots];
        let mut touched = Vec::new();
        for rec in &self.records {
            if rec.censored_at.is_some_and(|c| c < p) {
                m.censored += 1;
            }
            for h in &rec.hits {
                if h.threshold < p {
                    if let Some((i, w)) = slot(h) {
                        if x[i] == 0.0 {
                            touched.push(i);
                        }
                        x[i] += w;
                    }
                }
            }
            for &i in &touched {
                m.sum[i] += x[i];
                for &j in &touched {
                    m.cross[i][j] += x[i] * x[j];
                }
            }
            for &i in &touched {
                x[i] = 0.0;
            }
            touched.clear();
        }
        Ok(m)
    }

    /// Per-index counts of hits present at `p`, indices `1..=max` in slots `0..max`.
    pub fn index_moments(&self, p: f64) -> Result<Moments> {
        let max = self.probe.max_index() as usize;
        self.moments(p, max, |h| (h.index >= 1).then(|| (h.index as usize - 1, 1.0)))
    }
}
