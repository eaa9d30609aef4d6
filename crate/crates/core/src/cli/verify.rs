//! Self-check suites behind `percolab verify`.

use serde::Serialize;

use crate::combinatorics::{a_n_closed, a_n_direct, check_reflection, LevelCensus};
use crate::error::Result;
use crate::lattice::{build_region, Lattice, RegionShape, SiteCoord, TreeVertex};
use crate::oracle::{bk_holds, exact_pair, fkg_holds, mc_vs_exact, power_holds, shipped_instances, ProbPoint};
use crate::percolation::{occurs, ConfigurationView, ConnectionEvent, WeightField};
use crate::rng::CounterRng;

use super::config::Suite;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, cases: u64, failures: u64, detail: String) -> Self {
        Check { name: name.into(), cases, failures, passed: failures == 0, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run_suite(suite: Suite, trials: u64, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Combinatorics {
        checks.extend(combinatorics()?);
    }
    if all || suite == Suite::Level {
        checks.push(level_identity(seed)?);
    }
    if all || suite == Suite::Oracle {
        checks.extend(oracle(trials, seed)?);
    }
    if all || suite == Suite::Coupling {
        checks.push(coupling(trials.min(10_000), seed)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { suite, seed, checks, passed })
}

fn combinatorics() -> Result<Vec<Check>> {
    let (mut cases, mut closed_fail, mut refl_fail, mut total_fail, mut sing_fail) = (0, 0, 0, 0, 0);
    for d in 3..=5u32 {
        let b = d - 1;
        for n in 1..=12u32 {
            if LevelCensus::new(n, b)?.total() != d as u64 * (b as u64).pow(n - 1) {
                total_fail += 1;
            }
            for i in 0..=18 {
                let z = 0.2 + 0.1 * i as f64;
                cases += 1;
                let direct = a_n_direct(n, z, b)?;
                if (a_n_closed(n, z, b)? - direct).abs() > 1e-12 * direct {
                    closed_fail += 1;
                }
                if !check_reflection(n, z, b)? {
                    refl_fail += 1;
                }
            }
            let zc = 1.0 / (b as f64).sqrt();
            let direct = a_n_direct(n, zc, b)?;
            if (a_n_closed(n, zc, b)? - direct).abs() > 1e-10 * direct {
                sing_fail += 1;
            }
        }
    }
    Ok(vec![
        Check::new("a_n direct = closed (1e-12 rel)", cases, closed_fail, "d in 3..=5, n <= 12, z in [0.2, 2]".into()),
        Check::new("a_n reflection (1e-10 rel)", cases, refl_fail, String::new()),
        Check::new("census totals = d(d-1)^(n-1)", 36, total_fail, String::new()),
        Check::new("singular branch b z^2 = 1 (1e-10 rel)", 36, sing_fail, String::new()),
    ])
}

fn level_identity(seed: u64) -> Result<Check> {
    let l = Lattice::new(3)?;
    let ball: Vec<TreeVertex> = (0..=5).flat_map(|n| l.sphere(n).unwrap()).collect();
    let mut cases = 0;
    let mut failures = 0;
    for x in &ball {
        for y in &ball {
            cases += 1;
            if l.level(x) != l.level(y) + l.level_relative(y, x) {
                failures += 1;
            }
        }
    }
    let rng = CounterRng::new(seed, 0x1e7e1);
    let draw = |i: u64| -> Result<TreeVertex> {
        let depth = (rng.bits(i, 0) % 9) as u32;
        let size = l.sphere_size(depth)?;
        l.vertex(depth, rng.bits(i, 1) as u128 % size)
    };
    for i in 0..10_000u64 {
        let (x, y) = (draw(2 * i)?, draw(2 * i + 1)?);
        cases += 1;
        if l.level(&x) != l.level(&y) + l.level_relative(&y, &x) {
            failures += 1;
        }
    }
    Ok(Check::new("L(x) = L(y) + L_y(x)", cases, failures, "all pairs of B_T(5) and 10^4 random pairs of B_T(8), d = 3".into()))
}

fn oracle(trials: u64, seed: u64) -> Result<Vec<Check>> {
    let instances = shipped_instances();
    let (mut mc_cases, mut mc_fail) = (0, 0);
    let mut worst = String::new();
    for inst in &instances {
        for ev in &inst.events {
            for p in [0.2, 0.5, 0.8] {
                let r = mc_vs_exact(ev, &inst.region, p, trials, seed)?;
                mc_cases += 1;
                if !r.pass {
                    mc_fail += 1;
                    worst = format!("{} p={p}: {} vs {}", inst.name, r.empirical, r.exact);
                }
            }
        }
    }
    // At most 5% of cells may fall outside 3σ.
    let mc = Check {
        name: "Monte Carlo within 3 sigma of exact".into(),
        cases: mc_cases,
        failures: mc_fail,
        passed: mc_fail as f64 <= 0.05 * mc_cases as f64,
        detail: worst,
    };
    let (mut cases, mut fkg_fail, mut bk_fail, mut pow_fail) = (0, 0, 0, 0);
    for inst in &instances {
        for a in &inst.events {
            for b in &inst.events {
                let law = exact_pair(a, b, &inst.region)?;
                for (num, den) in [(1, 4), (1, 2), (3, 4), (1, 3)] {
                    cases += 1;
                    let p = ProbPoint::Rational(num, den);
                    fkg_fail += !fkg_holds(&law, p) as u64;
                    bk_fail += !bk_holds(&law, p) as u64;
                }
            }
            let law = crate::oracle::exact_probability(a, &inst.region)?;
            for p in [0.3, 0.5, 0.7] {
                for gamma in [1.5, 2.0, 3.0] {
                    pow_fail += !power_holds(&law, p, gamma)? as u64;
                }
            }
        }
    }
    let pow_cases = instances.iter().map(|i| i.events.len() as u64 * 9).sum();
    Ok(vec![
        mc,
        Check::new("FKG exact", cases, fkg_fail, String::new()),
        Check::new("BK exact", cases, bk_fail, String::new()),
        Check::new("power inequality", pow_cases, pow_fail, String::new()),
    ])
}

fn coupling(trials: u64, seed: u64) -> Result<Check> {
    let l = Lattice::new(3)?;
    let region = build_region(l, RegionShape::ProductBall { radius: 3 }, 10_000)?;
    let event = ConnectionEvent::site(SiteCoord::ORIGIN, SiteCoord::new(TreeVertex::ray(2), 1));
    let mut failures = 0;
    for t in 0..trials {
        let field = WeightField::new(l, seed, t);
        let mut prev = false;
        for i in 0..=10 {
            let now = occurs(&event, &ConfigurationView::new(&field, i as f64 / 10.0, &region)?)?;
            if prev && !now {
                failures += 1;
            }
            prev = now;
        }
    }
    Ok(Check::new("occurs is nondecreasing in p", trials, failures, "11-point grid on ProductBall(3)".into()))
}
