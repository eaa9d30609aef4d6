//! Acceptance suite: one PASS/FAIL line per criterion, then a non-zero exit
//! if any criterion failed.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use percolab::combinatorics::{a_n_closed, a_n_direct, stacey_count};
use percolab::estimators::sampler::{Probe, ThresholdSample};
use percolab::estimators::{
    estimate_alpha, estimate_beta, estimate_i_series, estimate_j_truncated, AlphaConfig, AlphaMode, BetaConfig, McConfig,
};
use percolab::inversion::{estimate_pc_direct, estimate_pc_via_alpha, AlphaRouteConfig, BisectionConfig, DirectRouteConfig, PcReport, PcStatus};
use percolab::lattice::{build_region, Lattice, RegionShape, SiteCoord, TreeVertex};
use percolab::oracle::{bk_holds, exact_pair, exact_probability, fkg_holds, mc_vs_exact, power_holds, shipped_instances, ProbPoint};
use percolab::percolation::{occurs, ConfigurationView, ConnectionEvent, WeightField};
use percolab::rng::CounterRng;

const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_combinatorics() -> Outcome {
    let mut cases = 0;
    let mut bad = Vec::new();
    for d in 3..=5u32 {
        let b = d - 1;
        for n in 1..=12u32 {
            let total: u64 = (0..=n).map(|t| stacey_count(n, t, b).unwrap()).sum();
            if total != d as u64 * (b as u64).pow(n - 1) {
                bad.push(format!("census d={d} n={n}: {total}"));
            }
            for i in 0..=36 {
                let z = 0.2 + 0.05 * i as f64;
                cases += 1;
                let direct = a_n_direct(n, z, b).unwrap();
                let closed = a_n_closed(n, z, b).unwrap();
                if (closed - direct).abs() > 1e-12 * direct {
                    bad.push(format!("closed d={d} n={n} z={z}: {closed} vs {direct}"));
                }
                let reflected = a_n_direct(n, 1.0 / (b as f64 * z), b).unwrap();
                if (reflected - direct).abs() > 1e-10 * direct {
                    bad.push(format!("reflection d={d} n={n} z={z}"));
                }
            }
            let zc = 1.0 / (b as f64).sqrt();
            let direct = a_n_direct(n, zc, b).unwrap();
            if (a_n_closed(n, zc, b).unwrap() - direct).abs() > 1e-10 * direct {
                bad.push(format!("singular d={d} n={n}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("{cases} (d, n, z) cases, 108 census/singular checks, {} failures {:?}", bad.len(), bad.first()))
}

fn c2_level_identity() -> Outcome {
    let l = Lattice::new(3).unwrap();
    let ball: Vec<TreeVertex> = (0..=5).flat_map(|n| l.sphere(n).unwrap()).collect();
    let mut failures = 0u64;
    let mut cases = 0u64;
    for x in &ball {
        for y in &ball {
            cases += 1;
            failures += (l.level(x) != l.level(y) + l.level_relative(y, x)) as u64;
        }
    }
    let all_pairs = cases;
    let rng = CounterRng::new(SEED, 2);
    let draw = |i: u64| {
        let depth = (rng.bits(i, 0) % 9) as u32;
        let size = l.sphere_size(depth).unwrap();
        l.vertex(depth, rng.bits(i, 1) as u128 % size).unwrap()
    };
    for i in 0..10_000u64 {
        let (x, y) = (draw(2 * i), draw(2 * i + 1));
        failures += (l.level(&x) != l.level(&y) + l.level_relative(&y, &x)) as u64;
    }
    outcome(failures == 0, format!("{all_pairs} pairs in B_T(5) + 10000 random pairs in B_T(8), {failures} violations"))
}

fn c3_oracle_mc() -> Outcome {
    let instances: Vec<_> = shipped_instances().into_iter().filter(|i| i.region.edge_count() <= 22).collect();
    let mut cells = 0u64;
    let mut outside = 0u64;
    for inst in &instances {
        for ev in &inst.events {
            for p in [0.2, 0.5, 0.8] {
                let r = mc_vs_exact(ev, &inst.region, p, 100_000, SEED).unwrap();
                cells += 1;
                outside += (!r.pass) as u64;
            }
        }
    }
    let frac = 1.0 - outside as f64 / cells as f64;
    outcome(
        instances.len() >= 10 && frac >= 0.95,
        format!("{} regions (|E| <= 22), {cells} cells at 1e5 trials, {:.1}% within 3 sigma", instances.len(), 100.0 * frac),
    )
}

fn c4_exact_inequalities() -> Outcome {
    let (mut combos, mut violations) = (0u64, 0u64);
    for inst in shipped_instances() {
        for a in &inst.events {
            for b in &inst.events {
                let law = exact_pair(a, b, &inst.region).unwrap();
                for (num, den) in [(1, 5), (1, 3), (1, 2), (2, 3), (4, 5)] {
                    let p = ProbPoint::Rational(num, den);
                    combos += 2;
                    violations += !fkg_holds(&law, p) as u64 + !bk_holds(&law, p) as u64;
                }
            }
            let law = exact_probability(a, &inst.region).unwrap();
            for p in [0.2, 0.5, 0.8] {
                for gamma in [1.25, 2.0, 3.0] {
                    combos += 1;
                    violations += !power_holds(&law, p, gamma).unwrap() as u64;
                }
            }
        }
    }
    outcome(combos >= 100 && violations == 0, format!("{combos} FKG/BK/power combinations, {violations} violations"))
}

fn c5_strip_zero() -> Outcome {
    let l = Lattice::new(3).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for p in [0.3, 0.5, 0.7] {
        let cfg = AlphaConfig { n_max: 8, mode: AlphaMode::SphereFiber, half_widths: vec![0], tree_slack: 0, fit_from: Some(1), eps_stab: 1e-3 };
        let r = estimate_alpha(l, p, &cfg, &McConfig { trials: 20_000, seed: SEED, ..McConfig::default() }).unwrap();
        let ok = r.ci_lower() <= p && p <= r.ci_upper();
        pass &= ok;
        lines.push(format!("p={p}: {:.4} [{:.4}, {:.4}]", r.slope_fit, r.ci_lower(), r.ci_upper()));
    }
    outcome(pass, lines.join("; "))
}

fn c6_coupling() -> Outcome {
    let l = Lattice::new(3).unwrap();
    let region = build_region(l, RegionShape::ProductBall { radius: 3 }, 100_000).unwrap();
    let events = [
        ConnectionEvent::site(SiteCoord::ORIGIN, SiteCoord::new(TreeVertex::ray(2), 1)),
        ConnectionEvent::site(SiteCoord::ORIGIN, SiteCoord::new(TreeVertex::ORIGIN, 3)),
        ConnectionEvent::site(SiteCoord::new(TreeVertex::ray(1), -1), SiteCoord::new(l.vertex(2, 3).unwrap(), 0)),
    ];
    let mut violations = 0u64;
    for t in 0..10_000u64 {
        let field = WeightField::new(l, SEED, t);
        for ev in &events {
            let mut prev = false;
            for i in 0..=10 {
                let view = ConfigurationView::new(&field, i as f64 / 10.0, &region).unwrap();
                let now = occurs(ev, &view).unwrap();
                violations += (prev && !now) as u64;
                prev = now;
            }
        }
    }
    outcome(violations == 0, format!("10000 fields x {} events x 11 p values, {violations} violations", events.len()))
}

/// Mean and standard error of each slot mean.
fn slot_stats(sample: &ThresholdSample, p: f64) -> Vec<(f64, f64)> {
    let m = sample.index_moments(p).unwrap();
    (0..m.sum.len()).map(|i| (m.mean(i), m.cov_of_means(i, i).max(0.0).sqrt())).collect()
}

fn product_slack(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    3.0 * (c.1 * c.1 + (a.0 * b.1).powi(2) + (b.0 * a.1).powi(2)).sqrt()
}

fn c7_mc_inequalities() -> Outcome {
    let l = Lattice::new(3).unwrap();
    let p = 0.4;
    let mc = McConfig { trials: 10_000, seed: SEED, ..McConfig::default() };
    let mut failures = Vec::new();
    let mut checks = 0u64;

    // τ(n + l) ≥ τ(n) τ(l) and point ≤ fiber ≤ (2m+1) point on strips.
    for m in 1..=3u32 {
        let region = Arc::new(build_region(l, RegionShape::Strip { tree_radius: 12, half_width: m }, u64::MAX).unwrap());
        let point = slot_stats(&ThresholdSample::collect(region.clone(), Probe::RayPoint { n_max: 6 }, p, SEED, mc.trials, usize::MAX).unwrap(), p);
        let fiber = slot_stats(&ThresholdSample::collect(region, Probe::RayFiber { n_max: 6 }, p, SEED, mc.trials, usize::MAX).unwrap(), p);
        for n in 1..6usize {
            for k in 1..=6 - n {
                let (a, b, c) = (point[n - 1], point[k - 1], point[n + k - 1]);
                checks += 1;
                if c.0 < a.0 * b.0 - product_slack(a, b, c) {
                    failures.push(format!("supermultiplicativity m={m} ({n},{k})"));
                }
            }
        }
        for n in 1..=6usize {
            let (pt, fb) = (point[n - 1], fiber[n - 1]);
            let slack = 3.0 * (pt.1 * pt.1 + fb.1 * fb.1).sqrt();
            checks += 2;
            if pt.0 > fb.0 + slack {
                failures.push(format!("point <= fiber m={m} n={n}"));
            }
            if fb.0 > (2 * m + 1) as f64 * pt.0 + 3.0 * (fb.1 * fb.1 + ((2 * m + 1) as f64 * pt.1).powi(2)).sqrt() {
                failures.push(format!("fiber <= (2m+1) point m={m} n={n}"));
            }
        }
    }

    // I_{n+l} ≤ I_n I_l.
    let beta = estimate_beta(l, p, &BetaConfig { m_max: 6, tree_radii: vec![4, 6], ..BetaConfig::default() }, &mc).unwrap();
    let series = estimate_i_series(l, p, 6, 4, RegionShape::Strip { tree_radius: 9, half_width: 4 }, &beta, &mc).unwrap();
    let iv: Vec<(f64, f64)> = series.values.iter().map(|v| (v.value.mean, v.value.std_error)).collect();
    for n in 1..6usize {
        for k in 1..=6 - n {
            let (a, b, c) = (iv[n - 1], iv[k - 1], iv[n + k - 1]);
            checks += 1;
            if c.0 > a.0 * b.0 + product_slack(a, b, c) {
                failures.push(format!("I submultiplicativity ({n},{k})"));
            }
        }
    }

    // J_{m+l} ≤ J_m J_l.
    for prof in estimate_j_truncated(l, p, &[0.7, 1.0, 1.3], 6, 7, 6, &mc).unwrap() {
        let jv: Vec<(f64, f64)> = prof.values.iter().map(|v| (v.value.mean, v.value.std_error)).collect();
        for m in 1..6usize {
            for k in 1..=6 - m {
                let (a, b, c) = (jv[m], jv[k], jv[m + k]);
                checks += 1;
                if c.0 > a.0 * b.0 + product_slack(a, b, c) {
                    failures.push(format!("J submultiplicativity z={} ({m},{k})", prof.z));
                }
            }
        }
    }

    // τ(o, (n, k)) ≤ α̂_upper^n.
    let alpha = estimate_alpha(l, p, &AlphaConfig { n_max: 8, half_widths: vec![6], ..AlphaConfig::default() }, &mc).unwrap();
    let a_up = alpha.ci_upper();
    for v in &series.values {
        for (k, pt) in &v.layers {
            checks += 1;
            if pt.mean > a_up.powi(v.n as i32) + 3.0 * pt.std_error {
                failures.push(format!("tau(o,({},{k})) <= alpha_upper^n", v.n));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checks} comparisons at d=3 p=0.4 (alpha_upper {a_up:.4}), {} outside 3 sigma {:?}", failures.len(), failures.first()),
    )
}

fn overlap(a: &PcReport, b: &PcReport) -> bool {
    a.interval[0] <= b.interval[1] && b.interval[0] <= a.interval[1]
}

fn c8_c9_pc() -> (Outcome, Outcome) {
    let bis = BisectionConfig { tol: 0.01, scan_step: 0.05 };
    let mc = McConfig { seed: SEED, ..McConfig::default() };
    let mut pass = true;
    let mut lines = Vec::new();
    let mut alpha3 = None;
    for d in [3u32, 6] {
        let ra = estimate_pc_via_alpha(d, &bis, &AlphaRouteConfig::default(), &mc).unwrap();
        let rd = estimate_pc_direct(d, &bis, &DirectRouteConfig::default(), &mc).unwrap();
        let ok = ra.status == PcStatus::Converged
            && rd.status == PcStatus::Converged
            && ra.width() <= 0.02
            && rd.width() <= 0.02
            && overlap(&ra, &rd);
        pass &= ok;
        lines.push(format!("d={d}: alpha [{:.4}, {:.4}], direct [{:.4}, {:.4}]", ra.interval[0], ra.interval[1], rd.interval[0], rd.interval[1]));
        if d == 3 {
            alpha3 = Some(ra);
        }
    }
    let c8 = outcome(pass, lines.join("; "));

    let ra = alpha3.unwrap();
    let route = AlphaRouteConfig::default();
    let cfg = AlphaConfig { half_widths: vec![route.half_width], ..route.alpha.clone() };
    let l = Lattice::new(3).unwrap();
    let pc = ra.midpoint();
    let below = estimate_alpha(l, pc - 0.03, &cfg, &mc).unwrap();
    let above = estimate_alpha(l, pc + 0.03, &cfg, &mc).unwrap();
    let target = 0.5;
    let c9 = outcome(
        below.ci_upper() <= target + 0.02 && above.ci_lower() >= target - 0.02,
        format!(
            "p_c ~ {pc:.4}: upper {:.4} at {:.4} (<= {:.2}), lower {:.4} at {:.4} (>= {:.2})",
            below.ci_upper(),
            pc - 0.03,
            target + 0.02,
            above.ci_lower(),
            pc + 0.03,
            target - 0.02
        ),
    );
    (c8, c9)
}

fn read_data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c10_reproducibility() -> Outcome {
    let commands: [&[&str]; 9] = [
        &["an-table", "--nmax", "12", "--z", "0.3,0.7,1.5"],
        &["tau", "--n", "1,2,3", "--p", "0.3,0.5", "--trials", "3000"],
        &["tau", "--mode", "fiber", "--n", "1,2,3", "--k", "5", "--half-width", "2", "--p", "0.3", "--trials", "3000"],
        &["alpha", "--p", "0.2,0.25", "--nmax", "8", "--half-widths", "4,8", "--trials", "2000"],
        &["beta", "--p", "0.2", "--mmax", "6", "--tree-radii", "3,5", "--trials", "2000"],
        &["eta", "--p", "0.2", "--nmax", "5", "--kcut", "4", "--half-width", "4", "--mmax", "6", "--tree-radii", "3,5", "--trials", "2000"],
        &["jm", "--p", "0.2", "--z", "1.0", "--mmax", "4", "--ncut", "6", "--half-width", "4", "--nmax", "8", "--trials", "2000"],
        &["oracle", "--instance", "square,domino", "--p", "0.5"],
        &["pc", "--d", "6", "--tol", "0.02", "--trials", "4000"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        for cmd in commands {
            let mut argv = vec!["percolab", "--seed", "7", "--workers", "1", "--out", dir.path().to_str().unwrap()];
            argv.extend_from_slice(cmd);
            let code = percolab::cli::run(argv.iter());
            if code != 0 {
                return outcome(false, format!("{cmd:?} exited with {code}"));
            }
        }
    }
    let (a, b) = (read_data_files(dirs[0].path()), read_data_files(dirs[1].path()));
    let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
    outcome(a == b && a.len() >= 10, format!("{} data files compared byte for byte: {}", a.len(), names.join(", ")))
}

fn main() {
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    let mut report = |id: &str, name: &str, o: Outcome, secs: f64| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += (!o.pass) as u32;
        writeln!(out, "acceptance {id:>2} {verdict} {name} [{secs:.1}s]: {}", o.detail).unwrap();
        out.flush().unwrap();
    };
    let run = |f: &dyn Fn() -> Outcome| -> (Outcome, f64) {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        (o, t.elapsed().as_secs_f64())
    };
    let single: [(&str, &str, &dyn Fn() -> Outcome); 7] = [
        ("1", "combinatorics exactness", &c1_combinatorics),
        ("2", "level identity", &c2_level_identity),
        ("3", "oracle vs Monte Carlo", &c3_oracle_mc),
        ("4", "exact FKG/BK/power inequalities", &c4_exact_inequalities),
        ("5", "strip-0 calibration", &c5_strip_zero),
        ("6", "coupling monotonicity", &c6_coupling),
        ("7", "Monte Carlo inequality suite", &c7_mc_inequalities),
    ];
    for (id, name, f) in single {
        let (o, secs) = run(f);
        report(id, name, o, secs);
    }
    let t = Instant::now();
    match catch_unwind(c8_c9_pc) {
        Ok((c8, c9)) => {
            let secs = t.elapsed().as_secs_f64();
            report("8", "p_c routes agree", c8, secs);
            report("9", "alpha ordering around p_c", c9, 0.0);
        }
        Err(_) => {
            report("8", "p_c routes agree", outcome(false, "panicked".into()), 0.0);
            report("9", "alpha ordering around p_c", outcome(false, "not run".into()), 0.0);
        }
    }
    let (o, secs) = run(&c10_reproducibility);
    report("10", "byte-identical reruns", o, secs);
    writeln!(out, "acceptance: {} of 10 criteria passed", 10 - failed).unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
