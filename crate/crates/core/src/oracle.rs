//! Exact ground truth on small regions by enumerating all 2^|E|
//! configurations, and exact checks of the FKG, BK and power inequalities.

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{build_region, EdgeCoord, EdgeKind, Lattice, Region, RegionShape, SiteCoord, TreeVertex};
use crate::percolation::{occurs, ConfigurationView, ConnectionEvent, Target, WeightField};

/// Default maximum number of edges for full enumeration.
pub const ENUMERATION_BUDGET: u32 = 24;

/// Slack for floating-point inequality checks.
pub const FLOAT_SLACK: f64 = 1e-12;

const PATH_LIMIT: usize = 200_000;
const CHUNK_BITS: u32 = 14;

/// `P(A) = Σ_j c_j p^j (1-p)^(|E|-j)` where `c_j` counts the configurations
/// with `j` open edges in which the event occurs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactPolynomial {
    pub edges: u32,
    pub coefficients: Vec<u64>,
}

impl ExactPolynomial {
    fn from_indicator(edges: u32, indicator: impl Fn(u64) -> bool + Sync) -> Self {
        let total = 1u64 << edges;
        let chunk = 1u64 << CHUNK_BITS.min(edges);
        let coefficients = (0..total / chunk)
            .into_par_iter()
            .map(|c| {
                let mut counts = vec![0u64; edges as usize + 1];
                for mask in c * chunk..(c + 1) * chunk {
                    if indicator(mask) {
                        counts[mask.count_ones() as usize] += 1;
                    }
                }
                counts
            })
            .reduce(
                || vec![0u64; edges as usize + 1],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        ExactPolynomial { edges, coefficients }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let q = 1.0 - p;
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| c as f64 * p.powi(j as i32) * q.powi((self.edges as usize - j) as i32))
            .sum()
    }

    /// Numerator of `P(A)` at `p = num/den`; the denominator is `den^|E|`.
    pub fn eval_numerator(&self, num: u64, den: u64) -> BigUint {
        let mut acc = BigUint::zero();
        let p = BigUint::from(num);
        let q = BigUint::from(den - num);
        for (j, &c) in self.coefficients.iter().enumerate() {
            if c == 0 {
                continue;
            }
            acc += BigUint::from(c) * p.pow(j as u32) * q.pow(self.edges - j as u32);
        }
        acc
    }

    /// Number of configurations in which the event occurs.
    pub fn total(&self) -> u64 {
        self.coefficients.iter().sum()
    }
}

/// The enumeration view of a region: edges as bits, vertices as indices.
struct Enumerator {
    edges: u32,
    vertices: Vec<SiteCoord>,
    adjacency: Vec<Vec<(u32, u32)>>,
}

impl Enumerator {
    fn new(region: &Region, budget: u32) -> Result<Self> {
        let edges = region.edge_count();
        if edges > budget as u64 {
            return Err(Error::Resource(format!(
                "region {} has {edges} edges, above the enumeration budget of {budget}",
                region.label()
            )));
        }
        if region.vertex_count() > 64 {
            return Err(Error::Resource("enumeration supports at most 64 vertices".into()));
        }
        let graph = region.graph();
        Ok(Enumerator { edges: edges as u32, vertices: graph.vertices.clone(), adjacency: graph.adjacency() })
    }

    fn resolve(&self, region: &Region, event: &ConnectionEvent) -> Result<(u32, u64)> {
        event.validate(region)?;
        let lattice = region.lattice();
        let source = self.vertices.iter().position(|v| *v == event.source).unwrap() as u32;
        let targets = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| event.target.matches(lattice, v))
            .fold(0u64, |acc, (i, _)| acc | (1 << i));
        Ok((source, targets))
    }

    /// Vertex set reachable from `source` through open edges of `mask`.
    #[inline]
    fn reach(&self, mask: u64, source: u32) -> u64 {
        let mut seen = 1u64 << source;
        let mut stack = [0u32; 64];
        stack[0] = source;
        let mut top = 1;
        while top > 0 {
            top -= 1;
            let v = stack[top];
            for &(w, e) in &self.adjacency[v as usize] {
                if mask >> e & 1 == 1 && seen >> w & 1 == 0 {
                    seen |= 1 << w;
                    stack[top] = w;
                    top += 1;
                }
            }
        }
        seen
    }

    #[inline]
    fn connected(&self, mask: u64, (source, targets): (u32, u64)) -> bool {
        targets >> source & 1 == 1 || self.reach(mask, source) & targets != 0
    }

    /// Edge masks of the self-avoiding paths from the source that stop at
    /// their first target vertex (these are the minimal witnesses).
    fn witness_paths(&self, (source, targets): (u32, u64)) -> Result<Vec<u64>> {
        if targets >> source & 1 == 1 {
            return Ok(vec![0]);
        }
        let mut out = Vec::new();
        let mut stack = vec![(source, 1u64 << source, 0u64, 0usize)];
        while let Some((v, visited, edges, next)) = stack.pop() {
            let adj = &self.adjacency[v as usize];
            if next >= adj.len() {
                continue;
            }
            stack.push((v, visited, edges, next + 1));
            let (w, e) = adj[next];
            if visited >> w & 1 == 1 {
                continue;
            }
            let edges = edges | 1 << e;
            if targets >> w & 1 == 1 {
                out.push(edges);
                if out.len() > PATH_LIMIT {
                    return Err(Error::Resource("too many witness paths to enumerate".into()));
                }
            } else {
                stack.push((w, visited | 1 << w, edges, 0));
            }
        }
        Ok(out)
    }

    /// Indicator table of `A ∘ B` over all configurations.
    fn disjoint_table(&self, a: (u32, u64), b: (u32, u64)) -> Result<Vec<bool>> {
        let pa = self.witness_paths(a)?;
        let pb = self.witness_paths(b)?;
        let n = 1usize << self.edges;
        let mut table = vec![false; n];
        for &x in &pa {
            for &y in &pb {
                if x & y == 0 {
                    table[(x | y) as usize] = true;
                }
            }
        }
        // Close upwards: a configuration containing a witness pair occurs.
        for bit in 0..self.edges {
            let step = 1usize << bit;
            for m in 0..n {
                if m & step != 0 && table[m ^ step] {
                    table[m] = true;
                }
            }
        }
        Ok(table)
    }
}

/// Exact law of a connection event on a region.
pub fn exact_probability(event: &ConnectionEvent, region: &Region) -> Result<ExactPolynomial> {
    exact_probability_with_budget(event, region, ENUMERATION_BUDGET)
}

pub fn exact_probability_with_budget(event: &ConnectionEvent, region: &Region, budget: u32) -> Result<ExactPolynomial> {
    let en = Enumerator::new(region, budget)?;
    let ev = en.resolve(region, event)?;
    Ok(ExactPolynomial::from_indicator(en.edges, |m| en.connected(m, ev)))
}

/// Exact laws of `A`, `B`, `A ∩ B` and `A ∘ B` from one enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct PairLaw {
    pub a: ExactPolynomial,
    pub b: ExactPolynomial,
    pub both: ExactPolynomial,
    pub disjoint: ExactPolynomial,
}

pub fn exact_pair(a: &ConnectionEvent, b: &ConnectionEvent, region: &Region) -> Result<PairLaw> {
    let en = Enumerator::new(region, ENUMERATION_BUDGET)?;
    let ea = en.resolve(region, a)?;
    let eb = en.resolve(region, b)?;
    let table = en.disjoint_table(ea, eb)?;
    Ok(PairLaw {
        a: ExactPolynomial::from_indicator(en.edges, |m| en.connected(m, ea)),
        b: ExactPolynomial::from_indicator(en.edges, |m| en.connected(m, eb)),
        both: ExactPolynomial::from_indicator(en.edges, |m| en.connected(m, ea) && en.connected(m, eb)),
        disjoint: ExactPolynomial::from_indicator(en.edges, |m| table[m as usize]),
    })
}

/// A probability either as an exact fraction or as a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbPoint {
    Rational(u64, u64),
    Real(f64),
}

impl ProbPoint {
    /// Recognises fractions with denominator up to 1024.
    pub fn from_f64(p: f64) -> Self {
        for den in 1..=1024u64 {
            let num = (p * den as f64).round();
            if (num / den as f64 - p).abs() < 1e-15 && num >= 0.0 && num <= den as f64 {
                return ProbPoint::Rational(num as u64, den);
            }
        }
        ProbPoint::Real(p)
    }

    pub fn value(&self) -> f64 {
        match *self {
            ProbPoint::Rational(n, d) => n as f64 / d as f64,
            ProbPoint::Real(p) => p,
        }
    }
}

/// `lhs ≥ left · right` with all three exact laws of the same region, i.e.
/// compares `N_lhs · den^E` against `N_left · N_right`.
fn product_compare(lhs: &ExactPolynomial, left: &ExactPolynomial, right: &ExactPolynomial, p: ProbPoint) -> std::cmp::Ordering {
    match p {
        ProbPoint::Rational(num, den) => {
            let scale = BigUint::from(den).pow(lhs.edges);
            (lhs.eval_numerator(num, den) * scale).cmp(&(left.eval_numerator(num, den) * right.eval_numerator(num, den)))
        }
        ProbPoint::Real(p) => {
            let diff = lhs.eval(p) - left.eval(p) * right.eval(p);
            if diff > FLOAT_SLACK {
                std::cmp::Ordering::Greater
            } else if diff < -FLOAT_SLACK {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        }
    }
}

fn check_p(p: f64) -> Result<ProbPoint> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} is not a probability")));
    }
    Ok(ProbPoint::from_f64(p))
}

/// `P(A ∩ B) ≥ P(A) P(B)`.
pub fn check_fkg(a: &ConnectionEvent, b: &ConnectionEvent, region: &Region, p: f64) -> Result<bool> {
    let law = exact_pair(a, b, region)?;
    Ok(fkg_holds(&law, check_p(p)?))
}

pub fn fkg_holds(law: &PairLaw, p: ProbPoint) -> bool {
    product_compare(&law.both, &law.a, &law.b, p) != std::cmp::Ordering::Less
}

/// `P(A ∘ B) ≤ P(A) P(B)`, with `A ∘ B` decided by edge-disjoint open witness paths.
pub fn check_bk(a: &ConnectionEvent, b: &ConnectionEvent, region: &Region, p: f64) -> Result<bool> {
    let law = exact_pair(a, b, region)?;
    Ok(bk_holds(&law, check_p(p)?))
}

pub fn bk_holds(law: &PairLaw, p: ProbPoint) -> bool {
    product_compare(&law.disjoint, &law.a, &law.b, p) != std::cmp::Ordering::Greater
}

/// `P_{p^γ}(A) ≤ P_p(A)^γ` (up to [`FLOAT_SLACK`]).
pub fn check_power_inequality(a: &ConnectionEvent, region: &Region, p: f64, gamma: f64) -> Result<bool> {
    let law = exact_probability(a, region)?;
    power_holds(&law, p, gamma)
}

pub fn power_holds(law: &ExactPolynomial, p: f64, gamma: f64) -> Result<bool> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p} must lie strictly between 0 and 1")));
    }
    if !(gamma >= 1.0) {
        return Err(Error::Domain(format!("gamma = {gamma} must be at least 1")));
    }
    Ok(law.eval(p.powf(gamma)) <= law.eval(p).powf(gamma) + FLOAT_SLACK)
}

/// Monte Carlo frequency against the exact law at one `p`.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub region: String,
    pub p: f64,
    pub trials: u64,
    pub hits: u64,
    pub empirical: f64,
    pub exact: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// Passes when `|empirical - exact| ≤ 3 √(exact (1 - exact) / trials)`.
pub fn mc_vs_exact(event: &ConnectionEvent, region: &Region, p: f64, trials: u64, seed: u64) -> Result<McReport> {
    let exact = exact_probability(event, region)?.eval(p);
    let lattice = *region.lattice();
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let field = WeightField::new(lattice, seed, t);
            let view = ConfigurationView::new(&field, p, region)?;
            occurs(event, &view).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let empirical = hits as f64 / trials as f64;
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    Ok(McReport {
        region: region.label(),
        p,
        trials,
        hits,
        empirical,
        exact,
        sigma,
        pass: (empirical - exact).abs() <= 3.0 * sigma,
    })
}

/// A small region together with connection events to test on it.
#[derive(Debug)]
pub struct Instance {
    pub name: &'static str,
    pub region: Region,
    pub events: Vec<ConnectionEvent>,
}

fn tree_edge(l: &Lattice, parent: &[u32], branch: u32, layer: i32) -> EdgeCoord {
    EdgeCoord { kind: EdgeKind::Tree, base: SiteCoord::new(l.from_branches(parent).unwrap(), layer), branch }
}

fn line_edge(l: &Lattice, v: &[u32], layer: i32) -> EdgeCoord {
    EdgeCoord { kind: EdgeKind::Line, base: SiteCoord::new(l.from_branches(v).unwrap(), layer), branch: 0 }
}

/// Ray path `o - v_1 - ... - v_len` replicated on `layers`, with all rungs.
fn ladder(l: &Lattice, len: u32, layers: std::ops::RangeInclusive<i32>) -> Vec<EdgeCoord> {
    let mut edges = Vec::new();
    let ray: Vec<Vec<u32>> = (0..=len).map(|n| vec![0; n as usize]).collect();
    for layer in layers.clone() {
        for n in 0..len as usize {
            edges.push(tree_edge(l, &ray[n], 0, layer));
        }
        if layer < *layers.end() {
            for v in &ray {
                edges.push(line_edge(l, v, layer));
            }
        }
    }
    edges
}

fn site(l: &Lattice, branches: &[u32], layer: i32) -> SiteCoord {
    SiteCoord::new(l.from_branches(branches).unwrap(), layer)
}

/// The shipped desk-scale instances (all with at most 22 edges) for `d = 3`.
pub fn shipped_instances() -> Vec<Instance> {
    let l = Lattice::new(3).unwrap();
    let o = SiteCoord::ORIGIN;
    let mk = |shape: RegionShape| build_region(l, shape, 1_000).expect("shipped region");
    let ev = |s: SiteCoord, t: SiteCoord| ConnectionEvent::site(s, t);
    let fiber = |s: SiteCoord, v: &[u32]| ConnectionEvent::new(s, Target::Fiber { vertex: l.from_branches(v).unwrap() });
    let sphere = |s: SiteCoord, r: u32| ConnectionEvent::new(s, Target::SphereFiber { radius: r });

    let mut out = vec![
        Instance {
            name: "single-edge",
            region: mk(RegionShape::Edges { edges: vec![tree_edge(&l, &[], 0, 0)] }),
            events: vec![ev(o, site(&l, &[0], 0)), ev(site(&l, &[0], 0), o)],
        },
        Instance {
            name: "two-edge-path",
            region: mk(RegionShape::Edges { edges: vec![tree_edge(&l, &[], 0, 0), tree_edge(&l, &[0], 0, 0)] }),
            events: vec![ev(o, site(&l, &[0, 0], 0)), ev(o, site(&l, &[0], 0)), ev(site(&l, &[0], 0), site(&l, &[0, 0], 0))],
        },
        Instance {
            name: "square",
            region: mk(RegionShape::Edges { edges: ladder(&l, 1, 0..=1) }),
            events: vec![ev(o, site(&l, &[0], 1)), ev(o, site(&l, &[0], 0)), fiber(o, &[0])],
        },
        Instance {
            name: "tree-star",
            region: mk(RegionShape::Strip { tree_radius: 1, half_width: 0 }),
            events: vec![ev(o, site(&l, &[1], 0)), ev(site(&l, &[0], 0), site(&l, &[2], 0)), sphere(o, 1)],
        },
        Instance {
            name: "product-star",
            region: mk(RegionShape::ProductBall { radius: 1 }),
            events: vec![ev(o, site(&l, &[2], 0)), ev(o, SiteCoord::new(TreeVertex::ORIGIN, -1)), sphere(o, 1)],
        },
        Instance {
            name: "tree-ball-2",
            region: mk(RegionShape::Strip { tree_radius: 2, half_width: 0 }),
            events: vec![ev(o, site(&l, &[0, 1], 0)), ev(site(&l, &[1, 0], 0), site(&l, &[2, 1], 0)), sphere(o, 2)],
        },
        Instance {
            name: "double-square",
            region: mk(RegionShape::Edges { edges: ladder(&l, 1, 0..=2) }),
            events: vec![ev(o, site(&l, &[0], 2)), fiber(o, &[0]), ev(site(&l, &[0], 0), SiteCoord::new(TreeVertex::ORIGIN, 2))],
        },
        Instance {
            name: "domino",
            region: mk(RegionShape::Edges { edges: ladder(&l, 2, 0..=1) }),
            events: vec![ev(o, site(&l, &[0, 0], 0)), ev(o, site(&l, &[0, 0], 1)), fiber(o, &[0, 0])],
        },
        Instance {
            name: "grid-3x3",
            region: mk(RegionShape::Edges { edges: ladder(&l, 2, -1..=1) }),
            events: vec![
                ev(o, site(&l, &[0, 0], 0)),
                ev(site(&l, &[], -1), site(&l, &[0, 0], 1)),
                fiber(o, &[0, 0]),
            ],
        },
        Instance {
            name: "ladder-3x2",
            region: mk(RegionShape::Edges { edges: ladder(&l, 3, 0..=1) }),
            events: vec![ev(o, site(&l, &[0, 0, 0], 0)), fiber(o, &[0, 0, 0]), ev(o, site(&l, &[0, 0, 0], 1))],
        },
        Instance {
            name: "strip-1x1",
            region: mk(RegionShape::Strip { tree_radius: 1, half_width: 1 }),
            events: vec![ev(o, site(&l, &[1], 1)), fiber(o, &[2]), ev(site(&l, &[0], -1), site(&l, &[1], 1))],
        },
        Instance {
            name: "ladder-4x3",
            region: mk(RegionShape::Edges { edges: ladder(&l, 4, -1..=1) }),
            events: vec![ev(o, site(&l, &[0, 0, 0, 0], 0)), fiber(o, &[0, 0, 0, 0]), ev(o, SiteCoord::new(TreeVertex::ORIGIN, 1))],
        },
    ];
    // Upper half of ProductBall(2): 17 edges.
    let half_ball: Vec<EdgeCoord> = {
        let ball = build_region(l, RegionShape::ProductBall { radius: 2 }, 1_000).unwrap();
        ball.graph()
            .edges
            .iter()
            .copied()
            .filter(|e| e.base.layer >= 0)
            .collect()
    };
    out.push(Instance {
        name: "upper-half-ball-2",
        region: mk(RegionShape::Edges { edges: half_ball }),
        events: vec![
            ev(o, SiteCoord::new(TreeVertex::ORIGIN, 2)),
            ev(o, site(&l, &[1, 1], 0)),
            fiber(o, &[2]),
        ],
    });
    out
}
