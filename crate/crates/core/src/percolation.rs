//! The sampling engine: one uniform weight per edge, with an edge open at
//! parameter `p` iff its weight is below `p`. A single weight field therefore
//! realises every `p` at once, monotonically.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{EdgeCoord, Lattice, Region, RegionShape, SiteCoord, TreeVertex};
use crate::rng::CounterRng;

/// Lazily evaluated i.i.d. uniform weights on the edges of T_d □ Z for one
/// trial. Weights are keyed by the canonical edge coordinate, so they do not
/// depend on the region, the evaluation order or the thread.
#[derive(Debug, Clone, Copy)]
pub struct WeightField {
    lattice: Lattice,
    master_seed: u64,
    trial_index: u64,
    rng: CounterRng,
}

impl WeightField {
    pub fn new(lattice: Lattice, master_seed: u64, trial_index: u64) -> Self {
        WeightField { lattice, master_seed, trial_index, rng: CounterRng::new(master_seed, trial_index) }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trial_index(&self) -> u64 {
        self.trial_index
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn weight(&self, e: &EdgeCoord) -> f64 {
        let (a, b) = e.key_words(&self.lattice);
        self.rng.uniform(a, b)
    }
}

/// The configuration `ω_p(e) = 1{X_e < p}` restricted to a region.
#[derive(Debug, Clone, Copy)]
pub struct ConfigurationView<'a> {
    pub field: &'a WeightField,
    pub p: f64,
    pub region: &'a Region,
}

impl<'a> ConfigurationView<'a> {
    pub fn new(field: &'a WeightField, p: f64, region: &'a Region) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("p = {p} is not a probability")));
        }
        Ok(ConfigurationView { field, p, region })
    }

    #[inline]
    pub fn is_open(&self, e: &EdgeCoord) -> bool {
        self.field.weight(e) < self.p
    }
}

/// What the source has to reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// A single site.
    Site { site: SiteCoord },
    /// The fiber π⁻¹(x): every layer above the tree vertex `x`.
    Fiber { vertex: TreeVertex },
    /// ∂B_T(n) □ Z: every site whose tree coordinate is at depth `n`.
    SphereFiber { radius: u32 },
    /// Sites at graph distance exactly `radius` from the origin.
    BallBoundary { radius: u32 },
}

impl Target {
    #[inline]
    pub fn matches(&self, lattice: &Lattice, x: &SiteCoord) -> bool {
        match self {
            Target::Site { site } => site == x,
            Target::Fiber { vertex } => x.tree == *vertex,
            Target::SphereFiber { radius } => x.tree.depth == *radius,
            Target::BallBoundary { radius } => lattice.norm(x) == *radius as u64,
        }
    }
}

/// The event `source ↔ target` inside a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionEvent {
    pub source: SiteCoord,
    pub target: Target,
}

impl ConnectionEvent {
    pub fn new(source: SiteCoord, target: Target) -> Self {
        ConnectionEvent { source, target }
    }

    pub fn site(source: SiteCoord, target: SiteCoord) -> Self {
        ConnectionEvent { source, target: Target::Site { site: target } }
    }

    /// Checks that the source lies in the region and the target meets it.
    pub fn validate(&self, region: &Region) -> Result<()> {
        if !region.contains(&self.source) {
            return Err(Error::Domain(format!("source {:?} lies outside region {}", self.source, region.label())));
        }
        let lattice = region.lattice();
        let nonempty = match (&self.target, region.shape()) {
            (_, RegionShape::Edges { .. }) => {
                region.graph().vertices.iter().any(|x| self.target.matches(lattice, x))
            }
            (Target::Site { site }, _) => region.contains(site),
            (Target::Fiber { vertex }, _) => region.contains(&SiteCoord::new(*vertex, 0)),
            (Target::SphereFiber { radius }, _) => {
                region.contains(&SiteCoord::new(TreeVertex::ray(*radius), 0))
            }
            (Target::BallBoundary { radius }, RegionShape::ProductBall { radius: k }) => radius <= k,
            (Target::BallBoundary { radius }, RegionShape::Strip { tree_radius, half_width }) => {
                *radius <= tree_radius + half_width
            }
        };
        if !nonempty {
            return Err(Error::Domain(format!("target {:?} does not meet region {}", self.target, region.label())));
        }
        Ok(())
    }
}

/// Result of a minimax search: the event occurs at `p` iff `p > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckResult {
    pub threshold: f64,
    pub witness_path: Vec<EdgeCoord>,
}

/// The open cluster of `origin` inside the region, found by breadth-first
/// search. Only edges at visited sites are ever evaluated.
pub fn sample_cluster(origin: &SiteCoord, view: &ConfigurationView) -> Result<FxHashSet<SiteCoord>> {
    if !view.region.contains(origin) {
        return Err(Error::Domain(format!("origin {origin:?} lies outside region {}", view.region.label())));
    }
    let mut seen = FxHashSet::default();
    seen.insert(*origin);
    let mut queue = VecDeque::from([*origin]);
    while let Some(x) = queue.pop_front() {
        view.region.for_each_neighbor(&x, |y, e| {
            if !seen.contains(&y) && view.is_open(&e) {
                seen.insert(y);
                queue.push_back(y);
            }
        });
    }
    Ok(seen)
}

/// Whether an open path joins the event's source to its target. Stops at the
/// first target site reached.
pub fn occurs(event: &ConnectionEvent, view: &ConfigurationView) -> Result<bool> {
    event.validate(view.region)?;
    let lattice = view.region.lattice();
    if event.target.matches(lattice, &event.source) {
        return Ok(true);
    }
    let mut seen = FxHashSet::default();
    seen.insert(event.source);
    let mut queue = VecDeque::from([event.source]);
    while let Some(x) = queue.pop_front() {
        let mut hit = false;
        view.region.for_each_neighbor(&x, |y, e| {
            if hit || seen.contains(&y) || !view.is_open(&e) {
                return;
            }
            if event.target.matches(lattice, &y) {
                hit = true;
            }
            seen.insert(y);
            queue.push_back(y);
        });
        if hit {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Control flow for [`invade`] visitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visit {
    Continue,
    Stop,
}

/// Why an [`invade`] run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvasionEnd {
    /// The visitor asked to stop.
    Stopped,
    /// The next site would have had threshold `>= cap`.
    Capped,
    /// Every site of the region reachable from the source was visited.
    Exhausted,
    /// The site budget was used up.
    Budget,
}

#[inline]
fn key(w: f64) -> u64 {
    // Non-negative doubles order like their bit patterns.
    w.to_bits()
}

/// Visits the sites of the region in increasing order of their minimax
/// threshold from `source` (the smallest, over paths, of the largest weight
/// on the path). The cluster of `source` at parameter `p` is exactly the set
/// of sites visited with threshold `< p`. Sites with threshold `>= cap` are
/// never visited.
///
/// `visit(site, threshold)` is called once per site, the source first with
/// threshold 0.
pub fn invade(
    field: &WeightField,
    region: &Region,
    source: &SiteCoord,
    cap: f64,
    site_budget: usize,
    mut visit: impl FnMut(&SiteCoord, f64) -> Visit,
) -> InvasionEnd {
    let mut best: FxHashMap<SiteCoord, u64> = FxHashMap::default();
    let mut done: FxHashSet<SiteCoord> = FxHashSet::default();
    let mut heap: BinaryHeap<Reverse<(u64, SiteCoord)>> = BinaryHeap::new();
    best.insert(*source, 0);
    heap.push(Reverse((0, *source)));
    let cap_key = key(cap);
    while let Some(Reverse((k, x))) = heap.pop() {
        if done.contains(&x) {
            continue;
        }
        if k >= cap_key {
            return InvasionEnd::Capped;
        }
        if done.len() >= site_budget {
            return InvasionEnd::Budget;
        }
        done.insert(x);
        if visit(&x, f64::from_bits(k)) == Visit::Stop {
            return InvasionEnd::Stopped;
        }
        region.for_each_neighbor(&x, |y, e| {
            if done.contains(&y) {
                return;
            }
            let cand = k.max(key(field.weight(&e)));
            let entry = best.entry(y).or_insert(u64::MAX);
            if cand < *entry {
                *entry = cand;
                heap.push(Reverse((cand, y)));
            }
        });
    }
    InvasionEnd::Exhausted
}

/// Minimax threshold of an event for one weight field: the event occurs in
/// the configuration at `p` iff `p > threshold`. An unreachable target gives
/// threshold 1 and an empty witness.
pub fn bottleneck_threshold(event: &ConnectionEvent, field: &WeightField, region: &Region) -> Result<BottleneckResult> {
    event.validate(region)?;
    let lattice = region.lattice();
    if event.target.matches(lattice, &event.source) {
        return Ok(BottleneckResult { threshold: 0.0, witness_path: Vec::new() });
    }
    // Prim's search with parent edges so the witness path can be read back.
    let mut best: FxHashMap<SiteCoord, (u64, Option<(SiteCoord, EdgeCoord)>)> = FxHashMap::default();
    let mut done: FxHashSet<SiteCoord> = FxHashSet::default();
    let mut heap = BinaryHeap::new();
    best.insert(event.source, (0, None));
    heap.push(Reverse((0u64, event.source)));
    while let Some(Reverse((k, x))) = heap.pop() {
        if !done.insert(x) {
            continue;
        }
        if event.target.matches(lattice, &x) {
            let mut path = Vec::new();
            let mut cur = x;
            while let Some((_, Some((prev, e)))) = best.get(&cur) {
                path.push(*e);
                cur = *prev;
            }
            path.reverse();
            return Ok(BottleneckResult { threshold: f64::from_bits(k), witness_path: path });
        }
        region.for_each_neighbor(&x, |y, e| {
            if done.contains(&y) {
                return;
            }
            let cand = k.max(key(field.weight(&e)));
            let entry = best.entry(y).or_insert((u64::MAX, None));
            if cand < entry.0 {
                *entry = (cand, Some((x, e)));
                heap.push(Reverse((cand, y)));
            }
        });
    }
    Ok(BottleneckResult { threshold: 1.0, witness_path: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_region, EdgeKind, DEFAULT_EDGE_BUDGET};

    fn l3() -> Lattice {
        Lattice::new(3).unwrap()
    }

    fn tree_edge(l: &Lattice, parent: &[u32], branch: u32, layer: i32) -> EdgeCoord {
        EdgeCoord { kind: EdgeKind::Tree, base: SiteCoord::new(l.from_branches(parent).unwrap(), layer), branch }
    }

    fn line_edge(l: &Lattice, v: &[u32], layer: i32) -> EdgeCoord {
        EdgeCoord { kind: EdgeKind::Line, base: SiteCoord::new(l.from_branches(v).unwrap(), layer), branch: 0 }
    }

    fn single_edge(l: &Lattice) -> Region {
        build_region(*l, RegionShape::Edges { edges: vec![tree_edge(l, &[], 0, 0)] }, 100).unwrap()
    }

    fn square(l: &Lattice) -> Region {
        let edges = vec![
            tree_edge(l, &[], 0, 0),
            tree_edge(l, &[], 0, 1),
            line_edge(l, &[], 0),
            line_edge(l, &[0], 0),
        ];
        build_region(*l, RegionShape::Edges { edges }, 100).unwrap()
    }

    fn v0() -> SiteCoord {
        SiteCoord::new(TreeVertex { depth: 1, index: 0 }, 0)
    }

    #[test]
    fn weights_are_deterministic_and_order_free() {
        let l = l3();
        let f = WeightField::new(l, 11, 3);
        let e1 = tree_edge(&l, &[0, 1], 1, -2);
        let e2 = line_edge(&l, &[2], 5);
        let w1 = f.weight(&e1);
        let w2 = f.weight(&e2);
        assert_eq!(WeightField::new(l, 11, 3).weight(&e2), w2);
        assert_eq!(f.weight(&e1), w1);
        assert_ne!(WeightField::new(l, 11, 4).weight(&e1), w1);
        assert!((0.0..1.0).contains(&w1));
    }

    #[test]
    fn cluster_extremes() {
        let l = l3();
        let region = build_region(l, RegionShape::ProductBall { radius: 3 }, DEFAULT_EDGE_BUDGET).unwrap();
        let f = WeightField::new(l, 1, 0);
        let closed = ConfigurationView::new(&f, 0.0, &region).unwrap();
        assert_eq!(sample_cluster(&SiteCoord::ORIGIN, &closed).unwrap().len(), 1);
        let open = ConfigurationView::new(&f, 1.0, &region).unwrap();
        assert_eq!(sample_cluster(&SiteCoord::ORIGIN, &open).unwrap().len() as u64, region.vertex_count());
    }

    #[test]
    fn cluster_does_not_depend_on_visit_order() {
        let l = l3();
        let region = build_region(l, RegionShape::ProductBall { radius: 5 }, DEFAULT_EDGE_BUDGET).unwrap();
        for trial in 0..50 {
            let f = WeightField::new(l, 5, trial);
            let view = ConfigurationView::new(&f, 0.4, &region).unwrap();
            let bfs = sample_cluster(&SiteCoord::ORIGIN, &view).unwrap();
            // Depth-first traversal over the same field.
            let mut seen = FxHashSet::default();
            let mut stack = vec![SiteCoord::ORIGIN];
            seen.insert(SiteCoord::ORIGIN);
            while let Some(x) = stack.pop() {
                region.for_each_neighbor(&x, |y, e| {
                    if view.is_open(&e) && seen.insert(y) {
                        stack.push(y);
                    }
                });
            }
            assert_eq!(bfs, seen);
        }
    }

    #[test]
    fn single_edge_frequency() {
        let l = l3();
        let region = single_edge(&l);
        let event = ConnectionEvent::site(SiteCoord::ORIGIN, v0());
        let n = 100_000u64;
        let p = 0.37;
        let hits = (0..n)
            .filter(|&t| {
                let f = WeightField::new(l, 2024, t);
                occurs(&event, &ConfigurationView::new(&f, p, &region).unwrap()).unwrap()
            })
            .count() as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn square_opposite_corners_frequency() {
        let l = l3();
        let region = square(&l);
        let target = SiteCoord::new(TreeVertex { depth: 1, index: 0 }, 1);
        let event = ConnectionEvent::site(SiteCoord::ORIGIN, target);
        let n = 100_000u64;
        let hits = (0..n)
            .filter(|&t| {
                let f = WeightField::new(l, 99, t);
                occurs(&event, &ConfigurationView::new(&f, 0.5, &region).unwrap()).unwrap()
            })
            .count() as f64;
        let exact = 7.0 / 16.0;
        let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((hits / n as f64 - exact).abs() < 3.0 * sigma);
    }

    #[test]
    fn trivial_events() {
        let l = l3();
        let region = build_region(l, RegionShape::ProductBall { radius: 2 }, DEFAULT_EDGE_BUDGET).unwrap();
        let f = WeightField::new(l, 3, 3);
        let same = ConnectionEvent::site(SiteCoord::ORIGIN, SiteCoord::ORIGIN);
        assert!(occurs(&same, &ConfigurationView::new(&f, 0.0, &region).unwrap()).unwrap());
        assert_eq!(bottleneck_threshold(&same, &f, &region).unwrap().threshold, 0.0);
        let far = ConnectionEvent::new(SiteCoord::ORIGIN, Target::BallBoundary { radius: 2 });
        assert!(occurs(&far, &ConfigurationView::new(&f, 1.0, &region).unwrap()).unwrap());
        let outside = ConnectionEvent::site(SiteCoord::ORIGIN, SiteCoord::new(TreeVertex::ORIGIN, 3));
        assert!(occurs(&outside, &ConfigurationView::new(&f, 1.0, &region).unwrap()).is_err());
    }

    #[test]
    fn single_edge_threshold_is_its_weight() {
        let l = l3();
        let region = single_edge(&l);
        let f = WeightField::new(l, 8, 8);
        let e = tree_edge(&l, &[], 0, 0);
        let r = bottleneck_threshold(&ConnectionEvent::site(SiteCoord::ORIGIN, v0()), &f, &region).unwrap();
        assert_eq!(r.threshold, f.weight(&e));
        assert_eq!(r.witness_path, vec![e]);
    }

    #[test]
    fn threshold_agrees_with_occurs() {
        let l = l3();
        let region = build_region(l, RegionShape::ProductBall { radius: 3 }, DEFAULT_EDGE_BUDGET).unwrap();
        let targets = [
            Target::Site { site: SiteCoord::new(TreeVertex::ray(2), 1) },
            Target::Fiber { vertex: TreeVertex::ray(3) },
            Target::BallBoundary { radius: 3 },
        ];
        for trial in 0..200 {
            let f = WeightField::new(l, 77, trial);
            for t in &targets {
                let ev = ConnectionEvent::new(SiteCoord::ORIGIN, t.clone());
                let r = bottleneck_threshold(&ev, &f, &region).unwrap();
                if !r.witness_path.is_empty() {
                    let max = r.witness_path.iter().map(|e| f.weight(e)).fold(0.0, f64::max);
                    assert_eq!(max, r.threshold);
                }
                for i in 1..10 {
                    let p = i as f64 / 10.0;
                    let view = ConfigurationView::new(&f, p, &region).unwrap();
                    assert_eq!(occurs(&ev, &view).unwrap(), p > r.threshold, "trial {trial} p {p}");
                }
            }
        }
    }

    #[test]
    fn invasion_visits_clusters_in_threshold_order() {
        let l = l3();
        let region = build_region(l, RegionShape::ProductBall { radius: 4 }, DEFAULT_EDGE_BUDGET).unwrap();
        for trial in 0..30 {
            let f = WeightField::new(l, 4, trial);
            let mut order = Vec::new();
            let end = invade(&f, &region, &SiteCoord::ORIGIN, 0.6, usize::MAX, |x, t| {
                order.push((*x, t));
                Visit::Continue
            });
            assert_eq!(end, InvasionEnd::Capped);
            assert!(order.windows(2).all(|w| w[0].1 <= w[1].1));
            for p in [0.2, 0.35, 0.5] {
                let view = ConfigurationView::new(&f, p, &region).unwrap();
                let cluster = sample_cluster(&SiteCoord::ORIGIN, &view).unwrap();
                let from_invasion: FxHashSet<SiteCoord> =
                    order.iter().filter(|(_, t)| *t < p).map(|(x, _)| *x).collect();
                assert_eq!(cluster, from_invasion);
            }
        }
    }
}
