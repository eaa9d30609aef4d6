//! Vertex and edge coding for the product graph T_d □ Z.
//!
//! A tree vertex at depth `n` is stored as a mixed-radix integer: the first
//! branch digit (taken at the origin) has base `d`, every later digit has base
//! `d - 1` (no backtracking). The ray that always takes branch 0 is the
//! distinguished geodesic used by the level function; its vertices are exactly
//! the ones with `index == 0`.

use std::cmp::Ordering;
use std::sync::OnceLock;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of edges a region may contain.
pub const DEFAULT_EDGE_BUDGET: u64 = 50_000_000;

/// The degree parameter of T_d □ Z and the constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeVertex {
    pub depth: u32,
    pub index: u128,
}

/// A site `(x, k)` of the product graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteCoord {
    pub tree: TreeVertex,
    pub layer: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Tree,
    Line,
}

/// Canonical undirected edge. Tree edges are based at the parent-side endpoint
/// and carry the branch digit leading to the child; line edges are based at the
/// lower-layer endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeCoord {
    pub kind: EdgeKind,
    pub base: SiteCoord,
    pub branch: u32,
}

impl TreeVertex {
    pub const ORIGIN: TreeVertex = TreeVertex { depth: 0, index: 0 };

    pub fn is_origin(&self) -> bool {
        self.depth == 0
    }

    /// Whether the vertex lies on the canonical ray (branch 0 forever).
    pub fn on_ray(&self) -> bool {
        self.index == 0
    }

    /// The `n`-th vertex of the canonical ray.
    pub fn ray(n: u32) -> TreeVertex {
        TreeVertex { depth: n, index: 0 }
    }
}

impl SiteCoord {
    pub const ORIGIN: SiteCoord = SiteCoord { tree: TreeVertex::ORIGIN, layer: 0 };

    pub fn new(tree: TreeVertex, layer: i32) -> Self {
        SiteCoord { tree, layer }
    }
}

impl EdgeCoord {
    /// Two 64-bit words that identify the edge uniquely; used to key weights.
    pub fn key_words(&self, lattice: &Lattice) -> (u64, u64) {
        match self.kind {
            EdgeKind::Tree => {
                let child = lattice.child_unchecked(&self.base.tree, self.branch);
                key_pair(child.index, child.depth, 0, self.base.layer)
            }
            EdgeKind::Line => {
                let t = self.base.tree;
                key_pair(t.index, t.depth, 1, self.base.layer)
            }
        }
    }
}

/// Injective on every edge whose vertex code fits in 64 bits; deeper codes
/// fold their high word in through a mixing function.
#[inline]
fn key_pair(index: u128, depth: u32, kind: u64, layer: i32) -> (u64, u64) {
    let hi = (index >> 64) as u64;
    let mut w1 = ((depth as u64) << 33) | (kind << 32) | (layer as u32 as u64);
    if hi != 0 {
        w1 ^= crate::rng::mix64(hi);
    }
    (index as u64, w1)
}

impl Lattice {
    pub fn new(d: u32) -> Result<Self> {
        if d < 3 {
            return Err(Error::Domain(format!("degree d must be at least 3, got {d}")));
        }
        if d > 1 << 16 {
            return Err(Error::Domain(format!("degree d = {d} is unreasonably large")));
        }
        Ok(Lattice { d })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Branching number b = d - 1.
    pub fn branching(&self) -> u32 {
        self.d - 1
    }

    /// Cheeger constant h(T_d □ Z) = d - 2 (stored, not computed).
    pub fn cheeger(&self) -> u32 {
        self.d - 2
    }

    /// Growth rate gr(T_d □ Z) = d - 1.
    pub fn growth(&self) -> u32 {
        self.d - 1
    }

    /// The value of α at p_c, namely 1 / (d - 1).
    pub fn critical_alpha(&self) -> f64 {
        1.0 / self.growth() as f64
    }

    fn b128(&self) -> u128 {
        (self.d - 1) as u128
    }

    /// `(index / b, index % b)`, avoiding 128-bit division when possible.
    #[inline]
    fn divmod_b(&self, index: u128) -> (u128, u32) {
        let b = self.d - 1;
        if index >> 64 == 0 {
            let i = index as u64;
            ((i / b as u64) as u128, (i % b as u64) as u32)
        } else {
            (index / b as u128, (index % b as u128) as u32)
        }
    }

    /// |S(n)| = d (d-1)^(n-1) for n >= 1, and 1 for n = 0.
    pub fn sphere_size(&self, n: u32) -> Result<u128> {
        if n == 0 {
            return Ok(1);
        }
        self.b128()
            .checked_pow(n - 1)
            .and_then(|v| v.checked_mul(self.d as u128))
            .ok_or_else(|| Error::Resource(format!("|S({n})| overflows the vertex code for d = {}", self.d)))
    }

    /// |B_T(r)|, the number of tree vertices within distance r of the origin.
    pub fn tree_ball_size(&self, r: u32) -> Result<u128> {
        (0..=r).try_fold(0u128, |acc, n| {
            let s = self.sphere_size(n)?;
            acc.checked_add(s)
                .ok_or_else(|| Error::Resource(format!("|B_T({r})| overflows the vertex code")))
        })
    }

    pub fn vertex(&self, depth: u32, index: u128) -> Result<TreeVertex> {
        let size = self.sphere_size(depth)?;
        if index >= size {
            return Err(Error::Encoding(format!(
                "index {index} out of range for depth {depth} (sphere size {size})"
            )));
        }
        Ok(TreeVertex { depth, index })
    }

    /// Decodes a branch sequence: the first digit in `0..d`, later digits in `0..d-1`.
    pub fn from_branches(&self, branches: &[u32]) -> Result<TreeVertex> {
        let mut v = TreeVertex::ORIGIN;
        for (pos, &c) in branches.iter().enumerate() {
            let limit = if pos == 0 { self.d } else { self.d - 1 };
            if c >= limit {
                return Err(Error::Encoding(format!(
                    "branch index {c} at position {pos} must be below {limit}"
                )));
            }
            v = self.child(&v, c)?;
        }
        Ok(v)
    }

    pub fn branches(&self, v: &TreeVertex) -> Vec<u32> {
        let mut out = vec![0u32; v.depth as usize];
        let mut idx = v.index;
        for pos in (1..v.depth as usize).rev() {
            out[pos] = (idx % self.b128()) as u32;
            idx /= self.b128();
        }
        if v.depth > 0 {
            out[0] = idx as u32;
        }
        out
    }

    pub fn is_valid(&self, v: &TreeVertex) -> bool {
        self.sphere_size(v.depth).map(|s| v.index < s).unwrap_or(false)
    }

    pub fn parent(&self, v: &TreeVertex) -> Option<TreeVertex> {
        match v.depth {
            0 => None,
            1 => Some(TreeVertex::ORIGIN),
            _ => Some(TreeVertex { depth: v.depth - 1, index: self.divmod_b(v.index).0 }),
        }
    }

    /// Number of children: d at the origin, d - 1 elsewhere.
    pub fn child_count(&self, v: &TreeVertex) -> u32 {
        if v.is_origin() {
            self.d
        } else {
            self.d - 1
        }
    }

    pub fn child(&self, v: &TreeVertex, c: u32) -> Result<TreeVertex> {
        if c >= self.child_count(v) {
            return Err(Error::Encoding(format!(
                "child index {c} must be below {}",
                self.child_count(v)
            )));
        }
        if v.is_origin() {
            return Ok(TreeVertex { depth: 1, index: c as u128 });
        }
        v.index
            .checked_mul(self.b128())
            .and_then(|i| i.checked_add(c as u128))
            .map(|index| TreeVertex { depth: v.depth + 1, index })
            .ok_or_else(|| Error::Resource(format!("depth {} overflows the vertex code", v.depth + 1)))
    }

    #[inline]
    fn child_unchecked(&self, v: &TreeVertex, c: u32) -> TreeVertex {
        if v.is_origin() {
            TreeVertex { depth: 1, index: c as u128 }
        } else {
            TreeVertex { depth: v.depth + 1, index: v.index * self.b128() + c as u128 }
        }
    }

    /// The last branch digit of a non-origin vertex.
    pub fn last_branch(&self, v: &TreeVertex) -> Option<u32> {
        match v.depth {
            0 => None,
            1 => Some(v.index as u32),
            _ => Some(self.divmod_b(v.index).1),
        }
    }

    /// Ancestor of `v` at depth `s <= v.depth`.
    pub fn ancestor(&self, v: &TreeVertex, s: u32) -> TreeVertex {
        debug_assert!(s <= v.depth);
        if s == 0 {
            return TreeVertex::ORIGIN;
        }
        let mut idx = v.index;
        for _ in s..v.depth {
            idx /= self.b128();
        }
        TreeVertex { depth: s, index: idx }
    }

    pub fn lca(&self, a: &TreeVertex, b: &TreeVertex) -> TreeVertex {
        let s = a.depth.min(b.depth);
        let mut x = self.ancestor(a, s);
        let mut y = self.ancestor(b, s);
        while x != y {
            x = self.parent(&x).expect("distinct vertices at depth 0");
            y = self.parent(&y).expect("distinct vertices at depth 0");
        }
        x
    }

    pub fn tree_distance(&self, a: &TreeVertex, b: &TreeVertex) -> u32 {
        let c = self.lca(a, b);
        a.depth + b.depth - 2 * c.depth
    }

    /// Graph distance in T_d □ Z.
    pub fn distance(&self, a: &SiteCoord, b: &SiteCoord) -> u64 {
        self.tree_distance(&a.tree, &b.tree) as u64 + (a.layer as i64 - b.layer as i64).unsigned_abs()
    }

    /// The unique vertex of the three pairwise geodesics between `a`, `b`, `c`.
    pub fn median(&self, a: &TreeVertex, b: &TreeVertex, c: &TreeVertex) -> TreeVertex {
        let candidates = [self.lca(a, b), self.lca(b, c), self.lca(a, c)];
        *candidates.iter().max_by_key(|v| v.depth).unwrap()
    }

    /// Depth of the canonical-ray vertex closest to `v`.
    pub fn ray_projection_depth(&self, v: &TreeVertex) -> u32 {
        if v.on_ray() {
            return v.depth;
        }
        let mut idx = v.index;
        let mut depth = v.depth;
        // Strip digits until only the ray prefix (all zeros) remains.
        while depth > 0 && idx != 0 {
            idx /= if depth == 1 { self.d as u128 } else { self.b128() };
            depth -= 1;
        }
        depth
    }

    /// Level function relative to the canonical ray: `-|x|` on the ray, and
    /// `L(x') + d(x, x')` off it, where `x'` is the nearest ray vertex.
    pub fn level(&self, v: &TreeVertex) -> i64 {
        let s = self.ray_projection_depth(v) as i64;
        v.depth as i64 - 2 * s
    }

    /// Level of `x` measured from `y` along the ray from `y` that eventually
    /// merges with the canonical ray.
    pub fn level_relative(&self, y: &TreeVertex, x: &TreeVertex) -> i64 {
        // Far enough along the canonical ray that both geodesics from x and y
        // to it have already merged.
        let far = TreeVertex::ray(x.depth.max(y.depth) + 1);
        let m = self.median(x, y, &far);
        self.tree_distance(x, &m) as i64 - self.tree_distance(y, &m) as i64
    }

    /// All tree vertices at distance `n` from the origin, in index order.
    pub fn sphere(&self, n: u32) -> Result<Vec<TreeVertex>> {
        let size = self.sphere_size(n)?;
        if size > 1 << 32 {
            return Err(Error::Resource(format!("sphere of radius {n} has {size} vertices")));
        }
        Ok((0..size).map(|index| TreeVertex { depth: n, index }).collect())
    }

    pub fn edge_endpoints(&self, e: &EdgeCoord) -> (SiteCoord, SiteCoord) {
        match e.kind {
            EdgeKind::Tree => (
                e.base,
                SiteCoord::new(self.child_unchecked(&e.base.tree, e.branch), e.base.layer),
            ),
            EdgeKind::Line => (e.base, SiteCoord::new(e.base.tree, e.base.layer + 1)),
        }
    }

    /// The canonical edge joining two adjacent sites.
    pub fn edge_between(&self, a: &SiteCoord, b: &SiteCoord) -> Option<EdgeCoord> {
        if a.tree == b.tree {
            return match b.layer as i64 - a.layer as i64 {
                1 => Some(EdgeCoord { kind: EdgeKind::Line, base: *a, branch: 0 }),
                -1 => Some(EdgeCoord { kind: EdgeKind::Line, base: *b, branch: 0 }),
                _ => None,
            };
        }
        if a.layer != b.layer {
            return None;
        }
        let (parent, child) = match a.tree.depth.cmp(&b.tree.depth) {
            Ordering::Less => (a, b),
            Ordering::Greater => (b, a),
            Ordering::Equal => return None,
        };
        if self.parent(&child.tree) != Some(parent.tree) {
            return None;
        }
        Some(EdgeCoord {
            kind: EdgeKind::Tree,
            base: *parent,
            branch: self.last_branch(&child.tree).unwrap(),
        })
    }

    /// Calls `f(neighbor, edge)` for each of the d + 2 neighbours of `x`:
    /// tree parent (if any), tree children, then layers +1 and -1.
    #[inline]
    pub fn for_each_neighbor(&self, x: &SiteCoord, mut f: impl FnMut(SiteCoord, EdgeCoord)) {
        let t = x.tree;
        if let Some(par) = self.parent(&t) {
            let base = SiteCoord::new(par, x.layer);
            let branch = self.last_branch(&t).unwrap();
            f(base, EdgeCoord { kind: EdgeKind::Tree, base, branch });
        }
        for c in 0..self.child_count(&t) {
            f(
                SiteCoord::new(self.child_unchecked(&t, c), x.layer),
                EdgeCoord { kind: EdgeKind::Tree, base: *x, branch: c },
            );
        }
        f(
            SiteCoord::new(t, x.layer + 1),
            EdgeCoord { kind: EdgeKind::Line, base: *x, branch: 0 },
        );
        let below = SiteCoord::new(t, x.layer - 1);
        f(below, EdgeCoord { kind: EdgeKind::Line, base: below, branch: 0 });
    }

    pub fn neighbors(&self, x: &SiteCoord) -> Result<Vec<SiteCoord>> {
        if !self.is_valid(&x.tree) {
            return Err(Error::Encoding(format!("{:?} is not a vertex of T_{}", x.tree, self.d)));
        }
        let mut out = Vec::with_capacity(self.d as usize + 2);
        self.for_each_neighbor(x, |y, _| out.push(y));
        Ok(out)
    }

    /// Graph distance from the origin site.
    #[inline]
    pub fn norm(&self, x: &SiteCoord) -> u64 {
        x.tree.depth as u64 + (x.layer as i64).unsigned_abs()
    }
}

/// Finite truncations of T_d □ Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RegionShape {
    /// Sites within graph distance `radius` of the origin (induced subgraph).
    ProductBall { radius: u32 },
    /// B_T(tree_radius) □ [-half_width, half_width].
    Strip { tree_radius: u32, half_width: u32 },
    /// An explicit finite edge set of T_d □ Z together with its endpoints.
    Edges { edges: Vec<EdgeCoord> },
}

impl RegionShape {
    pub fn label(&self) -> String {
        match self {
            RegionShape::ProductBall { radius } => format!("ball{radius}"),
            RegionShape::Strip { tree_radius, half_width } => {
                format!("strip{tree_radius}x{half_width}")
            }
            RegionShape::Edges { edges } => format!("edges{}", edges.len()),
        }
    }
}

/// Vertex and edge lists of a region with dense, deterministic indices.
#[derive(Debug, Clone)]
pub struct RegionGraph {
    pub vertices: Vec<SiteCoord>,
    pub edges: Vec<EdgeCoord>,
    /// Endpoint vertex indices of each edge.
    pub endpoints: Vec<(u32, u32)>,
    vertex_index: FxHashMap<SiteCoord, u32>,
}

impl RegionGraph {
    pub fn vertex_index(&self, s: &SiteCoord) -> Option<u32> {
        self.vertex_index.get(s).copied()
    }

    /// Adjacency lists of `(neighbor, edge index)`.
    pub fn adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (ei, &(a, b)) in self.endpoints.iter().enumerate() {
            adj[a as usize].push((b, ei as u32));
            adj[b as usize].push((a, ei as u32));
        }
        adj
    }
}

#[derive(Debug)]
pub struct Region {
    lattice: Lattice,
    shape: RegionShape,
    vertex_count: u64,
    edge_count: u64,
    custom_sites: FxHashSet<SiteCoord>,
    custom_edges: FxHashSet<EdgeCoord>,
    graph: OnceLock<RegionGraph>,
}

fn saturate(x: u128) -> u64 {
    u64::try_from(x).unwrap_or(u64::MAX)
}

/// Validates a shape against the edge budget and returns the region.
pub fn build_region(lattice: Lattice, shape: RegionShape, edge_budget: u64) -> Result<Region> {
    let (vertex_count, edge_count, custom_sites, custom_edges) = match &shape {
        RegionShape::ProductBall { radius } => {
            let k = *radius;
            lattice.sphere_size(k)?;
            let mut v = 0u128;
            let mut e = 0u128;
            for j in -(k as i64)..=(k as i64) {
                let r = k - j.unsigned_abs() as u32;
                let size = lattice.tree_ball_size(r)?;
                v = v.saturating_add(size);
                e = e.saturating_add(size - 1);
                if j < k as i64 {
                    let r_up = k - (j + 1).unsigned_abs() as u32;
                    e = e.saturating_add(lattice.tree_ball_size(r.min(r_up))?);
                }
            }
            (saturate(v), saturate(e), FxHashSet::default(), FxHashSet::default())
        }
        RegionShape::Strip { tree_radius, half_width } => {
            let size = lattice.tree_ball_size(*tree_radius)?;
            let layers = 2 * *half_width as u128 + 1;
            let v = size.saturating_mul(layers);
            let e = (size - 1).saturating_mul(layers).saturating_add(size.saturating_mul(layers - 1));
            (saturate(v), saturate(e), FxHashSet::default(), FxHashSet::default())
        }
        RegionShape::Edges { edges } => {
            let mut sites = FxHashSet::default();
            let mut set = FxHashSet::default();
            for e in edges {
                if !lattice.is_valid(&e.base.tree) {
                    return Err(Error::Encoding(format!("edge base {:?} is not a vertex", e.base)));
                }
                if e.kind == EdgeKind::Tree && e.branch >= lattice.child_count(&e.base.tree) {
                    return Err(Error::Encoding(format!("edge branch {} out of range", e.branch)));
                }
                let (a, b) = lattice.edge_endpoints(e);
                sites.insert(a);
                sites.insert(b);
                set.insert(*e);
            }
            (sites.len() as u64, set.len() as u64, sites, set)
        }
    };
    if edge_count > edge_budget {
        return Err(Error::Resource(format!(
            "region {} has {edge_count} edges, above the budget of {edge_budget}",
            shape.label()
        )));
    }
    Ok(Region {
        lattice,
        shape,
        vertex_count,
        edge_count,
        custom_sites,
        custom_edges,
        graph: OnceLock::new(),
    })
}

impl Region {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn shape(&self) -> &RegionShape {
        &self.shape
    }

    pub fn vertex_count(&self) -> u64 {
        self.vertex_count
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn label(&self) -> String {
        self.shape.label()
    }

    #[inline]
    pub fn contains(&self, x: &SiteCoord) -> bool {
        match &self.shape {
            RegionShape::ProductBall { radius } => self.lattice.norm(x) <= *radius as u64,
            RegionShape::Strip { tree_radius, half_width } => {
                x.tree.depth <= *tree_radius && x.layer.unsigned_abs() <= *half_width
            }
            RegionShape::Edges { .. } => self.custom_sites.contains(x),
        }
    }

    /// Membership of an edge whose endpoints are `a` (known to be in the
    /// region) and `b`.
    #[inline]
    pub fn contains_edge_from(&self, b: &SiteCoord, e: &EdgeCoord) -> bool {
        match &self.shape {
            RegionShape::Edges { .. } => self.custom_edges.contains(e),
            _ => self.contains(b),
        }
    }

    pub fn contains_edge(&self, e: &EdgeCoord) -> bool {
        let (a, b) = self.lattice.edge_endpoints(e);
        match &self.shape {
            RegionShape::Edges { .. } => self.custom_edges.contains(e),
            _ => self.contains(&a) && self.contains(&b),
        }
    }

    /// Calls `f(neighbor, edge)` for every region edge at `x`.
    #[inline]
    pub fn for_each_neighbor(&self, x: &SiteCoord, mut f: impl FnMut(SiteCoord, EdgeCoord)) {
        self.lattice.for_each_neighbor(x, |y, e| {
            if self.contains_edge_from(&y, &e) {
                f(y, e)
            }
        });
    }

    /// Enumerated vertex and edge lists (computed once on first use).
    pub fn graph(&self) -> &RegionGraph {
        self.graph.get_or_init(|| self.enumerate())
    }

    /// Sort key under which ball edges nest: the shell (largest endpoint norm)
    /// comes first, so ProductBall(k) edges form a prefix of ProductBall(k+1).
    fn edge_order_key(&self, e: &EdgeCoord) -> (u64, EdgeCoord) {
        let (a, b) = self.lattice.edge_endpoints(e);
        (self.lattice.norm(&a).max(self.lattice.norm(&b)), *e)
    }

    fn enumerate(&self) -> RegionGraph {
        let mut edges: Vec<EdgeCoord> = match &self.shape {
            RegionShape::Edges { .. } => self.custom_edges.iter().copied().collect(),
            _ => {
                let (max_depth, max_layer) = match &self.shape {
                    RegionShape::ProductBall { radius } => (*radius, *radius),
                    RegionShape::Strip { tree_radius, half_width } => (*tree_radius, *half_width),
                    RegionShape::Edges { .. } => unreachable!(),
                };
                let mut out = Vec::with_capacity(self.edge_count as usize);
                for depth in 0..=max_depth {
                    let size = self.lattice.sphere_size(depth).expect("checked by build_region");
                    for index in 0..size {
                        let t = TreeVertex { depth, index };
                        for layer in -(max_layer as i32)..=(max_layer as i32) {
                            let x = SiteCoord::new(t, layer);
                            if !self.contains(&x) {
                                continue;
                            }
                            // Each edge is emitted once, from its canonical base.
                            self.lattice.for_each_neighbor(&x, |y, e| {
                                if e.base == x && self.contains(&y) {
                                    out.push(e);
                                }
                            });
                        }
                    }
                }
                out
            }
        };
        edges.sort_by_key(|e| self.edge_order_key(e));

        let mut vertices: Vec<SiteCoord> = match &self.shape {
            RegionShape::Edges { .. } => self.custom_sites.iter().copied().collect(),
            _ => {
                let mut v: Vec<SiteCoord> = Vec::with_capacity(self.vertex_count as usize);
                let mut seen = FxHashSet::default();
                seen.insert(SiteCoord::ORIGIN);
                v.push(SiteCoord::ORIGIN);
                for e in &edges {
                    let (a, b) = self.lattice.edge_endpoints(e);
                    for s in [a, b] {
                        if seen.insert(s) {
                            v.push(s);
                        }
                    }
                }
                v
            }
        };
        vertices.sort_by_key(|s| (self.lattice.norm(s), *s));
        let vertex_index: FxHashMap<SiteCoord, u32> =
            vertices.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let endpoints = edges
            .iter()
            .map(|e| {
                let (a, b) = self.lattice.edge_endpoints(e);
                (vertex_index[&a], vertex_index[&b])
            })
            .collect();
        RegionGraph { vertices, edges, endpoints, vertex_index }
    }
}
