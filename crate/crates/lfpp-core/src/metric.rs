//! Shortest-path distance engines.
//!
//! DLFPP and lattice LFPP are vertex-weighted metrics on the 4-neighbor
//! lattice: the cost of a path is the sum of exp(ξ·field) over its vertices,
//! endpoints included, and the distance between coinciding vertices is zero.
//! The fine-mesh continuum metric is an edge-weighted metric on the
//! 8-neighbor fine lattice with trapezoid edge costs, approximating the path
//! integral of the conformal factor.

use crate::coupling::{circle_average_at_fine, CouplingSample};
use crate::gff::{FieldKind, FieldSample};
use crate::lattice::{rasterize, round_lattice, DomainMask, RectRegion, Vertex};
use crate::rng::CounterRng;
use crate::{Error, Result, SQRT_HALF_PI};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Dlfpp,
    LatticeLfpp,
    FineLfpp,
}

/// A distance query: source and target vertex sets, the mask restricting
/// admissible paths, the metric kind, and the exponent parameter ξ.
#[derive(Debug, Clone)]
pub struct DistanceQuery {
    pub source: Vec<Vertex>,
    pub target: Vec<Vertex>,
    pub mask: DomainMask,
    pub kind: MetricKind,
    pub xi: f64,
}

impl DistanceQuery {
    pub fn new(
        source: Vec<Vertex>,
        target: Vec<Vertex>,
        mask: DomainMask,
        kind: MetricKind,
        xi: f64,
    ) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::InvalidQuery(format!("ξ must be positive, got {xi}")));
        }
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidQuery("empty source or target set".into()));
        }
        for v in source.iter().chain(&target) {
            if !mask.contains(*v) {
                return Err(Error::InvalidQuery(format!("vertex {v} outside the mask")));
            }
        }
        Ok(Self {
            source,
            target,
            mask,
            kind,
            xi,
        })
    }

    pub fn point_to_point(
        u: Vertex,
        v: Vertex,
        mask: DomainMask,
        kind: MetricKind,
        xi: f64,
    ) -> Result<Self> {
        Self::new(vec![u], vec![v], mask, kind, xi)
    }
}

/// Distance value with optional geodesic and relaxation telemetry. An
/// unreachable target is reported as an infinite distance, not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub distance: f64,
    /// Vertex list of a minimizing path. Empty when source and target sets
    /// intersect (the trivial zero-cost path); `None` when unreachable.
    pub geodesic: Option<Vec<Vertex>>,
    pub relaxations: u64,
}

impl DistanceResult {
    pub fn is_unreachable(&self) -> bool {
        self.distance.is_infinite()
    }

    pub fn geodesic_vertices(&self) -> usize {
        self.geodesic.as_ref().map_or(0, |g| g.len())
    }

    fn unreachable(relaxations: u64) -> Self {
        Self {
            distance: f64::INFINITY,
            geodesic: None,
            relaxations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    cost: f64,
    idx: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.idx == other.idx
    }
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap via reversed comparison; ties broken on index for a
        // deterministic settle order
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn reconstruct(parent: &[u32], n: u32, end: usize) -> Vec<Vertex> {
    let side = n as usize + 1;
    let mut path = Vec::new();
    let mut cur = end;
    loop {
        path.push(Vertex::new((cur % side) as u32, (cur / side) as u32));
        let p = parent[cur];
        if p == u32::MAX {
            break;
        }
        cur = p as usize;
    }
    path.reverse();
    path
}

/// Multi-source Dijkstra for vertex-sum metrics on the 4-neighbor lattice.
/// The cost of a path is the sum of `weights` over its vertices, endpoints
/// included; if the source and target sets intersect the distance is zero.
pub fn vertex_weighted_shortest_path(
    weights: &[f64],
    mask: &DomainMask,
    sources: &[Vertex],
    targets: &[Vertex],
) -> DistanceResult {
    let n = mask.scale();
    let side = n as usize + 1;
    debug_assert_eq!(weights.len(), side * side);

    let mut is_target = vec![false; side * side];
    for t in targets {
        is_target[t.index(n)] = true;
    }
    if sources.iter().any(|s| is_target[s.index(n)]) {
        return DistanceResult {
            distance: 0.0,
            geodesic: Some(Vec::new()),
            relaxations: 0,
        };
    }

    let mut dist = vec![f64::INFINITY; side * side];
    let mut parent = vec![u32::MAX; side * side];
    let mut heap = BinaryHeap::new();
    let mut relaxations = 0u64;
    for s in sources {
        let i = s.index(n);
        let w = weights[i];
        if w < dist[i] {
            dist[i] = w;
            heap.push(HeapEntry {
                cost: w,
                idx: i as u32,
            });
        }
    }
    while let Some(HeapEntry { cost, idx }) = heap.pop() {
        let i = idx as usize;
        if cost > dist[i] {
            continue;
        }
        if is_target[i] {
            return DistanceResult {
                distance: cost,
                geodesic: Some(reconstruct(&parent, n, i)),
                relaxations,
            };
        }
        let x = (i % side) as i64;
        let y = (i / side) as i64;
        for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx > n as i64 || ny > n as i64 {
                continue;
            }
            let v = Vertex::new(nx as u32, ny as u32);
            if !mask.contains(v) {
                continue;
            }
            let j = v.index(n);
            let cand = cost + weights[j];
            if cand < dist[j] {
                dist[j] = cand;
                parent[j] = i as u32;
                relaxations += 1;
                heap.push(HeapEntry {
                    cost: cand,
                    idx: j as u32,
                });
            }
        }
    }
    DistanceResult::unreachable(relaxations)
}

/// Vertex weights exp(ξ·√(π/2)·η(v)) for a unit-normalized field.
pub fn dlfpp_weights(field: &FieldSample, xi: f64) -> Vec<f64> {
    field
        .values
        .iter()
        .map(|&v| (xi * SQRT_HALF_PI * v).exp())
        .collect()
}

/// Vertex weights exp(ξ·h₁(v)) for a circle-average field (already scaled).
pub fn lattice_lfpp_weights(circ: &FieldSample, xi: f64) -> Vec<f64> {
    circ.values.iter().map(|&v| (xi * v).exp()).collect()
}

/// DLFPP distance: minimum over lattice paths within the mask of
/// Σ exp(ξ·√(π/2)·η(wⱼ)).
pub fn dlfpp_distance(field: &FieldSample, q: &DistanceQuery) -> Result<DistanceResult> {
    if q.kind != MetricKind::Dlfpp {
        return Err(Error::InvalidQuery("query kind is not dlfpp".into()));
    }
    if q.mask.scale() != field.scale() {
        return Err(Error::InvalidQuery(format!(
            "mask scale {} does not match field scale {}",
            q.mask.scale(),
            field.scale()
        )));
    }
    let weights = dlfpp_weights(field, q.xi);
    Ok(vertex_weighted_shortest_path(
        &weights, &q.mask, &q.source, &q.target,
    ))
}

/// Lattice LFPP distance: identical combinatorics to DLFPP with weights
/// exp(ξ·h₁(v)).
pub fn lattice_lfpp_distance(circ: &FieldSample, q: &DistanceQuery) -> Result<DistanceResult> {
    if q.kind != MetricKind::LatticeLfpp {
        return Err(Error::InvalidQuery("query kind is not lattice-lfpp".into()));
    }
    if circ.kind != FieldKind::CircleAverage {
        return Err(Error::InvalidQuery(
            "lattice LFPP needs a circle-average field".into(),
        ));
    }
    if q.mask.scale() != circ.scale() {
        return Err(Error::InvalidQuery(format!(
            "mask scale {} does not match field scale {}",
            q.mask.scale(),
            circ.scale()
        )));
    }
    let weights = lattice_lfpp_weights(circ, q.xi);
    Ok(vertex_weighted_shortest_path(
        &weights, &q.mask, &q.source, &q.target,
    ))
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Multi-source Dijkstra on the 8-neighbor fine lattice. The cost of edge
/// (a, b) is |a−b|·(1/m)·(w(a)+w(b))/2, with |a−b| in fine units, so
/// distances come out in coarse units.
pub fn eight_neighbor_shortest_path(
    vertex_weights: &[f64],
    mask: &DomainMask,
    mesh_refinement: u32,
    sources: &[Vertex],
    targets: &[Vertex],
) -> DistanceResult {
    let n = mask.scale();
    let side = n as usize + 1;
    debug_assert_eq!(vertex_weights.len(), side * side);
    let inv_m = 1.0 / mesh_refinement as f64;

    let mut is_target = vec![false; side * side];
    for t in targets {
        is_target[t.index(n)] = true;
    }
    let mut dist = vec![f64::INFINITY; side * side];
    let mut parent = vec![u32::MAX; side * side];
    let mut heap = BinaryHeap::new();
    let mut relaxations = 0u64;
    for s in sources {
        let i = s.index(n);
        if is_target[i] {
            return DistanceResult {
                distance: 0.0,
                geodesic: Some(vec![*s]),
                relaxations: 0,
            };
        }
        if dist[i] > 0.0 {
            dist[i] = 0.0;
            heap.push(HeapEntry {
                cost: 0.0,
                idx: i as u32,
            });
        }
    }
    const STEPS: [(i64, i64, bool); 8] = [
        (-1, 0, false),
        (1, 0, false),
        (0, -1, false),
        (0, 1, false),
        (-1, -1, true),
        (-1, 1, true),
        (1, -1, true),
        (1, 1, true),
    ];
    while let Some(HeapEntry { cost, idx }) = heap.pop() {
        let i = idx as usize;
        if cost > dist[i] {
            continue;
        }
        if is_target[i] {
            return DistanceResult {
                distance: cost,
                geodesic: Some(reconstruct(&parent, n, i)),
                relaxations,
            };
        }
        let x = (i % side) as i64;
        let y = (i / side) as i64;
        let wi = vertex_weights[i];
        for &(dx, dy, diag) in &STEPS {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx > n as i64 || ny > n as i64 {
                continue;
            }
            let v = Vertex::new(nx as u32, ny as u32);
            if !mask.contains(v) {
                continue;
            }
            let j = v.index(n);
            let step = if diag { SQRT_2 } else { 1.0 };
            let cand = cost + step * inv_m * 0.5 * (wi + vertex_weights[j]);
            if cand < dist[j] {
                dist[j] = cand;
                parent[j] = i as u32;
                relaxations += 1;
                heap.push(HeapEntry {
                    cost: cand,
                    idx: j as u32,
                });
            }
        }
    }
    DistanceResult::unreachable(relaxations)
}

/// Fine-mesh continuum LFPP engine for one (coupling, region, ξ): the
/// circle-average weight field over the rasterized fine mask is computed
/// once and shared across queries.
pub struct FineLfppEngine<'a> {
    coupling: &'a CouplingSample,
    mask: DomainMask,
    weights: Vec<f64>,
}

impl<'a> FineLfppEngine<'a> {
    pub fn new(coupling: &'a CouplingSample, region: &RectRegion, xi: f64) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::InvalidQuery(format!("ξ must be positive, got {xi}")));
        }
        let nf = coupling.fine.scale();
        let mask = rasterize(region, nf)?;
        let side = nf as usize + 1;
        let mut weights = vec![1.0; side * side];
        for v in mask.iter() {
            let h = circle_average_at_fine(&coupling.fine, v)?;
            weights[v.index(nf)] = (xi * h).exp();
        }
        Ok(Self {
            coupling,
            mask,
            weights,
        })
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    /// Distance between real points in coarse units, snapped to the nearest
    /// fine vertices.
    pub fn distance(&self, z: (f64, f64), w: (f64, f64)) -> Result<DistanceResult> {
        let a = self.snap(z)?;
        let b = self.snap(w)?;
        Ok(eight_neighbor_shortest_path(
            &self.weights,
            &self.mask,
            self.coupling.m,
            &[a],
            &[b],
        ))
    }

    fn snap(&self, z: (f64, f64)) -> Result<Vertex> {
        let m = self.coupling.m as f64;
        let (x, y) = round_lattice((z.0 * m, z.1 * m));
        let nf = self.coupling.fine.scale();
        if x < 0 || y < 0 || x > nf as i64 || y > nf as i64 {
            return Err(Error::InvalidQuery(format!(
                "point ({}, {}) outside the fine grid",
                z.0, z.1
            )));
        }
        let v = Vertex::new(x as u32, y as u32);
        if !self.mask.contains(v) {
            return Err(Error::InvalidQuery(format!(
                "point ({}, {}) snaps to {v}, outside the region mask",
                z.0, z.1
            )));
        }
        Ok(v)
    }
}

/// Continuum LFPP distance surrogate between real points z, w (coarse
/// units) within the region, on the 8-neighbor fine lattice.
pub fn fine_lfpp_distance(
    coupling: &CouplingSample,
    z: (f64, f64),
    w: (f64, f64),
    region: &RectRegion,
    xi: f64,
) -> Result<DistanceResult> {
    FineLfppEngine::new(coupling, region, xi)?.distance(z, w)
}

/// Recomputed cost of a vertex path under a vertex-sum metric.
pub fn vertex_path_cost(weights: &[f64], n: u32, path: &[Vertex]) -> f64 {
    path.iter().map(|v| weights[v.index(n)]).sum()
}

/// Recomputed cost of a fine-lattice path under the trapezoid edge metric.
pub fn fine_path_cost(weights: &[f64], n: u32, mesh_refinement: u32, path: &[Vertex]) -> f64 {
    let inv_m = 1.0 / mesh_refinement as f64;
    path.windows(2)
        .map(|e| {
            let dx = e[0].x.abs_diff(e[1].x);
            let dy = e[0].y.abs_diff(e[1].y);
            debug_assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
            let step = if dx + dy == 2 { SQRT_2 } else { 1.0 };
            step * inv_m * 0.5 * (weights[e[0].index(n)] + weights[e[1].index(n)])
        })
        .sum()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairComparison {
    pub z: (f64, f64),
    pub w: (f64, f64),
    pub dlfpp: f64,
    pub fine_lfpp: f64,
    /// |ln(D_DLFPP + e^{ξ√(π/2)η([z])}) − ln D_fine| / ln n
    pub stat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub n: u32,
    pub xi: f64,
    pub rows: Vec<PairComparison>,
    pub median_stat: f64,
    pub max_stat: f64,
}

pub(crate) fn median_of(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

/// Log-ratio comparison of DLFPP and fine-mesh LFPP on explicit point pairs
/// (coarse units). The DLFPP term carries the additive correction
/// e^{ξ√(π/2)η([z])} covering the [z] = [w] edge case.
pub fn compare_metrics_pairs(
    coupling: &CouplingSample,
    region: &RectRegion,
    pairs: &[((f64, f64), (f64, f64))],
    xi: f64,
) -> Result<CompareReport> {
    let n = coupling.n;
    let coarse_mask = rasterize(region, n)?;
    let engine = FineLfppEngine::new(coupling, region, xi)?;
    let weights = dlfpp_weights(&coupling.coarse, xi);
    let log_n = (n as f64).ln();
    let mut rows = Vec::with_capacity(pairs.len());
    for &(z, w) in pairs {
        let zv = snap_coarse(z, n, &coarse_mask)?;
        let wv = snap_coarse(w, n, &coarse_mask)?;
        let lattice = vertex_weighted_shortest_path(&weights, &coarse_mask, &[zv], &[wv]);
        if lattice.is_unreachable() {
            return Err(Error::InvalidQuery(format!(
                "{zv} and {wv} are disconnected within the region"
            )));
        }
        let fine = engine.distance(z, w)?;
        if fine.is_unreachable() {
            return Err(Error::InvalidQuery(format!(
                "({}, {}) and ({}, {}) are disconnected on the fine mask",
                z.0, z.1, w.0, w.1
            )));
        }
        let correction = (xi * SQRT_HALF_PI * coupling.coarse.value(zv)).exp();
        let stat = if fine.distance == 0.0 {
            // z and w snap to the same fine vertex; both metrics degenerate
            0.0
        } else {
            ((lattice.distance + correction).ln() - fine.distance.ln()).abs() / log_n
        };
        rows.push(PairComparison {
            z,
            w,
            dlfpp: lattice.distance,
            fine_lfpp: fine.distance,
            stat,
        });
    }
    let stats: Vec<f64> = rows.iter().map(|r| r.stat).collect();
    Ok(CompareReport {
        n,
        xi,
        median_stat: median_of(stats.clone()),
        max_stat: stats.iter().copied().fold(0.0, f64::max),
        rows,
    })
}

fn snap_coarse(z: (f64, f64), n: u32, mask: &DomainMask) -> Result<Vertex> {
    let (x, y) = round_lattice(z);
    if x < 0 || y < 0 || x > n as i64 || y > n as i64 {
        return Err(Error::InvalidQuery(format!(
            "point ({}, {}) outside the grid",
            z.0, z.1
        )));
    }
    let v = Vertex::new(x as u32, y as u32);
    if !mask.contains(v) {
        return Err(Error::InvalidQuery(format!(
            "point ({}, {}) snaps to {v}, outside the region mask",
            z.0, z.1
        )));
    }
    Ok(v)
}

/// Log-ratio comparison over uniformly chosen coarse-vertex pairs in the
/// rasterized region, deterministic in `seed`.
pub fn compare_metrics(
    coupling: &CouplingSample,
    region: &RectRegion,
    pair_count: usize,
    xi: f64,
    seed: u64,
) -> Result<CompareReport> {
    if !region.interior_only() {
        return Err(Error::InvalidQuery(
            "comparison region must have positive distance to the boundary".into(),
        ));
    }
    let mask = rasterize(region, coupling.n)?;
    let verts: Vec<Vertex> = mask.iter().collect();
    if verts.is_empty() {
        return Err(Error::InvalidQuery("empty region mask".into()));
    }
    let rng = CounterRng::new(seed);
    let pairs: Vec<((f64, f64), (f64, f64))> = (0..pair_count)
        .map(|i| {
            let a = verts[rng.index_at(2 * i as u64, verts.len())];
            let b = verts[rng.index_at(2 * i as u64 + 1, verts.len())];
            ((a.x as f64, a.y as f64), (b.x as f64, b.y as f64))
        })
        .collect();
    compare_metrics_pairs(coupling, region, &pairs, xi)
}

/// One line of a query batch file (JSON lines).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuerySpec {
    pub kind: MetricKind,
    pub xi: f64,
    pub source: Vec<[u32; 2]>,
    pub target: Vec<[u32; 2]>,
    /// Region vertex loop as rational strings; `null` means the full square.
    pub region: Option<Vec<[String; 2]>>,
}

impl QuerySpec {
    pub fn region(&self) -> Result<RectRegion> {
        match &self.region {
            None => Ok(RectRegion::unit_square()),
            Some(pairs) => {
                let mut text = String::new();
                for [a, b] in pairs {
                    text.push_str(&format!("{a} {b}\n"));
                }
                RectRegion::parse(&text)
            }
        }
    }

    /// Resolves to a `DistanceQuery` at lattice scale `n`.
    pub fn to_query(&self, n: u32) -> Result<DistanceQuery> {
        let mask = rasterize(&self.region()?, n)?;
        let verts = |pts: &[[u32; 2]]| pts.iter().map(|p| Vertex::new(p[0], p[1])).collect();
        DistanceQuery::new(
            verts(&self.source),
            verts(&self.target),
            mask,
            self.kind,
            self.xi,
        )
    }
}
