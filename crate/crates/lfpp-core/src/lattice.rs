//! Lattice domains: rectilinear regions of the unit square with exact
//! rational vertices, their rasterizations onto `{0..n}²`, and the standard
//! annulus geometry (centered squares of side 1/3 and 2/3).

use crate::{Error, Result};
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Exact coordinate of a region vertex.
pub type Coord = Ratio<i64>;

/// A lattice point of `{0..n}²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: u32,
    pub y: u32,
}

impl Vertex {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Row-major index into a `(n+1)²` array.
    pub fn index(&self, n: u32) -> usize {
        self.y as usize * (n as usize + 1) + self.x as usize
    }

    /// L∞ distance to the boundary of `[0,n]²`.
    pub fn boundary_distance(&self, n: u32) -> u32 {
        self.x.min(self.y).min(n - self.x).min(n - self.y)
    }

    pub fn manhattan(&self, other: Vertex) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Rounds `t` to the nearest integer, breaking half-integer ties toward the
/// smaller value.
fn round_half_down(t: f64) -> i64 {
    let fl = t.floor();
    if t - fl > 0.5 {
        fl as i64 + 1
    } else {
        fl as i64
    }
}

/// The lattice point of `{0..n}²` closest to `n·z` for `z ∈ [0,1]²`.
/// Half-integer ties break toward smaller coordinates.
pub fn nearest_lattice_point(z: (f64, f64), n: u32) -> Vertex {
    debug_assert!((0.0..=1.0).contains(&z.0) && (0.0..=1.0).contains(&z.1));
    let clamp = |v: i64| v.clamp(0, n as i64) as u32;
    Vertex::new(
        clamp(round_half_down(n as f64 * z.0)),
        clamp(round_half_down(n as f64 * z.1)),
    )
}

/// Rounds a point in lattice units, ties toward smaller coordinates.
pub fn round_lattice(p: (f64, f64)) -> (i64, i64) {
    (round_half_down(p.0), round_half_down(p.1))
}

/// An axis-aligned rectilinear polygon contained in the unit square, given by
/// its vertex loop in traversal order. Coordinates are exact rationals so
/// rasterization is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectRegion {
    vertices: Vec<(Coord, Coord)>,
    interior_only: bool,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: (Coord, Coord),
    b: (Coord, Coord),
}

impl Edge {
    fn is_vertical(&self) -> bool {
        self.a.0 == self.b.0
    }

    fn contains_point(&self, p: (Coord, Coord)) -> bool {
        if self.is_vertical() {
            p.0 == self.a.0 && within(p.1, self.a.1, self.b.1)
        } else {
            p.1 == self.a.1 && within(p.0, self.a.0, self.b.0)
        }
    }
}

fn within(t: Coord, a: Coord, b: Coord) -> bool {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo <= t && t <= hi
}

impl RectRegion {
    /// Builds a region from its vertex loop. Consecutive vertices must differ
    /// in exactly one coordinate (axis-parallel edges), the loop must be
    /// simple, and every vertex must lie in `[0,1]²`.
    pub fn from_vertices(vertices: Vec<(Coord, Coord)>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::InvalidRegion(format!(
                "need at least 4 vertices, got {}",
                vertices.len()
            )));
        }
        let zero = Coord::zero();
        let one = Coord::one();
        for &(x, y) in &vertices {
            if x < zero || x > one || y < zero || y > one {
                return Err(Error::InvalidRegion(format!(
                    "vertex ({x}, {y}) outside the unit square"
                )));
            }
        }
        let k = vertices.len();
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let horiz = a.1 == b.1 && a.0 != b.0;
            let vert = a.0 == b.0 && a.1 != b.1;
            if !(horiz || vert) {
                return Err(Error::InvalidRegion(format!(
                    "edge from ({}, {}) to ({}, {}) is not axis-parallel",
                    a.0, a.1, b.0, b.1
                )));
            }
        }
        let region = Self {
            interior_only: vertices
                .iter()
                .all(|&(x, y)| x > zero && x < one && y > zero && y < one),
            vertices,
        };
        region.check_simple()?;
        Ok(region)
    }

    /// Axis-aligned rectangle `[x0,x1] × [y0,y1]`.
    pub fn rect(x0: Coord, y0: Coord, x1: Coord, y1: Coord) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidRegion("rectangle has empty interior".into()));
        }
        Self::from_vertices(vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    pub fn unit_square() -> Self {
        Self::rect(Coord::zero(), Coord::zero(), Coord::one(), Coord::one())
            .expect("unit square is valid")
    }

    /// Square of side `side` centered at (1/2, 1/2).
    pub fn centered_square(side: Coord) -> Result<Self> {
        let half = Coord::new(1, 2);
        let h = side / 2;
        Self::rect(half - h, half - h, half + h, half + h)
    }

    /// The centered square of side 1/2, the default restriction with positive
    /// distance to the boundary.
    pub fn centered_half_square() -> Self {
        Self::rect(
            Coord::new(1, 4),
            Coord::new(1, 4),
            Coord::new(3, 4),
            Coord::new(3, 4),
        )
        .expect("valid")
    }

    pub fn vertices(&self) -> &[(Coord, Coord)] {
        &self.vertices
    }

    /// True when every vertex is strictly inside the unit square, so the
    /// region has positive distance to the boundary.
    pub fn interior_only(&self) -> bool {
        self.interior_only
    }

    fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let k = self.vertices.len();
        (0..k).map(move |i| Edge {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % k],
        })
    }

    fn check_simple(&self) -> Result<()> {
        let edges: Vec<Edge> = self.edges().collect();
        let k = edges.len();
        for i in 0..k {
            for j in i + 1..k {
                let adjacent = j == i + 1 || (i == 0 && j == k - 1);
                if segments_cross(&edges[i], &edges[j], adjacent) {
                    return Err(Error::InvalidRegion(format!(
                        "edges {i} and {j} intersect; polygon is not simple"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact membership of `p` in the closed region.
    pub fn contains(&self, p: (Coord, Coord)) -> bool {
        for e in self.edges() {
            if e.contains_point(p) {
                return true;
            }
        }
        // Even-odd rule on a ray toward +x; vertical edges counted on the
        // half-open span [ylo, yhi) so vertices are not double counted.
        let mut crossings = 0u32;
        for e in self.edges() {
            if !e.is_vertical() {
                continue;
            }
            let (ylo, yhi) = if e.a.1 <= e.b.1 {
                (e.a.1, e.b.1)
            } else {
                (e.b.1, e.a.1)
            };
            if ylo <= p.1 && p.1 < yhi && e.a.0 > p.0 {
                crossings += 1;
            }
        }
        crossings % 2 == 1
    }

    /// Membership test for the lattice point `(x, y)/n`; avoids rational
    /// arithmetic on the hot rasterization path.
    fn contains_lattice(&self, x: u32, y: u32, n: u32) -> bool {
        let px = Coord::new(x as i64, n as i64);
        let py = Coord::new(y as i64, n as i64);
        self.contains((px, py))
    }

    /// Reads a region from the plain-text format: one `p/q r/s` vertex per
    /// line, `#` comments.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::InvalidRegion(format!(
                    "line {}: expected two coordinates, got {line:?}",
                    lineno + 1
                )));
            };
            vertices.push((parse_coord(a, lineno)?, parse_coord(b, lineno)?));
        }
        Self::from_vertices(vertices)
    }

    /// Serializes to the plain-text vertex format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(x, y) in &self.vertices {
            out.push_str(&format!(
                "{}/{} {}/{}\n",
                x.numer(),
                x.denom(),
                y.numer(),
                y.denom()
            ));
        }
        out
    }
}

fn parse_coord(s: &str, lineno: usize) -> Result<Coord> {
    let parse_int = |t: &str| {
        i64::from_str(t)
            .map_err(|_| Error::InvalidRegion(format!("line {}: bad coordinate {s:?}", lineno + 1)))
    };
    if let Some((num, den)) = s.split_once('/') {
        let d = parse_int(den)?;
        if d == 0 {
            return Err(Error::InvalidRegion(format!(
                "line {}: zero denominator in {s:?}",
                lineno + 1
            )));
        }
        Ok(Coord::new(parse_int(num)?, d))
    } else {
        Ok(Coord::from_integer(parse_int(s)?))
    }
}

/// Proper or improper crossing between two axis-parallel segments.
/// `adjacent` edges are allowed to share exactly their common endpoint.
fn segments_cross(e1: &Edge, e2: &Edge, adjacent: bool) -> bool {
    let overlap_1d = |a0: Coord, a1: Coord, b0: Coord, b1: Coord| -> Option<(Coord, Coord)> {
        let (a0, a1) = if a0 <= a1 { (a0, a1) } else { (a1, a0) };
        let (b0, b1) = if b0 <= b1 { (b0, b1) } else { (b1, b0) };
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        (lo <= hi).then_some((lo, hi))
    };
    match (e1.is_vertical(), e2.is_vertical()) {
        (true, true) => {
            if e1.a.0 != e2.a.0 {
                return false;
            }
            match overlap_1d(e1.a.1, e1.b.1, e2.a.1, e2.b.1) {
                None => false,
                Some((lo, hi)) => !(adjacent && lo == hi),
            }
        }
        (false, false) => {
            if e1.a.1 != e2.a.1 {
                return false;
            }
            match overlap_1d(e1.a.0, e1.b.0, e2.a.0, e2.b.0) {
                None => false,
                Some((lo, hi)) => !(adjacent && lo == hi),
            }
        }
        (v1, _) => {
            let (vert, horiz) = if v1 { (e1, e2) } else { (e2, e1) };
            let vx = vert.a.0;
            let hy = horiz.a.1;
            let x_hits = within(vx, horiz.a.0, horiz.b.0);
            let y_hits = within(hy, vert.a.1, vert.b.1);
            if !(x_hits && y_hits) {
                return false;
            }
            if adjacent {
                // shared endpoint is fine; anything else is a genuine cross
                let shared = (vx, hy);
                let endpoint_of_both = vert.contains_point(shared)
                    && horiz.contains_point(shared)
                    && (shared == e1.a || shared == e1.b)
                    && (shared == e2.a || shared == e2.b);
                return !endpoint_of_both;
            }
            true
        }
    }
}

/// Dense membership bitmap over `{0..n}²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainMask {
    n: u32,
    bits: Vec<u64>,
}

impl DomainMask {
    pub fn empty(n: u32) -> Self {
        let side = n as usize + 1;
        Self {
            n,
            bits: vec![0; (side * side + 63) / 64],
        }
    }

    pub fn full(n: u32) -> Self {
        let mut m = Self::empty(n);
        let side = n as usize + 1;
        for i in 0..side * side {
            m.bits[i / 64] |= 1 << (i % 64);
        }
        m
    }

    pub fn from_fn(n: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::empty(n);
        for y in 0..=n {
            for x in 0..=n {
                if f(x, y) {
                    m.insert(Vertex::new(x, y));
                }
            }
        }
        m
    }

    pub fn scale(&self) -> u32 {
        self.n
    }

    pub fn insert(&mut self, v: Vertex) {
        let i = v.index(self.n);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, v: Vertex) -> bool {
        let i = v.index(self.n);
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn contains_xy(&self, x: u32, y: u32) -> bool {
        self.contains(Vertex::new(x, y))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |y| {
            (0..=n).filter_map(move |x| {
                let v = Vertex::new(x, y);
                self.contains(v).then_some(v)
            })
        })
    }

    pub fn is_subset_of(&self, other: &DomainMask) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint_from(&self, other: &DomainMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }

    /// Vertices of the mask with at least one 4-neighbor outside the mask
    /// (the `∂V` convention: boundary vertices belong to the set).
    pub fn inner_boundary(&self) -> DomainMask {
        let n = self.n;
        DomainMask::from_fn(n, |x, y| {
            if !self.contains_xy(x, y) {
                return false;
            }
            let mut exposed = false;
            if x > 0 {
                exposed |= !self.contains_xy(x - 1, y);
            } else {
                exposed = true;
            }
            if x < n {
                exposed |= !self.contains_xy(x + 1, y);
            } else {
                exposed = true;
            }
            if y > 0 {
                exposed |= !self.contains_xy(x, y - 1);
            } else {
                exposed = true;
            }
            if y < n {
                exposed |= !self.contains_xy(x, y + 1);
            } else {
                exposed = true;
            }
            exposed
        })
    }

    /// Vertices outside the mask with at least one 4-neighbor inside it.
    pub fn outer_boundary(&self) -> DomainMask {
        let n = self.n;
        DomainMask::from_fn(n, |x, y| {
            if self.contains_xy(x, y) {
                return false;
            }
            (x > 0 && self.contains_xy(x - 1, y))
                || (x < n && self.contains_xy(x + 1, y))
                || (y > 0 && self.contains_xy(x, y - 1))
                || (y < n && self.contains_xy(x, y + 1))
        })
    }

    /// Minimal Euclidean distance between two masks (brute force; intended
    /// for geometry checks, not hot paths).
    pub fn min_distance_to(&self, other: &DomainMask) -> f64 {
        let mut best = f64::INFINITY;
        let a: Vec<Vertex> = self.iter().collect();
        let b: Vec<Vertex> = other.iter().collect();
        for p in &a {
            for q in &b {
                let dx = p.x as f64 - q.x as f64;
                let dy = p.y as f64 - q.y as f64;
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        best
    }
}

/// Rasterizes the closed region scaled by `n` onto `{0..n}²`: the mask holds
/// every lattice point of `closure(nP)`, including points on edges of `nP`.
/// Errors when some edge of `nP` spans fewer than 2 lattice points.
pub fn rasterize(region: &RectRegion, n: u32) -> Result<DomainMask> {
    if n == 0 {
        return Err(Error::InvalidScale {
            n,
            reason: "scale must be positive".into(),
        });
    }
    for e in region.edges() {
        let len = if e.is_vertical() {
            (e.a.1 - e.b.1).abs()
        } else {
            (e.a.0 - e.b.0).abs()
        };
        // every edge of nP must span at least 2 lattice steps
        if len * Coord::from_integer(n as i64) < Coord::from_integer(2) {
            return Err(Error::ScaleTooSmall {
                n,
                from: format!("({}, {})", e.a.0, e.a.1),
                to: format!("({}, {})", e.b.0, e.b.1),
            });
        }
    }
    Ok(DomainMask::from_fn(n, |x, y| {
        region.contains_lattice(x, y, n)
    }))
}

/// Masks for the centered annulus: `s1` is the rasterized closed square of
/// side 1/3 and `s2_boundary` the inner lattice boundary of the rasterized
/// closed square of side 2/3.
#[derive(Debug, Clone)]
pub struct AnnulusSpec {
    pub n: u32,
    pub s1: DomainMask,
    pub s2_boundary: DomainMask,
}

/// Builds the annulus geometry at scale `n ≥ 12` (below that the two masks
/// degenerate).
pub fn annulus(n: u32) -> Result<AnnulusSpec> {
    if n < 12 {
        return Err(Error::InvalidScale {
            n,
            reason: "annulus masks degenerate below n = 12".into(),
        });
    }
    let s1_region = RectRegion::centered_square(Coord::new(1, 3))?;
    let s2_region = RectRegion::centered_square(Coord::new(2, 3))?;
    let s1 = rasterize(&s1_region, n)?;
    let s2 = rasterize(&s2_region, n)?;
    let s2_boundary = s2.inner_boundary();
    debug_assert!(s1.is_disjoint_from(&s2_boundary));
    debug_assert!(!s1.is_empty() && !s2_boundary.is_empty());
    Ok(AnnulusSpec { n, s1, s2_boundary })
}
