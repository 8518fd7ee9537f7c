//! Exact integer rectilinear geometry.
//!
//! All coordinates are integer nanometres. Regions are kept in a canonical
//! horizontal-slab form ([`Region`]) so boolean operations, areas and
//! distances are exact and independent of input ordering.

mod index;
mod polygon;
mod region;

pub use index::SpatialIndex;
pub use polygon::Polygon;
pub use region::Region;

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("polygon has fewer than 4 distinct vertices")]
    TooFewVertices,
    #[error("edge {from} -> {to} is not axis-parallel")]
    NonRectilinear { from: Point, to: Point },
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("shape {index} has zero area")]
    Degenerate { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Axis-aligned box with positive area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    /// Panics when the box would have zero or negative extent.
    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        assert!(x0 < x1 && y0 < y1, "degenerate rect ({x0},{y0})-({x1},{y1})");
        Self { lo: Point::new(x0, y0), hi: Point::new(x1, y1) }
    }

    pub fn try_new(x0: i64, y0: i64, x1: i64, y1: i64) -> Option<Self> {
        (x0 < x1 && y0 < y1).then(|| Self::new(x0, y0, x1, y1))
    }

    pub fn width(&self) -> i64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> i64 {
        self.hi.y - self.lo.y
    }

    pub fn area(&self) -> i128 {
        self.width() as i128 * self.height() as i128
    }

    /// Closed-set intersection test (touching counts).
    pub fn touches(&self, other: &Rect) -> bool {
        self.lo.x <= other.hi.x && other.lo.x <= self.hi.x && self.lo.y <= other.hi.y && other.lo.y <= self.hi.y
    }

    /// Open-set intersection test (positive-area overlap only).
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.lo.x < other.hi.x && other.lo.x < self.hi.x && self.lo.y < other.hi.y && other.lo.y < self.hi.y
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        Rect::try_new(
            self.lo.x.max(other.lo.x),
            self.lo.y.max(other.lo.y),
            self.hi.x.min(other.hi.x),
            self.hi.y.min(other.hi.y),
        )
    }

    pub fn union_bbox(&self, other: &Rect) -> Rect {
        Rect::new(
            self.lo.x.min(other.lo.x),
            self.lo.y.min(other.lo.y),
            self.hi.x.max(other.hi.x),
            self.hi.y.max(other.hi.y),
        )
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.lo.x <= p.x && p.x <= self.hi.x && self.lo.y <= p.y && p.y <= self.hi.y
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.lo.x <= r.lo.x && r.hi.x <= self.hi.x && self.lo.y <= r.lo.y && r.hi.y <= self.hi.y
    }

    pub fn grow(&self, by: i64) -> Rect {
        Rect::new(self.lo.x - by, self.lo.y - by, self.hi.x + by, self.hi.y + by)
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Rect {
        Rect::new(self.lo.x + dx, self.lo.y + dy, self.hi.x + dx, self.hi.y + dy)
    }

    /// Centre point, doubled to stay on the integer grid.
    pub fn center2(&self) -> Point {
        Point::new(self.lo.x + self.hi.x, self.lo.y + self.hi.y)
    }

    /// Per-axis gaps between two boxes (0 when projections overlap or touch).
    pub fn gap(&self, other: &Rect) -> (i64, i64) {
        let dx = (other.lo.x - self.hi.x).max(self.lo.x - other.hi.x).max(0);
        let dy = (other.lo.y - self.hi.y).max(self.lo.y - other.hi.y).max(0);
        (dx, dy)
    }

    /// Squared Euclidean distance between the closed boxes.
    pub fn distance2(&self, other: &Rect) -> i128 {
        let (dx, dy) = self.gap(other);
        dx as i128 * dx as i128 + dy as i128 * dy as i128
    }

    pub fn corners(&self) -> [Point; 4] {
        [self.lo, Point::new(self.hi.x, self.lo.y), self.hi, Point::new(self.lo.x, self.hi.y)]
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}; {}, {}]", self.lo.x, self.lo.y, self.hi.x, self.hi.y)
    }
}

/// Floor of the square root of a non-negative integer.
pub fn isqrt(v: i128) -> i64 {
    assert!(v >= 0);
    if v < 2 {
        return v as i64;
    }
    let mut x = (v as f64).sqrt() as i128;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x as i64
}

/// Orthogonal placement: optional mirror about the x axis, then a
/// counter-clockwise rotation by a multiple of 90 degrees, then translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transform {
    m: [[i64; 2]; 2],
    d: Point,
}

impl Default for Transform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform { m: [[1, 0], [0, 1]], d: Point::new(0, 0) };

    pub fn new(dx: i64, dy: i64, quarter_turns: u8, mirror_x: bool) -> Self {
        let rot = match quarter_turns % 4 {
            0 => [[1, 0], [0, 1]],
            1 => [[0, -1], [1, 0]],
            2 => [[-1, 0], [0, -1]],
            _ => [[0, 1], [-1, 0]],
        };
        let mir = if mirror_x { [[1, 0], [0, -1]] } else { [[1, 0], [0, 1]] };
        Self { m: mat_mul(rot, mir), d: Point::new(dx, dy) }
    }

    pub fn translation(dx: i64, dy: i64) -> Self {
        Self::new(dx, dy, 0, false)
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.m[0][0] * p.x + self.m[0][1] * p.y + self.d.x,
            self.m[1][0] * p.x + self.m[1][1] * p.y + self.d.y,
        )
    }

    pub fn apply_rect(&self, r: &Rect) -> Rect {
        let a = self.apply(r.lo);
        let b = self.apply(r.hi);
        Rect::new(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn then_outer(&self, inner: &Transform) -> Transform {
        let m = mat_mul(self.m, inner.m);
        let d = self.apply(inner.d);
        Transform { m, d }
    }

    pub fn is_mirroring(&self) -> bool {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0] < 0
    }
}

fn mat_mul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Same-layer collection of polygons.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShapeSet {
    pub layer: String,
    pub polygons: Vec<Polygon>,
}

impl ShapeSet {
    pub fn new(layer: impl Into<String>, polygons: Vec<Polygon>) -> Self {
        Self { layer: layer.into(), polygons }
    }

    pub fn empty(layer: impl Into<String>) -> Self {
        Self::new(layer, Vec::new())
    }

    pub fn from_rects(layer: impl Into<String>, rects: impl IntoIterator<Item = Rect>) -> Self {
        Self::new(layer, rects.into_iter().map(Polygon::from_rect).collect())
    }

    /// Builds a set from raw vertex lists, naming the offending shape on error.
    pub fn from_vertex_lists(layer: impl Into<String>, lists: &[Vec<Point>]) -> Result<Self, (usize, GeometryError)> {
        let polygons = lists
            .iter()
            .enumerate()
            .map(|(i, v)| Polygon::new(v.clone()).map_err(|e| (i, e)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(layer, polygons))
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn region(&self) -> Region {
        Region::from_polygons(&self.polygons)
    }

    pub fn area(&self) -> i128 {
        self.region().area()
    }

    /// Sum of polygon areas, counting overlaps multiple times.
    pub fn raw_area(&self) -> i128 {
        self.polygons.iter().map(Polygon::area).sum()
    }

    pub fn bbox(&self) -> Option<Rect> {
        self.polygons.iter().map(Polygon::bbox).reduce(|a, b| a.union_bbox(&b))
    }

    pub fn translate(&self, dx: i64, dy: i64) -> ShapeSet {
        let t = Transform::translation(dx, dy);
        ShapeSet::new(self.layer.clone(), self.polygons.iter().map(|p| p.transform(&t)).collect())
    }
}

/// Merges overlapping and abutting polygons into pairwise-disjoint,
/// canonically ordered polygons.
pub fn normalize(set: &ShapeSet) -> ShapeSet {
    ShapeSet::new(set.layer.clone(), set.region().to_polygons())
}

pub fn boolean_subtract(a: &ShapeSet, b: &ShapeSet) -> ShapeSet {
    ShapeSet::new(a.layer.clone(), a.region().subtract(&b.region()).to_polygons())
}

pub fn boolean_intersect(a: &ShapeSet, b: &ShapeSet) -> ShapeSet {
    ShapeSet::new(a.layer.clone(), a.region().intersect(&b.region()).to_polygons())
}

pub fn boolean_union(a: &ShapeSet, b: &ShapeSet) -> ShapeSet {
    ShapeSet::new(a.layer.clone(), a.region().union(&b.region()).to_polygons())
}

/// Minimum Euclidean distance between two shape sets, floored to whole nm.
/// Returns 0 when the sets touch or overlap.
pub fn min_separation(a: &ShapeSet, b: &ShapeSet) -> i64 {
    let ra = a.region().rects();
    let rb = b.region().rects();
    if ra.is_empty() || rb.is_empty() {
        return 0;
    }
    isqrt(min_distance2(&ra, &rb))
}

/// Squared minimum distance between two rectangle covers.
pub fn min_distance2(a: &[Rect], b: &[Rect]) -> i128 {
    let mut best = i128::MAX;
    for ra in a {
        for rb in b {
            best = best.min(ra.distance2(rb));
            if best == 0 {
                return 0;
            }
        }
    }
    best
}

/// Narrowest interior chord between facing edges of the polygon.
pub fn interior_min_width(p: &Polygon) -> i64 {
    p.min_width()
}
