use super::region::signed_area2;
use super::{GeometryError, Point, Rect, Region, Transform};

/// Simple rectilinear polygon, counter-clockwise, without collinear
/// vertices, starting at its smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let mut v = vertices;
        v.dedup();
        while v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        let n = v.len();
        if n < 4 {
            return Err(GeometryError::TooFewVertices);
        }
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if a.x != b.x && a.y != b.y {
                return Err(GeometryError::NonRectilinear { from: a, to: b });
            }
        }
        // drop collinear vertices; a reversal is a zero-width spike
        let mut changed = true;
        while changed && v.len() >= 3 {
            changed = false;
            let n = v.len();
            for i in 0..n {
                let (p, c, q) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
                let d1 = ((c.x - p.x).signum(), (c.y - p.y).signum());
                let d2 = ((q.x - c.x).signum(), (q.y - c.y).signum());
                if d1 == d2 {
                    v.remove(i);
                    changed = true;
                    break;
                }
                if d1 == (-d2.0, -d2.1) {
                    return Err(GeometryError::SelfIntersecting);
                }
            }
        }
        if v.len() < 4 {
            return Err(GeometryError::TooFewVertices);
        }
        let n = v.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_touch((v[i], v[(i + 1) % n]), (v[j], v[(j + 1) % n])) {
                    return Err(GeometryError::SelfIntersecting);
                }
            }
        }
        let area2 = signed_area2(&v);
        if area2 == 0 {
            return Err(GeometryError::Degenerate { index: 0 });
        }
        if area2 < 0 {
            v.reverse();
        }
        Ok(Self::from_ccw_loop(v))
    }

    /// Wraps an already valid counter-clockwise loop, rotating it to canonical start.
    pub(crate) fn from_ccw_loop(mut v: Vec<Point>) -> Self {
        let start = v.iter().enumerate().min_by_key(|(_, p)| **p).map(|(i, _)| i).unwrap_or(0);
        v.rotate_left(start);
        Self { vertices: v }
    }

    pub fn from_rect(r: Rect) -> Self {
        Self { vertices: r.corners().to_vec() }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_rect(&self) -> bool {
        self.vertices.len() == 4
    }

    pub fn as_rect(&self) -> Option<Rect> {
        self.is_rect().then(|| self.bbox())
    }

    pub fn bbox(&self) -> Rect {
        let xs = self.vertices.iter().map(|p| p.x);
        let ys = self.vertices.iter().map(|p| p.y);
        Rect::new(xs.clone().min().unwrap(), ys.clone().min().unwrap(), xs.max().unwrap(), ys.max().unwrap())
    }

    pub fn area(&self) -> i128 {
        signed_area2(&self.vertices) / 2
    }

    pub fn region(&self) -> Region {
        match self.as_rect() {
            Some(r) => Region::from_rect(r),
            None => Region::from_polygon(self),
        }
    }

    pub fn rects(&self) -> Vec<Rect> {
        match self.as_rect() {
            Some(r) => vec![r],
            None => self.region().rects(),
        }
    }

    pub fn transform(&self, t: &Transform) -> Polygon {
        let mut v: Vec<Point> = self.vertices.iter().map(|p| t.apply(*p)).collect();
        if t.is_mirroring() {
            v.reverse();
        }
        Self::from_ccw_loop(v)
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Polygon {
        self.transform(&Transform::translation(dx, dy))
    }

    /// Closed containment.
    pub fn contains_point(&self, p: Point) -> bool {
        self.bbox().contains_point(p) && self.rects().iter().any(|r| r.contains_point(p))
    }

    /// Narrowest chord between facing edges whose projections overlap.
    pub fn min_width(&self) -> i64 {
        if let Some(r) = self.as_rect() {
            return r.width().min(r.height());
        }
        let reg = self.region();
        let h = reg.min_span().unwrap_or(0);
        let v = reg.transpose().min_span().unwrap_or(0);
        h.min(v)
    }
}

fn segments_touch(a: (Point, Point), b: (Point, Point)) -> bool {
    let (ax0, ax1) = (a.0.x.min(a.1.x), a.0.x.max(a.1.x));
    let (ay0, ay1) = (a.0.y.min(a.1.y), a.0.y.max(a.1.y));
    let (bx0, bx1) = (b.0.x.min(b.1.x), b.0.x.max(b.1.x));
    let (by0, by1) = (b.0.y.min(b.1.y), b.0.y.max(b.1.y));
    ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
}
