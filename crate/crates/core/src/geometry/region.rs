use super::{Point, Polygon, Rect};
use std::collections::BTreeMap;

type Span = (i64, i64);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Slab {
    y0: i64,
    y1: i64,
    spans: Vec<Span>,
}

/// A point set stored as horizontal slabs of disjoint x-spans.
///
/// The representation is canonical: slabs are sorted, non-empty, and two
/// vertically adjacent slabs never carry identical spans. Equal point sets
/// therefore compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Region {
    slabs: Vec<Slab>,
}

#[derive(Clone, Copy)]
enum Op {
    Union,
    Intersect,
    Subtract,
}

impl Op {
    fn eval(self, a: bool, b: bool) -> bool {
        match self {
            Op::Union => a || b,
            Op::Intersect => a && b,
            Op::Subtract => a && !b,
        }
    }
}

fn merge_spans(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_unstable();
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn combine_spans(a: &[Span], b: &[Span], op: Op) -> Vec<Span> {
    let mut xs: Vec<i64> = a.iter().chain(b).flat_map(|&(l, h)| [l, h]).collect();
    xs.sort_unstable();
    xs.dedup();
    let (mut ia, mut ib) = (0, 0);
    let mut out: Vec<Span> = Vec::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        while ia < a.len() && a[ia].1 <= x0 {
            ia += 1;
        }
        while ib < b.len() && b[ib].1 <= x0 {
            ib += 1;
        }
        let in_a = ia < a.len() && a[ia].0 <= x0;
        let in_b = ib < b.len() && b[ib].0 <= x0;
        if op.eval(in_a, in_b) {
            match out.last_mut() {
                Some(last) if last.1 == x0 => last.1 = x1,
                _ => out.push((x0, x1)),
            }
        }
    }
    out
}

impl Region {
    pub fn empty() -> Self {
        Self::default()
    }

    fn from_raw_slabs(raw: Vec<Slab>) -> Self {
        let mut slabs: Vec<Slab> = Vec::with_capacity(raw.len());
        for s in raw {
            if s.spans.is_empty() || s.y0 >= s.y1 {
                continue;
            }
            match slabs.last_mut() {
                Some(last) if last.y1 == s.y0 && last.spans == s.spans => last.y1 = s.y1,
                _ => slabs.push(s),
            }
        }
        Self { slabs }
    }

    pub fn from_rect(r: Rect) -> Self {
        Self { slabs: vec![Slab { y0: r.lo.y, y1: r.hi.y, spans: vec![(r.lo.x, r.hi.x)] }] }
    }

    pub fn from_rects<I: IntoIterator<Item = Rect>>(rects: I) -> Self {
        let mut rects: Vec<Rect> = rects.into_iter().collect();
        if rects.is_empty() {
            return Self::empty();
        }
        rects.sort_unstable_by_key(|r| (r.lo.y, r.lo.x));
        let mut ys: Vec<i64> = rects.iter().flat_map(|r| [r.lo.y, r.hi.y]).collect();
        ys.sort_unstable();
        ys.dedup();
        let mut active: Vec<Rect> = Vec::new();
        let mut next = 0;
        let mut raw = Vec::with_capacity(ys.len());
        for w in ys.windows(2) {
            let (y0, y1) = (w[0], w[1]);
            active.retain(|r| r.hi.y > y0);
            while next < rects.len() && rects[next].lo.y <= y0 {
                active.push(rects[next]);
                next += 1;
            }
            let spans = merge_spans(active.iter().map(|r| (r.lo.x, r.hi.x)).collect());
            raw.push(Slab { y0, y1, spans });
        }
        Self::from_raw_slabs(raw)
    }

    /// Even-odd fill of a rectilinear ring.
    pub fn from_polygon(p: &Polygon) -> Self {
        let v = p.vertices();
        let n = v.len();
        let verticals: Vec<(i64, i64, i64)> = (0..n)
            .filter_map(|i| {
                let (a, b) = (v[i], v[(i + 1) % n]);
                (a.x == b.x).then(|| (a.x, a.y.min(b.y), a.y.max(b.y)))
            })
            .collect();
        let mut ys: Vec<i64> = v.iter().map(|p| p.y).collect();
        ys.sort_unstable();
        ys.dedup();
        let raw = ys
            .windows(2)
            .map(|w| {
                let (y0, y1) = (w[0], w[1]);
                let mut xs: Vec<i64> =
                    verticals.iter().filter(|&&(_, lo, hi)| lo <= y0 && hi >= y1).map(|&(x, _, _)| x).collect();
                xs.sort_unstable();
                let spans = xs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
                Slab { y0, y1, spans: merge_spans(spans) }
            })
            .collect();
        Self::from_raw_slabs(raw)
    }

    pub fn from_polygons(polys: &[Polygon]) -> Self {
        Self::from_rects(polys.iter().flat_map(|p| p.region().rects()))
    }

    fn combine(&self, other: &Region, op: Op) -> Region {
        let mut ys: Vec<i64> = self.slabs.iter().chain(&other.slabs).flat_map(|s| [s.y0, s.y1]).collect();
        ys.sort_unstable();
        ys.dedup();
        let (mut ia, mut ib) = (0, 0);
        let empty: Vec<Span> = Vec::new();
        let mut raw = Vec::with_capacity(ys.len());
        for w in ys.windows(2) {
            let (y0, y1) = (w[0], w[1]);
            while ia < self.slabs.len() && self.slabs[ia].y1 <= y0 {
                ia += 1;
            }
            while ib < other.slabs.len() && other.slabs[ib].y1 <= y0 {
                ib += 1;
            }
            let sa = match self.slabs.get(ia) {
                Some(s) if s.y0 <= y0 => &s.spans,
                _ => &empty,
            };
            let sb = match other.slabs.get(ib) {
                Some(s) if s.y0 <= y0 => &s.spans,
                _ => &empty,
            };
            raw.push(Slab { y0, y1, spans: combine_spans(sa, sb, op) });
        }
        Self::from_raw_slabs(raw)
    }

    pub fn union(&self, other: &Region) -> Region {
        self.combine(other, Op::Union)
    }

    pub fn intersect(&self, other: &Region) -> Region {
        self.combine(other, Op::Intersect)
    }

    pub fn subtract(&self, other: &Region) -> Region {
        self.combine(other, Op::Subtract)
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    pub fn area(&self) -> i128 {
        self.slabs
            .iter()
            .map(|s| (s.y1 - s.y0) as i128 * s.spans.iter().map(|&(a, b)| (b - a) as i128).sum::<i128>())
            .sum()
    }

    /// Slab rectangles, bottom to top, left to right.
    pub fn rects(&self) -> Vec<Rect> {
        self.slabs
            .iter()
            .flat_map(|s| s.spans.iter().map(move |&(a, b)| Rect::new(a, s.y0, b, s.y1)))
            .collect()
    }

    pub fn bbox(&self) -> Option<Rect> {
        let first = self.slabs.first()?;
        let last = self.slabs.last()?;
        let x0 = self.slabs.iter().map(|s| s.spans[0].0).min()?;
        let x1 = self.slabs.iter().map(|s| s.spans[s.spans.len() - 1].1).max()?;
        Some(Rect::new(x0, first.y0, x1, last.y1))
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Region {
        Region {
            slabs: self
                .slabs
                .iter()
                .map(|s| Slab {
                    y0: s.y0 + dy,
                    y1: s.y1 + dy,
                    spans: s.spans.iter().map(|&(a, b)| (a + dx, b + dx)).collect(),
                })
                .collect(),
        }
    }

    /// Mirror across the diagonal: (x, y) -> (y, x).
    pub fn transpose(&self) -> Region {
        Region::from_rects(self.rects().into_iter().map(|r| Rect::new(r.lo.y, r.lo.x, r.hi.y, r.hi.x)))
    }

    /// Minkowski sum with a square of half-side `by`.
    pub fn grow(&self, by: i64) -> Region {
        if by == 0 {
            return self.clone();
        }
        Region::from_rects(self.rects().into_iter().filter_map(|r| {
            Rect::try_new(r.lo.x - by, r.lo.y - by, r.hi.x + by, r.hi.y + by)
        }))
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.rects().iter().any(|r| r.contains_point(p))
    }

    /// Shortest horizontal chord across the interior.
    pub fn min_span(&self) -> Option<i64> {
        self.slabs.iter().flat_map(|s| s.spans.iter().map(|&(a, b)| b - a)).min()
    }

    /// Splits into the parts strictly below and at-or-above `y`.
    pub fn split_at_y(&self, y: i64) -> (Region, Region) {
        let mut below = Vec::new();
        let mut above = Vec::new();
        for s in &self.slabs {
            if s.y1 <= y {
                below.push(s.clone());
            } else if s.y0 >= y {
                above.push(s.clone());
            } else {
                below.push(Slab { y0: s.y0, y1: y, spans: s.spans.clone() });
                above.push(Slab { y0: y, y1: s.y1, spans: s.spans.clone() });
            }
        }
        (Region::from_raw_slabs(below), Region::from_raw_slabs(above))
    }

    /// Edge-connected components (corner contact does not join).
    pub fn components(&self) -> Vec<Region> {
        let mut offsets = Vec::with_capacity(self.slabs.len() + 1);
        let mut total = 0;
        for s in &self.slabs {
            offsets.push(total);
            total += s.spans.len();
        }
        offsets.push(total);
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for k in 1..self.slabs.len() {
            let (lo, hi) = (&self.slabs[k - 1], &self.slabs[k]);
            if lo.y1 != hi.y0 {
                continue;
            }
            let (mut i, mut j) = (0, 0);
            while i < lo.spans.len() && j < hi.spans.len() {
                let (a, b) = (lo.spans[i], hi.spans[j]);
                if a.0.max(b.0) < a.1.min(b.1) {
                    let (ra, rb) = (find(&mut parent, offsets[k - 1] + i), find(&mut parent, offsets[k] + j));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
                if a.1 < b.1 {
                    i += 1;
                } else {
                    j += 1;
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<Slab>> = BTreeMap::new();
        for (k, s) in self.slabs.iter().enumerate() {
            for (i, &span) in s.spans.iter().enumerate() {
                let root = find(&mut parent, offsets[k] + i);
                let slabs = groups.entry(root).or_default();
                match slabs.last_mut() {
                    Some(last) if last.y0 == s.y0 => last.spans.push(span),
                    _ => slabs.push(Slab { y0: s.y0, y1: s.y1, spans: vec![span] }),
                }
            }
        }
        groups.into_values().map(Region::from_raw_slabs).collect()
    }

    /// Closed boundary loops: outer boundaries counter-clockwise, holes
    /// clockwise. Collinear vertices are removed.
    pub fn boundary_loops(&self) -> Vec<Vec<Point>> {
        let mut edges: Vec<(Point, Point)> = Vec::new();
        let empty: Vec<Span> = Vec::new();
        let n = self.slabs.len();
        for (k, s) in self.slabs.iter().enumerate() {
            for &(x0, x1) in &s.spans {
                edges.push((Point::new(x0, s.y1), Point::new(x0, s.y0)));
                edges.push((Point::new(x1, s.y0), Point::new(x1, s.y1)));
            }
            let below = if k > 0 && self.slabs[k - 1].y1 == s.y0 { &self.slabs[k - 1].spans } else { &empty };
            horizontal_edges(below, &s.spans, s.y0, &mut edges);
            if !(k + 1 < n && self.slabs[k + 1].y0 == s.y1) {
                horizontal_edges(&s.spans, &empty, s.y1, &mut edges);
            }
        }
        let mut outgoing: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            outgoing.entry(e.0).or_default().push(i);
        }
        let mut used = vec![false; edges.len()];
        let mut loops = Vec::new();
        for start in 0..edges.len() {
            if used[start] {
                continue;
            }
            let mut pts = Vec::new();
            let mut cur = start;
            loop {
                used[cur] = true;
                pts.push(edges[cur].0);
                let (from, to) = edges[cur];
                let d = dir(from, to);
                let cands = &outgoing[&to];
                let pick = [(-d.1, d.0), d, (d.1, -d.0)].iter().find_map(|want| {
                    cands.iter().copied().find(|&c| (c == start || !used[c]) && dir(edges[c].0, edges[c].1) == *want)
                });
                match pick {
                    Some(c) if c == start => break,
                    Some(c) => cur = c,
                    None => unreachable!("open boundary at {to}"),
                }
            }
            loops.push(simplify_loop(pts));
        }
        loops
    }

    /// Simple polygons covering the region exactly, pairwise disjoint.
    /// Components with holes are cut horizontally until hole-free.
    pub fn to_polygons(&self) -> Vec<Polygon> {
        let mut out = Vec::new();
        for c in self.components() {
            c.emit_polygons(&mut out);
        }
        out.sort();
        out
    }

    fn emit_polygons(&self, out: &mut Vec<Polygon>) {
        let loops = self.boundary_loops();
        let hole_y = loops.iter().filter(|l| signed_area2(l) < 0).flat_map(|l| l.iter().map(|p| p.y)).min();
        match hole_y {
            None => {
                debug_assert_eq!(loops.len(), 1);
                out.extend(loops.into_iter().map(Polygon::from_ccw_loop));
            }
            Some(y) => {
                let (below, above) = self.split_at_y(y);
                for part in [below, above] {
                    for c in part.components() {
                        c.emit_polygons(out);
                    }
                }
            }
        }
    }
}

fn horizontal_edges(below: &[Span], above: &[Span], y: i64, edges: &mut Vec<(Point, Point)>) {
    for (x0, x1) in combine_spans(above, below, Op::Subtract) {
        edges.push((Point::new(x0, y), Point::new(x1, y)));
    }
    for (x0, x1) in combine_spans(below, above, Op::Subtract) {
        edges.push((Point::new(x1, y), Point::new(x0, y)));
    }
}

fn dir(a: Point, b: Point) -> (i64, i64) {
    ((b.x - a.x).signum(), (b.y - a.y).signum())
}

fn simplify_loop(pts: Vec<Point>) -> Vec<Point> {
    let n = pts.len();
    (0..n)
        .filter(|&i| {
            let (p, c, q) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            dir(p, c) != dir(c, q)
        })
        .map(|i| pts[i])
        .collect()
}

/// Twice the signed area (positive for counter-clockwise).
pub(crate) fn signed_area2(pts: &[Point]) -> i128 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x as i128 * b.y as i128 - b.x as i128 * a.y as i128
        })
        .sum()
}
