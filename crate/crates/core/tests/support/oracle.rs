//! Independent brute-force evaluations used as test oracles.
//!
//! DRC here works on a pixel raster (one pixel = `PX` nm) with flood-fill
//! components and all-pairs distances, sharing nothing with the slab code.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use finverify::techdb::{Color, RuleKind, TechDb};
use finverify::Rect;
use rand::Rng;

pub const PX: i64 = 2;
/// Raster side, pixels.
pub const SIDE: usize = 170;

#[derive(Clone)]
pub struct Grid {
    cells: Vec<bool>,
}

impl Grid {
    fn new() -> Self {
        Grid { cells: vec![false; SIDE * SIDE] }
    }

    fn get(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < SIDE && (y as usize) < SIDE && self.cells[y as usize * SIDE + x as usize]
    }

    fn set(&mut self, x: usize, y: usize) {
        self.cells[y * SIDE + x] = true;
    }

    fn paint(&mut self, r: &Rect) {
        for y in r.lo.y / PX..r.hi.y / PX {
            for x in r.lo.x / PX..r.hi.x / PX {
                self.set(x as usize, y as usize);
            }
        }
    }

    fn or(&self, o: &Grid) -> Grid {
        Grid { cells: self.cells.iter().zip(&o.cells).map(|(a, b)| *a || *b).collect() }
    }

    /// Edge-connected components as pixel lists.
    fn components(&self) -> Vec<Shape> {
        let mut seen = vec![false; SIDE * SIDE];
        let mut out = Vec::new();
        for start in 0..SIDE * SIDE {
            if !self.cells[start] || seen[start] {
                continue;
            }
            let mut px = Vec::new();
            let mut q = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = q.pop_front() {
                let (x, y) = ((i % SIDE) as i64, (i / SIDE) as i64);
                px.push((x, y));
                for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                    if self.get(nx, ny) {
                        let j = ny as usize * SIDE + nx as usize;
                        if !seen[j] {
                            seen[j] = true;
                            q.push_back(j);
                        }
                    }
                }
            }
            px.sort_by_key(|&(x, y)| (y, x));
            out.push(Shape { px });
        }
        out
    }

    /// No holes and no pixels meeting only at a corner.
    pub fn is_simple(&self) -> bool {
        for y in -1..SIDE as i64 {
            for x in -1..SIDE as i64 {
                let q = [self.get(x, y), self.get(x + 1, y), self.get(x, y + 1), self.get(x + 1, y + 1)];
                if q == [true, false, false, true] || q == [false, true, true, false] {
                    return false;
                }
            }
        }
        // empty pixels not reachable from outside are holes
        let n = SIDE + 2;
        let mut seen = vec![false; n * n];
        let mut q = VecDeque::from([(0i64, 0i64)]);
        seen[0] = true;
        let mut reached = 0;
        while let Some((x, y)) = q.pop_front() {
            reached += 1;
            for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 {
                    continue;
                }
                let j = ny as usize * n + nx as usize;
                if !seen[j] && !self.get(nx - 1, ny - 1) {
                    seen[j] = true;
                    q.push_back((nx, ny));
                }
            }
        }
        let filled = self.cells.iter().filter(|c| **c).count();
        reached + filled == n * n
    }
}

pub struct Shape {
    px: Vec<(i64, i64)>,
}

impl Shape {
    fn set(&self) -> BTreeSet<(i64, i64)> {
        self.px.iter().copied().collect()
    }

    fn bbox(&self) -> Rect {
        let x0 = self.px.iter().map(|p| p.0).min().unwrap();
        let x1 = self.px.iter().map(|p| p.0).max().unwrap() + 1;
        let y0 = self.px.iter().map(|p| p.1).min().unwrap();
        let y1 = self.px.iter().map(|p| p.1).max().unwrap() + 1;
        Rect::new(x0 * PX, y0 * PX, x1 * PX, y1 * PX)
    }

    fn area(&self) -> i64 {
        self.px.len() as i64 * PX * PX
    }

    fn is_rect(&self) -> bool {
        let b = self.bbox();
        b.area() as i64 == self.area()
    }

    /// Shortest run of filled pixels along rows, nm.
    fn min_row_run(set: &BTreeSet<(i64, i64)>) -> Option<i64> {
        set.iter()
            .filter(|&&(x, y)| !set.contains(&(x - 1, y)))
            .map(|&(x, y)| {
                let mut e = x;
                while set.contains(&(e + 1, y)) {
                    e += 1;
                }
                (e - x + 1) * PX
            })
            .min()
    }

    fn min_width(&self) -> i64 {
        let s = self.set();
        let t: BTreeSet<(i64, i64)> = s.iter().map(|&(x, y)| (y, x)).collect();
        Self::min_row_run(&s).unwrap().min(Self::min_row_run(&t).unwrap())
    }

    fn vertices(&self) -> i64 {
        let s = self.set();
        let b = self.bbox();
        let mut n = 0;
        for y in b.lo.y / PX..=b.hi.y / PX {
            for x in b.lo.x / PX..=b.hi.x / PX {
                let k = [(x - 1, y - 1), (x, y - 1), (x - 1, y), (x, y)].iter().filter(|p| s.contains(p)).count();
                if k == 1 || k == 3 {
                    n += 1;
                }
            }
        }
        n
    }

    fn boundary(&self) -> Vec<(i64, i64)> {
        let s = self.set();
        self.px
            .iter()
            .copied()
            .filter(|&(x, y)| [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)].iter().any(|p| !s.contains(p)))
            .collect()
    }
}

/// Squared nm distance between the closed pixel unions.
fn distance2(a: &Shape, b: &Shape) -> i64 {
    let sa = a.set();
    if b.px.iter().any(|p| sa.contains(p)) {
        return 0;
    }
    let (ba, bb) = (a.boundary(), b.boundary());
    let mut best = i64::MAX;
    for &(x0, y0) in &ba {
        for &(x1, y1) in &bb {
            let dx = ((x0 - x1).abs() - 1).max(0) * PX;
            let dy = ((y0 - y1).abs() - 1).max(0) * PX;
            best = best.min(dx * dx + dy * dy);
        }
    }
    best
}

fn isqrt(v: i64) -> i64 {
    let mut r = 0;
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Random rectangles per layer, `PX`-aligned inside the raster.
pub type Drawn = Vec<(String, Rect)>;

pub fn rasterize(drawn: &Drawn) -> BTreeMap<String, Grid> {
    let mut g: BTreeMap<String, Grid> = BTreeMap::new();
    for (l, r) in drawn {
        g.entry(l.clone()).or_insert_with(Grid::new).paint(r);
    }
    g
}

/// Up to `max` rectangles over layers chosen to exercise every rule kind.
pub fn random_drawn(rng: &mut impl Rng, max: usize) -> Drawn {
    const LAYERS: [&str; 11] = ["M1", "M1A", "M1B", "V0", "AIL2", "GIL", "ACT", "GATEA", "GATEB", "GATEAB", "GATEC"];
    let n = rng.gen_range(1..=max);
    let lim = SIDE as i64 * PX;
    (0..n)
        .map(|_| {
            let layer = LAYERS[rng.gen_range(0..LAYERS.len())];
            let (w, h) = match layer {
                "V0" => (rng.gen_range(4..12) * PX, rng.gen_range(4..12) * PX),
                "GATEA" | "GATEB" | "GATEAB" => (rng.gen_range(6..12) * PX, rng.gen_range(20..120) * PX),
                "ACT" => (rng.gen_range(20..100) * PX, rng.gen_range(2..70) * PX),
                _ => (rng.gen_range(6..60) * PX, rng.gen_range(6..30) * PX),
            };
            let (w, h) = if rng.gen_bool(0.5) || layer.starts_with("GATE") || layer == "ACT" { (w, h) } else { (h, w) };
            let x = rng.gen_range(0..=(lim - w) / PX) * PX;
            let y = rng.gen_range(0..=(lim - h) / PX) * PX;
            (layer.to_string(), Rect::new(x, y, x + w, y + h))
        })
        .collect()
}

/// (rule id, layers, location, measured), sorted.
pub type Finding = (String, Vec<String>, Rect, i64);

pub fn drc(tech: &TechDb, drawn: &Drawn) -> Vec<Finding> {
    let grids = rasterize(drawn);
    let empty = Grid::new();
    let union = |names: &[String]| names.iter().fold(Grid::new(), |acc, n| acc.or(grids.get(n).unwrap_or(&empty)));
    let comps: BTreeMap<&str, Vec<Shape>> = grids.iter().map(|(l, g)| (l.as_str(), g.components())).collect();
    let mut out: Vec<Finding> = Vec::new();
    for rule in tech.rules() {
        let shapes: Vec<(&str, &Shape)> = rule
            .layers
            .iter()
            .flat_map(|l| comps.get(l.as_str()).into_iter().flatten().map(move |s| (l.as_str(), s)))
            .collect();
        let mut push = |layers: &[&str], loc: Rect, m: i64| {
            let mut ls: Vec<String> = layers.iter().map(|s| s.to_string()).collect();
            ls.sort();
            ls.dedup();
            out.push((rule.id.clone(), ls, loc, m));
        };
        match &rule.kind {
            RuleKind::MinWidth { value } => {
                for (l, s) in &shapes {
                    let w = s.min_width();
                    if w < *value {
                        push(&[l], s.bbox(), w);
                    }
                }
            }
            RuleKind::MinSpacingSameColor { value } | RuleKind::MinSpacingDiffColor { value } => {
                let same = matches!(rule.kind, RuleKind::MinSpacingSameColor { .. });
                for i in 0..shapes.len() {
                    for j in i + 1..shapes.len() {
                        let ((la, a), (lb, b)) = (shapes[i], shapes[j]);
                        let ok = if same {
                            la == lb
                        } else {
                            let (ca, cb) = (tech.color(la), tech.color(lb));
                            tech.same_family(la, lb) && ca != Color::None && cb != Color::None && ca != cb
                        };
                        if !ok {
                            continue;
                        }
                        // the bbox gap bounds the true distance from below
                        let (x, y) = (a.bbox(), b.bbox());
                        let gx = (x.lo.x - y.hi.x).max(y.lo.x - x.hi.x).max(0);
                        let gy = (x.lo.y - y.hi.y).max(y.lo.y - x.hi.y).max(0);
                        if gx * gx + gy * gy >= value * value {
                            continue;
                        }
                        let d2 = distance2(a, b);
                        if d2 > 0 && d2 < value * value {
                            let loc = Rect::new(x.lo.x.min(y.lo.x), x.lo.y.min(y.lo.y), x.hi.x.max(y.hi.x), x.hi.y.max(y.hi.y));
                            push(&[la, lb], loc, isqrt(d2));
                        }
                    }
                }
            }
            RuleKind::MinArea { value } => {
                for (l, s) in &shapes {
                    if s.area() < *value {
                        push(&[l], s.bbox(), s.area());
                    }
                }
            }
            RuleKind::Enclosure { outer, value } => {
                let o = union(outer);
                for (l, s) in &shapes {
                    // grown by e nm; pixel edges are even so odd e behaves like e + 1
                    let fits = |e: i64| {
                        let k = (e + PX - 1) / PX;
                        s.px.iter().all(|&(x, y)| (-k..=k).all(|dy| (-k..=k).all(|dx| o.get(x + dx, y + dy))))
                    };
                    let m = if !fits(0) { -1 } else { (0..=*value).rev().find(|&e| fits(e)).unwrap() };
                    if m < *value {
                        push(&[l], s.bbox(), m);
                    }
                }
            }
            RuleKind::Overlap { other, value } => {
                let o = union(other);
                for (l, s) in &shapes {
                    let a = s.px.iter().filter(|&&(x, y)| o.get(x, y)).count() as i64 * PX * PX;
                    if a < *value {
                        push(&[l], s.bbox(), a);
                    }
                }
            }
            RuleKind::WidthQuantized { base, step } => {
                for (l, s) in &shapes {
                    if !s.is_rect() {
                        continue;
                    }
                    let w = s.bbox().height();
                    if !(w >= *base && (w - base) % step == 0) {
                        push(&[l], s.bbox(), w);
                    }
                }
            }
            RuleKind::DiscreteLength { values, reference } => {
                let act = reference.as_ref().map(|r| union(&tech.color_family(r).into_iter().collect::<Vec<_>>()));
                let act = act.unwrap_or_else(Grid::new);
                for (l, s) in &shapes {
                    for len in gate_lengths(s, &act) {
                        if !values.contains(&len) {
                            push(&[l], s.bbox(), len);
                        }
                    }
                }
            }
            RuleKind::RectOnly => {
                for (l, s) in &shapes {
                    if !s.is_rect() {
                        push(&[l], s.bbox(), s.vertices());
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Horizontal fins: the gate's chord across each active row it crosses.
fn gate_lengths(gate: &Shape, act: &Grid) -> Vec<i64> {
    let g = gate.set();
    let mut chan = Grid::new();
    for &(x, y) in &g {
        if act.get(x, y) {
            chan.set(x as usize, y as usize);
        }
    }
    let gb = gate.bbox();
    let mut out = Vec::new();
    for c in chan.components() {
        let cb = c.bbox();
        let mut band = Grid::new();
        for &(x, y) in &g {
            if y * PX >= cb.lo.y && y * PX < cb.hi.y && x * PX >= gb.lo.x && x * PX < gb.hi.x {
                band.set(x as usize, y as usize);
            }
        }
        let cset = c.set();
        for piece in band.components() {
            let ps = piece.set();
            if ps.iter().any(|p| cset.contains(p)) {
                out.extend(Shape::min_row_run(&ps));
            }
        }
    }
    if out.is_empty() {
        out.push(gate.min_width());
    }
    out.sort_unstable();
    out.dedup();
    out
}
