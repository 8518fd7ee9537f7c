//! Resistor network per net.
//!
//! Every conductor polygon is cut into its slab rectangles ("pieces").
//! Each piece gets a center node and a star of resistors to its taps:
//! contacts with neighboring pieces, via landings, pins and device
//! terminals. A tap at distance `d` from the center costs `Rs * d / W`,
//! measured across the edge the tap sits on (the long axis for interior
//! taps), so a straight wire tapped at both ends measures exactly
//! `Rs * L / W` however it is cut.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{sort_elements, ElementKind, Origin, ParasiticElement};
use crate::geometry::{Point, Rect, SpatialIndex};
use crate::layout::FlatLayout;
use crate::netex::{Connectivity, Extraction};
use crate::par::{self, Workers};
use crate::techdb::{ConnMode, FinDirection, LayerClass, TechDb};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub net: usize,
    /// Base layer name.
    pub layer: String,
    pub rect: Rect,
    /// Name of the center node.
    pub node: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Role {
    Drain,
    Gate,
    Source,
}

/// Where a device terminal lands in the network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Terminal {
    pub device: usize,
    pub role: Role,
    pub node: String,
}

#[derive(Debug, Clone, Default)]
pub struct RcGraph {
    pub pieces: Vec<Piece>,
    pub resistors: Vec<ParasiticElement>,
    pub terminals: Vec<Terminal>,
    pub pins: Vec<PinNode>,
}

/// Node a top-level pin landed on. Pins of one net stay separate nodes so
/// the wire between them keeps its resistance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinNode {
    pub net: String,
    pub at: Point,
    pub node: String,
}

impl RcGraph {
    pub fn terminal(&self, device: usize, role: Role) -> Option<&str> {
        self.terminals.iter().find(|t| t.device == device && t.role == role).map(|t| t.node.as_str())
    }

    pub fn pin_node(&self, net: &str, at: Point) -> Option<&str> {
        self.pins.iter().find(|p| p.net == net && p.at == at).map(|p| p.node.as_str())
    }
}

type Fp = (f64, f64);

struct Local {
    parent: Vec<usize>,
    resistors: Vec<(usize, usize, f64, Origin)>,
}

impl Local {
    fn node(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn merge(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

struct WorkPiece {
    rect: Rect,
    base: String,
    rs: Option<f64>,
    center: usize,
    taps: Vec<(Fp, usize)>,
}

fn clamp(p: Fp, r: &Rect) -> Fp {
    (p.0.clamp(r.lo.x as f64, r.hi.x as f64), p.1.clamp(r.lo.y as f64, r.hi.y as f64))
}

fn center(r: &Rect) -> Fp {
    ((r.lo.x + r.hi.x) as f64 / 2.0, (r.lo.y + r.hi.y) as f64 / 2.0)
}

/// Meeting point of two touching or overlapping rectangles.
fn contact_point(a: &Rect, b: &Rect) -> Fp {
    let x0 = a.lo.x.max(b.lo.x) as f64;
    let x1 = a.hi.x.min(b.hi.x) as f64;
    let y0 = a.lo.y.max(b.lo.y) as f64;
    let y1 = a.hi.y.min(b.hi.y) as f64;
    ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
}

struct Ctx<'a> {
    tech: &'a TechDb,
    conn: &'a Connectivity,
    x: &'a Extraction,
    layout: &'a FlatLayout,
    overlap: BTreeSet<(String, String)>,
    /// via base -> conductor bases it joins
    vias: BTreeMap<String, BTreeSet<String>>,
}

pub fn extract_resistance(layout: &FlatLayout, tech: &TechDb, x: &Extraction, workers: Workers) -> RcGraph {
    let mut overlap = BTreeSet::new();
    let mut vias: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in tech.connectivity() {
        let (a, b) = (tech.base_name(&c.a).to_string(), tech.base_name(&c.b).to_string());
        match &c.mode {
            ConnMode::Overlap => {
                overlap.insert((a.clone(), b.clone()));
                overlap.insert((b, a));
            }
            ConnMode::ThroughVia { via } => {
                vias.entry(tech.base_name(via).to_string()).or_default().extend([a, b]);
            }
        }
    }
    let ctx = Ctx { tech, conn: &x.connectivity, x, layout, overlap, vias };
    let nets: Vec<usize> = (0..x.connectivity.nets.len()).collect();
    let parts = par::map(&nets, workers, |&n| ctx.net(n));
    let mut g = RcGraph::default();
    for (pieces, res, terms, pins) in parts {
        g.pieces.extend(pieces);
        g.resistors.extend(res);
        g.terminals.extend(terms);
        g.pins.extend(pins);
    }
    sort_elements(&mut g.resistors);
    g.terminals.sort_by_key(|t| (t.device, t.role));
    g
}

impl Ctx<'_> {
    fn net(&self, n: usize) -> (Vec<Piece>, Vec<ParasiticElement>, Vec<Terminal>, Vec<PinNode>) {
        let tech = self.tech;
        let net = &self.conn.nets[n];
        let mut g = Local { parent: Vec::new(), resistors: Vec::new() };
        let mut pieces: Vec<WorkPiece> = Vec::new();
        let mut via_nodes = Vec::new();
        for &m in &net.members {
            let node = &self.conn.nodes[m];
            if tech.class(&node.layer) == Some(LayerClass::Via) {
                via_nodes.push(m);
                continue;
            }
            let rs = tech.sheet_resistance(&node.layer).ok();
            for r in &node.rects {
                let c = g.node();
                pieces.push(WorkPiece { rect: *r, base: node.base.clone(), rs, center: c, taps: Vec::new() });
            }
        }
        let anchor = match pieces.first() {
            Some(p) => p.center,
            None => g.node(),
        };

        // contacts between pieces
        let index = SpatialIndex::new(pieces.iter().enumerate().map(|(i, p)| (p.rect, i)));
        for i in 0..pieces.len() {
            let cand: Vec<usize> = index.query(&pieces[i].rect, 0).filter(|&j| j > i).collect();
            for j in cand {
                let (a, b) = (&pieces[i], &pieces[j]);
                let joined = if a.base == b.base {
                    a.rect.touches(&b.rect)
                } else {
                    self.overlap.contains(&(a.base.clone(), b.base.clone())) && a.rect.overlaps(&b.rect)
                };
                if joined {
                    let p = contact_point(&a.rect, &b.rect);
                    let t = g.node();
                    pieces[i].taps.push((p, t));
                    pieces[j].taps.push((p, t));
                }
            }
        }

        // via landings: the most-overlapped piece on the lowest and highest joined layer
        for &m in &via_nodes {
            let node = &self.conn.nodes[m];
            let vb = node.polygon.bbox();
            let Some(joins) = self.vias.get(&node.base) else { continue };
            let mut hits: Vec<(usize, i128, usize)> = index
                .query(&vb, 0)
                .filter(|&j| joins.contains(&pieces[j].base))
                .filter_map(|j| pieces[j].rect.intersection(&vb).map(|o| (tech.stack_rank(&pieces[j].base), o.area(), j)))
                .collect();
            if hits.is_empty() {
                continue;
            }
            hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
            let lo = hits[0];
            let hi_rank = hits.iter().map(|h| h.0).max().unwrap();
            let hi = *hits.iter().find(|h| h.0 == hi_rank).unwrap();
            if lo.0 == hi.0 {
                continue;
            }
            let c = center(&vb);
            let (ta, tb) = (g.node(), g.node());
            let (pa, pb) = (clamp(c, &pieces[lo.2].rect), clamp(c, &pieces[hi.2].rect));
            pieces[lo.2].taps.push((pa, ta));
            pieces[hi.2].taps.push((pb, tb));
            match tech.electrical(&node.layer).and_then(|e| e.via_resistance) {
                Some(r) if r > 0.0 => g.resistors.push((ta, tb, r, Origin::Via)),
                _ => g.merge(ta, tb),
            }
        }

        // pin taps; the first top-level pin names the net's main node
        let mut named: Option<usize> = None;
        let mut pin_taps: Vec<(Point, usize)> = Vec::new();
        for pin in self.layout.pins.iter().filter(|p| p.hard && p.net == net.name) {
            let base = tech.base_name(&pin.layer);
            let at = (pin.at.x as f64, pin.at.y as f64);
            if let Some(i) = pieces.iter().position(|p| p.base == base && p.rect.contains_point(pin.at)) {
                let t = g.node();
                pieces[i].taps.push((at, t));
                named.get_or_insert(t);
                pin_taps.push((pin.at, t));
            }
        }

        // device terminals
        let mut terms: Vec<(usize, Role, usize)> = Vec::new();
        let horizontal = tech.fin().fin_direction == FinDirection::Horizontal;
        for (k, d) in self.x.devices.iter().enumerate() {
            let ch = d.location;
            let mid = center(&ch);
            let mut land = |role: Role, pick: &dyn Fn(&WorkPiece) -> bool, at: Fp| {
                let t = g.node();
                match pieces.iter().position(pick) {
                    Some(i) => {
                        let p = clamp(at, &pieces[i].rect);
                        pieces[i].taps.push((p, t));
                    }
                    None => g.merge(anchor, t),
                }
                terms.push((k, role, t));
            };
            if d.gate == n {
                let pick = |p: &WorkPiece| tech.class(&p.base) == Some(LayerClass::Gate) && p.rect.overlaps(&ch);
                land(Role::Gate, &pick, mid);
            }
            for (role, side_lo) in [(Role::Source, true), (Role::Drain, false)] {
                let on = if role == Role::Source { d.source } else { d.drain };
                if on != n {
                    continue;
                }
                let (edge, at) = match (horizontal, side_lo) {
                    (true, true) => (ch.lo.x, (ch.lo.x as f64, mid.1)),
                    (true, false) => (ch.hi.x, (ch.hi.x as f64, mid.1)),
                    (false, true) => (ch.lo.y, (mid.0, ch.lo.y as f64)),
                    (false, false) => (ch.hi.y, (mid.0, ch.hi.y as f64)),
                };
                let pick = |p: &WorkPiece| {
                    let r = &p.rect;
                    tech.class(&p.base) == Some(LayerClass::Active)
                        && if horizontal {
                            (if side_lo { r.hi.x } else { r.lo.x }) == edge && r.lo.y < ch.hi.y && ch.lo.y < r.hi.y
                        } else {
                            (if side_lo { r.hi.y } else { r.lo.y }) == edge && r.lo.x < ch.hi.x && ch.lo.x < r.hi.x
                        }
                };
                land(role, &pick, at);
            }
        }

        // star resistors
        for p in &pieces {
            let (cx, cy) = center(&p.rect);
            let r = &p.rect;
            let long_x = r.width() >= r.height();
            for &((tx, ty), t) in &p.taps {
                // current leaves through the edge the tap sits on; interior taps use the long axis
                let on_x = tx == r.lo.x as f64 || tx == r.hi.x as f64;
                let on_y = ty == r.lo.y as f64 || ty == r.hi.y as f64;
                let along_x = if on_x != on_y { on_x } else { long_x };
                let (d, w) = if along_x { ((tx - cx).abs(), r.height()) } else { ((ty - cy).abs(), r.width()) };
                let w = w as f64;
                match p.rs {
                    Some(rs) if d > 0.0 => g.resistors.push((p.center, t, rs * d / w, Origin::Sheet)),
                    _ => g.merge(p.center, t),
                }
            }
        }

        // names: main node gets the bare net name, the rest net:seg<k>
        let roots: Vec<usize> = (0..g.parent.len()).map(|i| g.find(i)).collect();
        let main = named.map(|t| roots[t]);
        let mut names: BTreeMap<usize, String> = BTreeMap::new();
        let mut seg = 0;
        for &r in &roots {
            if names.contains_key(&r) {
                continue;
            }
            let name = if Some(r) == main {
                net.name.clone()
            } else {
                seg += 1;
                format!("{}:seg{}", net.name, seg - 1)
            };
            names.insert(r, name);
        }
        let name = |i: usize| names[&roots[i]].clone();
        let out_pieces = pieces
            .iter()
            .map(|p| Piece { net: n, layer: p.base.clone(), rect: p.rect, node: name(p.center) })
            .collect();
        let mut elements = Vec::new();
        for &(a, b, v, origin) in &g.resistors {
            let (na, nb) = (name(a), name(b));
            if na == nb {
                continue;
            }
            let (a, b) = if na <= nb { (na, nb) } else { (nb, na) };
            elements.push(ParasiticElement { kind: ElementKind::R, a, b, value: v, origin });
        }
        let terms = terms.into_iter().map(|(device, role, t)| Terminal { device, role, node: name(t) }).collect();
        let pins = pin_taps.into_iter().map(|(at, t)| PinNode { net: net.name.clone(), at, node: name(t) }).collect();
        (out_pieces, elements, terms, pins)
    }
}
