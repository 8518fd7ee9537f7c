//! Connectivity extraction, FinFET recognition and netlist comparison.

mod lvs;
mod spice;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::geometry::{Point, Polygon, Rect, Region, ShapeSet, SpatialIndex};
use crate::layout::FlatLayout;
use crate::par::{self, Workers};
use crate::techdb::{ConnMode, FinDirection, LayerClass, TechDb};

pub use lvs::{lvs_compare, LvsResult, Verdict};
pub use spice::{parse_netlist, parse_value, read_netlist, CCard, DeviceCard, Netlist, NetlistError, RCard};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NetexError {
    #[error("short between pin labels {}", .0.join(", "))]
    Short(Vec<String>),
    #[error("pin {net:?} at ({}, {}) does not touch any {layer} conductor", .at.x, .at.y)]
    PinOffShape { net: String, layer: String, at: Point },
    #[error(
        "channel at [{}, {}, {}, {}] is {width} nm across the fins; W = W_fin + (n_fin - 1) * Pitch_fin has no integer n_fin for W_fin = {w_fin}, Pitch_fin = {pitch}",
        .at.lo.x, .at.lo.y, .at.hi.x, .at.hi.y
    )]
    FinCount { at: Rect, width: i64, w_fin: i64, pitch: i64 },
    #[error("gate length {length} nm at [{}, {}, {}, {}] is not one of {allowed:?}", .at.lo.x, .at.lo.y, .at.hi.x, .at.hi.y)]
    GateLength { at: Rect, length: i64, allowed: Vec<i64> },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractOptions {
    /// Name a net carrying several distinct top-level labels after the
    /// smallest one instead of failing; the conflict is kept in `shorts`.
    pub allow_shorts: bool,
    pub workers: Workers,
}

/// One conductor shape in the extraction graph.
#[derive(Debug, Clone)]
pub struct Node {
    /// Drawn layer (`ACT` for diffusion, the colored layer for gates and metals).
    pub layer: String,
    pub base: String,
    pub polygon: Polygon,
    pub rects: Vec<Rect>,
    pub net: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Net {
    pub id: usize,
    pub name: String,
    /// Indices into `Connectivity::nodes`.
    pub members: Vec<usize>,
    /// Carries a top-level pin label.
    pub port: bool,
}

#[derive(Debug, Clone)]
pub struct Connectivity {
    pub nodes: Vec<Node>,
    pub nets: Vec<Net>,
    /// Label groups that ended up on one net (only with `allow_shorts`).
    pub shorts: Vec<Vec<String>>,
}

impl Connectivity {
    pub fn net_by_name(&self, name: &str) -> Option<&Net> {
        self.nets.iter().find(|n| n.name == name)
    }

    /// Net of the conductor on `layer`'s family containing `p`, if any.
    pub fn net_at(&self, tech: &TechDb, layer: &str, p: Point) -> Option<usize> {
        let base = tech.base_name(layer);
        self.nodes.iter().find(|n| n.base == base && n.polygon.contains_point(p)).map(|n| n.net)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DeviceKind {
    #[serde(rename = "nfin")]
    Nfin,
    #[serde(rename = "pfin")]
    Pfin,
}

impl DeviceKind {
    pub fn model(self) -> &'static str {
        match self {
            DeviceKind::Nfin => "nfin",
            DeviceKind::Pfin => "pfin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinDevice {
    pub kind: DeviceKind,
    pub gate: usize,
    pub source: usize,
    pub drain: usize,
    pub bulk: String,
    pub nfin: u32,
    /// Gate length, nm.
    pub l: i64,
    pub w_fin: i64,
    pub l_fin_d: i64,
    pub l_fin_s: i64,
    pub location: Rect,
}

impl FinDevice {
    pub fn geometry(&self) -> DeviceGeometry {
        device_geometry(self.nfin, self.w_fin, self.l_fin_d, self.l_fin_s)
    }
}

/// Junction areas (nm^2) and perimeters (nm).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct DeviceGeometry {
    pub ad: i64,
    pub as_: i64,
    pub pd: i64,
    pub ps: i64,
}

/// Fin-resolved junction geometry: each fin contributes a `w_fin` wide strip.
pub fn device_geometry(nfin: u32, w_fin: i64, l_fin_d: i64, l_fin_s: i64) -> DeviceGeometry {
    let n = nfin as i64;
    DeviceGeometry {
        ad: n * w_fin * l_fin_d,
        as_: n * w_fin * l_fin_s,
        pd: 2 * l_fin_d * n + w_fin * n,
        ps: 2 * l_fin_s * n + w_fin * n,
    }
}

/// Planar reference: one drawn width `w` for both junctions.
pub fn planar_geometry(w: i64, l_ds: i64) -> DeviceGeometry {
    let a = w * l_ds;
    let p = 2 * l_ds + w;
    DeviceGeometry { ad: a, as_: a, pd: p, ps: p }
}

/// Gate family union minus the cut layer.
pub fn effective_gate(layout: &FlatLayout, tech: &TechDb) -> ShapeSet {
    let gates = gate_layers(tech);
    let cut = layout.region(tech.gate_cut_layer());
    let base = gates.first().map(|g| tech.base_name(g).to_string()).unwrap_or_default();
    ShapeSet::new(base, layout.region_of(gates.iter().map(String::as_str)).subtract(&cut).to_polygons())
}

fn gate_layers(tech: &TechDb) -> Vec<String> {
    tech.layers_of_class(LayerClass::Gate).map(|l| l.name.clone()).collect()
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so the result does not depend on union order
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

fn conductor_nodes(layout: &FlatLayout, tech: &TechDb) -> Vec<Node> {
    let mut nodes = Vec::new();
    let mut push = |layer: &str, base: &str, polys: Vec<Polygon>| {
        for p in polys {
            let rects = p.rects();
            nodes.push(Node { layer: layer.to_string(), base: base.to_string(), polygon: p, rects, net: 0 });
        }
    };
    let cut = layout.region(tech.gate_cut_layer());
    let gate_all = effective_gate(layout, tech).region();
    let mut layers: Vec<&String> = layout.layers.keys().collect();
    layers.sort_by_key(|l| (tech.stack_rank(l), l.to_string()));
    for name in layers {
        let Some(def) = tech.layer(name) else { continue };
        let base = tech.base_name(name);
        match def.class {
            LayerClass::Well | LayerClass::GateCut => {}
            LayerClass::Active => push(name, base, layout.region(name).subtract(&gate_all).to_polygons()),
            LayerClass::Gate => push(name, base, layout.region(name).subtract(&cut).to_polygons()),
            _ => push(name, base, layout.shapes(name).to_vec()),
        }
    }
    nodes
}

fn any_overlap(a: &[Rect], b: &[Rect]) -> bool {
    a.iter().any(|x| b.iter().any(|y| x.overlaps(y)))
}

fn any_touch(a: &[Rect], b: &[Rect]) -> bool {
    a.iter().any(|x| b.iter().any(|y| x.touches(y)))
}

pub fn extract_connectivity(layout: &FlatLayout, tech: &TechDb) -> Result<Connectivity, NetexError> {
    extract_connectivity_with(layout, tech, ExtractOptions::default())
}

pub fn extract_connectivity_with(
    layout: &FlatLayout,
    tech: &TechDb,
    opts: ExtractOptions,
) -> Result<Connectivity, NetexError> {
    let mut nodes = conductor_nodes(layout, tech);
    // base-level relations
    let mut overlap_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for c in tech.connectivity() {
        let (a, b) = (tech.base_name(&c.a).to_string(), tech.base_name(&c.b).to_string());
        match &c.mode {
            ConnMode::Overlap => {
                overlap_pairs.insert((a.clone(), b.clone()));
                overlap_pairs.insert((b, a));
            }
            ConnMode::ThroughVia { via } => {
                let v = tech.base_name(via).to_string();
                for x in [a, b] {
                    overlap_pairs.insert((v.clone(), x.clone()));
                    overlap_pairs.insert((x, v.clone()));
                }
            }
        }
    }
    let index = SpatialIndex::new(nodes.iter().enumerate().map(|(i, n)| (n.polygon.bbox(), i)));
    let ids: Vec<usize> = (0..nodes.len()).collect();
    let links: Vec<Vec<usize>> = par::map(&ids, opts.workers, |&i| {
        let a = &nodes[i];
        index
            .query(&a.polygon.bbox(), 0)
            .filter(|&j| j > i)
            .filter(|&j| {
                let b = &nodes[j];
                if a.base == b.base {
                    any_touch(&a.rects, &b.rects)
                } else {
                    overlap_pairs.contains(&(a.base.clone(), b.base.clone())) && any_overlap(&a.rects, &b.rects)
                }
            })
            .collect()
    });
    let mut dsu = Dsu((0..nodes.len()).collect());
    for (i, js) in links.iter().enumerate() {
        for &j in js {
            dsu.union(i, j);
        }
    }

    // pins: same top-level label joins nets; instance labels only name them
    let mut hard: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut soft: Vec<(&str, usize)> = Vec::new();
    for pin in &layout.pins {
        let base = tech.base_name(&pin.layer);
        let hit = nodes
            .iter()
            .position(|n| n.layer == pin.layer && n.polygon.contains_point(pin.at))
            .or_else(|| nodes.iter().position(|n| n.base == base && n.polygon.contains_point(pin.at)));
        match hit {
            Some(i) if pin.hard => hard.entry(&pin.net).or_default().push(i),
            Some(i) => soft.push((&pin.net, i)),
            None if pin.hard => {
                return Err(NetexError::PinOffShape { net: pin.net.clone(), layer: pin.layer.clone(), at: pin.at })
            }
            None => log::warn!("instance pin {} does not touch a {} conductor", pin.net, pin.layer),
        }
    }
    for members in hard.values() {
        if members.len() > 1 && (1..members.len()).any(|k| dsu.find(members[k]) != dsu.find(members[0])) {
            log::warn!("joining disconnected shapes labelled {:?}", members);
        }
        for w in members.windows(2) {
            dsu.union(w[0], w[1]);
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nodes.len() {
        groups.entry(dsu.find(i)).or_default().push(i);
    }
    let mut nets: Vec<Net> = Vec::with_capacity(groups.len());
    let mut root_net: BTreeMap<usize, usize> = BTreeMap::new();
    for (root, members) in groups {
        root_net.insert(root, nets.len());
        for &m in &members {
            nodes[m].net = nets.len();
        }
        nets.push(Net { id: nets.len(), name: String::new(), members, port: false });
    }
    let mut hard_on: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); nets.len()];
    for (label, members) in &hard {
        hard_on[nodes[members[0]].net].insert(label);
    }
    let mut soft_on: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); nets.len()];
    for (label, i) in &soft {
        soft_on[nodes[*i].net].insert(label);
    }
    let mut shorts = Vec::new();
    for labels in &hard_on {
        if labels.len() > 1 {
            let all: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
            if !opts.allow_shorts {
                return Err(NetexError::Short(all));
            }
            shorts.push(all);
        }
    }
    let mut used: BTreeSet<String> = BTreeSet::new();
    for (k, net) in nets.iter_mut().enumerate() {
        if let Some(l) = hard_on[k].first() {
            net.name = l.to_string();
            net.port = true;
            used.insert(net.name.clone());
        }
    }
    for (k, net) in nets.iter_mut().enumerate() {
        if net.name.is_empty() {
            if let Some(l) = soft_on[k].iter().find(|l| !used.contains(**l)) {
                net.name = l.to_string();
                used.insert(net.name.clone());
            }
        }
    }
    let mut counter = 0;
    for net in nets.iter_mut().filter(|n| n.name.is_empty()) {
        while used.contains(&format!("n{counter}")) {
            counter += 1;
        }
        net.name = format!("n{counter}");
        used.insert(net.name.clone());
    }
    Ok(Connectivity { nodes, nets, shorts })
}

fn flip_rect(r: Rect) -> Rect {
    Rect::new(r.lo.y, r.lo.x, r.hi.y, r.hi.x)
}

struct Channel {
    rect: Rect,
    gate_net: usize,
    left: Option<(usize, Rect)>,
    right: Option<(usize, Rect)>,
    pfin: bool,
}

/// Recognizes one device per gate/active crossing with diffusion on both
/// sides. Coordinates are handled with fins along x; vertical-fin
/// technologies are transposed in and out.
pub fn recognize_devices(
    layout: &FlatLayout,
    tech: &TechDb,
    conn: &Connectivity,
) -> Result<Vec<FinDevice>, NetexError> {
    let fin = tech.fin();
    let vertical = fin.fin_direction == FinDirection::Vertical;
    let tr = |r: Region| if vertical { r.transpose() } else { r };
    let tr_rect = |r: Rect| if vertical { flip_rect(r) } else { r };
    let act_layers: Vec<String> = tech.layers_of_class(LayerClass::Active).map(|l| l.name.clone()).collect();
    let act = tr(layout.region_of(act_layers.iter().map(String::as_str)));
    let gate = tr(effective_gate(layout, tech).region());
    let well = fin.well_layer.as_deref().map(|w| tr(layout.region(w))).unwrap_or_default();

    let gate_nodes: Vec<(usize, Region)> = conn
        .nodes
        .iter()
        .filter(|n| tech.class(&n.layer) == Some(LayerClass::Gate))
        .map(|n| (n.net, tr(n.polygon.region())))
        .collect();
    let diff_nodes: Vec<(usize, Region)> = conn
        .nodes
        .iter()
        .filter(|n| tech.class(&n.layer) == Some(LayerClass::Active))
        .map(|n| (n.net, tr(n.polygon.region())))
        .collect();

    // diffusion run adjacent to one side of a channel, within its rows
    let run = |ch: &Rect, left: bool| -> Option<(usize, Rect)> {
        let edge_x = if left { ch.lo.x } else { ch.hi.x };
        for (net, reg) in &diff_nodes {
            let band = Region::from_rect(Rect::new(i64::MIN / 4, ch.lo.y, i64::MAX / 4, ch.hi.y));
            for piece in reg.intersect(&band).components() {
                let Some(b) = piece.bbox() else { continue };
                let adjacent = if left { b.hi.x == edge_x } else { b.lo.x == edge_x };
                if adjacent && piece.contains_point(Point::new(edge_x, (ch.lo.y + ch.hi.y) / 2)) {
                    return Some((*net, b));
                }
            }
        }
        None
    };

    let mut channels = Vec::new();
    for comp in gate.intersect(&act).components() {
        let Some(rect) = comp.bbox() else { continue };
        let Some(&(gate_net, _)) = gate_nodes.iter().find(|(_, g)| !g.intersect(&comp).is_empty()) else {
            continue;
        };
        channels.push(Channel {
            rect,
            gate_net,
            left: run(&rect, true),
            right: run(&rect, false),
            pfin: comp.subtract(&well).is_empty() && !well.is_empty(),
        });
    }
    channels.sort_by_key(|c| (c.rect.lo.x, c.rect.lo.y));

    let real = |c: &Channel| c.left.is_some() && c.right.is_some();
    let shares_with_real = |run: &Rect, ch: &Rect, left: bool| {
        channels.iter().any(|o| {
            let touches = if left { o.rect.hi.x == run.lo.x } else { o.rect.lo.x == run.hi.x };
            touches && o.rect.lo.y < ch.hi.y && ch.lo.y < o.rect.hi.y && real(o)
        })
    };
    let mut out = Vec::new();
    for ch in channels.iter().filter(|c| real(c)) {
        let (sn, sr) = ch.left.unwrap();
        let (dn, dr) = ch.right.unwrap();
        let l = ch.rect.width();
        let w = ch.rect.height();
        let at = tr_rect(ch.rect);
        let nfin = fin.fin_count(w).ok_or(NetexError::FinCount { at, width: w, w_fin: fin.w_fin, pitch: fin.pitch_fin })?;
        if !fin.allowed_gate_lengths.contains(&l) {
            return Err(NetexError::GateLength { at, length: l, allowed: fin.allowed_gate_lengths.clone() });
        }
        let split = |r: &Rect, left: bool| {
            let len = r.width();
            if shares_with_real(r, &ch.rect, left) {
                len / 2
            } else {
                len
            }
        };
        let kind = if ch.pfin { DeviceKind::Pfin } else { DeviceKind::Nfin };
        let bulk = if ch.pfin { &fin.pfin_bulk_net } else { &fin.nfin_bulk_net };
        out.push(FinDevice {
            kind,
            gate: ch.gate_net,
            source: sn,
            drain: dn,
            bulk: bulk.clone(),
            nfin,
            l,
            w_fin: fin.w_fin,
            l_fin_s: split(&sr, true),
            l_fin_d: split(&dr, false),
            location: at,
        });
    }
    out.sort_by_key(|d| (d.location.lo.x, d.location.lo.y, d.location.hi.x, d.location.hi.y));
    Ok(out)
}

/// Everything extraction produces for one layout.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub connectivity: Connectivity,
    pub devices: Vec<FinDevice>,
    pub netlist: Netlist,
}

pub fn extract(layout: &FlatLayout, tech: &TechDb, name: &str, opts: ExtractOptions) -> Result<Extraction, NetexError> {
    let connectivity = extract_connectivity_with(layout, tech, opts)?;
    let devices = recognize_devices(layout, tech, &connectivity)?;
    let netlist = build_netlist(name, &connectivity, &devices);
    Ok(Extraction { connectivity, devices, netlist })
}

pub fn build_netlist(name: &str, conn: &Connectivity, devices: &[FinDevice]) -> Netlist {
    let net = |i: usize| conn.nets[i].name.clone();
    let mut nl = Netlist::new(name);
    nl.ports = conn.nets.iter().filter(|n| n.port).map(|n| n.name.clone()).collect();
    nl.ports.sort();
    nl.declared_nets = conn.nets.iter().map(|n| n.name.clone()).collect();
    nl.declared_nets.sort();
    for (k, d) in devices.iter().enumerate() {
        let g = d.geometry();
        nl.devices.push(DeviceCard {
            name: format!("X{k}"),
            kind: d.kind,
            d: net(d.drain),
            g: net(d.gate),
            s: net(d.source),
            b: d.bulk.clone(),
            nfin: d.nfin,
            l: d.l,
            geometry: Some(g),
        });
    }
    nl
}
