//! First-order parasitic extraction.
//!
//! Capacitance comes from closed-form line-over-plane expressions, resistance
//! from sheet resistance and per-via values. Lengths are nm in the layout and
//! um in every formula; capacitance is in aF, resistance in ohm.

mod cap;
mod delay;
mod network;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::Serialize;

use crate::layout::FlatLayout;
use crate::netex::{CCard, Extraction, Netlist, RCard};
use crate::par::Workers;
use crate::techdb::TechDb;

pub use cap::extract_capacitance;
pub use delay::{elmore_summary, path_delay, DelayError, DelayMode, DelayReport, StageDelay};
pub use network::{extract_resistance, Piece, PinNode, RcGraph, Role, Terminal};

/// Vacuum permittivity, aF/um.
pub const EPS0: f64 = 8.854;
/// Ground node for capacitors.
pub const GND: &str = "0";
/// Ratio range over which the closed forms are trusted.
pub const VALIDITY: (f64, f64) = (0.3, 30.0);

/// Wire cross-section and run, all in um. `s` is the edge-to-edge
/// spacing to the neighbor (infinite when isolated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireGeometry {
    pub w: f64,
    pub t: f64,
    pub h: f64,
    pub s: f64,
    pub length: f64,
}

impl WireGeometry {
    pub fn isolated(w: f64, t: f64, h: f64, length: f64) -> Self {
        WireGeometry { w, t, h, s: f64::INFINITY, length }
    }

    /// Ratios outside the validity window, as human-readable notes.
    pub fn window_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, v: f64| {
            if v.is_finite() && !(VALIDITY.0..=VALIDITY.1).contains(&v) {
                out.push(format!("{name} = {v:.3} outside [{}, {}]", VALIDITY.0, VALIDITY.1));
            }
        };
        check("w/h", self.w / self.h);
        check("t/h", self.t / self.h);
        check("s/h", self.s / self.h);
        out
    }
}

pub fn cap_parallel_plate(area_um2: f64, d_um: f64, k: f64) -> f64 {
    k * EPS0 * area_um2 / d_um
}

/// Plate of `a` x `b` um at distance `d` with edge fringing: the per-edge
/// half of the line fringe term applied along the whole perimeter.
pub fn cap_plate_full(a: f64, b: f64, d: f64, t: f64, k: f64) -> f64 {
    k * EPS0 * (a * b / d + 1.40 * (t / d).powf(0.222) * 2.0 * (a + b))
}

/// Line over ground plane, plate plus fringe.
pub fn cap_sakurai_total(g: &WireGeometry, k: f64) -> f64 {
    let per_um = k * EPS0 * (1.15 * (g.w / g.h) + 2.80 * (g.t / g.h).powf(0.222));
    per_um * g.length
}

/// Coupling to one parallel neighbor at spacing `g.s`.
pub fn cap_sakurai_coupling(g: &WireGeometry, k: f64) -> f64 {
    if !g.s.is_finite() {
        return 0.0;
    }
    let (wh, th, sh) = (g.w / g.h, g.t / g.h, g.s / g.h);
    let per_um = k * EPS0 * (0.03 * wh + 0.83 * th - 0.07 * th.powf(0.222)) * sh.powf(-1.34);
    per_um * g.length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum CapModel {
    /// Area over height only.
    #[serde(rename = "plate")]
    Plate,
    #[serde(rename = "sakurai")]
    Sakurai,
    #[default]
    #[serde(rename = "sakurai+coupling")]
    SakuraiCoupling,
}

impl FromStr for CapModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plate" => Ok(CapModel::Plate),
            "sakurai" => Ok(CapModel::Sakurai),
            "sakurai+coupling" | "full" => Ok(CapModel::SakuraiCoupling),
            _ => Err(format!("unknown capacitance model {s:?} (plate, sakurai, sakurai+coupling)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ElementKind {
    C,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Origin {
    Plate,
    Fringe,
    Coupling,
    Sheet,
    Via,
    GateContact,
    ContactContact,
}

impl Origin {
    /// Between two signal nodes rather than to ground.
    pub fn is_coupling(self) -> bool {
        matches!(self, Origin::Coupling | Origin::GateContact | Origin::ContactContact)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParasiticElement {
    pub kind: ElementKind,
    pub a: String,
    pub b: String,
    /// aF or ohm.
    pub value: f64,
    pub origin: Origin,
}

impl ParasiticElement {
    fn sort_key(&self) -> (ElementKind, &str, &str, Origin, u64) {
        (self.kind, &self.a, &self.b, self.origin, self.value.to_bits())
    }
}

pub(crate) fn sort_elements(v: &mut [ParasiticElement]) {
    v.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
}

/// Net name of a parasitic node (`NET` or `NET:seg<k>`).
pub fn node_net(node: &str) -> &str {
    node.rsplit_once(":seg").map_or(node, |(n, _)| n)
}

#[derive(Debug, Clone)]
pub struct Parasitics {
    pub model: CapModel,
    pub graph: RcGraph,
    /// Capacitors followed by resistors, each group sorted.
    pub elements: Vec<ParasiticElement>,
    pub warnings: Vec<String>,
}

pub fn extract_parasitics(
    layout: &FlatLayout,
    tech: &TechDb,
    x: &Extraction,
    model: CapModel,
    workers: Workers,
) -> Parasitics {
    let graph = extract_resistance(layout, tech, x, workers);
    let (caps, warnings) = extract_capacitance(layout, tech, x, &graph, model, workers);
    let mut elements = caps;
    elements.extend(graph.resistors.iter().cloned());
    sort_elements(&mut elements);
    Parasitics { model, graph, elements, warnings }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct NetParasitics {
    #[serde(rename = "C_ground_aF")]
    pub c_ground_af: f64,
    #[serde(rename = "C_coupling_aF")]
    pub c_coupling_af: f64,
    #[serde(rename = "R_total_ohm")]
    pub r_total_ohm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PexReport {
    pub model: CapModel,
    pub nets: BTreeMap<String, NetParasitics>,
    pub elements: usize,
    pub warnings: Vec<String>,
}

impl PexReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("pex report serializes");
        s.push('\n');
        s
    }
}

impl Parasitics {
    pub fn report(&self) -> PexReport {
        let mut nets: BTreeMap<String, NetParasitics> = BTreeMap::new();
        for e in &self.elements {
            let (na, nb) = (node_net(&e.a).to_string(), node_net(&e.b).to_string());
            match e.kind {
                ElementKind::R => nets.entry(na).or_default().r_total_ohm += e.value,
                ElementKind::C if e.b == GND => nets.entry(na).or_default().c_ground_af += e.value,
                ElementKind::C => {
                    nets.entry(na).or_default().c_coupling_af += e.value;
                    nets.entry(nb).or_default().c_coupling_af += e.value;
                }
            }
        }
        PexReport { model: self.model, nets, elements: self.elements.len(), warnings: self.warnings.clone() }
    }

    /// Sum of R elements on the unique resistor path between two nodes.
    pub fn path_resistance(&self, a: &str, b: &str) -> Option<f64> {
        delay::tree_path(&self.elements, a, b).map(|p| p.iter().map(|e| e.value).sum())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnnotateError {
    #[error("element {kind:?} {a} {b} references unknown net {net}")]
    UnknownNet { kind: ElementKind, a: String, b: String, net: String },
    #[error("duplicate element {kind:?} {a} {b} ({origin:?})")]
    Duplicate { kind: ElementKind, a: String, b: String, origin: Origin },
}

/// Adds R and C cards, and moves device terminals onto their tap nodes.
/// Cards are numbered in element order, which is sorted, so the written
/// netlist is byte-stable.
pub fn annotate_netlist(
    netlist: &Netlist,
    elements: &[ParasiticElement],
    terminals: &[Terminal],
) -> Result<Netlist, AnnotateError> {
    let known = netlist.nets();
    let mut seen = BTreeSet::new();
    for e in elements {
        for n in [&e.a, &e.b] {
            let net = node_net(n);
            if n != GND && !known.contains(net) {
                return Err(AnnotateError::UnknownNet { kind: e.kind, a: e.a.clone(), b: e.b.clone(), net: net.into() });
            }
        }
        if !seen.insert((e.kind, e.a.clone(), e.b.clone(), e.origin)) {
            return Err(AnnotateError::Duplicate { kind: e.kind, a: e.a.clone(), b: e.b.clone(), origin: e.origin });
        }
    }
    let mut out = netlist.clone();
    for t in terminals {
        if let Some(d) = out.devices.get_mut(t.device) {
            match t.role {
                Role::Drain => d.d = t.node.clone(),
                Role::Gate => d.g = t.node.clone(),
                Role::Source => d.s = t.node.clone(),
            }
        }
    }
    let mut sorted = elements.to_vec();
    sort_elements(&mut sorted);
    let (mut nr, mut nc) = (out.resistors.len(), out.capacitors.len());
    for e in sorted {
        match e.kind {
            ElementKind::R => {
                out.resistors.push(RCard { name: format!("R{nr}"), a: e.a, b: e.b, ohms: e.value });
                nr += 1;
            }
            ElementKind::C => {
                out.capacitors.push(CCard { name: format!("C{nc}"), a: e.a, b: e.b, af: e.value });
                nc += 1;
            }
        }
    }
    Ok(out)
}
