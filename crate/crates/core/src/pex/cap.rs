//! Capacitance elements over the pieces of an RC graph.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    Role as Terminal,
    cap_parallel_plate, cap_plate_full, cap_sakurai_coupling, cap_sakurai_total, sort_elements, CapModel,
    ElementKind, Origin, ParasiticElement, Piece, RcGraph, WireGeometry, GND, VALIDITY,
};
use crate::geometry::{Rect, SpatialIndex};
use crate::layout::FlatLayout;
use crate::netex::Extraction;
use crate::par::{self, Workers};
use crate::techdb::{ConnMode, FinDirection, LayerClass, TechDb};

/// Neighbors farther than this many wire heights are not coupled.
const COUPLING_REACH: i64 = 10;
/// Lateral reach for contact-to-contact and gate-to-contact terms, nm.
const CONTACT_REACH: i64 = 100;

/// Parallel run, spacing and the two widths across the gap.
fn facing(a: &Rect, b: &Rect) -> Option<(i64, i64, i64, i64)> {
    let xo = a.hi.x.min(b.hi.x) - a.lo.x.max(b.lo.x);
    let yo = a.hi.y.min(b.hi.y) - a.lo.y.max(b.lo.y);
    if yo > 0 && xo < 0 {
        Some((yo, -xo, a.width(), b.width()))
    } else if xo > 0 && yo < 0 {
        Some((xo, -yo, a.height(), b.height()))
    } else {
        None
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Gate,
    ActiveContact,
    Mol,
    Metal1,
    Other,
}

struct Layer {
    role: Role,
    /// nm
    h: i64,
    t: i64,
}

fn um(nm: i64) -> f64 {
    nm as f64 / 1000.0
}

pub fn extract_capacitance(
    _layout: &FlatLayout,
    tech: &TechDb,
    x: &Extraction,
    graph: &RcGraph,
    model: CapModel,
    workers: Workers,
) -> (Vec<ParasiticElement>, Vec<String>) {
    let mut gate_like: BTreeSet<String> = tech.layers_of_class(LayerClass::Gate).map(|l| l.name.clone()).collect();
    let mut active_contacts = BTreeSet::new();
    for c in tech.connectivity().iter().filter(|c| c.mode == ConnMode::Overlap) {
        for (m, other) in [(&c.a, &c.b), (&c.b, &c.a)] {
            if tech.class(m) != Some(LayerClass::Mol) {
                continue;
            }
            match tech.class(other) {
                Some(LayerClass::Gate) => {
                    gate_like.insert(tech.base_name(m).to_string());
                }
                Some(LayerClass::Active) => {
                    active_contacts.insert(tech.base_name(m).to_string());
                }
                _ => {}
            }
        }
    }
    let m1 = tech.metal_levels().get(&1).cloned().unwrap_or_default();
    let mut layers: BTreeMap<&str, Layer> = BTreeMap::new();
    for p in &graph.pieces {
        layers.entry(p.layer.as_str()).or_insert_with(|| {
            let (h, t) = tech.electrical(&p.layer).map_or((0, 0), |e| (e.height, e.thickness));
            let role = if gate_like.contains(&p.layer) {
                Role::Gate
            } else if active_contacts.contains(&p.layer) {
                Role::ActiveContact
            } else if p.layer == m1 {
                Role::Metal1
            } else if tech.class(&p.layer) == Some(LayerClass::Mol) {
                Role::Mol
            } else {
                Role::Other
            };
            Layer { role, h, t }
        });
    }
    let is_wire = |p: &Piece| {
        let l = &layers[p.layer.as_str()];
        l.h > 0 && l.t > 0 && matches!(tech.class(&p.layer), Some(LayerClass::Metal | LayerClass::Mol))
    };
    let is_mol = |p: &Piece| tech.class(&p.layer) == Some(LayerClass::Mol);

    let reach = graph
        .pieces
        .iter()
        .map(|p| layers[p.layer.as_str()].h * COUPLING_REACH)
        .max()
        .unwrap_or(0)
        .max(CONTACT_REACH);
    let index = SpatialIndex::new(graph.pieces.iter().enumerate().map(|(i, p)| (p.rect, i)));
    let ids: Vec<usize> = (0..graph.pieces.len()).collect();

    type Found = (Vec<ParasiticElement>, Vec<(String, &'static str)>);
    let per_piece: Vec<Found> = par::map(&ids, workers, |&i| {
        let p = &graph.pieces[i];
        let lp = &layers[p.layer.as_str()];
        let mut out = Vec::new();
        let mut warn = Vec::new();
        let mut note = |g: &WireGeometry, layer: &str| {
            for (name, v) in [("w/h", g.w / g.h), ("t/h", g.t / g.h), ("s/h", g.s / g.h)] {
                if v.is_finite() && !(VALIDITY.0..=VALIDITY.1).contains(&v) {
                    warn.push((layer.to_string(), name));
                }
            }
        };
        let c = |a: &str, b: &str, value: f64, origin: Origin| {
            let (a, b) = if b == GND || a <= b { (a, b) } else { (b, a) };
            ParasiticElement { kind: ElementKind::C, a: a.into(), b: b.into(), value, origin }
        };

        if is_wire(p) {
            let (w, len) = (p.rect.width().min(p.rect.height()), p.rect.width().max(p.rect.height()));
            let g = WireGeometry::isolated(um(w), um(lp.t), um(lp.h), um(len));
            let k = tech.effective_k_below(lp.h as f64);
            let e = match model {
                CapModel::Plate => c(&p.node, GND, cap_parallel_plate(g.w * g.length, g.h, k), Origin::Plate),
                _ => {
                    note(&g, &p.layer);
                    c(&p.node, GND, cap_sakurai_total(&g, k), Origin::Fringe)
                }
            };
            out.push(e);
        }

        for j in index.query(&p.rect, reach) {
            if j <= i {
                continue;
            }
            let q = &graph.pieces[j];
            if q.net == p.net {
                continue;
            }
            let lq = &layers[q.layer.as_str()];
            // vertical overlap of a contact under the first metal
            let (under, over, lu, lo) = if lq.role == Role::Metal1 { (p, q, lp, lq) } else { (q, p, lq, lp) };
            if is_mol(under) && lo.role == Role::Metal1 {
                if let Some(o) = under.rect.intersection(&over.rect) {
                    let d = lo.h - (lu.h + lu.t);
                    if d > 0 {
                        let k = tech.k_at((lo.h + lu.h + lu.t) as f64 / 2.0);
                        let (a, b, d) = (um(o.width()), um(o.height()), um(d));
                        let v = match model {
                            CapModel::Plate => cap_parallel_plate(a * b, d, k),
                            _ => cap_plate_full(a, b, d, um(lu.t), k),
                        };
                        out.push(c(&under.node, &over.node, v, Origin::ContactContact));
                    }
                }
                continue;
            }
            let Some((run, s, wa, wb)) = facing(&p.rect, &q.rect) else { continue };
            if p.layer == q.layer && is_wire(p) {
                if model == CapModel::SakuraiCoupling && s <= COUPLING_REACH * lp.h {
                    let w = (wa + wb) as f64 / 2.0 / 1000.0;
                    let g = WireGeometry { w, t: um(lp.t), h: um(lp.h), s: um(s), length: um(run) };
                    note(&g, &p.layer);
                    let k = tech.k_at(lp.h as f64 + lp.t as f64 / 2.0);
                    out.push(c(&p.node, &q.node, cap_sakurai_coupling(&g, k), Origin::Coupling));
                }
                continue;
            }
            let gate_pair = matches!((lp.role, lq.role), (Role::Gate, Role::ActiveContact) | (Role::ActiveContact, Role::Gate));
            let contact_pair = is_mol(p) && is_mol(q) && !gate_pair;
            if !(gate_pair || contact_pair) || s > CONTACT_REACH {
                continue;
            }
            let z0 = lp.h.max(lq.h);
            let z1 = (lp.h + lp.t).min(lq.h + lq.t);
            if z1 <= z0 {
                continue;
            }
            let k = tech.k_at((z0 + z1) as f64 / 2.0);
            let (a, b, d) = (um(run), um(z1 - z0), um(s));
            let v = match model {
                CapModel::Plate => cap_parallel_plate(a * b, d, k),
                _ => cap_plate_full(a, b, d, b, k),
            };
            let origin = if gate_pair { Origin::GateContact } else { Origin::ContactContact };
            out.push(c(&p.node, &q.node, v, origin));
        }
        (out, warn)
    });

    // merge elements that landed on the same node pair
    let mut sums: BTreeMap<(String, String, Origin), f64> = BTreeMap::new();
    let mut counts: BTreeMap<(String, &'static str), usize> = BTreeMap::new();
    for e in gate_overhang(tech, x, graph) {
        *sums.entry((e.a, e.b, e.origin)).or_insert(0.0) += e.value;
    }
    for (els, warns) in per_piece {
        for e in els {
            *sums.entry((e.a, e.b, e.origin)).or_insert(0.0) += e.value;
        }
        for w in warns {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    let mut elements: Vec<ParasiticElement> = sums
        .into_iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|((a, b, origin), value)| ParasiticElement { kind: ElementKind::C, a, b, value, origin })
        .collect();
    sort_elements(&mut elements);
    let warnings = counts
        .into_iter()
        .map(|((layer, ratio), n)| {
            format!("{layer}: {n} segment(s) with {ratio} outside [{}, {}]", VALIDITY.0, VALIDITY.1)
        })
        .collect();
    (elements, warnings)
}

/// Gate to fin top: the gate end caps past the channel, up to one fin pitch
/// on each side, as a plate over the fin height.
fn gate_overhang(tech: &TechDb, x: &Extraction, graph: &RcGraph) -> Vec<ParasiticElement> {
    let fin = tech.fin();
    let Some(act) = tech.layers_of_class(LayerClass::Active).next() else { return Vec::new() };
    let fin_h = act.electrical.as_ref().map_or(0, |e| e.thickness);
    if fin_h <= 0 {
        return Vec::new();
    }
    let horizontal = fin.fin_direction == FinDirection::Horizontal;
    let mut out = Vec::new();
    for (k, d) in x.devices.iter().enumerate() {
        let Some(node) = graph.terminal(k, Terminal::Gate) else { continue };
        let ch = d.location;
        // extent across the fins covered by gate pieces that overlap the channel
        let (mut lo, mut hi) = if horizontal { (ch.lo.y, ch.hi.y) } else { (ch.lo.x, ch.hi.x) };
        for p in graph.pieces.iter().filter(|p| tech.class(&p.layer) == Some(LayerClass::Gate) && p.rect.overlaps(&ch)) {
            let (a, b) = if horizontal { (p.rect.lo.y, p.rect.hi.y) } else { (p.rect.lo.x, p.rect.hi.x) };
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let (c0, c1) = if horizontal { (ch.lo.y, ch.hi.y) } else { (ch.lo.x, ch.hi.x) };
        let over = (c0 - lo).min(fin.pitch_fin) + (hi - c1).min(fin.pitch_fin);
        if over <= 0 {
            continue;
        }
        let area = um(d.l) * um(over);
        let k = tech.k_at(fin_h as f64 / 2.0);
        out.push(ParasiticElement {
            kind: ElementKind::C,
            a: node.to_string(),
            b: GND.into(),
            value: cap_parallel_plate(area, um(fin_h), k),
            origin: Origin::Plate,
        });
    }
    out
}
