//! Elmore delay over resistor trees, and a switch-level path delay built
//! from it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::{node_net, ElementKind, ParasiticElement, Parasitics, Role, GND};
use crate::netex::{CCard, DeviceKind, Extraction, Netlist, RCard};
use crate::techdb::TechDb;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DelayError {
    #[error("resistors form a loop through {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("no resistive path from {from} to {to}")]
    Disconnected { from: String, to: String },
    #[error("unknown net {0}")]
    UnknownNet(String),
    #[error("no device is gated by net {0}")]
    NoDriver(String),
    #[error("stage driven by {input} has outputs {outputs:?}, expected exactly one")]
    Ambiguous { input: String, outputs: Vec<String> },
    #[error("extracted mode needs parasitics")]
    MissingParasitics,
}

struct Tree<'a> {
    adj: BTreeMap<&'a str, Vec<(&'a str, f64)>>,
}

/// child -> (parent, resistance of the edge between them)
type Parents<'a> = BTreeMap<&'a str, (&'a str, f64)>;

impl<'a> Tree<'a> {
    fn new(edges: impl Iterator<Item = (&'a str, &'a str, f64)>) -> Self {
        let mut adj: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
        for (a, b, r) in edges {
            adj.entry(a).or_default().push((b, r));
            adj.entry(b).or_default().push((a, r));
        }
        Tree { adj }
    }

    /// BFS parents from `root`; fails on the first loop found.
    fn root(&self, root: &'a str) -> Result<(Vec<&'a str>, Parents<'a>), DelayError> {
        let mut parent: BTreeMap<&str, (&str, f64)> = BTreeMap::new();
        let mut order = vec![root];
        let mut seen: BTreeSet<&str> = [root].into();
        let mut queue: VecDeque<&str> = [root].into();
        while let Some(u) = queue.pop_front() {
            let mut skipped_parent = false;
            for &(v, r) in self.adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
                if parent.get(u).is_some_and(|p| p.0 == v) && !skipped_parent {
                    skipped_parent = true;
                    continue;
                }
                if seen.contains(v) {
                    return Err(DelayError::Cycle(self.cycle(&parent, u, v)));
                }
                seen.insert(v);
                parent.insert(v, (u, r));
                order.push(v);
                queue.push_back(v);
            }
        }
        Ok((order, parent))
    }

    fn cycle(&self, parent: &BTreeMap<&'a str, (&'a str, f64)>, u: &'a str, v: &'a str) -> Vec<String> {
        let up = |mut x: &'a str| {
            let mut path = vec![x];
            while let Some(&(p, _)) = parent.get(x) {
                path.push(p);
                x = p;
            }
            path
        };
        let (pu, pv) = (up(u), up(v));
        let common: BTreeSet<&str> = pu.iter().copied().collect();
        let meet = *pv.iter().find(|x| common.contains(*x)).unwrap();
        let mut out: Vec<String> = pu.iter().take_while(|x| **x != meet).map(|s| s.to_string()).collect();
        out.reverse();
        out.insert(0, meet.to_string());
        let tail: Vec<String> = pv.iter().take_while(|x| **x != meet).map(|s| s.to_string()).collect();
        out.extend(tail);
        out.push(meet.to_string());
        out
    }
}

/// Elmore delay in seconds from `source` to `sink` over the netlist's R
/// cards, with every C card grounded at each non-ground end.
pub fn elmore_summary(netlist: &Netlist, source: &str, sink: &str) -> Result<f64, DelayError> {
    let tree = Tree::new(netlist.resistors.iter().map(|r| (r.a.as_str(), r.b.as_str(), r.ohms)));
    let (order, parent) = tree.root(source)?;
    if source != sink && !parent.contains_key(sink) {
        return Err(DelayError::Disconnected { from: source.into(), to: sink.into() });
    }
    let mut cap: BTreeMap<&str, f64> = BTreeMap::new();
    for c in &netlist.capacitors {
        for n in [&c.a, &c.b] {
            if n != GND {
                *cap.entry(n.as_str()).or_insert(0.0) += c.af;
            }
        }
    }
    let mut down: BTreeMap<&str, f64> = order.iter().map(|n| (*n, cap.get(n).copied().unwrap_or(0.0))).collect();
    for n in order.iter().rev() {
        if let Some(&(p, _)) = parent.get(n) {
            let c = down[n];
            *down.get_mut(p).unwrap() += c;
        }
    }
    let mut t = 0.0;
    let mut x = sink;
    while let Some(&(p, r)) = parent.get(x) {
        t += r * down[x];
        x = p;
    }
    Ok(t * 1e-18)
}

/// R elements on the path between two nodes, if the resistors reachable
/// from `a` form a tree containing `b`.
pub(crate) fn tree_path<'e>(elements: &'e [ParasiticElement], a: &str, b: &str) -> Option<Vec<&'e ParasiticElement>> {
    let rs: Vec<&ParasiticElement> = elements.iter().filter(|e| e.kind == ElementKind::R).collect();
    let tree = Tree::new(rs.iter().map(|e| (e.a.as_str(), e.b.as_str(), e.value)));
    let (_, parent) = tree.root(a).ok()?;
    let mut out = Vec::new();
    let mut x = b;
    if a != b && !parent.contains_key(b) {
        return None;
    }
    while let Some(&(p, _)) = parent.get(x) {
        let e = rs.iter().find(|e| (e.a == p && e.b == x) || (e.a == x && e.b == p))?;
        out.push(*e);
        x = p;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DelayMode {
    /// Driver resistance into the next stage's gate capacitance only.
    #[serde(rename = "none")]
    None,
    /// Adds junction capacitance from the fin geometry.
    #[serde(rename = "device")]
    DeviceGeometry,
    /// Adds wire capacitance and resistance.
    #[serde(rename = "extracted")]
    Extracted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageDelay {
    pub input: String,
    pub output: String,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub mode: DelayMode,
    pub stages: Vec<StageDelay>,
    pub total_s: f64,
}

/// Follows the gate-to-output chain from `input` to `output`, one stage per
/// net, and sums per-stage Elmore delays.
pub fn path_delay(
    x: &Extraction,
    tech: &TechDb,
    para: Option<&Parasitics>,
    input: &str,
    output: &str,
    mode: DelayMode,
) -> Result<DelayReport, DelayError> {
    let conn = &x.connectivity;
    let id = |n: &str| conn.net_by_name(n).map(|n| n.id).ok_or_else(|| DelayError::UnknownNet(n.into()));
    let fin = tech.fin();
    let supplies: BTreeSet<&str> = [fin.nfin_bulk_net.as_str(), fin.pfin_bulk_net.as_str()].into();
    let (mut cur, end) = (id(input)?, id(output)?);
    if mode == DelayMode::Extracted && para.is_none() {
        return Err(DelayError::MissingParasitics);
    }
    let mut visited = BTreeSet::new();
    let mut stages = Vec::new();
    while cur != end && visited.insert(cur) {
        let drivers: Vec<usize> = (0..x.devices.len()).filter(|&k| x.devices[k].gate == cur).collect();
        if drivers.is_empty() {
            return Err(DelayError::NoDriver(conn.nets[cur].name.clone()));
        }
        let outs: BTreeSet<usize> = drivers
            .iter()
            .flat_map(|&k| [x.devices[k].source, x.devices[k].drain])
            .filter(|&n| !supplies.contains(conn.nets[n].name.as_str()))
            .collect();
        if outs.len() != 1 {
            return Err(DelayError::Ambiguous {
                input: conn.nets[cur].name.clone(),
                outputs: outs.iter().map(|&n| conn.nets[n].name.clone()).collect(),
            });
        }
        let out = *outs.iter().next().unwrap();
        let delay = stage_delay(x, tech, para, &drivers, out, mode)?;
        stages.push(StageDelay { input: conn.nets[cur].name.clone(), output: conn.nets[out].name.clone(), delay_s: delay });
        cur = out;
    }
    let total_s = stages.iter().map(|s| s.delay_s).sum();
    Ok(DelayReport { mode, stages, total_s })
}

fn stage_delay(
    x: &Extraction,
    tech: &TechDb,
    para: Option<&Parasitics>,
    drivers: &[usize],
    out: usize,
    mode: DelayMode,
) -> Result<f64, DelayError> {
    let dm = tech.device_model();
    let r_drv = drivers
        .iter()
        .map(|&k| {
            let d = &x.devices[k];
            let r = match d.kind {
                DeviceKind::Nfin => dm.r_on_nfin_ohm,
                DeviceKind::Pfin => dm.r_on_pfin_ohm,
            };
            r / d.nfin as f64
        })
        .sum::<f64>()
        / drivers.len() as f64;
    let loads: Vec<usize> = (0..x.devices.len()).filter(|&k| x.devices[k].gate == out).collect();
    let c_gate = |k: usize| {
        let d = &x.devices[k];
        dm.c_gate_af_per_fin_nm * d.nfin as f64 * d.l as f64
    };
    // junction capacitance of each driver side sitting on `out`
    let c_junction = |k: usize| -> Vec<(Role, f64)> {
        let d = &x.devices[k];
        let g = d.geometry();
        let mut v = Vec::new();
        if d.drain == out {
            v.push((Role::Drain, dm.c_junction_af_per_nm2 * g.ad as f64 + dm.c_junction_af_per_nm * g.pd as f64));
        }
        if d.source == out {
            v.push((Role::Source, dm.c_junction_af_per_nm2 * g.as_ as f64 + dm.c_junction_af_per_nm * g.ps as f64));
        }
        v
    };
    let mut nl = Netlist::new("stage");
    let cap = |nl: &mut Netlist, node: &str, af: f64| {
        let name = format!("C{}", nl.capacitors.len());
        nl.capacitors.push(CCard { name, a: node.to_string(), b: GND.into(), af });
    };
    let sink = match mode {
        DelayMode::None | DelayMode::DeviceGeometry => {
            nl.resistors.push(RCard { name: "Rdrv".into(), a: "DRV".into(), b: "OUT".into(), ohms: r_drv });
            for &k in &loads {
                cap(&mut nl, "OUT", c_gate(k));
            }
            if mode == DelayMode::DeviceGeometry {
                for &k in drivers {
                    for (_, c) in c_junction(k) {
                        cap(&mut nl, "OUT", c);
                    }
                }
            }
            "OUT".to_string()
        }
        DelayMode::Extracted => {
            let p = para.ok_or(DelayError::MissingParasitics)?;
            let name = &x.connectivity.nets[out].name;
            let on_net = |n: &str| node_net(n) == name;
            let tap = |k: usize, role: Role| p.graph.terminal(k, role).map(str::to_string).unwrap_or_else(|| name.clone());
            let first = drivers[0];
            let root_role = if x.devices[first].drain == out { Role::Drain } else { Role::Source };
            nl.resistors.push(RCard { name: "Rdrv".into(), a: "DRV".into(), b: tap(first, root_role), ohms: r_drv });
            for e in &p.elements {
                match e.kind {
                    ElementKind::R if on_net(&e.a) => {
                        let name = format!("R{}", nl.resistors.len());
                        nl.resistors.push(RCard { name, a: e.a.clone(), b: e.b.clone(), ohms: e.value });
                    }
                    ElementKind::C => {
                        for n in [&e.a, &e.b] {
                            if n != GND && on_net(n) {
                                cap(&mut nl, n, e.value);
                            }
                        }
                    }
                    _ => {}
                }
            }
            for &k in &loads {
                cap(&mut nl, &tap(k, Role::Gate), c_gate(k));
            }
            for &k in drivers {
                for (role, c) in c_junction(k) {
                    cap(&mut nl, &tap(k, role), c);
                }
            }
            match loads.first() {
                Some(&k) => tap(k, Role::Gate),
                None if nl.resistors.iter().any(|r| &r.a == name || &r.b == name) => name.clone(),
                None => tap(first, root_role),
            }
        }
    };
    elmore_summary(&nl, "DRV", &sink)
}
