//! Graph comparison of two flat FinFET netlists.
//!
//! Devices and nets form a bipartite graph; edges carry the terminal role
//! (gate, source/drain, bulk), so source and drain are interchangeable.
//! Colors are refined jointly on both graphs until stable. Ports present in
//! both netlists are anchored by name. Remaining symmetric classes are
//! split by individualizing one pair at a time, backtracking on failure.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::spice::Netlist;
use super::DeviceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "MATCH")]
    Match,
    #[serde(rename = "MISMATCH")]
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LvsResult {
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

impl LvsResult {
    pub fn is_match(&self) -> bool {
        self.verdict == Verdict::Match
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("lvs result serializes");
        s.push('\n');
        s
    }
}

const GATE: u8 = 0;
const SD: u8 = 1;
const BULK: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Seed {
    Device(DeviceKind, u32, i64),
    Port(String),
    Net,
}

struct Graph {
    names: Vec<String>,
    seeds: Vec<Seed>,
    adj: Vec<Vec<(u8, usize)>>,
    devices: usize,
}

impl Graph {
    fn build(nl: &Netlist, anchors: &BTreeSet<String>) -> Graph {
        let mut nets: BTreeMap<&str, usize> = BTreeMap::new();
        for d in &nl.devices {
            for n in [&d.d, &d.g, &d.s, &d.b] {
                let k = nets.len();
                nets.entry(n.as_str()).or_insert(k);
            }
        }
        let devices = nl.devices.len();
        let total = devices + nets.len();
        let mut names = vec![String::new(); total];
        let mut seeds = vec![Seed::Net; total];
        let mut adj = vec![Vec::new(); total];
        for (i, d) in nl.devices.iter().enumerate() {
            names[i] = d.name.clone();
            seeds[i] = Seed::Device(d.kind, d.nfin, d.l);
            for (role, n) in [(GATE, &d.g), (SD, &d.s), (SD, &d.d), (BULK, &d.b)] {
                let j = devices + nets[n.as_str()];
                adj[i].push((role, j));
                adj[j].push((role, i));
            }
        }
        for (n, k) in nets {
            names[devices + k] = n.to_string();
            if anchors.contains(n) {
                seeds[devices + k] = Seed::Port(n.to_string());
            }
        }
        Graph { names, seeds, adj, devices }
    }

    fn len(&self) -> usize {
        self.names.len()
    }

    fn net_names(&self) -> BTreeSet<&str> {
        self.names[self.devices..].iter().map(String::as_str).collect()
    }
}

type Colors = (Vec<usize>, Vec<usize>);

fn refine(a: &Graph, b: &Graph, mut ca: Vec<usize>, mut cb: Vec<usize>) -> Colors {
    let count = |ca: &[usize], cb: &[usize]| ca.iter().chain(cb).collect::<BTreeSet<_>>().len();
    let mut classes = count(&ca, &cb);
    loop {
        let sig = |g: &Graph, c: &[usize], i: usize| {
            let mut nb: Vec<(u8, usize)> = g.adj[i].iter().map(|&(r, j)| (r, c[j])).collect();
            nb.sort_unstable();
            (c[i], nb)
        };
        let sa: Vec<_> = (0..a.len()).map(|i| sig(a, &ca, i)).collect();
        let sb: Vec<_> = (0..b.len()).map(|i| sig(b, &cb, i)).collect();
        let ids: BTreeMap<_, usize> =
            sa.iter().chain(&sb).collect::<BTreeSet<_>>().into_iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        ca = sa.iter().map(|s| ids[s]).collect();
        cb = sb.iter().map(|s| ids[s]).collect();
        let n = ids.len();
        if n == classes {
            return (ca, cb);
        }
        classes = n;
    }
}

fn histogram(c: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut h: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &k) in c.iter().enumerate() {
        h.entry(k).or_default().push(i);
    }
    h
}

/// First color whose member counts differ.
fn unbalanced(ca: &[usize], cb: &[usize]) -> Option<(usize, Vec<usize>, Vec<usize>)> {
    let (ha, hb) = (histogram(ca), histogram(cb));
    let keys: BTreeSet<usize> = ha.keys().chain(hb.keys()).copied().collect();
    keys.into_iter().find_map(|k| {
        let (x, y) = (ha.get(&k).cloned().unwrap_or_default(), hb.get(&k).cloned().unwrap_or_default());
        (x.len() != y.len()).then_some((k, x, y))
    })
}

fn consistent(a: &Graph, b: &Graph, map: &[usize]) -> bool {
    (0..a.devices).all(|i| {
        let mut ea: Vec<(u8, usize)> = a.adj[i].iter().map(|&(r, j)| (r, map[j])).collect();
        let mut eb: Vec<(u8, usize)> = b.adj[map[i]].clone();
        ea.sort_unstable();
        eb.sort_unstable();
        ea == eb
    })
}

fn solve(a: &Graph, b: &Graph, ca: Vec<usize>, cb: Vec<usize>, budget: &mut usize) -> Option<Vec<usize>> {
    let (ca, cb) = refine(a, b, ca, cb);
    if unbalanced(&ca, &cb).is_some() {
        return None;
    }
    let ha = histogram(&ca);
    let hb = histogram(&cb);
    let Some((&color, xs)) = ha.iter().find(|(_, v)| v.len() > 1) else {
        let mut map = vec![0; a.len()];
        for (k, v) in &ha {
            map[v[0]] = hb[k][0];
        }
        return consistent(a, b, &map).then_some(map);
    };
    let x = xs[0];
    let fresh = ca.iter().chain(&cb).max().map_or(0, |m| m + 1);
    for &y in &hb[&color] {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let (mut na, mut nb) = (ca.clone(), cb.clone());
        na[x] = fresh;
        nb[y] = fresh;
        if let Some(m) = solve(a, b, na, nb, budget) {
            return Some(m);
        }
    }
    None
}

fn describe(g: &Graph, members: &[usize]) -> String {
    let mut names: Vec<&str> = members.iter().map(|&i| g.names[i].as_str()).collect();
    names.sort_unstable();
    let more = names.len().saturating_sub(6);
    names.truncate(6);
    let mut s = names.join(", ");
    if more > 0 {
        s.push_str(&format!(", ... (+{more})"));
    }
    if s.is_empty() {
        s.push_str("none");
    }
    s
}

fn seed_label(s: &Seed) -> String {
    match s {
        Seed::Device(k, n, l) => format!("{} nfin={n} l={l}", k.model()),
        Seed::Port(p) => format!("port {p}"),
        Seed::Net => "net".into(),
    }
}

/// Compares `layout` against `schematic`. Nets without device terminals
/// are ignored.
pub fn lvs_compare(layout: &Netlist, schematic: &Netlist) -> LvsResult {
    let mut diags = Vec::new();
    let device_nets = |nl: &Netlist| -> BTreeSet<String> {
        nl.devices.iter().flat_map(|d| [&d.d, &d.g, &d.s, &d.b]).cloned().collect()
    };
    let (na, nb) = (device_nets(layout), device_nets(schematic));
    let ports = |nl: &Netlist, nets: &BTreeSet<String>| -> BTreeSet<String> {
        nl.ports.iter().filter(|p| nets.contains(*p)).cloned().collect()
    };
    let (pa, pb) = (ports(layout, &na), ports(schematic, &nb));
    for p in pa.difference(&pb) {
        diags.push(format!("port {p} is in the layout but not the schematic"));
    }
    for p in pb.difference(&pa) {
        diags.push(format!("port {p} is in the schematic but not the layout"));
    }
    let anchors: BTreeSet<String> = pa.intersection(&pb).cloned().collect();
    let (a, b) = (Graph::build(layout, &anchors), Graph::build(schematic, &anchors));

    if a.devices != b.devices {
        diags.push(format!("device count {} vs {}", a.devices, b.devices));
    }
    let mut by_type: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in &a.seeds[..a.devices] {
        by_type.entry(seed_label(s)).or_default().0 += 1;
    }
    for s in &b.seeds[..b.devices] {
        by_type.entry(seed_label(s)).or_default().1 += 1;
    }
    for (t, (x, y)) in &by_type {
        if x != y {
            diags.push(format!("{t}: {x} in layout vs {y} in schematic"));
        }
    }
    let (nets_a, nets_b) = (a.len() - a.devices, b.len() - b.devices);
    if nets_a != nets_b {
        diags.push(format!("net count {nets_a} vs {nets_b}"));
    }
    if !diags.is_empty() {
        return LvsResult { verdict: Verdict::Mismatch, diagnostics: diags };
    }

    let seeds: BTreeMap<&Seed, usize> =
        a.seeds.iter().chain(&b.seeds).collect::<BTreeSet<_>>().into_iter().enumerate().map(|(k, s)| (s, k)).collect();
    let ca: Vec<usize> = a.seeds.iter().map(|s| seeds[s]).collect();
    let cb: Vec<usize> = b.seeds.iter().map(|s| seeds[s]).collect();
    let (ra, rb) = refine(&a, &b, ca.clone(), cb.clone());
    if let Some((_, xs, ys)) = unbalanced(&ra, &rb) {
        let any = xs.first().or(ys.first()).copied().unwrap();
        let kind = if (xs.is_empty() && any < b.devices) || (!xs.is_empty() && any < a.devices) {
            "device"
        } else {
            "net"
        };
        diags.push(format!(
            "unmatched {kind} class: {} in layout [{}] vs {} in schematic [{}]",
            xs.len(),
            describe(&a, &xs),
            ys.len(),
            describe(&b, &ys)
        ));
        return LvsResult { verdict: Verdict::Mismatch, diagnostics: diags };
    }
    let mut budget = 10 * (a.len() + 1);
    match solve(&a, &b, ra, rb, &mut budget) {
        Some(_) => LvsResult { verdict: Verdict::Match, diagnostics: Vec::new() },
        None => {
            let (na, nb) = (a.net_names(), b.net_names());
            diags.push(format!(
                "no consistent device/net pairing found ({} devices, nets [{}] vs [{}])",
                a.devices,
                na.into_iter().take(6).collect::<Vec<_>>().join(", "),
                nb.into_iter().take(6).collect::<Vec<_>>().join(", ")
            ));
            LvsResult { verdict: Verdict::Mismatch, diagnostics: diags }
        }
    }
}
