//! SPICE subcircuit reading and writing.
//!
//! Only what the toolkit produces and compares is understood: `X` FinFET
//! cards (`nfin`/`pfin` models) or subcircuit instances, `R` and `C`
//! cards, `.subckt`/`.ends`, `.global`, `*` comments and `+` continuations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{DeviceGeometry, DeviceKind};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NetlistError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCard {
    pub name: String,
    pub kind: DeviceKind,
    pub d: String,
    pub g: String,
    pub s: String,
    pub b: String,
    pub nfin: u32,
    /// nm
    pub l: i64,
    pub geometry: Option<DeviceGeometry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RCard {
    pub name: String,
    pub a: String,
    pub b: String,
    pub ohms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CCard {
    pub name: String,
    pub a: String,
    pub b: String,
    /// aF
    pub af: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub name: String,
    pub ports: Vec<String>,
    /// Every extracted net, including ones no card touches.
    pub declared_nets: Vec<String>,
    pub devices: Vec<DeviceCard>,
    pub resistors: Vec<RCard>,
    pub capacitors: Vec<CCard>,
}

impl Netlist {
    pub fn new(name: &str) -> Self {
        Netlist { name: name.to_string(), ..Default::default() }
    }

    /// Every net name referenced by a card or the port list.
    pub fn nets(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.ports.iter().chain(&self.declared_nets).cloned().collect();
        for d in &self.devices {
            s.extend([&d.d, &d.g, &d.s, &d.b].map(|n| n.clone()));
        }
        for r in &self.resistors {
            s.extend([r.a.clone(), r.b.clone()]);
        }
        for c in &self.capacitors {
            s.extend([c.a.clone(), c.b.clone()]);
        }
        s
    }

    pub fn to_spice(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "* {} extracted by finverify", self.name);
        let _ = write!(s, ".subckt {}", self.name);
        for p in &self.ports {
            let _ = write!(s, " {p}");
        }
        s.push('\n');
        if !self.declared_nets.is_empty() {
            let _ = writeln!(s, "*|NETS {}", self.declared_nets.join(" "));
        }
        for d in &self.devices {
            let _ = write!(s, "{} {} {} {} {} {} nfin={} l={}n", d.name, d.d, d.g, d.s, d.b, d.kind.model(), d.nfin, d.l);
            if let Some(g) = d.geometry {
                let _ = write!(s, " adej={}e-18 asej={}e-18 pdej={}n psej={}n", g.ad, g.as_, g.pd, g.ps);
            }
            s.push('\n');
        }
        for r in &self.resistors {
            let _ = writeln!(s, "{} {} {} {}", r.name, r.a, r.b, fmt_num(r.ohms));
        }
        for c in &self.capacitors {
            let _ = writeln!(s, "{} {} {} {}e-18", c.name, c.a, c.b, fmt_num(c.af));
        }
        let _ = writeln!(s, ".ends {}", self.name);
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_spice())
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// SPICE number with an optional scale suffix; trailing unit letters are ignored.
pub fn parse_value(tok: &str) -> Option<f64> {
    let t = tok.to_ascii_lowercase();
    let b = t.as_bytes();
    let mut end = 0;
    while end < b.len() {
        let c = b[end];
        let exp = c == b'e'
            && end > 0
            && b.get(end + 1).is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+');
        if c.is_ascii_digit() || c == b'.' || ((c == b'-' || c == b'+') && (end == 0 || b[end - 1] == b'e')) || exp {
            end += 1;
        } else {
            break;
        }
    }
    let digits = &t[..end];
    let rest = &t[end..];
    let exp: i32 = if rest.starts_with("meg") {
        6
    } else {
        match rest.chars().next() {
            None => 0,
            Some('t') => 12,
            Some('g') => 9,
            Some('k') => 3,
            Some('m') => -3,
            Some('u') => -6,
            Some('n') => -9,
            Some('p') => -12,
            Some('f') => -15,
            Some('a') => -18,
            Some(c) if c.is_ascii_alphabetic() => 0,
            Some(_) => return None,
        }
    };
    let num: f64 = digits.parse().ok()?;
    if exp == 0 {
        return Some(num);
    }
    // scale in decimal so "3f" is exactly 3e-15
    match digits.split_once('e') {
        None => format!("{digits}e{exp}").parse().ok(),
        Some((m, e)) => format!("{m}e{}", e.parse::<i32>().ok()? + exp).parse().ok(),
    }
}

#[derive(Debug, Default, Clone)]
struct Subckt {
    ports: Vec<String>,
    cards: Vec<(usize, Vec<String>)>,
}

/// Parses a netlist and flattens it below the top subcircuit: the one no
/// other subcircuit instantiates (the last such one if several), or the
/// cards outside any `.subckt` block if there are any.
pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistError> {
    let mut lines: Vec<(usize, String)> = Vec::new();
    let mut declared = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(nets) = raw.strip_prefix("*|NETS") {
            declared.extend(nets.split_whitespace().map(str::to_string));
            continue;
        }
        let line = raw.split('$').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if let Some(cont) = line.strip_prefix('+') {
            match lines.last_mut() {
                Some((_, prev)) => {
                    prev.push(' ');
                    prev.push_str(cont.trim());
                }
                None => return Err(NetlistError::Parse { line: i + 1, message: "continuation with nothing to continue".into() }),
            }
            continue;
        }
        lines.push((i + 1, line.to_string()));
    }

    let mut subckts: BTreeMap<String, Subckt> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut top_level = Subckt::default();
    let mut globals: BTreeSet<String> = ["0".to_string()].into();
    let mut current: Option<(String, Subckt)> = None;
    for (ln, line) in lines {
        let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        let head = toks[0].to_ascii_lowercase();
        let perr = |m: String| NetlistError::Parse { line: ln, message: m };
        match head.as_str() {
            ".subckt" => {
                if current.is_some() {
                    return Err(perr("nested .subckt".into()));
                }
                let name = toks.get(1).ok_or_else(|| perr(".subckt without a name".into()))?;
                let ports = toks[2..].iter().filter(|t| !t.contains('=')).cloned().collect();
                current = Some((name.clone(), Subckt { ports, cards: Vec::new() }));
            }
            ".ends" => {
                let (name, sub) = current.take().ok_or_else(|| perr(".ends without .subckt".into()))?;
                if subckts.insert(name.clone(), sub).is_some() {
                    return Err(perr(format!("subcircuit {name} defined twice")));
                }
                order.push(name);
            }
            ".global" => globals.extend(toks[1..].iter().cloned()),
            ".end" => break,
            h if h.starts_with('.') => log::debug!("line {ln}: ignoring {}", toks[0]),
            _ => match &mut current {
                Some((_, sub)) => sub.cards.push((ln, toks)),
                None => top_level.cards.push((ln, toks)),
            },
        }
    }
    if let Some((name, _)) = current {
        return Err(NetlistError::Parse { line: text.lines().count(), message: format!("missing .ends for {name}") });
    }

    let instantiated: BTreeSet<&str> = subckts
        .values()
        .chain([&top_level])
        .flat_map(|s| s.cards.iter())
        .filter(|(_, t)| t[0].to_ascii_lowercase().starts_with('x'))
        .filter_map(|(_, t)| t.iter().rev().find(|x| !x.contains('=')).map(String::as_str))
        .filter(|m| subckts.contains_key(*m))
        .collect();
    let (name, top) = if !top_level.cards.is_empty() || subckts.is_empty() {
        (String::from("TOP"), top_level)
    } else {
        let name = order.iter().rev().find(|n| !instantiated.contains(n.as_str())).unwrap_or(&order[order.len() - 1]);
        (name.clone(), subckts[name].clone())
    };
    let mut nl = Netlist::new(&name);
    nl.ports = top.ports.clone();
    nl.declared_nets = declared;
    let mut ctx = Flatten { subckts: &subckts, globals: &globals, out: &mut nl };
    let map: BTreeMap<String, String> = BTreeMap::new();
    ctx.expand(&top, "", &map, &mut vec![name])?;
    Ok(nl)
}

struct Flatten<'a> {
    subckts: &'a BTreeMap<String, Subckt>,
    globals: &'a BTreeSet<String>,
    out: &'a mut Netlist,
}

impl Flatten<'_> {
    fn expand(
        &mut self,
        sub: &Subckt,
        prefix: &str,
        map: &BTreeMap<String, String>,
        stack: &mut Vec<String>,
    ) -> Result<(), NetlistError> {
        let net = |n: &str| -> String {
            if let Some(m) = map.get(n) {
                m.clone()
            } else if prefix.is_empty() || self.globals.contains(n) {
                n.to_string()
            } else {
                format!("{prefix}{n}")
            }
        };
        for (ln, toks) in &sub.cards {
            let ln = *ln;
            let perr = |m: String| NetlistError::Parse { line: ln, message: m };
            let name = format!("{prefix}{}", toks[0]);
            let positional: Vec<&String> = toks[1..].iter().filter(|t| !t.contains('=')).collect();
            let params: BTreeMap<String, &str> = toks[1..]
                .iter()
                .filter_map(|t| t.split_once('='))
                .map(|(k, v)| (k.to_ascii_lowercase(), v))
                .collect();
            match toks[0].chars().next().map(|c| c.to_ascii_lowercase()) {
                Some('x') => {
                    let model = positional.last().ok_or_else(|| perr("X card without a model".into()))?;
                    if let Some(child) = self.subckts.get(model.as_str()) {
                        let actuals = &positional[..positional.len() - 1];
                        if actuals.len() != child.ports.len() {
                            return Err(perr(format!(
                                "{} connects {} nets but {model} has {} ports",
                                toks[0],
                                actuals.len(),
                                child.ports.len()
                            )));
                        }
                        if stack.contains(model) {
                            return Err(perr(format!("recursive instantiation of {model}")));
                        }
                        let m = child.ports.iter().cloned().zip(actuals.iter().map(|a| net(a))).collect();
                        stack.push(model.to_string());
                        self.expand(child, &format!("{name}/"), &m, stack)?;
                        stack.pop();
                        continue;
                    }
                    let kind = match model.to_ascii_lowercase().as_str() {
                        "nfin" | "nfet" | "nmos" => DeviceKind::Nfin,
                        "pfin" | "pfet" | "pmos" => DeviceKind::Pfin,
                        other => return Err(perr(format!("unknown model or subcircuit {other}"))),
                    };
                    if positional.len() != 5 {
                        return Err(perr(format!("{} needs d g s b and a model", toks[0])));
                    }
                    let num = |k: &str| -> Result<Option<f64>, NetlistError> {
                        params
                            .get(k)
                            .map(|v| parse_value(v).ok_or_else(|| perr(format!("bad value {k}={v}"))))
                            .transpose()
                    };
                    let nfin = num("nfin")?.or(num("nf")?).unwrap_or(1.0);
                    if nfin < 1.0 || nfin.fract() != 0.0 {
                        return Err(perr(format!("nfin must be a positive integer, got {nfin}")));
                    }
                    let l = num("l")?.ok_or_else(|| perr(format!("{} has no l=", toks[0])))?;
                    let nm = |v: f64| (v * 1e9).round() as i64;
                    let nm2 = |v: f64| (v * 1e18).round() as i64;
                    let geometry = match (num("adej")?, num("asej")?, num("pdej")?, num("psej")?) {
                        (Some(ad), Some(as_), Some(pd), Some(ps)) => {
                            Some(DeviceGeometry { ad: nm2(ad), as_: nm2(as_), pd: nm(pd), ps: nm(ps) })
                        }
                        _ => None,
                    };
                    self.out.devices.push(DeviceCard {
                        name,
                        kind,
                        d: net(positional[0]),
                        g: net(positional[1]),
                        s: net(positional[2]),
                        b: net(positional[3]),
                        nfin: nfin as u32,
                        l: nm(l),
                        geometry,
                    });
                }
                Some(c @ ('r' | 'c')) => {
                    if positional.len() < 3 {
                        return Err(perr(format!("{} needs two nets and a value", toks[0])));
                    }
                    let v = parse_value(positional[2]).ok_or_else(|| perr(format!("bad value {}", positional[2])))?;
                    let (a, b) = (net(positional[0]), net(positional[1]));
                    if c == 'r' {
                        self.out.resistors.push(RCard { name, a, b, ohms: v });
                    } else {
                        self.out.capacitors.push(CCard { name, a, b, af: v * 1e18 });
                    }
                }
                _ => log::debug!("line {ln}: ignoring card {}", toks[0]),
            }
        }
        Ok(())
    }
}

pub fn read_netlist(path: impl AsRef<Path>) -> Result<Netlist, NetlistError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| NetlistError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_netlist(&text)
}
