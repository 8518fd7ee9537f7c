//! Technology database: layer stack, connectivity table, rule deck and fin
//! parameters, loaded from a versioned JSON document and validated once.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

const BUILTIN: &str = include_str!("../tech/finfet15.json");

#[derive(Debug, thiserror::Error)]
pub enum TechError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {0}")]
    Schema(u32),
    #[error("{context} references undefined layer {layer:?}")]
    UnknownLayer { context: String, layer: String },
    #[error("duplicate rule_id {0:?}")]
    DuplicateRule(String),
    #[error("duplicate layer {0:?}")]
    DuplicateLayer(String),
    #[error("missing GATE_CUT layer")]
    MissingGateCut,
    #[error("layer {0:?} has no electrical data")]
    NoElectrical(String),
    #[error("invalid tech file: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, TechError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LayerClass {
    Well,
    Active,
    Gate,
    GateCut,
    Mol,
    Metal,
    Via,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Color {
    #[default]
    None,
    A,
    B,
}

/// Lengths in nm, resistivity in ohm*um, via resistance in ohm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerElectrical {
    pub thickness: i64,
    pub height: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistivity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via_resistance: Option<f64>,
    pub k_above: f64,
    pub k_below: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDef {
    pub name: String,
    pub class: LayerClass,
    pub level: u32,
    #[serde(default)]
    pub color: Color,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrical: Option<LayerElectrical>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum ConnMode {
    #[serde(rename = "OVERLAP")]
    Overlap,
    #[serde(rename = "THROUGH_VIA")]
    ThroughVia { via: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityEntry {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub mode: ConnMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleKind {
    MinWidth { value: i64 },
    MinSpacingSameColor { value: i64 },
    MinSpacingDiffColor { value: i64 },
    /// nm^2
    MinArea { value: i64 },
    /// Every inner shape grown by `value` must lie inside the union of `outer`.
    Enclosure { outer: Vec<String>, value: i64 },
    /// Every shape must overlap the union of `other` by at least `value` nm^2.
    Overlap { other: Vec<String>, value: i64 },
    /// Width across the fins must be `base + k * step`.
    WidthQuantized { base: i64, step: i64 },
    /// Channel length where the shape crosses `reference` must be one of `values`.
    DiscreteLength {
        values: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<String>,
    },
    RectOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub layers: Vec<String>,
    #[serde(flatten)]
    pub kind: RuleKind,
}

impl Rule {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RuleKind::MinWidth { .. } => "MIN_WIDTH",
            RuleKind::MinSpacingSameColor { .. } => "MIN_SPACING_SAME_COLOR",
            RuleKind::MinSpacingDiffColor { .. } => "MIN_SPACING_DIFF_COLOR",
            RuleKind::MinArea { .. } => "MIN_AREA",
            RuleKind::Enclosure { .. } => "ENCLOSURE",
            RuleKind::Overlap { .. } => "OVERLAP",
            RuleKind::WidthQuantized { .. } => "WIDTH_QUANTIZED",
            RuleKind::DiscreteLength { .. } => "DISCRETE_LENGTH",
            RuleKind::RectOnly => "RECT_ONLY",
        }
    }

    fn referenced_layers(&self) -> impl Iterator<Item = &String> {
        let extra: &[String] = match &self.kind {
            RuleKind::Enclosure { outer, .. } => outer,
            RuleKind::Overlap { other, .. } => other,
            RuleKind::DiscreteLength { reference: Some(r), .. } => std::slice::from_ref(r),
            _ => &[],
        };
        self.layers.iter().chain(extra)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FinDirection {
    /// Fins run along x; gates are vertical bars.
    #[default]
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinParams {
    pub w_fin: i64,
    pub pitch_fin: i64,
    pub allowed_gate_lengths: Vec<i64>,
    #[serde(default)]
    pub fin_direction: FinDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_layer: Option<String>,
    pub nfin_bulk_net: String,
    pub pfin_bulk_net: String,
}

impl FinParams {
    /// Effective width of a multi-fin device.
    pub fn effective_width(&self, nfin: u32) -> i64 {
        self.w_fin + (nfin as i64 - 1) * self.pitch_fin
    }

    /// Inverse of `effective_width`; `None` unless `w` sits exactly on the fin grid.
    pub fn fin_count(&self, w: i64) -> Option<u32> {
        let rem = w - self.w_fin;
        (rem >= 0 && rem % self.pitch_fin == 0).then(|| (rem / self.pitch_fin + 1) as u32)
    }
}

/// Switch-level device constants for delay estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    /// On resistance of a single fin; n fins in parallel divide it by n.
    pub r_on_nfin_ohm: f64,
    pub r_on_pfin_ohm: f64,
    pub c_gate_af_per_fin_nm: f64,
    pub c_junction_af_per_nm2: f64,
    pub c_junction_af_per_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dielectric {
    pub name: String,
    pub z_bottom: i64,
    pub z_top: i64,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TechFile {
    schema_version: u32,
    #[serde(default)]
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    fin_params: FinParams,
    device_model: DeviceModel,
    layers: Vec<LayerDef>,
    #[serde(default)]
    dielectrics: Vec<Dielectric>,
    connectivity: Vec<ConnectivityEntry>,
    rules: Vec<Rule>,
}

/// Validated, immutable technology description.
#[derive(Debug, Clone)]
pub struct TechDb {
    file: TechFile,
    index: HashMap<String, usize>,
}

pub fn load_tech(path: impl AsRef<Path>) -> Result<TechDb> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| TechError::Io { path: path.display().to_string(), source })?;
    TechDb::from_json_str(&text)
}

impl TechDb {
    /// The technology file shipped with the crate.
    pub fn builtin() -> TechDb {
        Self::from_json_str(BUILTIN).expect("shipped tech file is valid")
    }

    pub fn builtin_json() -> &'static str {
        BUILTIN
    }

    pub fn from_json_str(text: &str) -> Result<TechDb> {
        let file: TechFile = serde_json::from_str(text).map_err(|e| TechError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_parts(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("tech serializes")
    }

    fn from_parts(file: TechFile) -> Result<TechDb> {
        if file.schema_version != SCHEMA_VERSION {
            return Err(TechError::Schema(file.schema_version));
        }
        let mut index = HashMap::new();
        for (i, l) in file.layers.iter().enumerate() {
            if index.insert(l.name.clone(), i).is_some() {
                return Err(TechError::DuplicateLayer(l.name.clone()));
            }
        }
        let db = TechDb { file, index };
        db.validate()?;
        Ok(db)
    }

    fn need(&self, context: &str, layer: &str) -> Result<&LayerDef> {
        self.layer(layer)
            .ok_or_else(|| TechError::UnknownLayer { context: context.to_string(), layer: layer.to_string() })
    }

    fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(TechError::Invalid(m));
        for l in &self.file.layers {
            match (&l.base, l.color) {
                (None, Color::None) => {}
                (None, _) => return invalid(format!("colored layer {} has no base", l.name)),
                (Some(_), Color::None) => return invalid(format!("layer {} has a base but no color", l.name)),
                (Some(b), _) => {
                    let base = self.need(&format!("layer {}", l.name), b)?;
                    if base.base.is_some() || base.color != Color::None {
                        return invalid(format!("base {} of {} is itself colored", b, l.name));
                    }
                    if base.class != l.class || base.level != l.level {
                        return invalid(format!("colored layer {} must share class and level with {}", l.name, b));
                    }
                }
            }
            if let Some(e) = self.electrical(&l.name) {
                if e.thickness <= 0 {
                    return invalid(format!("layer {}: thickness must be > 0", l.name));
                }
                if e.height < 0 {
                    return invalid(format!("layer {}: height must be >= 0", l.name));
                }
                if e.resistivity.is_some_and(|r| r.is_nan() || r <= 0.0) {
                    return invalid(format!("layer {}: resistivity must be > 0", l.name));
                }
                if e.via_resistance.is_some_and(|r| r.is_nan() || r < 0.0) {
                    return invalid(format!("layer {}: via_resistance must be >= 0", l.name));
                }
                if !(e.k_above >= 1.0 && e.k_below >= 1.0) {
                    return invalid(format!("layer {}: dielectric constant must be >= 1", l.name));
                }
            }
            let needs = match l.class {
                LayerClass::Metal => self.electrical(&l.name).is_some_and(|e| e.resistivity.is_some()),
                LayerClass::Via => self.electrical(&l.name).is_some_and(|e| e.via_resistance.is_some()),
                _ => true,
            };
            if !needs {
                return Err(TechError::NoElectrical(l.name.clone()));
            }
        }
        match self.file.layers.iter().filter(|l| l.class == LayerClass::GateCut).count() {
            0 => return Err(TechError::MissingGateCut),
            1 => {}
            _ => return invalid("more than one GATE_CUT layer".into()),
        }

        // metal stack
        let metals = self.metal_levels();
        if metals.is_empty() {
            return invalid("no METAL layers".into());
        }
        let mut seen = BTreeSet::new();
        for l in self.file.layers.iter().filter(|l| l.class == LayerClass::Metal && l.base.is_none()) {
            if !(1..=13).contains(&l.level) {
                return invalid(format!("metal {} has level {} outside 1..13", l.name, l.level));
            }
            if !seen.insert(l.level) {
                return invalid(format!("two uncolored metals at level {}", l.level));
            }
        }
        let mut prev: Option<(&str, i64)> = None;
        for name in metals.values() {
            let h = self.electrical(name).map(|e| e.height).unwrap_or(0);
            if let Some((p, ph)) = prev {
                if h <= ph {
                    return invalid(format!("metal heights must increase with level ({p} at {ph} nm, {name} at {h} nm)"));
                }
            }
            prev = Some((name, h));
        }

        // connectivity
        for (i, c) in self.file.connectivity.iter().enumerate() {
            let ctx = format!("connectivity entry {i}");
            for name in [&c.a, &c.b] {
                if self.need(&ctx, name)?.class == LayerClass::Via {
                    return invalid(format!("{ctx}: via layer {name} may only appear as THROUGH_VIA"));
                }
            }
            if let ConnMode::ThroughVia { via } = &c.mode {
                if self.need(&ctx, via)?.class != LayerClass::Via {
                    return invalid(format!("{ctx}: {via} is not a VIA layer"));
                }
            }
        }
        for v in self.file.layers.iter().filter(|l| l.class == LayerClass::Via && l.base.is_none()) {
            let mut levels = BTreeSet::new();
            for c in &self.file.connectivity {
                if matches!(&c.mode, ConnMode::ThroughVia { via } if self.base_name(via) == v.name) {
                    levels.insert(self.file.layers[self.index[&c.a]].level);
                    levels.insert(self.file.layers[self.index[&c.b]].level);
                }
            }
            let want: BTreeSet<u32> = [v.level, v.level + 1].into();
            if levels != want {
                return invalid(format!("via {} must connect exactly levels {} and {}", v.name, v.level, v.level + 1));
            }
        }
        let top = metals.values().next_back().cloned().unwrap_or_default();
        for l in self.file.layers.iter().filter(|l| matches!(l.class, LayerClass::Active | LayerClass::Gate)) {
            let r = self.reachable_from(&[self.base_name(&l.name).to_string()]);
            if !r.contains(&top) {
                return invalid(format!("no connectivity path from {} up to {}", l.name, top));
            }
        }

        // rules
        let mut ids = BTreeSet::new();
        for r in &self.file.rules {
            if !ids.insert(r.id.as_str()) {
                return Err(TechError::DuplicateRule(r.id.clone()));
            }
            if r.layers.is_empty() {
                return invalid(format!("rule {} lists no layers", r.id));
            }
            for l in r.referenced_layers() {
                self.need(&format!("rule {}", r.id), l)?;
            }
            match &r.kind {
                RuleKind::WidthQuantized { base, step } if *base <= 0 || *step <= 0 => {
                    return invalid(format!("rule {}: quantization base and step must be positive", r.id))
                }
                RuleKind::DiscreteLength { values, .. } if values.is_empty() => {
                    return invalid(format!("rule {}: empty value set", r.id))
                }
                RuleKind::Enclosure { outer, .. } if outer.is_empty() => {
                    return invalid(format!("rule {}: empty outer layer set", r.id))
                }
                RuleKind::Overlap { other, .. } if other.is_empty() => {
                    return invalid(format!("rule {}: empty other layer set", r.id))
                }
                RuleKind::MinWidth { value }
                | RuleKind::MinSpacingSameColor { value }
                | RuleKind::MinSpacingDiffColor { value }
                | RuleKind::MinArea { value }
                | RuleKind::Enclosure { value, .. }
                | RuleKind::Overlap { value, .. }
                    if *value < 0 =>
                {
                    return invalid(format!("rule {}: negative value", r.id))
                }
                _ => {}
            }
        }

        let f = &self.file.fin_params;
        if !(0 < f.w_fin && f.w_fin < f.pitch_fin) {
            return invalid("fin_params: need 0 < w_fin < pitch_fin".into());
        }
        if f.allowed_gate_lengths.is_empty() || f.allowed_gate_lengths.iter().any(|&l| l <= 0) {
            return invalid("fin_params: allowed_gate_lengths must be non-empty and positive".into());
        }
        if let Some(w) = &f.well_layer {
            self.need("fin_params.well_layer", w)?;
        }
        let d = &self.file.dielectrics;
        for (i, s) in d.iter().enumerate() {
            let expect = if i == 0 { 0 } else { d[i - 1].z_top };
            if s.z_bottom != expect || s.z_top <= s.z_bottom {
                return invalid(format!("dielectric {} must start at {expect} nm and have positive thickness", s.name));
            }
            if s.k.is_nan() || s.k < 1.0 {
                return invalid(format!("dielectric {}: k must be >= 1", s.name));
            }
        }
        Ok(())
    }

    fn reachable_from(&self, start: &[String]) -> BTreeSet<String> {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for c in &self.file.connectivity {
            let (a, b) = (self.base_name(&c.a), self.base_name(&c.b));
            let mut link = |x, y| {
                adj.entry(x).or_default().push(y);
                adj.entry(y).or_default().push(x);
            };
            match &c.mode {
                ConnMode::Overlap => link(a, b),
                ConnMode::ThroughVia { via } => {
                    let v = self.base_name(via);
                    link(a, v);
                    link(v, b);
                }
            }
        }
        let mut seen: BTreeSet<String> = start.iter().cloned().collect();
        let mut queue: VecDeque<String> = start.iter().cloned().collect();
        while let Some(n) = queue.pop_front() {
            for &m in adj.get(n.as_str()).into_iter().flatten() {
                if seen.insert(m.to_string()) {
                    queue.push_back(m.to_string());
                }
            }
        }
        seen
    }

    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn layers(&self) -> &[LayerDef] {
        &self.file.layers
    }

    pub fn layer(&self, name: &str) -> Option<&LayerDef> {
        self.index.get(name).map(|&i| &self.file.layers[i])
    }

    /// Position in the file, used as drawing order.
    pub fn stack_rank(&self, name: &str) -> usize {
        self.index.get(name).copied().unwrap_or(usize::MAX)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.file.rules
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.file.rules.iter().find(|r| r.id == id)
    }

    pub fn connectivity(&self) -> &[ConnectivityEntry] {
        &self.file.connectivity
    }

    pub fn fin(&self) -> &FinParams {
        &self.file.fin_params
    }

    pub fn device_model(&self) -> &DeviceModel {
        &self.file.device_model
    }

    pub fn dielectrics(&self) -> &[Dielectric] {
        &self.file.dielectrics
    }

    /// Uncolored parent, or the layer itself.
    pub fn base_name<'a>(&'a self, name: &'a str) -> &'a str {
        match self.layer(name).and_then(|l| l.base.as_deref()) {
            Some(b) => b,
            None => name,
        }
    }

    pub fn color(&self, name: &str) -> Color {
        self.layer(name).map(|l| l.color).unwrap_or_default()
    }

    pub fn class(&self, name: &str) -> Option<LayerClass> {
        self.layer(name).map(|l| l.class)
    }

    /// All layers treated as one conductor: the base plus its colored variants.
    pub fn color_family(&self, name: &str) -> BTreeSet<String> {
        let base = self.base_name(name);
        let mut out: BTreeSet<String> = self
            .file
            .layers
            .iter()
            .filter(|l| l.base.as_deref() == Some(base))
            .map(|l| l.name.clone())
            .collect();
        out.insert(base.to_string());
        out
    }

    pub fn same_family(&self, a: &str, b: &str) -> bool {
        self.base_name(a) == self.base_name(b)
    }

    pub fn electrical(&self, name: &str) -> Option<&LayerElectrical> {
        let l = self.layer(name)?;
        l.electrical.as_ref().or_else(|| l.base.as_deref().and_then(|b| self.layer(b)?.electrical.as_ref()))
    }

    /// Ohms per square, from resistivity over thickness.
    pub fn sheet_resistance(&self, name: &str) -> Result<f64> {
        let e = self.electrical(name).ok_or_else(|| TechError::NoElectrical(name.to_string()))?;
        let rho = e.resistivity.ok_or_else(|| TechError::NoElectrical(name.to_string()))?;
        Ok(sheet_resistance(rho, e.thickness as f64 / 1000.0))
    }

    /// Uncolored metal layer names keyed by level.
    pub fn metal_levels(&self) -> BTreeMap<u32, String> {
        self.file
            .layers
            .iter()
            .filter(|l| l.class == LayerClass::Metal && l.base.is_none())
            .map(|l| (l.level, l.name.clone()))
            .collect()
    }

    pub fn gate_cut_layer(&self) -> &str {
        self.file.layers.iter().find(|l| l.class == LayerClass::GateCut).map(|l| l.name.as_str()).unwrap_or("")
    }

    pub fn layers_of_class(&self, class: LayerClass) -> impl Iterator<Item = &LayerDef> {
        self.file.layers.iter().filter(move |l| l.class == class)
    }

    /// Uncolored conductor base names (everything but wells, gate cuts and vias).
    pub fn conductor_bases(&self) -> Vec<String> {
        self.file
            .layers
            .iter()
            .filter(|l| l.base.is_none())
            .filter(|l| matches!(l.class, LayerClass::Active | LayerClass::Gate | LayerClass::Mol | LayerClass::Metal))
            .map(|l| l.name.clone())
            .collect()
    }

    /// Relative permittivity at height `z` (nm); the top slab extends upward.
    pub fn k_at(&self, z: f64) -> f64 {
        let d = &self.file.dielectrics;
        d.iter().find(|s| z < s.z_top as f64).or(d.last()).map(|s| s.k).unwrap_or(1.0)
    }

    /// Series permittivity of the dielectric between the substrate and height `h` (nm).
    pub fn effective_k_below(&self, h: f64) -> f64 {
        if h <= 0.0 || self.file.dielectrics.is_empty() {
            return self.k_at(0.0);
        }
        let mut z = 0.0;
        let mut sum = 0.0;
        for s in &self.file.dielectrics {
            if z >= h {
                break;
            }
            let last = std::ptr::eq(s, self.file.dielectrics.last().unwrap());
            let top = if last { h } else { (s.z_top as f64).min(h) };
            if top > z {
                sum += (top - z) / s.k;
                z = top;
            }
        }
        h / sum
    }
}

/// Sheet resistance in ohm/sq; resistivity in ohm*um and thickness in um.
pub fn sheet_resistance(resistivity: f64, thickness_um: f64) -> f64 {
    resistivity / thickness_um
}
