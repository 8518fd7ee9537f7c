//! Layout data model: JSON cell libraries, hierarchical instances, and the
//! flattened, normalized view every checker works on.

mod svg;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::geometry::{normalize, GeometryError, Point, Polygon, Rect, Region, ShapeSet, Transform};
use crate::par::{self, Workers};
use crate::techdb::TechDb;

pub use svg::{render_svg, write_svg};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LayoutError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported schema_version {0}")]
    Schema(u32),
    #[error("duplicate cell {0:?}")]
    DuplicateCell(String),
    #[error("cell {cell:?} uses unknown layer {layer:?}")]
    UnknownLayer { cell: String, layer: String },
    #[error("cell {parent:?} instantiates unknown cell {cell:?}")]
    UnknownCell { cell: String, parent: String },
    #[error("cyclic instantiation: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("off-grid coordinate {value} in cell {cell:?} ({remainder} nm off the {grid} nm grid)")]
    OffGrid { cell: String, value: f64, remainder: f64, grid: i64 },
    #[error("cell {cell:?} layer {layer:?} shape {index}: {source}")]
    Geometry { cell: String, layer: String, index: usize, source: GeometryError },
    #[error("cell {cell:?} instance {instance:?}: rotation {rot} is not a multiple of 90")]
    Rotation { cell: String, instance: String, rot: i64 },
    #[error("pin {net:?} of cell {cell:?} at ({}, {}) is not on a {layer} shape", .at.x, .at.y)]
    PinOutside { cell: String, net: String, layer: String, at: Point },
    #[error("top cell {0:?} not found")]
    UnknownTop(String),
    #[error("cannot pick a top cell: {0}")]
    AmbiguousTop(String),
}

type Result<T> = std::result::Result<T, LayoutError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub cell: String,
    pub dx: i64,
    pub dy: i64,
    /// Counter-clockwise, degrees, multiple of 90.
    pub rot: i64,
    /// Mirror about the x axis, applied before rotation.
    pub mirror: bool,
}

impl Instance {
    pub fn new(name: impl Into<String>, cell: impl Into<String>, dx: i64, dy: i64) -> Self {
        Self { name: name.into(), cell: cell.into(), dx, dy, rot: 0, mirror: false }
    }

    pub fn transform(&self) -> Transform {
        Transform::new(self.dx, self.dy, (self.rot.rem_euclid(360) / 90) as u8, self.mirror)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pin {
    pub net: String,
    pub layer: String,
    pub at: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cell {
    pub name: String,
    pub shapes: BTreeMap<String, ShapeSet>,
    pub instances: Vec<Instance>,
    pub pins: Vec<Pin>,
}

impl Cell {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_polygon(&mut self, layer: &str, p: Polygon) {
        self.shapes.entry(layer.to_string()).or_insert_with(|| ShapeSet::empty(layer)).polygons.push(p);
    }

    pub fn add_rect(&mut self, layer: &str, r: Rect) {
        self.add_polygon(layer, Polygon::from_rect(r));
    }

    pub fn add_pin(&mut self, net: &str, layer: &str, x: i64, y: i64) {
        self.pins.push(Pin { net: net.into(), layer: layer.into(), at: Point::new(x, y) });
    }

    pub fn shapes(&self, layer: &str) -> &[Polygon] {
        self.shapes.get(layer).map(|s| s.polygons.as_slice()).unwrap_or(&[])
    }

    /// Shifts own geometry, instance placements and pins.
    pub fn translate(&self, dx: i64, dy: i64) -> Cell {
        Cell {
            name: self.name.clone(),
            shapes: self.shapes.iter().map(|(k, s)| (k.clone(), s.translate(dx, dy))).collect(),
            instances: self.instances.iter().map(|i| Instance { dx: i.dx + dx, dy: i.dy + dy, ..i.clone() }).collect(),
            pins: self
                .pins
                .iter()
                .map(|p| Pin { at: Point::new(p.at.x + dx, p.at.y + dy), ..p.clone() })
                .collect(),
        }
    }
}

/// A set of cells; `top` names the root when the file says so.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Library {
    pub grid_nm: i64,
    pub top: Option<String>,
    cells: BTreeMap<String, Cell>,
}

// ---- file format ----

#[derive(Serialize, Deserialize)]
struct RawLibrary {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_nm: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    top: Option<String>,
    cells: Vec<RawCell>,
}

#[derive(Serialize, Deserialize)]
struct RawCell {
    name: String,
    #[serde(default)]
    layers: BTreeMap<String, Vec<Vec<[Number; 2]>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    instances: Vec<RawInstance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pins: Vec<RawPin>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    cell: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dx: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dy: Option<Number>,
    #[serde(default, skip_serializing_if = "is_zero")]
    rot: i64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    mirror: bool,
}

/// Pretty JSON, except that arrays of numbers (and arrays of those, i.e.
/// vertex lists) stay on one line.
fn write_value(v: &serde_json::Value, indent: usize, out: &mut String) {
    use serde_json::Value;
    let flat = |v: &Value| match v {
        Value::Array(a) => a.iter().all(|e| e.is_number() || e.as_array().is_some_and(|x| x.iter().all(Value::is_number))),
        _ => true,
    };
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Array(a) if !a.is_empty() && !flat(v) => {
            out.push_str("[\n");
            for (i, e) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(e, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if !m.is_empty() => {
            out.push_str("{\n");
            for (i, (k, e)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(e, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        _ => out.push_str(&v.to_string()),
    }
}

fn is_zero(v: &i64) -> bool {
    *v == 0
}

#[derive(Serialize, Deserialize)]
struct RawPin {
    net: String,
    layer: String,
    x: Number,
    y: Number,
}

struct Coord<'a> {
    cell: &'a str,
    grid: i64,
}

impl Coord<'_> {
    fn get(&self, n: &Number) -> Result<i64> {
        let off = |value: f64| {
            let g = self.grid as f64;
            LayoutError::OffGrid { cell: self.cell.to_string(), value, remainder: value.rem_euclid(g), grid: self.grid }
        };
        match n.as_i64() {
            Some(v) if v % self.grid == 0 => Ok(v),
            Some(v) => Err(off(v as f64)),
            None => Err(off(n.as_f64().unwrap_or(f64::NAN))),
        }
    }

    fn opt(&self, n: &Option<Number>) -> Result<i64> {
        n.as_ref().map_or(Ok(0), |n| self.get(n))
    }
}

pub fn load_layout(path: impl AsRef<Path>, tech: &TechDb) -> Result<Library> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| LayoutError::Io { path: path.display().to_string(), source })?;
    Library::from_json_str(&text, tech)
}

impl Library {
    pub fn new() -> Self {
        Self { grid_nm: 1, ..Default::default() }
    }

    pub fn from_json_str(text: &str, tech: &TechDb) -> Result<Library> {
        let raw: RawLibrary = serde_json::from_str(text)
            .map_err(|e| LayoutError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(LayoutError::Schema(raw.schema_version));
        }
        let grid = raw.grid_nm.unwrap_or(1).max(1);
        let mut lib = Library { grid_nm: grid, top: raw.top, cells: BTreeMap::new() };
        for rc in raw.cells {
            let c = Coord { cell: &rc.name, grid };
            let mut cell = Cell::new(rc.name.clone());
            for (layer, lists) in &rc.layers {
                let mut pts = Vec::with_capacity(lists.len());
                for l in lists {
                    pts.push(l.iter().map(|[x, y]| Ok(Point::new(c.get(x)?, c.get(y)?))).collect::<Result<Vec<_>>>()?);
                }
                let set = ShapeSet::from_vertex_lists(layer.clone(), &pts).map_err(|(index, source)| {
                    LayoutError::Geometry { cell: rc.name.clone(), layer: layer.clone(), index, source }
                })?;
                cell.shapes.insert(layer.clone(), set);
            }
            for (k, ri) in rc.instances.iter().enumerate() {
                let name = ri.name.clone().unwrap_or_else(|| format!("{}_{k}", ri.cell));
                if ri.rot % 90 != 0 {
                    return Err(LayoutError::Rotation { cell: rc.name.clone(), instance: name, rot: ri.rot });
                }
                cell.instances.push(Instance {
                    name,
                    cell: ri.cell.clone(),
                    dx: c.opt(&ri.dx)?,
                    dy: c.opt(&ri.dy)?,
                    rot: ri.rot,
                    mirror: ri.mirror,
                });
            }
            for p in &rc.pins {
                cell.pins.push(Pin { net: p.net.clone(), layer: p.layer.clone(), at: Point::new(c.get(&p.x)?, c.get(&p.y)?) });
            }
            lib.insert(cell)?;
        }
        lib.validate(tech)?;
        Ok(lib)
    }

    pub fn to_json(&self) -> String {
        let num = |v: i64| Number::from(v);
        let raw = RawLibrary {
            schema_version: SCHEMA_VERSION,
            grid_nm: (self.grid_nm != 1).then_some(self.grid_nm),
            top: self.top.clone(),
            cells: self
                .cells
                .values()
                .map(|c| RawCell {
                    name: c.name.clone(),
                    layers: c
                        .shapes
                        .iter()
                        .map(|(k, s)| {
                            let lists = s
                                .polygons
                                .iter()
                                .map(|p| p.vertices().iter().map(|v| [num(v.x), num(v.y)]).collect())
                                .collect();
                            (k.clone(), lists)
                        })
                        .collect(),
                    instances: c
                        .instances
                        .iter()
                        .map(|i| RawInstance {
                            name: Some(i.name.clone()),
                            cell: i.cell.clone(),
                            dx: (i.dx != 0).then(|| num(i.dx)),
                            dy: (i.dy != 0).then(|| num(i.dy)),
                            rot: i.rot,
                            mirror: i.mirror,
                        })
                        .collect(),
                    pins: c
                        .pins
                        .iter()
                        .map(|p| RawPin { net: p.net.clone(), layer: p.layer.clone(), x: num(p.at.x), y: num(p.at.y) })
                        .collect(),
                })
                .collect(),
        };
        let mut s = String::new();
        write_value(&serde_json::to_value(&raw).expect("layout serializes"), 0, &mut s);
        s.push('\n');
        s
    }

    pub fn insert(&mut self, cell: Cell) -> Result<()> {
        if self.cells.contains_key(&cell.name) {
            return Err(LayoutError::DuplicateCell(cell.name));
        }
        self.cells.insert(cell.name.clone(), cell);
        Ok(())
    }

    pub fn cell(&self, name: &str) -> Option<&Cell> {
        self.cells.get(name)
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    /// The declared top, or the only cell nobody instantiates.
    pub fn top_cell(&self) -> Result<&str> {
        if let Some(t) = &self.top {
            return self.cells.get_key_value(t).map(|(k, _)| k.as_str()).ok_or_else(|| LayoutError::UnknownTop(t.clone()));
        }
        let used: BTreeSet<&str> = self.cells.values().flat_map(|c| c.instances.iter().map(|i| i.cell.as_str())).collect();
        let roots: Vec<&str> = self.cells.keys().map(String::as_str).filter(|c| !used.contains(c)).collect();
        match roots.as_slice() {
            [one] => Ok(one),
            [] => Err(LayoutError::AmbiguousTop("library is empty".into())),
            many => Err(LayoutError::AmbiguousTop(format!("candidates {}", many.join(", ")))),
        }
    }

    /// Checks layer names, instance references, acyclicity and pin placement.
    pub fn validate(&self, tech: &TechDb) -> Result<()> {
        for c in self.cells.values() {
            for layer in c.shapes.keys().chain(c.pins.iter().map(|p| &p.layer)) {
                if tech.layer(layer).is_none() {
                    return Err(LayoutError::UnknownLayer { cell: c.name.clone(), layer: layer.clone() });
                }
            }
            for i in &c.instances {
                if !self.cells.contains_key(&i.cell) {
                    return Err(LayoutError::UnknownCell { cell: i.cell.clone(), parent: c.name.clone() });
                }
            }
        }
        self.check_acyclic()?;
        for c in self.cells.values().filter(|c| !c.pins.is_empty()) {
            let wanted: BTreeSet<&str> = c.pins.iter().map(|p| p.layer.as_str()).collect();
            let mut flat: HashMap<&str, Vec<Polygon>> = HashMap::new();
            self.collect(c, &Transform::IDENTITY, &mut |layer, p| {
                if wanted.contains(layer) {
                    flat.entry(layer).or_default().push(p);
                }
            });
            for pin in &c.pins {
                let hit = flat.get(pin.layer.as_str()).is_some_and(|ps| ps.iter().any(|p| p.contains_point(pin.at)));
                if !hit {
                    return Err(LayoutError::PinOutside {
                        cell: c.name.clone(),
                        net: pin.net.clone(),
                        layer: pin.layer.clone(),
                        at: pin.at,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn visit<'a>(
            lib: &'a Library,
            name: &'a str,
            marks: &mut HashMap<&'a str, Mark>,
            stack: &mut Vec<&'a str>,
        ) -> Result<()> {
            match marks.get(name) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Open) => {
                    let from = stack.iter().position(|s| *s == name).unwrap_or(0);
                    let mut cyc: Vec<String> = stack[from..].iter().map(|s| s.to_string()).collect();
                    cyc.push(name.to_string());
                    return Err(LayoutError::Cycle(cyc));
                }
                None => {}
            }
            marks.insert(name, Mark::Open);
            stack.push(name);
            for i in &lib.cells[name].instances {
                visit(lib, &i.cell, marks, stack)?;
            }
            stack.pop();
            marks.insert(name, Mark::Done);
            Ok(())
        }
        let mut marks = HashMap::new();
        for name in self.cells.keys() {
            visit(self, name, &mut marks, &mut Vec::new())?;
        }
        Ok(())
    }

    fn collect<'a>(&'a self, cell: &'a Cell, t: &Transform, sink: &mut dyn FnMut(&'a str, Polygon)) {
        for (layer, set) in &cell.shapes {
            for p in &set.polygons {
                sink(layer, p.transform(t));
            }
        }
        for i in &cell.instances {
            let child = &self.cells[&i.cell];
            self.collect(child, &t.then_outer(&i.transform()), sink);
        }
    }

    fn collect_pins(&self, cell: &Cell, t: &Transform, prefix: &str, out: &mut Vec<FlatPin>) {
        for p in &cell.pins {
            let hard = prefix.is_empty();
            out.push(FlatPin { net: format!("{prefix}{}", p.net), layer: p.layer.clone(), at: t.apply(p.at), hard });
        }
        for i in &cell.instances {
            let child = &self.cells[&i.cell];
            let pre = format!("{prefix}{}/", i.name);
            self.collect_pins(child, &t.then_outer(&i.transform()), &pre, out);
        }
    }
}

/// Pin in the root frame. Pins of the root cell are `hard` (they name and
/// constrain nets); pins inherited from instances are hierarchical hints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlatPin {
    pub net: String,
    pub layer: String,
    pub at: Point,
    pub hard: bool,
}

/// Per-layer normalized geometry plus pins.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlatLayout {
    pub layers: BTreeMap<String, ShapeSet>,
    pub pins: Vec<FlatPin>,
}

pub fn flatten(lib: &Library, top: &str) -> Result<FlatLayout> {
    flatten_with(lib, top, Workers::default())
}

pub fn flatten_with(lib: &Library, top: &str, workers: Workers) -> Result<FlatLayout> {
    let root = lib.cell(top).ok_or_else(|| LayoutError::UnknownTop(top.to_string()))?;
    let mut raw: BTreeMap<&str, Vec<Polygon>> = BTreeMap::new();
    lib.collect(root, &Transform::IDENTITY, &mut |layer, p| raw.entry(layer).or_default().push(p));
    let sets: Vec<ShapeSet> = raw.into_iter().map(|(l, ps)| ShapeSet::new(l, ps)).collect();
    let mut pins = Vec::new();
    lib.collect_pins(root, &Transform::IDENTITY, "", &mut pins);
    pins.sort();
    Ok(FlatLayout { layers: normalize_all(sets, workers), pins })
}

fn normalize_all(sets: Vec<ShapeSet>, workers: Workers) -> BTreeMap<String, ShapeSet> {
    par::map(&sets, workers, normalize)
        .into_iter()
        .filter(|s| !s.is_empty())
        .map(|s| (s.layer.clone(), s))
        .collect()
}

impl FlatLayout {
    /// Builds a layout straight from shapes, normalizing each layer.
    pub fn from_shapes(sets: impl IntoIterator<Item = ShapeSet>) -> Self {
        let mut merged: BTreeMap<String, Vec<Polygon>> = BTreeMap::new();
        for s in sets {
            merged.entry(s.layer).or_default().extend(s.polygons);
        }
        let sets = merged.into_iter().map(|(l, ps)| ShapeSet::new(l, ps)).collect();
        Self { layers: normalize_all(sets, Workers::SINGLE), pins: Vec::new() }
    }

    pub fn with_pin(mut self, net: &str, layer: &str, x: i64, y: i64) -> Self {
        self.pins.push(FlatPin { net: net.into(), layer: layer.into(), at: Point::new(x, y), hard: true });
        self.pins.sort();
        self
    }

    pub fn layer(&self, name: &str) -> Option<&ShapeSet> {
        self.layers.get(name)
    }

    pub fn shapes(&self, name: &str) -> &[Polygon] {
        self.layers.get(name).map(|s| s.polygons.as_slice()).unwrap_or(&[])
    }

    pub fn region(&self, name: &str) -> Region {
        self.layers.get(name).map(|s| s.region()).unwrap_or_default()
    }

    /// Union over several layers.
    pub fn region_of<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Region {
        let rects: Vec<Rect> =
            names.into_iter().flat_map(|n| self.shapes(n).iter().flat_map(Polygon::rects)).collect();
        Region::from_rects(rects)
    }

    pub fn is_empty(&self) -> bool {
        self.layers.values().all(ShapeSet::is_empty)
    }

    pub fn bbox(&self) -> Option<Rect> {
        self.layers.values().filter_map(ShapeSet::bbox).reduce(|a, b| a.union_bbox(&b))
    }

    pub fn translate(&self, dx: i64, dy: i64) -> FlatLayout {
        FlatLayout {
            layers: self.layers.iter().map(|(k, s)| (k.clone(), s.translate(dx, dy))).collect(),
            pins: self.pins.iter().map(|p| FlatPin { at: Point::new(p.at.x + dx, p.at.y + dy), ..p.clone() }).collect(),
        }
    }

    pub fn shape_count(&self) -> usize {
        self.layers.values().map(|s| s.polygons.len()).sum()
    }
}
