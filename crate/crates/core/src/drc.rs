//! Design rule checking over a flattened layout.
//!
//! Each rule runs independently (optionally on a worker pool); the merged
//! report is sorted so it does not depend on evaluation order.

use serde::Serialize;

use crate::geometry::{isqrt, min_distance2, Polygon, Rect, Region, SpatialIndex};
use crate::layout::FlatLayout;
use crate::par::{self, Workers};
use crate::techdb::{Color, FinDirection, Rule, RuleKind, TechDb};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub rule_id: String,
    pub layers: Vec<String>,
    /// Bounding box of the offending geometry, `[x0, y0, x1, y1]`.
    #[serde(serialize_with = "ser_rect")]
    pub location: Rect,
    /// nm, nm^2 or a vertex count, depending on the rule kind.
    pub measured: i64,
    pub required: i64,
    pub message: String,
}

fn ser_rect<S: serde::Serializer>(r: &Rect, s: S) -> Result<S::Ok, S::Error> {
    [r.lo.x, r.lo.y, r.hi.x, r.hi.y].serialize(s)
}

impl Violation {
    fn sort_key(&self) -> (&str, i64, i64, i64, i64, &[String], i64, &str) {
        let l = &self.location;
        (&self.rule_id, l.lo.x, l.lo.y, l.hi.x, l.hi.y, &self.layers, self.measured, &self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DrcReport {
    pub rules_checked: usize,
    pub violations: Vec<Violation>,
}

impl DrcReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Distinct rule ids that fired, sorted.
    pub fn rule_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.violations.iter().map(|v| v.rule_id.as_str()).collect();
        ids.dedup();
        ids
    }
}

pub fn run_drc(layout: &FlatLayout, tech: &TechDb) -> DrcReport {
    run_drc_with(layout, tech, Workers::default())
}

pub fn run_drc_with(layout: &FlatLayout, tech: &TechDb, workers: Workers) -> DrcReport {
    let rules = tech.rules();
    let per_rule = par::map(rules, workers, |r| check_rule(layout, tech, r));
    let mut violations: Vec<Violation> = per_rule.into_iter().flatten().collect();
    violations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    violations.dedup();
    DrcReport { rules_checked: rules.len(), violations }
}

pub fn check_rule(layout: &FlatLayout, tech: &TechDb, rule: &Rule) -> Vec<Violation> {
    match &rule.kind {
        RuleKind::MinWidth { .. } => check_min_width(layout, rule),
        RuleKind::MinSpacingSameColor { .. } | RuleKind::MinSpacingDiffColor { .. } => {
            check_min_spacing(layout, tech, rule)
        }
        RuleKind::WidthQuantized { .. } => check_quantized_width(layout, tech, rule),
        RuleKind::DiscreteLength { .. } => check_discrete_gate_length(layout, tech, rule),
        RuleKind::Enclosure { .. } | RuleKind::Overlap { .. } | RuleKind::MinArea { .. } => {
            check_enclosure_overlap_area(layout, rule)
        }
        RuleKind::RectOnly => check_rect_only(layout, rule),
    }
}

fn shapes<'a>(layout: &'a FlatLayout, rule: &'a Rule) -> impl Iterator<Item = (&'a str, &'a Polygon)> {
    rule.layers.iter().flat_map(move |l| layout.shapes(l).iter().map(move |p| (l.as_str(), p)))
}

fn violation(rule: &Rule, layers: &[&str], location: Rect, measured: i64, required: i64, message: String) -> Violation {
    let mut layers: Vec<String> = layers.iter().map(|s| s.to_string()).collect();
    layers.sort();
    layers.dedup();
    Violation { rule_id: rule.id.clone(), layers, location, measured, required, message }
}

pub fn check_min_width(layout: &FlatLayout, rule: &Rule) -> Vec<Violation> {
    let RuleKind::MinWidth { value } = rule.kind else { return Vec::new() };
    shapes(layout, rule)
        .filter_map(|(layer, p)| {
            let w = p.min_width();
            (w < value).then(|| {
                violation(rule, &[layer], p.bbox(), w, value, format!("{layer} width {w} nm < {value} nm"))
            })
        })
        .collect()
}

/// Pairs of distinct shapes closer than the rule value. Touching or
/// overlapping shapes are one electrical shape and are exempt.
pub fn check_min_spacing(layout: &FlatLayout, tech: &TechDb, rule: &Rule) -> Vec<Violation> {
    let (value, same) = match rule.kind {
        RuleKind::MinSpacingSameColor { value } => (value, true),
        RuleKind::MinSpacingDiffColor { value } => (value, false),
        _ => return Vec::new(),
    };
    let items: Vec<(&str, &Polygon, Vec<Rect>)> = shapes(layout, rule).map(|(l, p)| (l, p, p.rects())).collect();
    let index = SpatialIndex::new(items.iter().enumerate().map(|(i, (_, p, _))| (p.bbox(), i)));
    let limit = (value as i128) * (value as i128);
    let mut out = Vec::new();
    for (i, (la, pa, ra)) in items.iter().enumerate() {
        for j in index.query(&pa.bbox(), value) {
            if j <= i {
                continue;
            }
            let (lb, pb, rb) = &items[j];
            let pair_ok = if same {
                la == lb
            } else {
                let (ca, cb) = (tech.color(la), tech.color(lb));
                tech.same_family(la, lb) && ca != Color::None && cb != Color::None && ca != cb
            };
            if !pair_ok {
                continue;
            }
            let d2 = min_distance2(ra, rb);
            if d2 > 0 && d2 < limit {
                let d = isqrt(d2);
                let loc = pa.bbox().union_bbox(&pb.bbox());
                let what = if same { "same-color" } else { "different-color" };
                out.push(violation(rule, &[la, lb], loc, d, value, format!("{what} spacing {d} nm < {value} nm")));
            }
        }
    }
    out
}

/// Drawn size across the fins.
fn across_fins(tech: &TechDb, r: &Rect) -> i64 {
    match tech.fin().fin_direction {
        FinDirection::Horizontal => r.height(),
        FinDirection::Vertical => r.width(),
    }
}

pub fn check_quantized_width(layout: &FlatLayout, tech: &TechDb, rule: &Rule) -> Vec<Violation> {
    let RuleKind::WidthQuantized { base, step } = rule.kind else { return Vec::new() };
    shapes(layout, rule)
        .filter_map(|(layer, p)| {
            let r = p.as_rect()?;
            let w = across_fins(tech, &r);
            let ok = w >= base && (w - base) % step == 0;
            (!ok).then(|| {
                let k = ((w - base) as f64 / step as f64).round().max(0.0) as i64;
                let nearest = base + k * step;
                violation(rule, &[layer], r, w, nearest, format!("{layer} width {w} nm is not {base} + k*{step} nm"))
            })
        })
        .collect()
}

/// Gate length along the channel: the gate's chord across each active row
/// it crosses, or its smaller dimension when it crosses none.
pub fn gate_lengths(p: &Polygon, active: &Region, dir: FinDirection) -> Vec<i64> {
    let flip = |r: Region| if dir == FinDirection::Vertical { r.transpose() } else { r };
    let g = flip(p.region());
    let act = flip(active.clone());
    let mut out = Vec::new();
    for chan in g.intersect(&act).components() {
        let Some(cb) = chan.bbox() else { continue };
        let Some(gb) = g.bbox() else { continue };
        let band = Region::from_rect(Rect::new(gb.lo.x, cb.lo.y, gb.hi.x, cb.hi.y));
        for piece in g.intersect(&band).components() {
            if !piece.intersect(&chan).is_empty() {
                out.extend(piece.min_span());
            }
        }
    }
    if out.is_empty() {
        out.push(p.min_width());
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn check_discrete_gate_length(layout: &FlatLayout, tech: &TechDb, rule: &Rule) -> Vec<Violation> {
    let RuleKind::DiscreteLength { values, reference } = &rule.kind else { return Vec::new() };
    let active = reference.as_deref().map(|r| layout.region_of(tech.color_family(r).iter().map(String::as_str)));
    let active = active.unwrap_or_default();
    let allowed = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
    let mut out = Vec::new();
    for (layer, p) in shapes(layout, rule) {
        for l in gate_lengths(p, &active, tech.fin().fin_direction) {
            if !values.contains(&l) {
                let nearest = *values.iter().min_by_key(|v| ((**v - l).abs(), **v)).unwrap();
                let msg = format!("{layer} gate length {l} nm not in {{{allowed}}}");
                out.push(violation(rule, &[layer], p.bbox(), l, nearest, msg));
            }
        }
    }
    out
}

/// Largest margin `e <= cap` with `inner` grown by `e` inside `outer`, or -1.
pub fn enclosure_margin(inner: &Region, outer: &Region, cap: i64) -> i64 {
    let fits = |e: i64| inner.grow(e).subtract(outer).is_empty();
    if !fits(0) {
        return -1;
    }
    let (mut lo, mut hi) = (0, cap);
    if fits(hi) {
        return hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn check_enclosure_overlap_area(layout: &FlatLayout, rule: &Rule) -> Vec<Violation> {
    let mut out = Vec::new();
    match &rule.kind {
        RuleKind::MinArea { value } => {
            for (layer, p) in shapes(layout, rule) {
                let a = p.area();
                if a < *value as i128 {
                    let msg = format!("{layer} area {a} nm^2 < {value} nm^2");
                    out.push(violation(rule, &[layer], p.bbox(), a as i64, *value, msg));
                }
            }
        }
        RuleKind::Enclosure { outer, value } => {
            let outer_region = layout.region_of(outer.iter().map(String::as_str));
            for (layer, p) in shapes(layout, rule) {
                let m = enclosure_margin(&p.region(), &outer_region, *value);
                if m < *value {
                    let msg = if m < 0 {
                        format!("{layer} shape not enclosed by {}", outer.join("/"))
                    } else {
                        format!("{layer} enclosure {m} nm < {value} nm")
                    };
                    out.push(violation(rule, &[layer], p.bbox(), m, *value, msg));
                }
            }
        }
        RuleKind::Overlap { other, value } => {
            let other_region = layout.region_of(other.iter().map(String::as_str));
            for (layer, p) in shapes(layout, rule) {
                let a = p.region().intersect(&other_region).area();
                if a < *value as i128 {
                    let msg = format!("{layer} overlap with {} is {a} nm^2 < {value} nm^2", other.join("/"));
                    out.push(violation(rule, &[layer], p.bbox(), a as i64, *value, msg));
                }
            }
        }
        _ => {}
    }
    out
}

pub fn check_rect_only(layout: &FlatLayout, rule: &Rule) -> Vec<Violation> {
    shapes(layout, rule)
        .filter(|(_, p)| !p.is_rect())
        .map(|(layer, p)| {
            let n = p.vertices().len() as i64;
            violation(rule, &[layer], p.bbox(), n, 4, format!("{layer} shape has {n} vertices; only rectangles allowed"))
        })
        .collect()
}
