//! Area bookkeeping for comparing cell footprints.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::layout::FlatLayout;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    /// nm^2; zero for an empty layout.
    pub bbox_area_nm2: i64,
    /// Covered area per drawn layer, nm^2.
    pub layer_area_nm2: BTreeMap<String, i64>,
    pub total_layer_area_nm2: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_bbox_area_nm2: Option<i64>,
    /// Own bbox area over the reference's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_ratio: Option<f64>,
}

impl DensityReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("density report serializes");
        s.push('\n');
        s
    }
}

fn bbox_area(layout: &FlatLayout) -> i64 {
    layout.bbox().map_or(0, |b| b.area() as i64)
}

pub fn density_report(layout: &FlatLayout, reference: Option<&FlatLayout>) -> DensityReport {
    let layer_area_nm2: BTreeMap<String, i64> = layout
        .layers
        .iter()
        .filter(|(_, s)| !s.polygons.is_empty())
        .map(|(name, s)| (name.clone(), s.area() as i64))
        .collect();
    let own = bbox_area(layout);
    let reference_bbox_area_nm2 = reference.map(bbox_area);
    DensityReport {
        bbox_area_nm2: own,
        total_layer_area_nm2: layer_area_nm2.values().sum(),
        layer_area_nm2,
        reference_bbox_area_nm2,
        area_ratio: reference_bbox_area_nm2.filter(|&r| r > 0).map(|r| own as f64 / r as f64),
    }
}
