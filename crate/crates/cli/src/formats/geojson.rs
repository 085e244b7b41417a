//! GeoJSON cell polygons for GIS tools. Coordinates are in the grid's own
//! coordinate space.

use std::path::Path;

use conflict_seq_core::cluster::ClusterAssignment;
use conflict_seq_core::scdi::StateField;
use conflict_seq_core::{CellId, GridSpec};
use serde_json::{json, Map, Value};

use super::write_text;
use crate::error::Result;

fn polygon(grid: &GridSpec, cell: CellId, properties: Map<String, Value>) -> Value {
    let ring: Vec<[f64; 2]> = grid.cell_ring(cell).iter().map(|&(x, y)| [x, y]).collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "Polygon", "coordinates": [ring] },
        "properties": properties,
    })
}

fn collection(grid: &GridSpec, features: Vec<Value>) -> Value {
    json!({
        "type": "FeatureCollection",
        "coordinate_space": grid.coordinate_space,
        "features": features,
    })
}

fn cell_props(cell: CellId) -> Map<String, Value> {
    let mut p = Map::new();
    p.insert("cell_col".into(), cell.col.into());
    p.insert("cell_row".into(), cell.row.into());
    p
}

/// One polygon per grid cell with a property per year holding its state.
pub fn states(field: &StateField) -> Value {
    let grid = field.grid();
    let features = grid
        .cells()
        .map(|cell| {
            let mut p = cell_props(cell);
            for (t, s) in field.series(cell).iter().enumerate() {
                p.insert((field.year_min() + t as i32).to_string(), s.as_str().into());
            }
            polygon(grid, cell, p)
        })
        .collect();
    collection(grid, features)
}

/// Clustered cells with their label. With `never_violent_label`, every other
/// grid cell is included under that label.
pub fn clusters(
    grid: &GridSpec,
    assign: &ClusterAssignment,
    never_violent_label: Option<u32>,
) -> Value {
    let features = grid
        .cells()
        .filter_map(|cell| {
            let (label, nv) = match (assign.label_of(cell), never_violent_label) {
                (Some(l), _) => (l, false),
                (None, Some(l)) => (l, true),
                (None, None) => return None,
            };
            let mut p = cell_props(cell);
            p.insert("cluster".into(), label.into());
            p.insert("never_violent".into(), nv.into());
            Some(polygon(grid, cell, p))
        })
        .collect();
    collection(grid, features)
}

pub fn write(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string(value).expect("GeoJSON values serialise");
    text.push('\n');
    write_text(path, &text)
}
