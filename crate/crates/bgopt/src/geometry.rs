//! Planar geometry for footprints and intervention zones: simple polygons,
//! area and containment tests, rectangle clipping, and rasterisation onto a
//! grid frame. Buildings load from a GeoJSON feature collection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::raster::Grid;
use crate::{Error, Result};

/// A simple closed polygon. The closing edge from last to first vertex is
/// implicit; vertices may wind either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::input("polygon needs at least three vertices"));
        }
        Ok(Polygon { vertices })
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon { vertices: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)] }
    }

    /// Unsigned shoelace area.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (x0, y0) = self.vertices[i];
            let (x1, y1) = self.vertices[(i + 1) % n];
            acc += x0 * y1 - x1 * y0;
        }
        (acc / 2.0).abs()
    }

    /// Even-odd containment test; points exactly on an edge may land on
    /// either side.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = self.vertices[i];
            let (xj, yj) = self.vertices[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let mut bb = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.vertices {
            bb.0 = bb.0.min(x);
            bb.1 = bb.1.min(y);
            bb.2 = bb.2.max(x);
            bb.3 = bb.3.max(y);
        }
        bb
    }

    /// Area of the intersection with an axis-aligned rectangle, via
    /// Sutherland-Hodgman clipping against each rectangle half-plane.
    pub fn clip_area(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        let mut poly = self.vertices.clone();
        // inside predicates and segment intersections per rectangle edge
        let clips: [(Box<dyn Fn(f64, f64) -> bool>, Box<dyn Fn((f64, f64), (f64, f64)) -> (f64, f64)>); 4] = [
            (
                Box::new(move |x, _| x >= x0),
                Box::new(move |a, b| intersect_vertical(a, b, x0)),
            ),
            (
                Box::new(move |x, _| x <= x1),
                Box::new(move |a, b| intersect_vertical(a, b, x1)),
            ),
            (
                Box::new(move |_, y| y >= y0),
                Box::new(move |a, b| intersect_horizontal(a, b, y0)),
            ),
            (
                Box::new(move |_, y| y <= y1),
                Box::new(move |a, b| intersect_horizontal(a, b, y1)),
            ),
        ];
        for (inside, cross) in &clips {
            if poly.is_empty() {
                return 0.0;
            }
            let mut out = Vec::with_capacity(poly.len() + 4);
            for i in 0..poly.len() {
                let cur = poly[i];
                let prev = poly[(i + poly.len() - 1) % poly.len()];
                let cur_in = inside(cur.0, cur.1);
                let prev_in = inside(prev.0, prev.1);
                if cur_in {
                    if !prev_in {
                        out.push(cross(prev, cur));
                    }
                    out.push(cur);
                } else if prev_in {
                    out.push(cross(prev, cur));
                }
            }
            poly = out;
        }
        if poly.len() < 3 {
            return 0.0;
        }
        let n = poly.len();
        let mut acc = 0.0;
        for i in 0..n {
            let (ax, ay) = poly[i];
            let (bx, by) = poly[(i + 1) % n];
            acc += ax * by - bx * ay;
        }
        (acc / 2.0).abs()
    }

    /// Cells of the grid frame with positive-area overlap with the polygon.
    /// Cells merely touching the boundary (zero overlap area) are excluded.
    pub fn rasterize(&self, grid: &Grid) -> Vec<(usize, usize)> {
        let (bx0, by0, bx1, by1) = self.bounding_box();
        let mut cells = Vec::new();
        let area_eps = 1e-9 * grid.cellsize * grid.cellsize;
        for row in 0..grid.rows {
            for col in 0..grid.cols {
                let (x0, y0, x1, y1) = grid.cell_extent(row, col);
                if x1 < bx0 || x0 > bx1 || y1 < by0 || y0 > by1 {
                    continue;
                }
                if self.clip_area(x0, y0, x1, y1) > area_eps {
                    cells.push((row, col));
                }
            }
        }
        cells
    }
}

fn intersect_vertical(a: (f64, f64), b: (f64, f64), x: f64) -> (f64, f64) {
    let t = (x - a.0) / (b.0 - a.0);
    (x, a.1 + t * (b.1 - a.1))
}

fn intersect_horizontal(a: (f64, f64), b: (f64, f64), y: f64) -> (f64, f64) {
    let t = (y - a.1) / (b.1 - a.1);
    (a.0 + t * (b.0 - a.0), y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UseClass {
    Residential,
    Commercial,
}

impl std::fmt::Display for UseClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UseClass::Residential => write!(f, "residential"),
            UseClass::Commercial => write!(f, "commercial"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Building {
    pub id: String,
    pub footprint: Polygon,
    pub use_class: UseClass,
    /// Buffer zone extent in computational cells (Chebyshev rings).
    pub buffer_cells: usize,
}

/// Load buildings from a GeoJSON FeatureCollection of polygons carrying
/// `id` and `use_class` properties (optional `buffer_cells`, defaulting to
/// the problem-wide setting).
pub fn load_buildings(path: &Path, default_buffer_cells: usize) -> Result<Vec<Building>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_buildings(&text, default_buffer_cells)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

pub fn parse_buildings(
    text: &str,
    default_buffer_cells: usize,
) -> std::result::Result<Vec<Building>, String> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or("expected a FeatureCollection with a features array")?;
    let mut out = Vec::with_capacity(features.len());
    for (i, feat) in features.iter().enumerate() {
        let props = feat.get("properties").cloned().unwrap_or(serde_json::json!({}));
        let id = props
            .get("id")
            .map(|v| match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .unwrap_or_else(|| format!("building_{i}"));
        let use_class = match props.get("use_class").and_then(|v| v.as_str()) {
            Some("residential") => UseClass::Residential,
            Some("commercial") => UseClass::Commercial,
            Some(other) => return Err(format!("feature {id}: unknown use_class {other:?}")),
            None => return Err(format!("feature {id}: missing use_class property")),
        };
        let buffer_cells = props
            .get("buffer_cells")
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
            .unwrap_or(default_buffer_cells);
        let geom = feat.get("geometry").ok_or_else(|| format!("feature {id}: missing geometry"))?;
        if geom.get("type").and_then(|t| t.as_str()) != Some("Polygon") {
            return Err(format!("feature {id}: only Polygon geometry is supported"));
        }
        let rings = geom
            .get("coordinates")
            .and_then(|c| c.as_array())
            .ok_or_else(|| format!("feature {id}: missing coordinates"))?;
        let outer = rings
            .first()
            .and_then(|r| r.as_array())
            .ok_or_else(|| format!("feature {id}: empty polygon"))?;
        let mut vertices: Vec<(f64, f64)> = Vec::with_capacity(outer.len());
        for v in outer {
            let pair = v.as_array().ok_or_else(|| format!("feature {id}: bad coordinate"))?;
            if pair.len() < 2 {
                return Err(format!("feature {id}: bad coordinate"));
            }
            vertices.push((
                pair[0].as_f64().ok_or_else(|| format!("feature {id}: bad coordinate"))?,
                pair[1].as_f64().ok_or_else(|| format!("feature {id}: bad coordinate"))?,
            ));
        }
        // GeoJSON rings repeat the first vertex at the end
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let footprint =
            Polygon::new(vertices).map_err(|e| format!("feature {id}: {e}"))?;
        out.push(Building { id, footprint, use_class, buffer_cells });
    }
    Ok(out)
}

/// Serialise buildings as a GeoJSON FeatureCollection (used by the fixture
/// writers).
pub fn buildings_to_geojson(buildings: &[Building]) -> String {
    let features: Vec<serde_json::Value> = buildings
        .iter()
        .map(|b| {
            let mut ring: Vec<Vec<f64>> =
                b.footprint.vertices.iter().map(|&(x, y)| vec![x, y]).collect();
            if let Some(first) = ring.first().cloned() {
                ring.push(first);
            }
            serde_json::json!({
                "type": "Feature",
                "properties": {
                    "id": b.id,
                    "use_class": b.use_class,
                    "buffer_cells": b.buffer_cells,
                },
                "geometry": { "type": "Polygon", "coordinates": [ring] }
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("geojson serialisation cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_area() {
        let p = Polygon::rectangle(0.0, 0.0, 4.0, 3.0);
        assert_eq!(p.area(), 12.0);
        let tri = Polygon::new(vec![(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]).unwrap();
        assert_eq!(tri.area(), 2.0);
    }

    #[test]
    fn containment() {
        let p = Polygon::rectangle(0.0, 0.0, 2.0, 2.0);
        assert!(p.contains(1.0, 1.0));
        assert!(!p.contains(3.0, 1.0));
        // concave L-shape
        let l = Polygon::new(vec![
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ])
        .unwrap();
        assert!(l.contains(0.5, 2.5));
        assert!(!l.contains(2.0, 2.0));
    }

    #[test]
    fn clip_area_cases() {
        let p = Polygon::rectangle(0.0, 0.0, 2.0, 2.0);
        assert_eq!(p.clip_area(0.0, 0.0, 2.0, 2.0), 4.0);
        assert_eq!(p.clip_area(1.0, 1.0, 3.0, 3.0), 1.0);
        // edge-touching rectangles share zero area
        assert_eq!(p.clip_area(2.0, 0.0, 4.0, 2.0), 0.0);
        assert_eq!(p.clip_area(5.0, 5.0, 6.0, 6.0), 0.0);
        let tri = Polygon::new(vec![(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]).unwrap();
        assert!((tri.clip_area(0.0, 0.0, 1.0, 1.0) - 0.875).abs() < 1e-12);
    }

    #[test]
    fn rasterize_single_cell_footprint() {
        let grid = Grid::filled(5, 5, 0.0, 0.0, 1.0, 0.0);
        // polygon exactly covering cell (2, 2): x in [2,3], y in [2,3]
        let p = Polygon::rectangle(2.0, 2.0, 3.0, 3.0);
        assert_eq!(p.rasterize(&grid), vec![(2, 2)]);
        // outside the grid entirely
        let q = Polygon::rectangle(10.0, 10.0, 11.0, 11.0);
        assert!(q.rasterize(&grid).is_empty());
    }

    #[test]
    fn geojson_round_trip() {
        let buildings = vec![
            Building {
                id: "b1".into(),
                footprint: Polygon::rectangle(1.0, 1.0, 3.0, 2.0),
                use_class: UseClass::Residential,
                buffer_cells: 1,
            },
            Building {
                id: "b2".into(),
                footprint: Polygon::new(vec![(4.0, 4.0), (6.0, 4.0), (5.0, 6.0)]).unwrap(),
                use_class: UseClass::Commercial,
                buffer_cells: 2,
            },
        ];
        let text = buildings_to_geojson(&buildings);
        let parsed = parse_buildings(&text, 1).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].id, "b1");
        assert_eq!(parsed[0].use_class, UseClass::Residential);
        assert_eq!(parsed[1].buffer_cells, 2);
        assert_eq!(parsed[1].footprint.vertices.len(), 3);

        assert!(parse_buildings("{}", 1).is_err());
        assert!(parse_buildings(
            r#"{"features": [{"geometry": {"type": "Point", "coordinates": [0, 0]}, "properties": {"use_class": "residential"}}]}"#,
            1
        )
        .is_err());
    }
}
