//! Building-level flood exposure analysis: buffer-zone depth statistics,
//! the four-class exposure likelihood criteria, depth-damage curves, and the
//! two flood-risk metrics (high-exposure building count or expected cost of
//! damages).

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::geometry::{Building, UseClass};
use crate::raster::DepthGrid;
use crate::{Error, Result};

/// Exposure likelihood class from mean and 90th-percentile buffer depths.
/// Thresholds are 0.10 m on the mean and 0.30 m on the percentile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExposureClass {
    Low,
    MediumI,
    MediumII,
    High,
}

/// Classification criteria. The `(mean >= 0.30, p90 < 0.30)` corner is
/// mapped to `MediumII`: a sub-threshold 90th percentile excludes `High`.
pub fn classify_exposure(mean_depth: f64, p90_depth: f64) -> ExposureClass {
    if p90_depth >= 0.30 {
        if mean_depth >= 0.10 {
            ExposureClass::High
        } else {
            ExposureClass::MediumI
        }
    } else if mean_depth >= 0.10 {
        ExposureClass::MediumII
    } else {
        ExposureClass::Low
    }
}

/// Nearest-rank 90th percentile: the value at 1-based index `ceil(0.9 n)` of
/// the ascending sort.
pub fn percentile_90(depths: &[f64]) -> Result<f64> {
    if depths.is_empty() {
        return Err(Error::input("percentile of an empty depth multiset"));
    }
    let mut sorted = depths.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let rank = ((0.9 * sorted.len() as f64).ceil() as usize).max(1);
    Ok(sorted[rank - 1])
}

/// Cells within Chebyshev distance `k` of any footprint cell, excluding the
/// footprint cells themselves. Footprint cells are the grid cells sharing
/// positive area with the building polygon; a footprint outside the grid
/// yields an empty set.
pub fn buffer_cells(building: &Building, grid: &DepthGrid, k: usize) -> Vec<(usize, usize)> {
    let footprint: BTreeSet<(usize, usize)> =
        building.footprint.rasterize(grid).into_iter().collect();
    let mut ring = BTreeSet::new();
    let k = k as isize;
    for &(r, c) in &footprint {
        for dr in -k..=k {
            for dc in -k..=k {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if grid.in_bounds(nr, nc) {
                    ring.insert((nr as usize, nc as usize));
                }
            }
        }
    }
    ring.difference(&footprint).copied().collect()
}

/// Depth statistics over a building's buffer zone. `None` when the buffer is
/// empty or entirely nodata; such buildings are excluded from the analysis
/// and treated as `Low`.
pub fn buffer_depth_stats(
    building: &Building,
    grid: &DepthGrid,
) -> Option<(f64, f64)> {
    let cells = buffer_cells(building, grid, building.buffer_cells.max(1));
    let depths: Vec<f64> = cells
        .iter()
        .filter(|&&(r, c)| !grid.is_nodata(r, c))
        .map(|&(r, c)| grid.get(r, c))
        .collect();
    if depths.is_empty() {
        return None;
    }
    let mean = depths.iter().sum::<f64>() / depths.len() as f64;
    let p90 = percentile_90(&depths).expect("non-empty by construction");
    Some((mean, p90))
}

/// Piecewise-linear depth-damage curve (depth m -> damages in £),
/// non-decreasing in depth, clamped at both ends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DamageCurve {
    /// `(depth, cost)` knots sorted by depth.
    pub points: Vec<(f64, f64)>,
}

impl DamageCurve {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("damage curve needs at least one point"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::input("damage curve must be non-decreasing in depth"));
        }
        Ok(DamageCurve { points })
    }

    pub fn damages(&self, depth: f64) -> f64 {
        let pts = &self.points;
        if depth <= pts[0].0 {
            return pts[0].1;
        }
        if depth >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        for w in pts.windows(2) {
            let ((d0, c0), (d1, c1)) = (w[0], w[1]);
            if depth <= d1 {
                let t = if d1 > d0 { (depth - d0) / (d1 - d0) } else { 0.0 };
                return c0 + t * (c1 - c0);
            }
        }
        unreachable!("knots cover the interpolation range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMetric {
    /// Number of buildings classified High.
    HighCount,
    /// Sum of per-building expected damages; only High-class buildings
    /// contribute (lower classes are excluded as minor).
    ExpectedDamages,
}

/// Per-building exposure assessment, exported by the evaluate subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct BuildingExposure {
    pub id: String,
    pub use_class: UseClass,
    pub mean_depth: f64,
    pub p90_depth: f64,
    pub class: ExposureClass,
    pub damages: f64,
}

/// Classify every building against the depth grid and aggregate the chosen
/// risk metric. Buildings with empty buffers count as Low with zero depth
/// statistics.
pub fn assess_buildings(
    grid: &DepthGrid,
    buildings: &[Building],
    metric: RiskMetric,
    damage_curves: &HashMap<UseClass, DamageCurve>,
) -> Result<(f64, Vec<BuildingExposure>)> {
    let mut detail = Vec::with_capacity(buildings.len());
    let mut total = 0.0;
    for b in buildings {
        let stats = buffer_depth_stats(b, grid);
        let (mean, p90) = stats.unwrap_or((0.0, 0.0));
        let class = match stats {
            Some(_) => classify_exposure(mean, p90),
            None => ExposureClass::Low,
        };
        let damages = if class == ExposureClass::High {
            match metric {
                RiskMetric::HighCount => 0.0,
                RiskMetric::ExpectedDamages => {
                    let curve = damage_curves.get(&b.use_class).ok_or_else(|| {
                        Error::config(format!(
                            "no damage curve configured for use class {}",
                            b.use_class
                        ))
                    })?;
                    curve.damages(mean)
                }
            }
        } else {
            0.0
        };
        match metric {
            RiskMetric::HighCount => {
                if class == ExposureClass::High {
                    total += 1.0;
                }
            }
            RiskMetric::ExpectedDamages => total += damages,
        }
        detail.push(BuildingExposure {
            id: b.id.clone(),
            use_class: b.use_class,
            mean_depth: mean,
            p90_depth: p90,
            class,
            damages,
        });
    }
    Ok((total, detail))
}

/// Flood-risk objective value for a depth grid.
pub fn risk_metric(
    grid: &DepthGrid,
    buildings: &[Building],
    metric: RiskMetric,
    damage_curves: &HashMap<UseClass, DamageCurve>,
) -> Result<f64> {
    assess_buildings(grid, buildings, metric, damage_curves).map(|(total, _)| total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use crate::raster::Grid;

    #[test]
    fn classification_table() {
        assert_eq!(classify_exposure(0.05, 0.20), ExposureClass::Low);
        assert_eq!(classify_exposure(0.05, 0.35), ExposureClass::MediumI);
        assert_eq!(classify_exposure(0.15, 0.20), ExposureClass::MediumII);
        assert_eq!(classify_exposure(0.15, 0.35), ExposureClass::High);
        // exact thresholds belong to the >= branches
        assert_eq!(classify_exposure(0.10, 0.30), ExposureClass::High);
        // the open corner: mean over 0.30 but p90 below threshold
        assert_eq!(classify_exposure(0.35, 0.20), ExposureClass::MediumII);
    }

    #[test]
    fn classification_is_total_on_lattice() {
        // every point on a 1 cm lattice over [0, 2 m]^2 gets exactly one class
        for mi in 0..=200 {
            for pi in 0..=200 {
                let _ = classify_exposure(mi as f64 / 100.0, pi as f64 / 100.0);
            }
        }
    }

    #[test]
    fn nearest_rank_percentile() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(percentile_90(&v).unwrap(), 0.9);
        assert_eq!(percentile_90(&[0.4; 6]).unwrap(), 0.4);
        assert_eq!(percentile_90(&[0.7]).unwrap(), 0.7);
        assert!(percentile_90(&[]).is_err());
    }

    fn one_cell_building(id: &str, r: usize, c: usize, grid: &Grid, k: usize) -> Building {
        let (x0, y0, x1, y1) = grid.cell_extent(r, c);
        Building {
            id: id.into(),
            footprint: Polygon::rectangle(x0, y0, x1, y1),
            use_class: UseClass::Residential,
            buffer_cells: k,
        }
    }

    #[test]
    fn buffer_ring_sizes() {
        let grid = Grid::filled(9, 9, 0.0, 0.0, 1.0, 0.0);
        let b = one_cell_building("b", 4, 4, &grid, 1);
        let ring = buffer_cells(&b, &grid, 1);
        assert_eq!(ring.len(), 8);
        assert!(!ring.contains(&(4, 4)));
        // 5x5 block minus the centre cell
        assert_eq!(buffer_cells(&b, &grid, 2).len(), 24);

        let outside = Building {
            id: "out".into(),
            footprint: Polygon::rectangle(100.0, 100.0, 101.0, 101.0),
            use_class: UseClass::Commercial,
            buffer_cells: 1,
        };
        assert!(buffer_cells(&outside, &grid, 1).is_empty());
    }

    #[test]
    fn buffer_clips_at_grid_edge() {
        let grid = Grid::filled(9, 9, 0.0, 0.0, 1.0, 0.0);
        let corner = one_cell_building("c", 0, 0, &grid, 1);
        assert_eq!(buffer_cells(&corner, &grid, 1).len(), 3);
    }

    fn curve_40k() -> HashMap<UseClass, DamageCurve> {
        let mut m = HashMap::new();
        m.insert(
            UseClass::Residential,
            DamageCurve::new(vec![(0.0, 0.0), (0.5, 40_000.0), (1.0, 60_000.0)]).unwrap(),
        );
        m.insert(
            UseClass::Commercial,
            DamageCurve::new(vec![(0.0, 0.0), (0.5, 40_000.0), (1.0, 60_000.0)]).unwrap(),
        );
        m
    }

    #[test]
    fn zero_depth_grid_gives_zero_risk() {
        let grid = Grid::filled(9, 9, 0.0, 0.0, 1.0, 0.0);
        let b = vec![one_cell_building("b", 4, 4, &grid, 1)];
        let curves = curve_40k();
        assert_eq!(risk_metric(&grid, &b, RiskMetric::HighCount, &curves).unwrap(), 0.0);
        assert_eq!(risk_metric(&grid, &b, RiskMetric::ExpectedDamages, &curves).unwrap(), 0.0);
    }

    #[test]
    fn damages_from_mean_buffer_depth() {
        let mut grid = Grid::filled(9, 9, 0.0, 0.0, 1.0, 0.0);
        let b = one_cell_building("b", 4, 4, &grid, 1);
        // eight buffer cells with mean 0.5 and nearest-rank p90 0.6
        let depths = [0.3, 0.4, 0.45, 0.5, 0.5, 0.55, 0.6, 0.7];
        let ring = buffer_cells(&b, &grid, 1);
        for (&(r, c), &d) in ring.iter().zip(depths.iter()) {
            grid.set(r, c, d);
        }
        let (mean, p90) = buffer_depth_stats(&b, &grid).unwrap();
        assert!((mean - 0.5).abs() < 1e-12);
        assert_eq!(p90, 0.6);
        assert_eq!(classify_exposure(mean, p90), ExposureClass::High);
        let curves = curve_40k();
        let (total, detail) =
            assess_buildings(&grid, &[b], RiskMetric::ExpectedDamages, &curves).unwrap();
        assert!((total - 40_000.0).abs() < 1e-9);
        assert_eq!(detail[0].class, ExposureClass::High);
    }

    #[test]
    fn damages_are_additive_over_buildings() {
        let mut grid = Grid::filled(12, 12, 0.0, 0.0, 1.0, 0.5);
        grid.set(0, 0, 0.5);
        let b1 = one_cell_building("b1", 3, 3, &grid, 1);
        let b2 = one_cell_building("b2", 8, 8, &grid, 1);
        // flat-damage curve: every High building contributes the same cost
        let mut curves = HashMap::new();
        curves.insert(
            UseClass::Residential,
            DamageCurve::new(vec![(0.0, 25_000.0), (2.0, 25_000.0)]).unwrap(),
        );
        let single =
            risk_metric(&grid, std::slice::from_ref(&b1), RiskMetric::ExpectedDamages, &curves)
                .unwrap();
        let both = risk_metric(&grid, &[b1, b2], RiskMetric::ExpectedDamages, &curves).unwrap();
        assert!((both - 2.0 * single).abs() < 1e-9);
        assert!((single - 25_000.0).abs() < 1e-9);
    }

    #[test]
    fn low_and_medium_buildings_contribute_zero() {
        let mut grid = Grid::filled(9, 9, 0.0, 0.0, 1.0, 0.0);
        let b = one_cell_building("b", 4, 4, &grid, 1);
        // uniform 0.2 m: mean 0.2 >= 0.1 but p90 0.2 < 0.3 -> MediumII
        for (r, c) in buffer_cells(&b, &grid, 1) {
            grid.set(r, c, 0.2);
        }
        let curves = curve_40k();
        let (total, detail) =
            assess_buildings(&grid, &[b], RiskMetric::ExpectedDamages, &curves).unwrap();
        assert_eq!(detail[0].class, ExposureClass::MediumII);
        assert_eq!(total, 0.0);
    }

    #[test]
    fn damage_curve_interpolation_and_validation() {
        let c = DamageCurve::new(vec![(0.0, 0.0), (0.5, 40_000.0), (1.0, 60_000.0)]).unwrap();
        assert_eq!(c.damages(0.5), 40_000.0);
        assert_eq!(c.damages(0.25), 20_000.0);
        assert_eq!(c.damages(5.0), 60_000.0);
        assert_eq!(c.damages(-1.0), 0.0);
        assert!(DamageCurve::new(vec![(0.0, 10.0), (1.0, 5.0)]).is_err());
    }
}
