//! Built-in synthetic problems. These drive the examples and the test
//! suites: a 12-zone paving problem whose 4,096-genotype space is cheap to
//! enumerate, a 2-zone toy, a small mixed problem with a detention basin,
//! and a large 507-bit layout shaped like a realistic catchment study.

use std::collections::HashMap;

use crate::cost::{detention_basin_schedule, permeable_paving_schedule, rain_garden_schedule};
use crate::encoding::{CharacteristicSpec, EncodingScheme, FeatureSpec, GenotypeLayout};
use crate::exposure::{DamageCurve, RiskMetric};
use crate::geometry::{Building, Polygon, UseClass};
use crate::problem::{
    EvaluatorKind, Infiltration, InterventionKind, InterventionSpec, ProblemDefinition,
};
use crate::raster::Grid;

fn standard_damage_curves() -> HashMap<UseClass, DamageCurve> {
    let mut curves = HashMap::new();
    curves.insert(
        UseClass::Residential,
        DamageCurve::new(vec![(0.0, 0.0), (0.3, 15_000.0), (1.0, 55_000.0), (2.0, 75_000.0)])
            .expect("static curve is valid"),
    );
    curves.insert(
        UseClass::Commercial,
        DamageCurve::new(vec![(0.0, 0.0), (0.3, 25_000.0), (1.0, 90_000.0), (2.0, 120_000.0)])
            .expect("static curve is valid"),
    );
    curves
}

/// Deterministic synthetic flood field: a deep pool towards the grid centre
/// with a short-wavelength ripple, everywhere above the High classification
/// thresholds so every building starts exposed.
fn synthetic_depths(rows: usize, cols: usize, xll: f64, yll: f64, cellsize: f64) -> Grid {
    let mut g = Grid::filled(rows, cols, xll, yll, cellsize, 0.0);
    let (cr, cc) = (rows as f64 / 2.0, cols as f64 / 2.0);
    for r in 0..rows {
        for c in 0..cols {
            let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
            let ripple = 0.05 * ((3 * r + 5 * c) % 7) as f64 / 6.0;
            g.set(r, c, 0.34 + 0.75 * (-d2 / 110.0).exp() + ripple);
        }
    }
    g
}

/// Twelve permeable-paving zones over a 32x24-cell synthetic flood field:
/// the tractable benchmark whose exhaustive objective set (4,096 vectors)
/// serves as the exact convergence oracle.
///
/// Zones tile the domain 4x3; every zone shelters two buildings whose
/// buffers it fully contains, so zone benefits compose independently.
/// Retention factors and per-zone areas are spread so cheap-effective,
/// expensive-effective and poor-value zones all occur.
pub fn twelve_zone_problem() -> ProblemDefinition {
    let rows = 24;
    let cols = 32;
    let cellsize = 2.0;
    let baseline = synthetic_depths(rows, cols, 0.0, 0.0, cellsize);

    // per-zone surrogate retention factors and cost areas
    let retention = [0.40, 0.65, 0.35, 0.80, 0.50, 0.38, 0.72, 0.45, 0.60, 0.36, 0.55, 0.70];
    let areas = [
        260.0, 980.0, 520.0, 1380.0, 640.0, 200.0, 1150.0, 430.0, 860.0, 330.0, 740.0, 1020.0,
    ];

    let mut features = Vec::new();
    let mut interventions = Vec::new();
    let mut buildings = Vec::new();
    for k in 0..12usize {
        let (zr, zc) = (k / 4, k % 4);
        let x0 = zc as f64 * 16.0;
        let y0 = zr as f64 * 16.0;
        let id = format!("paving_zone_{:02}", k + 1);
        features.push(FeatureSpec::zonal(&id));
        interventions.push(InterventionSpec {
            feature_id: id.clone(),
            kind: InterventionKind::PermeablePaving,
            zone: Some(Polygon::rectangle(x0 + 0.25, y0 + 0.25, x0 + 15.75, y0 + 15.75)),
            area_m2: Some(areas[k]),
            origin: None,
            infiltration: None,
            retention_factor: Some(retention[k]),
            downstream_cells: vec![],
        });
        // two one-cell buildings per zone, buffers inside the zone interior
        for (b, (lr, lc)) in [(0usize, (2usize, 2usize)), (1usize, (5, 5))] {
            let bx = x0 + lc as f64 * cellsize;
            let by = y0 + lr as f64 * cellsize;
            buildings.push(Building {
                id: format!("b_{:02}_{b}", k + 1),
                footprint: Polygon::rectangle(bx, by, bx + cellsize, by + cellsize),
                use_class: if (k + b) % 2 == 0 { UseClass::Residential } else { UseClass::Commercial },
                buffer_cells: 1,
            });
        }
    }

    let mut schedules = HashMap::new();
    schedules.insert(InterventionKind::PermeablePaving, permeable_paving_schedule());

    ProblemDefinition {
        layout: GenotypeLayout::new(features),
        interventions,
        schedules,
        risk_metric: RiskMetric::ExpectedDamages,
        damage_curves: standard_damage_curves(),
        buildings,
        buffer_cells: 1,
        evaluator: EvaluatorKind::Surrogate,
        external: None,
        baseline_depth: Some(baseline),
        dem: None,
    }
}

/// Two-zone toy on a 10x10 grid: four genotypes, a hand-checkable front.
pub fn two_zone_toy_problem() -> ProblemDefinition {
    let baseline = synthetic_depths(10, 10, 0.0, 0.0, 2.0);
    let mut features = Vec::new();
    let mut interventions = Vec::new();
    let mut buildings = Vec::new();
    for (k, (x0, retention, area)) in [(0.0, 0.4, 150.0), (10.0, 0.5, 420.0)].iter().enumerate() {
        let id = format!("zone_{}", k + 1);
        features.push(FeatureSpec::zonal(&id));
        interventions.push(InterventionSpec {
            feature_id: id,
            kind: InterventionKind::PermeablePaving,
            zone: Some(Polygon::rectangle(x0 + 0.25, 0.25, x0 + 9.75, 19.75)),
            area_m2: Some(*area),
            origin: None,
            infiltration: None,
            retention_factor: Some(*retention),
            downstream_cells: vec![],
        });
        let bx = x0 + 4.0;
        buildings.push(Building {
            id: format!("b{}", k + 1),
            footprint: Polygon::rectangle(bx, 8.0, bx + 2.0, 10.0),
            use_class: UseClass::Residential,
            buffer_cells: 1,
        });
    }
    let mut schedules = HashMap::new();
    schedules.insert(InterventionKind::PermeablePaving, permeable_paving_schedule());
    ProblemDefinition {
        layout: GenotypeLayout::new(features),
        interventions,
        schedules,
        risk_metric: RiskMetric::ExpectedDamages,
        damage_curves: standard_damage_curves(),
        buildings,
        buffer_cells: 1,
        evaluator: EvaluatorKind::Surrogate,
        external: None,
        baseline_depth: Some(baseline),
        dem: None,
    }
}

/// Small mixed problem: one paving zone, one rain garden and one detention
/// basin (8-bit layout, 256 genotypes) over a sloping terrain model.
pub fn basin_demo_problem() -> ProblemDefinition {
    let rows = 20;
    let cols = 20;
    let cellsize = 2.0;
    let baseline = synthetic_depths(rows, cols, 0.0, 0.0, cellsize);
    let mut dem = Grid::filled(rows, cols, 0.0, 0.0, cellsize, 0.0);
    for r in 0..rows {
        for c in 0..cols {
            // gentle northwest-to-southeast fall
            dem.set(r, c, 20.0 - 0.08 * (r as f64 * cellsize) - 0.05 * (c as f64 * cellsize));
        }
    }

    let features = vec![
        FeatureSpec::zonal("paving_zone_01"),
        FeatureSpec::zonal("rain_garden_01"),
        FeatureSpec::local(
            "basin_01",
            vec![
                CharacteristicSpec::continuous("depth", 0.0, 1.5, 4, EncodingScheme::Gray)
                    .expect("static spec"),
                CharacteristicSpec::continuous("surface_area", 314.0, 1577.0, 4, EncodingScheme::Gray)
                    .expect("static spec"),
                CharacteristicSpec::continuous("x_shift", -5.0, 5.0, 2, EncodingScheme::Gray)
                    .expect("static spec"),
                CharacteristicSpec::continuous("y_shift", -5.0, 5.0, 2, EncodingScheme::Gray)
                    .expect("static spec"),
            ],
        ),
    ];

    // the basin drains a plume of central cells
    let downstream: Vec<(usize, usize)> =
        (6..14).flat_map(|r| (6..14).map(move |c| (r, c))).collect();

    let interventions = vec![
        InterventionSpec {
            feature_id: "paving_zone_01".into(),
            kind: InterventionKind::PermeablePaving,
            zone: Some(Polygon::rectangle(0.25, 0.25, 15.75, 15.75)),
            area_m2: None,
            origin: None,
            infiltration: Some(Infiltration::PAVING),
            retention_factor: Some(0.45),
            downstream_cells: vec![],
        },
        InterventionSpec {
            feature_id: "rain_garden_01".into(),
            kind: InterventionKind::RainGarden,
            zone: Some(Polygon::rectangle(24.25, 24.25, 35.75, 35.75)),
            area_m2: Some(10.0),
            origin: None,
            infiltration: Some(Infiltration::RAIN_GARDEN),
            retention_factor: Some(0.55),
            downstream_cells: vec![],
        },
        InterventionSpec {
            feature_id: "basin_01".into(),
            kind: InterventionKind::DetentionBasin,
            zone: None,
            area_m2: None,
            origin: Some((28.0, 10.0)),
            infiltration: None,
            retention_factor: None,
            downstream_cells: downstream,
        },
    ];

    let buildings = vec![
        Building {
            id: "b1".into(),
            footprint: Polygon::rectangle(8.0, 8.0, 10.0, 10.0),
            use_class: UseClass::Residential,
            buffer_cells: 1,
        },
        Building {
            id: "b2".into(),
            footprint: Polygon::rectangle(18.0, 18.0, 20.0, 20.0),
            use_class: UseClass::Commercial,
            buffer_cells: 1,
        },
        Building {
            id: "b3".into(),
            footprint: Polygon::rectangle(28.0, 28.0, 30.0, 30.0),
            use_class: UseClass::Residential,
            buffer_cells: 1,
        },
    ];

    let mut schedules = HashMap::new();
    schedules.insert(InterventionKind::PermeablePaving, permeable_paving_schedule());
    schedules.insert(InterventionKind::RainGarden, rain_garden_schedule());
    schedules.insert(InterventionKind::DetentionBasin, detention_basin_schedule());

    ProblemDefinition {
        layout: GenotypeLayout::new(features),
        interventions,
        schedules,
        risk_metric: RiskMetric::ExpectedDamages,
        damage_curves: standard_damage_curves(),
        buildings,
        buffer_cells: 1,
        evaluator: EvaluatorKind::Surrogate,
        external: None,
        baseline_depth: Some(baseline),
        dem: Some(dem),
    }
}

/// Detention-basin encoding bounds for the large catchment layout:
/// `(easting, northing, depth, surface area, x-shift, y-shift)` with each
/// characteristic as `(min, max, step)`.
#[allow(clippy::type_complexity)]
pub const CATCHMENT_BASINS: [(f64, f64, (f64, f64, f64), (f64, f64, f64), (f64, f64, f64), (f64, f64, f64)); 22] = [
    (423481.0, 565021.0, (0.0, 1.5, 0.5), (314.0, 18051.0, 1182.0), (-5.0, 5.0, 3.33), (-10.0, 10.0, 6.67)),
    (423585.0, 564872.0, (0.0, 1.5, 0.5), (314.0, 1948.0, 545.0), (-5.0, 5.0, 3.33), (-10.0, 10.0, 6.67)),
    (423632.0, 564870.0, (0.0, 1.5, 0.5), (177.0, 707.0, 177.0), (-10.0, 10.0, 6.67), (-5.0, 5.0, 3.33)),
    (423472.0, 564856.0, (0.0, 1.5, 0.5), (314.0, 1576.0, 421.0), (-10.0, 10.0, 6.67), (-10.0, 10.0, 6.67)),
    (423512.0, 564740.0, (0.0, 1.5, 0.5), (314.0, 2341.0, 676.0), (-10.0, 10.0, 6.67), (-10.0, 10.0, 6.67)),
    (423484.0, 564765.0, (0.0, 1.5, 0.5), (314.0, 2341.0, 676.0), (-10.0, 10.0, 6.67), (-10.0, 10.0, 6.67)),
    (423638.0, 564721.0, (0.0, 1.5, 0.5), (177.0, 531.0, 118.0), (-5.0, 5.0, 3.33), (-5.0, 5.0, 3.33)),
    (423280.0, 565711.0, (0.0, 1.5, 0.5), (314.0, 6121.0, 830.0), (-163.86, 156.75, 10.34), (-30.89, 29.42, 4.02)),
    (423352.0, 565537.0, (0.0, 1.5, 0.5), (314.0, 7205.0, 984.0), (-102.74, 103.93, 6.67), (-31.92, 33.01, 4.33)),
    (423883.0, 565391.0, (0.0, 1.5, 0.5), (314.0, 1470.0, 385.0), (-16.62, 14.42, 4.43), (-70.73, 73.60, 4.65)),
    (422946.0, 565403.0, (0.0, 1.5, 0.5), (314.0, 18909.0, 1240.0), (-96.28, 103.18, 6.43), (-51.71, 53.95, 7.04)),
    (422843.0, 565955.0, (0.0, 1.5, 0.5), (314.0, 31858.0, 2103.0), (-67.64, 67.13, 4.35), (-85.16, 79.13, 5.30)),
    (423943.0, 564935.0, (0.0, 1.5, 0.5), (314.0, 5690.0, 768.0), (-73.84, 73.94, 4.77), (-28.37, 28.78, 3.81)),
    (423997.0, 565158.0, (0.0, 1.5, 0.5), (314.0, 6052.0, 820.0), (-29.26, 29.44, 3.91), (-95.75, 96.79, 6.21)),
    (423262.0, 565874.0, (0.0, 1.5, 0.5), (314.0, 6404.0, 870.0), (-32.22, 32.40, 4.31), (-30.29, 30.11, 4.03)),
    (422860.0, 565682.0, (0.0, 1.5, 0.5), (314.0, 6743.0, 918.0), (-105.03, 102.65, 6.70), (-30.88, 34.54, 4.36)),
    (423403.0, 565392.0, (0.0, 1.5, 0.5), (314.0, 3587.0, 1091.0), (-28.45, 28.85, 3.82), (-24.23, 22.53, 6.68)),
    (423222.0, 565279.0, (0.0, 1.5, 0.5), (314.0, 6651.0, 905.0), (-42.76, 43.58, 5.76), (-34.85, 30.68, 4.37)),
    (422952.0, 565217.0, (0.0, 1.5, 0.5), (314.0, 3056.0, 914.0), (-157.26, 147.89, 9.84), (-26.69, 20.79, 6.78)),
    (423966.0, 565334.0, (0.0, 1.5, 0.5), (314.0, 1012.0, 233.0), (-26.51, 26.51, 3.53), (-11.97, 12.59, 8.19)),
    (423174.0, 565405.0, (0.0, 1.5, 0.5), (314.0, 2309.0, 665.0), (-18.07, 18.60, 5.24), (-18.86, 19.39, 5.46)),
    (423079.0, 566011.0, (0.0, 1.5, 0.5), (314.0, 4329.0, 574.0), (-28.51, 29.64, 3.88), (-24.75, 25.49, 7.18)),
];

/// Derive the phenotype count from published `(min, max, step)` bounds: the
/// step is a rounded print of `(max - min) / (N - 1)`.
pub fn count_from_step(min: f64, max: f64, step: f64) -> usize {
    ((max - min) / step).round() as usize + 1
}

/// The 507-bit layout of the large catchment study: 124 permeable-paving
/// zones, 131 rain gardens and 22 detention basins with Gray-coded
/// characteristics.
pub fn catchment_layout() -> GenotypeLayout {
    let mut features = Vec::with_capacity(124 + 131 + 22);
    for i in 0..124 {
        features.push(FeatureSpec::zonal(format!("paving_zone_{:03}", i + 1)));
    }
    for i in 0..131 {
        features.push(FeatureSpec::zonal(format!("rain_garden_{:03}", i + 1)));
    }
    for (i, (_, _, d, a, x, y)) in CATCHMENT_BASINS.iter().enumerate() {
        let chars = [("depth", d), ("surface_area", a), ("x_shift", x), ("y_shift", y)]
            .into_iter()
            .map(|(name, (min, max, step))| {
                CharacteristicSpec::continuous(
                    name,
                    *min,
                    *max,
                    count_from_step(*min, *max, *step),
                    EncodingScheme::Gray,
                )
                .expect("published bounds are power-of-two counts")
            })
            .collect();
        features.push(FeatureSpec::local(format!("basin_{:02}", i + 1), chars));
    }
    GenotypeLayout::new(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::FeatureStyle;
    use crate::problem::validate_problem;

    #[test]
    fn twelve_zone_layout_is_twelve_bits() {
        let p = twelve_zone_problem();
        assert_eq!(p.layout.total_length(), 12);
        assert_eq!(p.buildings.len(), 24);
        assert!(validate_problem(&p).is_clean());
    }

    #[test]
    fn basin_demo_validates() {
        let p = basin_demo_problem();
        assert_eq!(p.layout.total_length(), 8);
        let report = validate_problem(&p);
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn catchment_layout_is_507_bits() {
        let layout = catchment_layout();
        assert_eq!(layout.total_length(), 507);
        // 124 + 131 zonal bits, then 252 basin bits
        let zonal_bits: usize = layout
            .features()
            .iter()
            .filter(|f| matches!(f.style, FeatureStyle::Zonal))
            .map(|f| f.bit_length())
            .sum();
        assert_eq!(zonal_bits, 255);
        let basin_bits: usize = layout
            .features()
            .iter()
            .filter(|f| matches!(f.style, FeatureStyle::Local { .. }))
            .map(|f| f.bit_length())
            .sum();
        assert_eq!(basin_bits, 252);
        // every basin decodes four characteristic values
        let decoded = crate::encoding::decode_genotype(
            &crate::encoding::BitString::zeros(507),
            &layout,
        )
        .unwrap();
        let local_counts: Vec<usize> = decoded
            .values
            .iter()
            .filter_map(|v| match v {
                crate::encoding::FeatureValue::Characteristics(c) => Some(c.len()),
                _ => None,
            })
            .collect();
        assert_eq!(local_counts, vec![4; 22]);
    }

    #[test]
    fn published_step_tables_give_power_of_two_counts() {
        for (_, _, d, a, x, y) in CATCHMENT_BASINS {
            for (min, max, step) in [d, a, x, y] {
                let n = count_from_step(min, max, step);
                assert!(n.is_power_of_two(), "count {n} from ({min}, {max}, {step})");
            }
        }
    }
}
