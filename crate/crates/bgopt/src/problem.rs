//! The optimisation problem instance: intervention specifications bound to
//! genotype features, design-guideline validation, the implementation-cost
//! objective over decoded scenarios, and detention-basin terrain carving.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::cost::{whole_life_cost, CostSchedule};
use crate::encoding::{FeatureStyle, GenotypeLayout, Phenotype};
use crate::exposure::{DamageCurve, RiskMetric};
use crate::geometry::{Building, Polygon, UseClass};
use crate::raster::{Dem, DepthGrid, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    PermeablePaving,
    RainGarden,
    DetentionBasin,
}

impl fmt::Display for InterventionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterventionKind::PermeablePaving => write!(f, "permeable_paving"),
            InterventionKind::RainGarden => write!(f, "rain_garden"),
            InterventionKind::DetentionBasin => write!(f, "detention_basin"),
        }
    }
}

/// Infiltration parameters passed through verbatim to an external
/// hydrodynamic model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Infiltration {
    pub hydraulic_conductivity_cm_hr: f64,
    pub suction_head_cm: f64,
    pub effective_porosity: f64,
    pub effective_saturation: f64,
}

impl Infiltration {
    /// Converted permeable surface (Green-Ampt parameters).
    pub const PAVING: Infiltration = Infiltration {
        hydraulic_conductivity_cm_hr: 4.421,
        suction_head_cm: 19.123,
        effective_porosity: 0.345,
        effective_saturation: 0.30,
    };

    /// Rain-garden planting medium.
    pub const RAIN_GARDEN: Infiltration = Infiltration {
        hydraulic_conductivity_cm_hr: 10.8,
        suction_head_cm: 4.55,
        effective_porosity: 0.34,
        effective_saturation: 0.20,
    };
}

/// Geometry and evaluator bindings for one intervention feature. Zonal kinds
/// (paving, rain gardens) carry a zone polygon; basins carry an origin and
/// are shaped by their decoded characteristics (depth, area, x/y shift).
#[derive(Debug, Clone)]
pub struct InterventionSpec {
    pub feature_id: String,
    pub kind: InterventionKind,
    /// Zone polygon for zonal kinds.
    pub zone: Option<Polygon>,
    /// Quantity for zonal cost computation (m²); defaults to the zone
    /// polygon area.
    pub area_m2: Option<f64>,
    /// Basin origin (easting, northing) before shifts.
    pub origin: Option<(f64, f64)>,
    pub infiltration: Option<Infiltration>,
    /// Surrogate: multiplier applied to baseline depths in the zone cells.
    pub retention_factor: Option<f64>,
    /// Surrogate: ordered cells a basin drains, receiving its storage volume.
    pub downstream_cells: Vec<(usize, usize)>,
}

impl InterventionSpec {
    pub fn quantity_m2(&self) -> f64 {
        self.area_m2
            .or_else(|| self.zone.as_ref().map(|z| z.area()))
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Surrogate,
    External,
}

#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    pub command: Vec<String>,
    pub timeout_secs: f64,
    /// Directory under which per-evaluation working directories are created.
    pub scratch_dir: Option<std::path::PathBuf>,
}

/// The full MOOP instance: layout, bound interventions, cost schedules,
/// exposure settings and the flood evaluator binding.
#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    pub layout: GenotypeLayout,
    pub interventions: Vec<InterventionSpec>,
    pub schedules: HashMap<InterventionKind, CostSchedule>,
    pub risk_metric: RiskMetric,
    pub damage_curves: HashMap<UseClass, DamageCurve>,
    pub buildings: Vec<Building>,
    pub buffer_cells: usize,
    pub evaluator: EvaluatorKind,
    pub external: Option<ExternalEvaluator>,
    pub baseline_depth: Option<DepthGrid>,
    pub dem: Option<Dem>,
}

impl ProblemDefinition {
    pub fn schedule(&self, kind: InterventionKind) -> Result<&CostSchedule> {
        self.schedules
            .get(&kind)
            .ok_or_else(|| Error::config(format!("no cost schedule for {kind}")))
    }

    /// Decoded basin characteristics, ordered (depth, area, x-shift, y-shift).
    pub fn basin_values(&self, p: &Phenotype, feature_idx: usize) -> BasinValues {
        let vals = p.characteristics(feature_idx);
        BasinValues { depth: vals[0], area: vals[1], x_shift: vals[2], y_shift: vals[3] }
    }

    /// The raster frame shared by terrain and depth grids.
    pub fn frame(&self) -> Option<&Grid> {
        self.baseline_depth.as_ref().or(self.dem.as_ref())
    }

    /// Cells within the exclusion distance of buildings and paving zones,
    /// protected from basin carving.
    pub fn carve_exclusion_mask(&self) -> BTreeSet<(usize, usize)> {
        let Some(frame) = self.frame() else { return BTreeSet::new() };
        let mut seed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for b in &self.buildings {
            seed.extend(b.footprint.rasterize(frame));
        }
        for iv in &self.interventions {
            if iv.kind == InterventionKind::PermeablePaving {
                if let Some(zone) = &iv.zone {
                    seed.extend(zone.rasterize(frame));
                }
            }
        }
        // 5 m buffer, dilated in whole cells
        let radius = (5.0 / frame.cellsize).ceil() as isize;
        let mut mask = BTreeSet::new();
        for &(r, c) in &seed {
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if frame.in_bounds(nr, nc) {
                        mask.insert((nr as usize, nc as usize));
                    }
                }
            }
        }
        mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BasinValues {
    pub depth: f64,
    pub area: f64,
    pub x_shift: f64,
    pub y_shift: f64,
}

impl BasinValues {
    /// A zero depth encodes the exclusion of the basin.
    pub fn is_active(&self) -> bool {
        self.depth > 0.0
    }

    pub fn radius(&self) -> f64 {
        (self.area / std::f64::consts::PI).sqrt()
    }

    pub fn excavated_volume(&self) -> f64 {
        self.depth * self.area
    }
}

/// Per-feature cost contribution, exported by the evaluate subcommand.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FeatureCost {
    pub feature_id: String,
    pub kind: InterventionKind,
    pub active: bool,
    /// Quantity in the kind's unit basis (m² or m³).
    pub quantity: f64,
    pub cost: f64,
}

/// Whole-life implementation cost of a decoded scenario: active zonal
/// features cost their area, active basins (depth > 0) cost their excavated
/// volume including the fixed per-basin items. Inactive features are free.
pub fn scenario_cost_breakdown(
    p: &Phenotype,
    problem: &ProblemDefinition,
) -> Result<Vec<FeatureCost>> {
    let mut out = Vec::with_capacity(problem.interventions.len());
    for (idx, iv) in problem.interventions.iter().enumerate() {
        let (active, quantity) = match iv.kind {
            InterventionKind::PermeablePaving | InterventionKind::RainGarden => {
                (p.included(idx), iv.quantity_m2())
            }
            InterventionKind::DetentionBasin => {
                let basin = problem.basin_values(p, idx);
                (basin.is_active(), basin.excavated_volume())
            }
        };
        let cost = if active {
            whole_life_cost(problem.schedule(iv.kind)?, quantity)?
        } else {
            0.0
        };
        out.push(FeatureCost {
            feature_id: iv.feature_id.clone(),
            kind: iv.kind,
            active,
            quantity: if active { quantity } else { 0.0 },
            cost,
        });
    }
    Ok(out)
}

pub fn scenario_cost(p: &Phenotype, problem: &ProblemDefinition) -> Result<f64> {
    Ok(scenario_cost_breakdown(p, problem)?.iter().map(|f| f.cost).sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CarveOutcome {
    /// Cells were lowered.
    Carved { cells: usize },
    /// Depth 0 encodes exclusion.
    Inactive,
    /// Interior entirely masked or off-grid; terrain untouched.
    Blocked,
}

/// Excavate one basin into the terrain. The basin circle is centred at
/// origin + shifts; the rim elevation is the nearest-rank 10th percentile of
/// the boundary-cell elevations; interior cells outside the exclusion mask
/// are lowered (never raised) to rim - depth.
pub fn carve_basin(
    dem: &mut Dem,
    origin: (f64, f64),
    basin: &BasinValues,
    exclusion: &BTreeSet<(usize, usize)>,
) -> CarveOutcome {
    if !basin.is_active() {
        return CarveOutcome::Inactive;
    }
    let centre = (origin.0 + basin.x_shift, origin.1 + basin.y_shift);
    let radius = basin.radius();

    let mut perimeter_elev = Vec::new();
    let mut interior = Vec::new();
    for row in 0..dem.rows {
        for col in 0..dem.cols {
            if dem.is_nodata(row, col) {
                continue;
            }
            let (x0, y0, x1, y1) = dem.cell_extent(row, col);
            // nearest and farthest points of the cell rectangle
            let dx = (x0 - centre.0).max(centre.0 - x1).max(0.0);
            let dy = (y0 - centre.1).max(centre.1 - y1).max(0.0);
            let dmin = (dx * dx + dy * dy).sqrt();
            let fx = (centre.0 - x0).abs().max((centre.0 - x1).abs());
            let fy = (centre.1 - y0).abs().max((centre.1 - y1).abs());
            let dmax = (fx * fx + fy * fy).sqrt();
            if dmin <= radius && radius <= dmax {
                perimeter_elev.push(dem.get(row, col));
            }
            let (cx, cy) = dem.cell_center(row, col);
            let dc = ((cx - centre.0).powi(2) + (cy - centre.1).powi(2)).sqrt();
            if dc <= radius {
                interior.push((row, col));
            }
        }
    }
    if perimeter_elev.is_empty() || interior.is_empty() {
        return CarveOutcome::Blocked;
    }
    perimeter_elev.sort_by(|a, b| a.total_cmp(b));
    let rank = ((0.1 * perimeter_elev.len() as f64).ceil() as usize).max(1);
    let rim = perimeter_elev[rank - 1];
    let floor = rim - basin.depth;

    let mut carved = 0usize;
    for (row, col) in interior {
        if exclusion.contains(&(row, col)) {
            continue;
        }
        if dem.get(row, col) > floor {
            dem.set(row, col, floor);
            carved += 1;
        }
    }
    if carved == 0 {
        CarveOutcome::Blocked
    } else {
        CarveOutcome::Carved { cells: carved }
    }
}

/// Carve every active basin of the scenario into a copy of the terrain.
pub fn carved_dem(p: &Phenotype, problem: &ProblemDefinition) -> Result<(Dem, Vec<CarveOutcome>)> {
    let base = problem
        .dem
        .as_ref()
        .ok_or_else(|| Error::config("basin carving requires a terrain model"))?;
    let mut dem = base.clone();
    let exclusion = problem.carve_exclusion_mask();
    let mut outcomes = Vec::new();
    for (idx, iv) in problem.interventions.iter().enumerate() {
        if iv.kind != InterventionKind::DetentionBasin {
            continue;
        }
        let origin = iv
            .origin
            .ok_or_else(|| Error::config(format!("basin {} has no origin", iv.feature_id)))?;
        let basin = problem.basin_values(p, idx);
        outcomes.push(carve_basin(&mut dem, origin, &basin, &exclusion));
    }
    Ok((dem, outcomes))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Violation {
    pub feature_id: Option<String>,
    pub guideline: Option<u8>,
    pub message: String,
}

/// Result of static problem checks against the design guidelines. Hard
/// violations refuse a run; warnings and runtime-monitored notes are
/// informational.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
    pub runtime_monitored: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn violate(&mut self, feature: Option<&str>, guideline: Option<u8>, msg: impl Into<String>) {
        self.violations.push(Violation {
            feature_id: feature.map(str::to_owned),
            guideline,
            message: msg.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            write!(f, "violation")?;
            if let Some(g) = v.guideline {
                write!(f, " [guideline {g}]")?;
            }
            if let Some(id) = &v.feature_id {
                write!(f, " ({id})")?;
            }
            writeln!(f, ": {}", v.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for n in &self.runtime_monitored {
            writeln!(f, "runtime-monitored: {n}")?;
        }
        if self.violations.is_empty() && self.warnings.is_empty() {
            writeln!(f, "ok")?;
        }
        Ok(())
    }
}

/// Statically check the design guidelines and structural constraints:
/// every feature must encode an exclusion state (basins via a 0 m minimum
/// depth), every state must be representable, unit installation costs must
/// be positive, and the evaluator binding must be complete. The risk
/// monotonicity guidelines are flagged for runtime monitoring.
pub fn validate_problem(problem: &ProblemDefinition) -> ValidationReport {
    let mut report = ValidationReport::default();

    if problem.layout.features().len() != problem.interventions.len() {
        report.violate(
            None,
            None,
            format!(
                "layout has {} features but {} interventions are bound",
                problem.layout.features().len(),
                problem.interventions.len()
            ),
        );
    }

    for (f, iv) in problem.layout.features().iter().zip(&problem.interventions) {
        if f.id != iv.feature_id {
            report.violate(
                Some(&f.id),
                None,
                format!("layout feature {:?} bound to intervention {:?}", f.id, iv.feature_id),
            );
            continue;
        }
        match (&f.style, iv.kind) {
            (FeatureStyle::Zonal, InterventionKind::DetentionBasin) => {
                report.violate(Some(&f.id), None, "a detention basin needs a local feature");
            }
            (FeatureStyle::Local { characteristics }, InterventionKind::DetentionBasin) => {
                if characteristics.len() != 4 {
                    report.violate(
                        Some(&f.id),
                        Some(2),
                        "basin features encode exactly (depth, area, x-shift, y-shift)",
                    );
                } else {
                    let depth = &characteristics[0];
                    let area = &characteristics[1];
                    if depth.x_min != 0.0 {
                        report.violate(
                            Some(&f.id),
                            Some(1),
                            format!(
                                "minimum depth {} m does not encode an exclusion state (must be 0)",
                                depth.x_min
                            ),
                        );
                    }
                    if area.x_min <= 0.0 {
                        report.violate(Some(&f.id), None, "basin surface area minimum must be positive");
                    }
                }
                if iv.origin.is_none() {
                    report.violate(Some(&f.id), None, "basin has no origin coordinates");
                }
            }
            (FeatureStyle::Local { .. }, _) => {
                report.violate(Some(&f.id), None, "paving and rain gardens are zonal features");
            }
            (FeatureStyle::Zonal, _) => {
                if iv.zone.is_none() && iv.area_m2.is_none() {
                    report.violate(Some(&f.id), None, "zonal feature has neither polygon nor area");
                }
                if iv.quantity_m2() <= 0.0 {
                    report.violate(
                        Some(&f.id),
                        Some(3),
                        "zonal feature has zero area, so zero installation cost",
                    );
                }
            }
        }
    }

    let kinds_in_use: BTreeSet<InterventionKind> =
        problem.interventions.iter().map(|iv| iv.kind).collect();
    for kind in kinds_in_use {
        match problem.schedules.get(&kind) {
            None => report.violate(None, Some(3), format!("no cost schedule for {kind}")),
            Some(s) => {
                if let Err(e) = s.validate() {
                    report.violate(None, None, format!("{kind} schedule: {e}"));
                }
                if s.base_rate <= 0.0 {
                    report.violate(
                        None,
                        Some(3),
                        format!("{kind} base rate must be positive (positive installation cost)"),
                    );
                }
            }
        }
    }

    match problem.evaluator {
        EvaluatorKind::Surrogate => {
            if problem.baseline_depth.is_none() {
                report.violate(None, None, "surrogate evaluator requires a baseline depth grid");
            }
            for iv in &problem.interventions {
                match iv.kind {
                    InterventionKind::PermeablePaving | InterventionKind::RainGarden => {
                        match iv.retention_factor {
                            Some(f) if f > 0.0 && f <= 1.0 => {}
                            Some(f) => report.violate(
                                Some(&iv.feature_id),
                                Some(4),
                                format!("retention factor {f} outside (0, 1] would raise depths"),
                            ),
                            None => report.violate(
                                Some(&iv.feature_id),
                                None,
                                "surrogate evaluator needs a retention factor",
                            ),
                        }
                    }
                    InterventionKind::DetentionBasin => {
                        if iv.downstream_cells.is_empty() {
                            report.warnings.push(format!(
                                "basin {} has no downstream cells; it will not reduce risk under the surrogate",
                                iv.feature_id
                            ));
                        }
                    }
                }
            }
        }
        EvaluatorKind::External => {
            match &problem.external {
                None => {
                    report.violate(None, None, "external evaluator selected but no command configured")
                }
                Some(e) if e.command.is_empty() => {
                    report.violate(None, None, "external evaluator command is empty")
                }
                Some(_) => {}
            }
            if problem.dem.is_none() {
                report.violate(None, None, "external evaluator requires a terrain model");
            }
        }
    }

    if problem.risk_metric == RiskMetric::ExpectedDamages {
        let classes: BTreeSet<UseClass> =
            problem.buildings.iter().map(|b| b.use_class).collect();
        for class in classes {
            if !problem.damage_curves.contains_key(&class) {
                report.violate(None, None, format!("no damage curve for use class {class}"));
            }
        }
    }

    if let Some(frame) = problem.frame() {
        if let (Some(dem), Some(depth)) = (&problem.dem, &problem.baseline_depth) {
            if !dem.same_frame(depth) {
                report.violate(None, None, "terrain and depth grids have mismatched raster frames");
            }
        }
        for b in &problem.buildings {
            if b.footprint.rasterize(frame).is_empty() {
                report.warnings.push(format!(
                    "building {} lies outside the grid; it is excluded from exposure analysis",
                    b.id
                ));
            }
        }
    }

    report
        .runtime_monitored
        .push("guidelines 3/4: every surrogate evaluation asserts risk <= baseline risk".into());
    report
}
