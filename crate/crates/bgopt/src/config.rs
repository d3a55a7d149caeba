//! Problem configuration documents: a single TOML file describing run
//! parameters, evaluator binding, exposure settings, damage curves, cost
//! schedules (defaulting to the built-in published rates) and the feature
//! list from which the genotype layout is assembled. Raster and building
//! files are referenced by path relative to the document.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{
    detention_basin_schedule, permeable_paving_schedule, rain_garden_schedule, CostSchedule,
};
use crate::encoding::{CharacteristicSpec, EncodingScheme, FeatureSpec, GenotypeLayout};
use crate::exposure::{DamageCurve, RiskMetric};
use crate::geometry::{load_buildings, Polygon, UseClass};
use crate::problem::{
    EvaluatorKind, ExternalEvaluator, Infiltration, InterventionKind, InterventionSpec,
    ProblemDefinition,
};
use crate::raster::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub run: RunSection,
    pub problem: ProblemSection,
    #[serde(default)]
    pub damage_curves: Vec<DamageCurveSection>,
    /// Cost schedules per intervention kind; omitted kinds fall back to the
    /// built-in published rates.
    #[serde(default)]
    pub cost_schedules: HashMap<String, CostSchedule>,
    pub features: Vec<FeatureSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub max_front: usize,
    pub population: usize,
    pub delta_p: f64,
    pub injection_rate: f64,
    pub lag_window: u64,
    pub t_end: u64,
    pub eval_budget: Option<u64>,
    pub seed: u64,
    pub mutation_prob: Option<f64>,
    pub crossover_prob: f64,
    pub adaptation: bool,
    /// Worker threads for parallel evaluation; 0 uses machine parallelism.
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            max_front: 16,
            population: crate::moea::INITIAL_POPULATION,
            delta_p: 0.1,
            injection_rate: 0.25,
            lag_window: 10,
            t_end: 500,
            eval_budget: None,
            seed: 1,
            mutation_prob: None,
            crossover_prob: 1.0,
            adaptation: true,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub risk_metric: RiskMetric,
    #[serde(default = "default_buffer_cells")]
    pub buffer_cells: usize,
    /// Baseline water depths (ESRI ASCII), required by the surrogate.
    pub baseline_depth: Option<PathBuf>,
    /// Terrain model (ESRI ASCII), required for basins and the external
    /// evaluator.
    pub dem: Option<PathBuf>,
    /// Building footprints (GeoJSON FeatureCollection).
    pub buildings: PathBuf,
    #[serde(default)]
    pub evaluator: EvaluatorSection,
}

fn default_buffer_cells() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluatorSection {
    pub kind: EvaluatorKind,
    /// External command and fixed arguments; the working directory is
    /// appended as the final argument.
    pub command: Vec<String>,
    pub timeout_secs: f64,
}

impl Default for EvaluatorSection {
    fn default() -> Self {
        EvaluatorSection { kind: EvaluatorKind::Surrogate, command: Vec::new(), timeout_secs: 3600.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageCurveSection {
    pub use_class: UseClass,
    /// `(depth m, damages £)` knots.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSection {
    pub id: String,
    pub kind: InterventionKind,
    /// Zone polygon vertices for zonal kinds.
    #[serde(default)]
    pub zone: Option<Vec<(f64, f64)>>,
    /// Cost quantity override (m²); defaults to the zone polygon area.
    #[serde(default)]
    pub area: Option<f64>,
    /// Surrogate retention factor for zonal kinds.
    #[serde(default)]
    pub retention: Option<f64>,
    #[serde(default)]
    pub infiltration: Option<Infiltration>,
    /// Basin origin (easting, northing).
    #[serde(default)]
    pub origin: Option<(f64, f64)>,
    #[serde(default)]
    pub depth: Option<CharacteristicSection>,
    #[serde(default)]
    pub surface_area: Option<CharacteristicSection>,
    #[serde(default)]
    pub x_shift: Option<CharacteristicSection>,
    #[serde(default)]
    pub y_shift: Option<CharacteristicSection>,
    /// Surrogate: cells `(row, col)` receiving the basin's storage volume.
    #[serde(default)]
    pub downstream_cells: Vec<(usize, usize)>,
}

/// One encoded characteristic: bounds plus either an explicit state count
/// or the published step from which the count is derived
/// (`count = round((max - min) / step) + 1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicSection {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default = "default_scheme")]
    pub scheme: EncodingScheme,
}

fn default_scheme() -> EncodingScheme {
    EncodingScheme::Gray
}

impl CharacteristicSection {
    fn build(&self, name: &str) -> Result<CharacteristicSpec> {
        let count = match (self.count, self.step) {
            (Some(c), _) => c,
            (None, Some(step)) => {
                if !(step > 0.0) {
                    return Err(Error::config(format!("{name}: step must be positive")));
                }
                ((self.max - self.min) / step).round() as usize + 1
            }
            (None, None) => {
                return Err(Error::config(format!("{name}: give either count or step")))
            }
        };
        CharacteristicSpec::continuous(name, self.min, self.max, count, self.scheme)
            .map_err(|e| Error::config(format!("{name}: {e}")))
    }
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Input(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config documents serialise")
    }

    /// Build the full problem instance, loading referenced rasters and
    /// buildings relative to `base_dir`.
    pub fn build_problem(&self, base_dir: &Path) -> Result<ProblemDefinition> {
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base_dir.join(p) };

        let baseline_depth = self
            .problem
            .baseline_depth
            .as_ref()
            .map(|p| Grid::read_ascii(&resolve(p)))
            .transpose()?;
        if let Some(g) = &baseline_depth {
            if g.values().iter().any(|&v| v != g.nodata && v < 0.0) {
                return Err(Error::input("baseline depth grid contains negative depths"));
            }
        }
        let dem = self.problem.dem.as_ref().map(|p| Grid::read_ascii(&resolve(p))).transpose()?;
        let buildings =
            load_buildings(&resolve(&self.problem.buildings), self.problem.buffer_cells)?;

        let mut damage_curves = HashMap::new();
        for section in &self.damage_curves {
            damage_curves.insert(section.use_class, DamageCurve::new(section.points.clone())?);
        }

        let mut schedules = HashMap::new();
        for (kind, default) in [
            (InterventionKind::PermeablePaving, permeable_paving_schedule()),
            (InterventionKind::RainGarden, rain_garden_schedule()),
            (InterventionKind::DetentionBasin, detention_basin_schedule()),
        ] {
            let schedule = self.cost_schedules.get(&kind.to_string()).cloned().unwrap_or(default);
            schedules.insert(kind, schedule);
        }

        let mut features = Vec::with_capacity(self.features.len());
        let mut interventions = Vec::with_capacity(self.features.len());
        for section in &self.features {
            let zone = section
                .zone
                .as_ref()
                .map(|v| Polygon::new(v.clone()))
                .transpose()
                .map_err(|e| Error::config(format!("feature {}: {e}", section.id)))?;
            match section.kind {
                InterventionKind::PermeablePaving | InterventionKind::RainGarden => {
                    features.push(FeatureSpec::zonal(&section.id));
                }
                InterventionKind::DetentionBasin => {
                    let mut chars = Vec::with_capacity(4);
                    for (name, c) in [
                        ("depth", &section.depth),
                        ("surface_area", &section.surface_area),
                        ("x_shift", &section.x_shift),
                        ("y_shift", &section.y_shift),
                    ] {
                        let c = c.as_ref().ok_or_else(|| {
                            Error::config(format!(
                                "feature {}: detention basins need a {name} characteristic",
                                section.id
                            ))
                        })?;
                        chars.push(c.build(name)?);
                    }
                    features.push(FeatureSpec::local(&section.id, chars));
                }
            }
            interventions.push(InterventionSpec {
                feature_id: section.id.clone(),
                kind: section.kind,
                zone,
                area_m2: section.area,
                origin: section.origin,
                infiltration: section.infiltration,
                retention_factor: section.retention,
                downstream_cells: section.downstream_cells.clone(),
            });
        }

        Ok(ProblemDefinition {
            layout: GenotypeLayout::new(features),
            interventions,
            schedules,
            risk_metric: self.problem.risk_metric,
            damage_curves,
            buildings,
            buffer_cells: self.problem.buffer_cells,
            evaluator: self.problem.evaluator.kind,
            external: match self.problem.evaluator.kind {
                EvaluatorKind::External => Some(ExternalEvaluator {
                    command: self.problem.evaluator.command.clone(),
                    timeout_secs: self.problem.evaluator.timeout_secs,
                    scratch_dir: None,
                }),
                EvaluatorKind::Surrogate => None,
            },
            baseline_depth,
            dem,
        })
    }

    /// Epsilon-MOEA run parameters from the run section.
    pub fn run_config(&self) -> crate::moea::RunConfig {
        crate::moea::RunConfig {
            max_front: self.run.max_front,
            delta_p: self.run.delta_p,
            injection_rate: self.run.injection_rate,
            lag_window: self.run.lag_window,
            t_end: self.run.t_end,
            eval_budget: self.run.eval_budget,
            seed: self.run.seed,
            mutation_prob: self.run.mutation_prob,
            crossover_prob: self.run.crossover_prob,
            adaptation_enabled: self.run.adaptation,
            initial_population: self.run.population,
        }
    }

    /// Benchmark-algorithm parameters from the run section. The population
    /// equals the archive bound, as in the comparison harness.
    pub fn bench_config(&self) -> crate::baselines::BenchConfig {
        crate::baselines::BenchConfig {
            population_size: self.run.population,
            archive_size: self.run.max_front,
            t_end: self.run.t_end,
            eval_budget: self.run.eval_budget,
            seed: self.run.seed,
            mutation_prob: self.run.mutation_prob,
            crossover_prob: self.run.crossover_prob,
        }
    }
}

/// Load a config document and remember its raw bytes for digesting.
pub fn load_config(path: &Path) -> Result<(ConfigDocument, String)> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let doc = ConfigDocument::parse(&text)?;
    Ok((doc, text))
}

/// Content digest of the config document plus every referenced input file,
/// so identical digests imply an identical problem.
pub fn problem_digest(doc: &ConfigDocument, config_text: &str, base_dir: &Path) -> Result<String> {
    use sha2::Digest;
    let mut hasher = sha2::Sha256::new();
    hasher.update(config_text.as_bytes());
    let mut paths: Vec<&PathBuf> = Vec::new();
    if let Some(p) = &doc.problem.baseline_depth {
        paths.push(p);
    }
    if let Some(p) = &doc.problem.dem {
        paths.push(p);
    }
    paths.push(&doc.problem.buildings);
    for p in paths {
        let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
        let bytes =
            std::fs::read(&full).map_err(|e| Error::io(full.display().to_string(), e))?;
        hasher.update(&bytes);
    }
    Ok(hex_string(&hasher.finalize()))
}

pub fn text_digest(text: &str) -> String {
    use sha2::Digest;
    hex_string(&sha2::Sha256::digest(text.as_bytes()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
risk_metric = "expected_damages"
buildings = "buildings.geojson"
baseline_depth = "baseline.asc"

[[damage_curves]]
use_class = "residential"
points = [[0.0, 0.0], [1.0, 50000.0]]

[[features]]
id = "zone_1"
kind = "permeable_paving"
zone = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]
retention = 0.5
"#;

    #[test]
    fn parse_minimal_document() {
        let doc = ConfigDocument::parse(MINIMAL).unwrap();
        assert_eq!(doc.run.max_front, 16);
        assert_eq!(doc.run.t_end, 500);
        assert_eq!(doc.problem.evaluator.timeout_secs, 3600.0);
        assert_eq!(doc.features.len(), 1);
    }

    #[test]
    fn parse_rejects_unknown_keys_with_location() {
        let err = ConfigDocument::parse("[problem]\nrisk_metric = \"high_count\"\nbuildings = \"b\"\nnonsense = 1\n[[features]]\nid = \"x\"\nkind = \"permeable_paving\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nonsense"), "{msg}");
    }

    #[test]
    fn characteristic_count_from_published_step() {
        let c = CharacteristicSection {
            min: 314.0,
            max: 18051.0,
            step: Some(1182.0),
            count: None,
            scheme: EncodingScheme::Gray,
        };
        let spec = c.build("surface_area").unwrap();
        assert_eq!(spec.count, 16);
        assert_eq!(spec.bit_length, 4);

        let bad = CharacteristicSection {
            min: 0.0,
            max: 1.0,
            step: None,
            count: Some(5), // not a power of two for Gray
            scheme: EncodingScheme::Gray,
        };
        assert!(bad.build("depth").is_err());
    }

    #[test]
    fn digests_are_stable_and_content_sensitive() {
        let a = text_digest("hello");
        let b = text_digest("hello");
        let c = text_digest("hellp");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }
}
