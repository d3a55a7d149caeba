//! Fitness evaluation: genotype decoding, the memoising evaluation cache
//! keyed on genotypes, the deterministic surrogate flood evaluator, and the
//! directory-protocol driver for external hydrodynamic models.
//!
//! External protocol: the evaluator command is invoked as `<cmd> <workdir>`
//! where `<workdir>` contains `scenario.json` (decoded interventions and
//! cost summary) and `dem.asc` (the carved terrain). The command must write
//! `depth.asc` into the same directory and exit 0 within the configured
//! timeout.

use std::collections::HashMap;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::encoding::{decode_genotype, BitString, Phenotype};
use crate::exposure::risk_metric;
use crate::problem::{
    carved_dem, scenario_cost, scenario_cost_breakdown, EvaluatorKind, InterventionKind,
    ProblemDefinition,
};
use crate::raster::DepthGrid;
use crate::{Error, ObjectiveVector, Result};

/// Deterministic surrogate flood model. Each active paving or rain-garden
/// zone multiplies the baseline depths of its cells by the configured
/// retention factor; each active basin removes up to its storage volume
/// (depth x area) from its downstream cells in order, never below zero.
pub fn surrogate_evaluate(p: &Phenotype, problem: &ProblemDefinition) -> Result<DepthGrid> {
    let baseline = problem
        .baseline_depth
        .as_ref()
        .ok_or_else(|| Error::config("surrogate evaluator requires a baseline depth grid"))?;
    let mut grid = baseline.clone();
    let cell_area = grid.cellsize * grid.cellsize;
    for (idx, iv) in problem.interventions.iter().enumerate() {
        match iv.kind {
            InterventionKind::PermeablePaving | InterventionKind::RainGarden => {
                if !p.included(idx) {
                    continue;
                }
                let factor = iv.retention_factor.ok_or_else(|| {
                    Error::config(format!("feature {} has no retention factor", iv.feature_id))
                })?;
                let zone = iv.zone.as_ref().ok_or_else(|| {
                    Error::config(format!("feature {} has no zone polygon", iv.feature_id))
                })?;
                for (r, c) in zone.rasterize(&grid) {
                    if !grid.is_nodata(r, c) {
                        grid.set(r, c, grid.get(r, c) * factor);
                    }
                }
            }
            InterventionKind::DetentionBasin => {
                let basin = problem.basin_values(p, idx);
                if !basin.is_active() {
                    continue;
                }
                let mut volume = basin.excavated_volume();
                for &(r, c) in &iv.downstream_cells {
                    if volume <= 0.0 {
                        break;
                    }
                    if !grid.in_bounds(r as isize, c as isize) || grid.is_nodata(r, c) {
                        continue;
                    }
                    let depth = grid.get(r, c);
                    let removable = (volume / cell_area).min(depth);
                    grid.set(r, c, depth - removable);
                    volume -= removable * cell_area;
                }
            }
        }
    }
    Ok(grid)
}

static WORKDIR_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Drive the configured external command through the directory protocol and
/// read back the resulting depth grid.
pub fn external_evaluate(
    genotype: &BitString,
    p: &Phenotype,
    problem: &ProblemDefinition,
) -> Result<DepthGrid> {
    let external = problem
        .external
        .as_ref()
        .ok_or_else(|| Error::config("no external evaluator configured"))?;
    if external.command.is_empty() {
        return Err(Error::config("external evaluator command is empty"));
    }

    let scratch_root = external
        .scratch_dir
        .clone()
        .unwrap_or_else(std::env::temp_dir);
    let workdir = scratch_root.join(format!(
        "bgopt-eval-{}-{}",
        std::process::id(),
        WORKDIR_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&workdir)
        .map_err(|e| Error::io(workdir.display().to_string(), e))?;

    write_scenario(genotype, p, problem, &workdir)?;
    let (dem, _) = carved_dem(p, problem)?;
    dem.write_ascii(&workdir.join("dem.asc"))?;

    let mut cmd = Command::new(&external.command[0]);
    cmd.args(&external.command[1..])
        .arg(&workdir)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd
        .spawn()
        .map_err(|e| Error::evaluation(format!("failed to spawn {:?}: {e}", external.command[0])))?;

    let deadline = Instant::now() + Duration::from_secs_f64(external.timeout_secs);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::evaluation(format!(
                        "external evaluator timed out after {} s in {}",
                        external.timeout_secs,
                        workdir.display()
                    )));
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(Error::evaluation(format!("failed to wait on evaluator: {e}"))),
        }
    };

    let mut stderr = String::new();
    if let Some(mut pipe) = child.stderr.take() {
        let _ = pipe.read_to_string(&mut stderr);
    }
    if !status.success() {
        return Err(Error::evaluation(format!(
            "external evaluator exited with {status} in {}: {}",
            workdir.display(),
            stderr.trim()
        )));
    }

    let depth_path = workdir.join("depth.asc");
    let depth = DepthGrid::read_ascii(&depth_path).map_err(|e| {
        Error::evaluation(format!("external evaluator produced no readable depth grid: {e}"))
    })?;
    let frame = problem
        .frame()
        .ok_or_else(|| Error::config("problem has no raster frame"))?;
    if !depth.same_frame(frame) {
        return Err(Error::evaluation(format!(
            "frame mismatch: evaluator output {}x{} at ({}, {}) cell {}, expected {}x{} at ({}, {}) cell {}",
            depth.rows, depth.cols, depth.xllcorner, depth.yllcorner, depth.cellsize,
            frame.rows, frame.cols, frame.xllcorner, frame.yllcorner, frame.cellsize,
        )));
    }
    Ok(depth)
}

fn write_scenario(
    genotype: &BitString,
    p: &Phenotype,
    problem: &ProblemDefinition,
    workdir: &Path,
) -> Result<()> {
    let costs = scenario_cost_breakdown(p, problem)?;
    let features: Vec<serde_json::Value> = problem
        .interventions
        .iter()
        .enumerate()
        .map(|(idx, iv)| {
            let mut obj = serde_json::json!({
                "id": iv.feature_id,
                "kind": iv.kind,
                "active": costs[idx].active,
                "quantity": costs[idx].quantity,
                "cost": costs[idx].cost,
            });
            if let Some(inf) = &iv.infiltration {
                obj["infiltration"] = serde_json::to_value(inf).expect("infallible");
            }
            if iv.kind == InterventionKind::DetentionBasin {
                obj["basin"] =
                    serde_json::to_value(problem.basin_values(p, idx)).expect("infallible");
                if let Some(origin) = iv.origin {
                    obj["origin"] = serde_json::json!([origin.0, origin.1]);
                }
            }
            obj
        })
        .collect();
    let doc = serde_json::json!({
        "genotype": genotype.to_string(),
        "total_cost": costs.iter().map(|c| c.cost).sum::<f64>(),
        "features": features,
    });
    let path = workdir.join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("infallible"))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Produce the depth grid for a decoded scenario through the configured
/// evaluator.
pub fn flood_depths(
    genotype: &BitString,
    p: &Phenotype,
    problem: &ProblemDefinition,
) -> Result<DepthGrid> {
    match problem.evaluator {
        EvaluatorKind::Surrogate => surrogate_evaluate(p, problem),
        EvaluatorKind::External => external_evaluate(genotype, p, problem),
    }
}

/// Memoising evaluation store. Every genotype is simulated at most once; the
/// ledger records unique evaluations in first-evaluation order.
#[derive(Debug, Default)]
pub struct FitnessCache {
    map: HashMap<BitString, ObjectiveVector>,
    ledger: Vec<(BitString, ObjectiveVector)>,
    /// Risk of the do-minimum scenario, set on first baseline evaluation;
    /// used to enforce the monotonicity guideline under the surrogate.
    baseline_risk: Option<f64>,
}

impl FitnessCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unique_evaluations(&self) -> u64 {
        self.ledger.len() as u64
    }

    pub fn get(&self, g: &BitString) -> Option<ObjectiveVector> {
        self.map.get(g).copied()
    }

    pub fn ledger(&self) -> &[(BitString, ObjectiveVector)] {
        &self.ledger
    }

    pub fn set_baseline_risk(&mut self, risk: f64) {
        self.baseline_risk = Some(risk);
    }

    fn compute(g: &BitString, problem: &ProblemDefinition) -> Result<ObjectiveVector> {
        let p = decode_genotype(g, &problem.layout)?;
        let cost = scenario_cost(&p, problem)?;
        let depths = flood_depths(g, &p, problem)?;
        let risk = risk_metric(&depths, &problem.buildings, problem.risk_metric, &problem.damage_curves)?;
        let v = ObjectiveVector::new(cost, risk);
        if !v.is_finite() || v.f1 < 0.0 || v.f2 < 0.0 {
            return Err(Error::evaluation(format!(
                "objective vector ({}, {}) is not finite and non-negative",
                v.f1, v.f2
            )));
        }
        Ok(v)
    }

    fn check_monotonicity(&self, v: &ObjectiveVector, problem: &ProblemDefinition) -> Result<()> {
        if problem.evaluator == EvaluatorKind::Surrogate {
            if let Some(baseline) = self.baseline_risk {
                let slack = 1e-9 * baseline.abs().max(1.0);
                if v.f2 > baseline + slack {
                    return Err(Error::evaluation(format!(
                        "surrogate risk {} exceeds the do-minimum baseline {} (design guideline 4)",
                        v.f2, baseline
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluate one genotype, memoised. A cache hit does not count a unique
    /// simulation.
    pub fn evaluate(
        &mut self,
        g: &BitString,
        problem: &ProblemDefinition,
    ) -> Result<ObjectiveVector> {
        if let Some(v) = self.map.get(g) {
            return Ok(*v);
        }
        let v = Self::compute(g, problem)?;
        self.check_monotonicity(&v, problem)?;
        self.map.insert(g.clone(), v);
        self.ledger.push((g.clone(), v));
        Ok(v)
    }

    /// Evaluate a batch, computing uncached members in parallel. Ledger
    /// order follows first occurrence within the batch, so results are
    /// independent of the parallel schedule.
    pub fn evaluate_batch(
        &mut self,
        genotypes: &[BitString],
        problem: &ProblemDefinition,
    ) -> Result<Vec<ObjectiveVector>> {
        let mut pending: Vec<&BitString> = Vec::new();
        let mut seen: HashMap<&BitString, ()> = HashMap::new();
        for g in genotypes {
            if !self.map.contains_key(g) && seen.insert(g, ()).is_none() {
                pending.push(g);
            }
        }
        let computed: Vec<(usize, Result<ObjectiveVector>)> = pending
            .par_iter()
            .enumerate()
            .map(|(i, g)| (i, Self::compute(g, problem)))
            .collect();
        let mut results = vec![None; pending.len()];
        for (i, r) in computed {
            results[i] = Some(r?);
        }
        for (g, v) in pending.iter().zip(results) {
            let v = v.expect("filled above");
            self.check_monotonicity(&v, problem)?;
            self.map.insert((*g).clone(), v);
            self.ledger.push(((*g).clone(), v));
        }
        genotypes
            .iter()
            .map(|g| {
                self.map
                    .get(g)
                    .copied()
                    .ok_or_else(|| Error::evaluation("batch member missing after evaluation"))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_extreme_genotypes;
    use crate::problems::twelve_zone_problem;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn no_active_interventions_returns_baseline_unchanged() {
        let problem = twelve_zone_problem();
        let (min, _) = build_extreme_genotypes(&problem.layout);
        let p = decode_genotype(&min, &problem.layout).unwrap();
        let grid = surrogate_evaluate(&p, &problem).unwrap();
        assert_eq!(&grid, problem.baseline_depth.as_ref().unwrap());
    }

    #[test]
    fn single_intervention_never_raises_depths() {
        let problem = twelve_zone_problem();
        let baseline = problem.baseline_depth.as_ref().unwrap();
        for zone in 0..problem.layout.total_length() {
            let mut g = BitString::zeros(problem.layout.total_length());
            g.set_bit(zone, 1);
            let p = decode_genotype(&g, &problem.layout).unwrap();
            let grid = surrogate_evaluate(&p, &problem).unwrap();
            for (a, b) in grid.values().iter().zip(baseline.values()) {
                assert!(a <= b, "zone {zone} raised a depth: {a} > {b}");
            }
        }
    }

    #[test]
    fn disjoint_zones_commute() {
        let problem = twelve_zone_problem();
        let l = problem.layout.total_length();
        let with_bits = |bits: &[usize]| {
            let mut g = BitString::zeros(l);
            for &b in bits {
                g.set_bit(b, 1);
            }
            let p = decode_genotype(&g, &problem.layout).unwrap();
            surrogate_evaluate(&p, &problem).unwrap()
        };
        // zone polygons are disjoint by construction, so the combined
        // effect is the composition in either order
        let combined = with_bits(&[1, 7]);
        let mut manual = problem.baseline_depth.clone().unwrap();
        for idx in [7, 1] {
            let iv = &problem.interventions[idx];
            let f = iv.retention_factor.unwrap();
            for (r, c) in iv.zone.as_ref().unwrap().rasterize(&manual) {
                manual.set(r, c, manual.get(r, c) * f);
            }
        }
        for (a, b) in combined.values().iter().zip(manual.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluation_is_memoised() {
        let problem = twelve_zone_problem();
        let mut cache = FitnessCache::new();
        let (min, max) = build_extreme_genotypes(&problem.layout);
        let v1 = cache.evaluate(&min, &problem).unwrap();
        assert_eq!(cache.unique_evaluations(), 1);
        let v2 = cache.evaluate(&min, &problem).unwrap();
        assert_eq!(cache.unique_evaluations(), 1, "repeat evaluation must not count");
        assert_eq!(v1, v2);
        cache.evaluate(&max, &problem).unwrap();
        assert_eq!(cache.unique_evaluations(), 2);
    }

    #[test]
    fn extreme_vector_objectives() {
        let problem = twelve_zone_problem();
        let mut cache = FitnessCache::new();
        let (min, max) = build_extreme_genotypes(&problem.layout);
        let v_min = cache.evaluate(&min, &problem).unwrap();
        assert_eq!(v_min.f1, 0.0, "do-minimum costs nothing");
        let v_max = cache.evaluate(&max, &problem).unwrap();
        assert!(v_max.f1 > 0.0);
        assert!(v_max.f2 <= v_min.f2, "maximal inclusion cannot raise risk");
    }

    #[test]
    fn baseline_risk_dominates_all_sampled_genotypes() {
        let problem = twelve_zone_problem();
        let mut cache = FitnessCache::new();
        let (min, _) = build_extreme_genotypes(&problem.layout);
        let baseline = cache.evaluate(&min, &problem).unwrap();
        cache.set_baseline_risk(baseline.f2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let l = problem.layout.total_length();
        for _ in 0..64 {
            let mut g = BitString::zeros(l);
            for i in 0..l {
                if rng.gen_bool(0.5) {
                    g.set_bit(i, 1);
                }
            }
            let v = cache.evaluate(&g, &problem).unwrap();
            assert!(v.f2 <= baseline.f2 + 1e-9);
        }
    }

    #[test]
    fn batch_matches_sequential_and_counts_once() {
        let problem = twelve_zone_problem();
        let l = problem.layout.total_length();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut batch = Vec::new();
        for _ in 0..20 {
            let mut g = BitString::zeros(l);
            for i in 0..l {
                if rng.gen_bool(0.5) {
                    g.set_bit(i, 1);
                }
            }
            batch.push(g.clone());
            batch.push(g); // duplicates must not double-count
        }
        let mut c1 = FitnessCache::new();
        let batch_results = c1.evaluate_batch(&batch, &problem).unwrap();
        let mut c2 = FitnessCache::new();
        let seq_results: Vec<ObjectiveVector> =
            batch.iter().map(|g| c2.evaluate(g, &problem).unwrap()).collect();
        assert_eq!(c1.unique_evaluations(), c2.unique_evaluations());
        assert!(c1.unique_evaluations() <= 20);
        for (a, b) in batch_results.iter().zip(&seq_results) {
            assert_eq!(a, b);
        }
        // ledgers agree including order
        for (x, y) in c1.ledger().iter().zip(c2.ledger()) {
            assert_eq!(x, y);
        }
    }
}
