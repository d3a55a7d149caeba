//! Run orchestration behind the command-line surface: per-generation trace
//! records, run directories with manifests and ledgers, the exhaustive
//! search oracle, deterministic single-genotype evaluation, and the
//! multi-run comparison report.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{run_nsga2, run_spea2, BenchConfig};
use crate::config::{load_config, problem_digest, text_digest, ConfigDocument};
use crate::encoding::{decode_genotype, BitString, FeatureValue};
use crate::evaluate::{flood_depths, FitnessCache};
use crate::exposure::assess_buildings;
use crate::metrics::{hyper_area_ratio, hypervolume_2d, FrontApproximation};
use crate::moea::{self, RunConfig, TerminationReason};
use crate::problem::{scenario_cost_breakdown, validate_problem, ProblemDefinition};
use crate::{Error, ObjectiveVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub f1_min: f64,
    pub f1_max: f64,
    pub f2_min: f64,
    pub f2_max: f64,
}

/// One self-describing trace record per generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub algorithm: String,
    pub t: u64,
    pub population_size: usize,
    pub archive_size: usize,
    pub unique_evals: u64,
    pub epsilon: Option<[f64; 2]>,
    pub bounds: ObjectiveBounds,
    pub hv_norm: f64,
    /// Objective vectors of the maintained front at the end of the
    /// generation.
    pub front: Vec<[f64; 2]>,
}

pub trait GenerationSink {
    fn record(&mut self, rec: &GenerationRecord) -> Result<()>;
}

/// Collects records in memory (tests, examples).
#[derive(Debug, Default)]
pub struct VecSink {
    pub records: Vec<GenerationRecord>,
}

impl GenerationSink for VecSink {
    fn record(&mut self, rec: &GenerationRecord) -> Result<()> {
        self.records.push(rec.clone());
        Ok(())
    }
}

/// Streams records as JSON lines, flushing each one so partial logs survive
/// an abort.
pub struct JsonlSink {
    writer: BufWriter<File>,
    path: PathBuf,
    pub records: Vec<GenerationRecord>,
}

impl JsonlSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(JsonlSink { writer: BufWriter::new(file), path: path.to_path_buf(), records: Vec::new() })
    }
}

impl GenerationSink for JsonlSink {
    fn record(&mut self, rec: &GenerationRecord) -> Result<()> {
        let line = serde_json::to_string(rec)
            .map_err(|e| Error::evaluation(format!("record serialisation failed: {e}")))?;
        writeln!(self.writer, "{line}")
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::io(self.path.display().to_string(), e))?;
        self.records.push(rec.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Epsilon,
    Nsga2,
    Spea2,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Epsilon => "epsilon",
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Spea2 => "spea2",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(Algorithm::Epsilon),
            "nsga2" => Ok(Algorithm::Nsga2),
            "spea2" => Ok(Algorithm::Spea2),
            other => Err(Error::input(format!(
                "unknown algorithm {other:?}; expected epsilon, nsga2 or spea2"
            ))),
        }
    }
}

/// Identity of a completed run: content digests plus the seed fully
/// determine every output byte except the timestamps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub algorithm: String,
    pub seed: u64,
    pub config_digest: String,
    pub problem_digest: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub termination: Option<String>,
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Optional command-line overrides applied on top of the config document.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub max_front: Option<usize>,
    pub population: Option<usize>,
    pub t_end: Option<u64>,
    pub eval_budget: Option<u64>,
    pub workers: Option<usize>,
}

impl RunOverrides {
    fn apply(&self, doc: &mut ConfigDocument) {
        if let Some(s) = self.seed {
            doc.run.seed = s;
        }
        if let Some(m) = self.max_front {
            doc.run.max_front = m;
        }
        if let Some(p) = self.population {
            doc.run.population = p;
        }
        if let Some(t) = self.t_end {
            doc.run.t_end = t;
        }
        if let Some(b) = self.eval_budget {
            doc.run.eval_budget = Some(b);
        }
        if let Some(w) = self.workers {
            doc.run.workers = w;
        }
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("failed to build worker pool: {e}")))
}

/// Validate the configuration: parse, build the problem, run the static
/// checks. Returns the report.
pub fn validate_command(config_path: &Path) -> Result<crate::problem::ValidationReport> {
    let (doc, _) = load_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let problem = doc.build_problem(base)?;
    Ok(validate_problem(&problem))
}

pub struct CompletedRun {
    pub run_dir: PathBuf,
    pub front: Vec<(BitString, ObjectiveVector)>,
    pub termination: String,
    pub unique_evals: u64,
    pub records: Vec<GenerationRecord>,
}

/// Execute one optimisation run and write its artifacts: `manifest.json`,
/// `generations.jsonl`, `evaluations.csv`, `front.csv` and
/// `front_solutions.json`.
pub fn run_command(
    config_path: &Path,
    algorithm: Algorithm,
    overrides: &RunOverrides,
    out_dir: Option<&Path>,
) -> Result<CompletedRun> {
    let (mut doc, text) = load_config(config_path)?;
    overrides.apply(&mut doc);
    let base = config_path.parent().unwrap_or(Path::new("."));
    let problem = doc.build_problem(base)?;
    let report = validate_problem(&problem);
    if !report.is_clean() {
        return Err(Error::Validation(report));
    }
    if algorithm == Algorithm::Nsga2 && doc.run.population % 2 != 0 {
        return Err(Error::config(format!(
            "NSGA-II pairs parents; population size {} must be even",
            doc.run.population
        )));
    }

    let config_digest = text_digest(&text);
    let problem_digest = problem_digest(&doc, &text, base)?;
    let run_dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from(format!(
            "runs/{}-seed{}-{}",
            algorithm.name(),
            doc.run.seed,
            &problem_digest[..8]
        )),
    };
    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(run_dir.display().to_string(), e))?;

    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        algorithm: algorithm.name().to_string(),
        seed: doc.run.seed,
        config_digest,
        problem_digest,
        started_unix: now_unix(),
        finished_unix: None,
        termination: None,
    };
    write_json(&run_dir.join("manifest.json"), &manifest)?;

    let mut sink = JsonlSink::create(&run_dir.join("generations.jsonl"))?;
    let pool = thread_pool(doc.run.workers)?;
    let outcome = pool.install(|| -> Result<(Vec<(BitString, ObjectiveVector)>, String, FitnessCache)> {
        match algorithm {
            Algorithm::Epsilon => {
                let config: RunConfig = doc.run_config();
                let (state, reason) = moea::run(&problem, &config, &mut sink)?;
                let mut front: Vec<(BitString, ObjectiveVector)> = state
                    .archive
                    .entries()
                    .iter()
                    .map(|e| (e.genotype.clone(), e.objectives))
                    .collect();
                sort_front(&mut front);
                let reason_str = serde_json::to_value(reason)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_else(|| format!("{reason:?}"));
                Ok((front, reason_str, state.cache))
            }
            Algorithm::Nsga2 | Algorithm::Spea2 => {
                let config: BenchConfig = doc.bench_config();
                let mut cache = FitnessCache::new();
                let mut front = match algorithm {
                    Algorithm::Nsga2 => run_nsga2(&problem, &config, &mut cache, &mut sink)?,
                    _ => run_spea2(&problem, &config, &mut cache, &mut sink)?,
                };
                sort_front(&mut front);
                let reason = if config.eval_budget.is_some_and(|b| cache.unique_evaluations() >= b)
                {
                    "eval_budget"
                } else {
                    "max_generations"
                };
                Ok((front, reason.to_string(), cache))
            }
        }
    });

    let (front, termination, cache) = match outcome {
        Ok(v) => v,
        Err(e) => {
            manifest.finished_unix = Some(now_unix());
            manifest.termination = Some(format!("error: {e}"));
            let _ = write_json(&run_dir.join("manifest.json"), &manifest);
            return Err(e);
        }
    };

    write_ledger(&run_dir.join("evaluations.csv"), cache.ledger())?;
    write_front_csv(&run_dir.join("front.csv"), &front)?;
    write_front_solutions(&run_dir.join("front_solutions.json"), &front, &problem)?;

    manifest.finished_unix = Some(now_unix());
    manifest.termination = Some(termination.clone());
    write_json(&run_dir.join("manifest.json"), &manifest)?;

    Ok(CompletedRun {
        run_dir,
        front,
        termination,
        unique_evals: cache.unique_evaluations(),
        records: sink.records,
    })
}

fn sort_front(front: &mut [(BitString, ObjectiveVector)]) {
    front.sort_by(|a, b| {
        a.1.f1
            .total_cmp(&b.1.f1)
            .then(a.1.f2.total_cmp(&b.1.f2))
            .then_with(|| a.0.cmp(&b.0))
    });
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::evaluation(format!("serialisation failed: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_ledger(path: &Path, ledger: &[(BitString, ObjectiveVector)]) -> Result<()> {
    let mut out = String::from("index,genotype,f1,f2\n");
    for (i, (g, v)) in ledger.iter().enumerate() {
        out.push_str(&format!("{i},{g},{},{}\n", v.f1, v.f2));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_front_csv(path: &Path, front: &[(BitString, ObjectiveVector)]) -> Result<()> {
    let mut out = String::from("genotype,f1,f2\n");
    for (g, v) in front {
        out.push_str(&format!("{g},{},{}\n", v.f1, v.f2));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_front_solutions(
    path: &Path,
    front: &[(BitString, ObjectiveVector)],
    problem: &ProblemDefinition,
) -> Result<()> {
    let mut solutions = Vec::with_capacity(front.len());
    for (g, v) in front {
        let phenotype = decode_genotype(g, &problem.layout)?;
        let costs = scenario_cost_breakdown(&phenotype, problem)?;
        let features: Vec<serde_json::Value> = problem
            .layout
            .features()
            .iter()
            .zip(&phenotype.values)
            .zip(&costs)
            .map(|((f, value), cost)| {
                let decoded = match value {
                    FeatureValue::Included(inc) => serde_json::json!({ "included": inc }),
                    FeatureValue::Characteristics(vals) => serde_json::json!({
                        "characteristics": vals,
                    }),
                };
                serde_json::json!({
                    "id": f.id,
                    "decoded": decoded,
                    "cost": cost.cost,
                })
            })
            .collect();
        solutions.push(serde_json::json!({
            "genotype": g.to_string(),
            "objectives": [v.f1, v.f2],
            "features": features,
        }));
    }
    write_json(path, &solutions)
}

/// Exact Pareto filter over a set of objective vectors (minimisation):
/// sort by `(f1, f2)` and sweep, keeping strictly improving `f2`. Identical
/// objective vectors collapse to their first representative.
pub fn pareto_filter(points: &[(BitString, ObjectiveVector)]) -> Vec<(BitString, ObjectiveVector)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .1
            .f1
            .total_cmp(&points[b].1.f1)
            .then(points[a].1.f2.total_cmp(&points[b].1.f2))
    });
    let mut front: Vec<(BitString, ObjectiveVector)> = Vec::new();
    let mut best_f2 = f64::INFINITY;
    for &i in &order {
        let v = points[i].1;
        if v.f2 < best_f2 {
            front.push(points[i].clone());
            best_f2 = v.f2;
        }
    }
    front
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustiveMeta {
    pub problem_digest: String,
    pub total_vectors: u64,
    pub front_size: usize,
    /// Componentwise maxima over the feasible objective set: the fixed
    /// reference vector for hyper-area ratios.
    pub worst_vector: [f64; 2],
}

pub struct ExhaustiveOutput {
    pub out_dir: PathBuf,
    pub feasible: Vec<(BitString, ObjectiveVector)>,
    pub front: Vec<(BitString, ObjectiveVector)>,
    pub meta: ExhaustiveMeta,
}

pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 1 << 20;

/// Evaluate every genotype of the layout (refusing search spaces beyond the
/// cap) and write the feasible objective set, its exact Pareto front and a
/// metadata file naming the worst objective vector.
pub fn exhaustive_command(
    config_path: &Path,
    cap: Option<u64>,
    out_dir: Option<&Path>,
) -> Result<ExhaustiveOutput> {
    let (doc, text) = load_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let problem = doc.build_problem(base)?;
    let report = validate_problem(&problem);
    if !report.is_clean() {
        return Err(Error::Validation(report));
    }
    let cap = cap.unwrap_or(DEFAULT_EXHAUSTIVE_CAP);
    let len = problem.layout.total_length();
    let space: Option<u64> = if len >= 64 { None } else { Some(1u64 << len) };
    match space {
        Some(n) if n <= cap => {}
        _ => {
            return Err(Error::config(format!(
                "search space 2^{len} exceeds the exhaustive cap {cap}; raise it with --cap if this is intended",
            )))
        }
    }
    let n = space.expect("within cap");

    let out = match out_dir {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from("exhaustive"),
    };
    std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;

    let genotypes: Vec<BitString> = (0..n)
        .map(|i| {
            let mut g = BitString::zeros(len);
            for p in 0..len {
                if (i >> p) & 1 == 1 {
                    g.set_bit(p, 1);
                }
            }
            g
        })
        .collect();
    let pool = thread_pool(doc.run.workers)?;
    let mut cache = FitnessCache::new();
    let objectives = pool.install(|| cache.evaluate_batch(&genotypes, &problem))?;

    let feasible: Vec<(BitString, ObjectiveVector)> =
        genotypes.into_iter().zip(objectives).collect();
    let front = pareto_filter(&feasible);

    let worst = feasible.iter().fold([f64::NEG_INFINITY; 2], |acc, (_, v)| {
        [acc[0].max(v.f1), acc[1].max(v.f2)]
    });
    let meta = ExhaustiveMeta {
        problem_digest: problem_digest(&doc, &text, base)?,
        total_vectors: n,
        front_size: front.len(),
        worst_vector: worst,
    };

    write_front_csv(&out.join("feasible.csv"), &feasible)?;
    write_front_csv(&out.join("front.csv"), &front)?;
    write_json(&out.join("meta.json"), &meta)?;

    Ok(ExhaustiveOutput { out_dir: out, feasible, front, meta })
}

/// Decoded evaluation of a single genotype, for debugging.
pub fn evaluate_command(config_path: &Path, genotype: &str) -> Result<serde_json::Value> {
    let (doc, _) = load_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let problem = doc.build_problem(base)?;
    let g = problem.layout.parse_genotype(genotype)?;
    let phenotype = decode_genotype(&g, &problem.layout)?;
    let costs = scenario_cost_breakdown(&phenotype, &problem)?;
    let depths = flood_depths(&g, &phenotype, &problem)?;
    let (risk, exposure) = assess_buildings(
        &depths,
        &problem.buildings,
        problem.risk_metric,
        &problem.damage_curves,
    )?;
    let total_cost: f64 = costs.iter().map(|c| c.cost).sum();
    Ok(serde_json::json!({
        "genotype": genotype,
        "objectives": { "f1": total_cost, "f2": risk },
        "features": costs,
        "buildings": exposure,
    }))
}

/// One aligned convergence row: statistics over runs of one algorithm at a
/// unique-evaluation checkpoint.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub evals: u64,
    pub algorithm: String,
    pub runs: usize,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// "hv_norm" without an exact front, "hyper_area_ratio" with one.
    pub measure: String,
    pub rows: Vec<ReportRow>,
    /// Per algorithm: mean of the final measure across runs.
    pub final_means: BTreeMap<String, f64>,
    /// `dominated[a][b]`: fraction of algorithm a's union front dominated
    /// by a member of algorithm b's union front.
    pub dominated_fractions: BTreeMap<String, BTreeMap<String, f64>>,
}

struct LoadedRun {
    algorithm: String,
    problem_digest: String,
    records: Vec<GenerationRecord>,
    front: Vec<ObjectiveVector>,
}

fn read_run_dir(dir: &Path) -> Result<LoadedRun> {
    let manifest_path = dir.join("manifest.json");
    let manifest: RunManifest = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?,
    )
    .map_err(|e| Error::input(format!("{}: {e}", manifest_path.display())))?;
    let log_path = dir.join("generations.jsonl");
    let text = std::fs::read_to_string(&log_path)
        .map_err(|e| Error::io(log_path.display().to_string(), e))?;
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        records.push(
            serde_json::from_str::<GenerationRecord>(line)
                .map_err(|e| Error::input(format!("{}: {e}", log_path.display())))?,
        );
    }
    let front = records
        .last()
        .map(|r| r.front.iter().map(|p| ObjectiveVector::new(p[0], p[1])).collect())
        .unwrap_or_default();
    Ok(LoadedRun { algorithm: manifest.algorithm, problem_digest: manifest.problem_digest, records, front })
}

/// Load the exact front written by the exhaustive command (given its
/// directory or its `front.csv`), together with the worst-vector reference.
pub fn read_exact_front(path: &Path) -> Result<(Vec<ObjectiveVector>, [f64; 2], Option<String>)> {
    let (front_path, meta_path) = if path.is_dir() {
        (path.join("front.csv"), path.join("meta.json"))
    } else {
        (path.to_path_buf(), path.with_file_name("meta.json"))
    };
    let text = std::fs::read_to_string(&front_path)
        .map_err(|e| Error::io(front_path.display().to_string(), e))?;
    let mut points = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::input(format!("malformed front row: {line:?}")));
        }
        let f1: f64 = fields[1].parse().map_err(|_| Error::input("bad f1 in front file"))?;
        let f2: f64 = fields[2].parse().map_err(|_| Error::input("bad f2 in front file"))?;
        points.push(ObjectiveVector::new(f1, f2));
    }
    if points.is_empty() {
        return Err(Error::input("exact front file holds no points"));
    }
    let (worst, digest) = match std::fs::read_to_string(&meta_path) {
        Ok(meta_text) => {
            let meta: ExhaustiveMeta = serde_json::from_str(&meta_text)
                .map_err(|e| Error::input(format!("{}: {e}", meta_path.display())))?;
            (meta.worst_vector, Some(meta.problem_digest))
        }
        Err(_) => {
            let worst = points.iter().fold([f64::NEG_INFINITY; 2], |acc, v| {
                [acc[0].max(v.f1), acc[1].max(v.f2)]
            });
            (worst, None)
        }
    };
    Ok((points, worst, digest))
}

/// Align runs on the unique-evaluation axis and compare algorithms: per
/// checkpoint mean/variance of the measure (normalised hypervolume, or the
/// hyper-area ratio when an exact front is supplied), final-measure means,
/// and pairwise union-front dominance fractions.
pub fn report_command(
    run_dirs: &[PathBuf],
    exact: Option<&Path>,
    step: u64,
) -> Result<ComparisonReport> {
    if run_dirs.is_empty() {
        return Err(Error::input("report needs at least one run directory"));
    }
    let step = step.max(1);
    let runs: Vec<LoadedRun> = run_dirs
        .iter()
        .map(|d| read_run_dir(d))
        .collect::<Result<Vec<_>>>()?;
    let digest0 = &runs[0].problem_digest;
    if runs.iter().any(|r| &r.problem_digest != digest0) {
        return Err(Error::input(
            "runs come from different problems (mismatched problem digests)",
        ));
    }

    let exact_front = exact.map(read_exact_front).transpose()?;
    if let Some((_, _, Some(digest))) = &exact_front {
        if digest != digest0 {
            return Err(Error::input(
                "exact front comes from a different problem (mismatched problem digests)",
            ));
        }
    }

    // per-record measure as a step function over unique evaluations
    let measure_of = |rec: &GenerationRecord| -> Result<f64> {
        match &exact_front {
            None => Ok(rec.hv_norm),
            Some((points, worst, _)) => {
                let z_ref = ObjectiveVector::new(worst[0], worst[1]);
                let exact = FrontApproximation::new(points.clone(), z_ref);
                let approx = FrontApproximation::new(
                    rec.front.iter().map(|p| ObjectiveVector::new(p[0], p[1])),
                    z_ref,
                );
                hyper_area_ratio(&approx, &exact)
            }
        }
    };

    let max_evals = runs
        .iter()
        .flat_map(|r| r.records.last().map(|rec| rec.unique_evals))
        .max()
        .unwrap_or(0);

    let mut rows = Vec::new();
    let mut algorithms: Vec<String> = runs.iter().map(|r| r.algorithm.clone()).collect();
    algorithms.sort();
    algorithms.dedup();
    let mut checkpoint = step;
    while checkpoint <= max_evals {
        for algo in &algorithms {
            let mut values = Vec::new();
            for run in runs.iter().filter(|r| &r.algorithm == algo) {
                let rec = run
                    .records
                    .iter()
                    .take_while(|rec| rec.unique_evals <= checkpoint)
                    .last();
                if let Some(rec) = rec {
                    values.push(measure_of(rec)?);
                }
            }
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / values.len() as f64;
            rows.push(ReportRow {
                evals: checkpoint,
                algorithm: algo.clone(),
                runs: values.len(),
                mean,
                variance,
            });
        }
        checkpoint += step;
    }

    let mut final_means = BTreeMap::new();
    for algo in &algorithms {
        let mut values = Vec::new();
        for run in runs.iter().filter(|r| &r.algorithm == algo) {
            if let Some(rec) = run.records.last() {
                values.push(measure_of(rec)?);
            }
        }
        if !values.is_empty() {
            final_means.insert(algo.clone(), values.iter().sum::<f64>() / values.len() as f64);
        }
    }

    // union front per algorithm, then pairwise dominance fractions
    let union_front = |algo: &str| -> Vec<ObjectiveVector> {
        let mut pts: Vec<(BitString, ObjectiveVector)> = runs
            .iter()
            .filter(|r| r.algorithm == algo)
            .flat_map(|r| r.front.iter().map(|v| (BitString::zeros(0), *v)))
            .collect();
        pts.sort_by(|a, b| a.1.f1.total_cmp(&b.1.f1).then(a.1.f2.total_cmp(&b.1.f2)));
        pareto_filter(&pts).into_iter().map(|(_, v)| v).collect()
    };
    let fronts: BTreeMap<String, Vec<ObjectiveVector>> =
        algorithms.iter().map(|a| (a.clone(), union_front(a))).collect();
    let mut dominated_fractions = BTreeMap::new();
    for a in &algorithms {
        let mut inner = BTreeMap::new();
        for b in &algorithms {
            if a == b {
                continue;
            }
            let fa = &fronts[a];
            let fb = &fronts[b];
            if fa.is_empty() {
                continue;
            }
            let dominated = fa
                .iter()
                .filter(|p| fb.iter().any(|q| q.dominates(p)))
                .count();
            inner.insert(b.clone(), dominated as f64 / fa.len() as f64);
        }
        dominated_fractions.insert(a.clone(), inner);
    }

    Ok(ComparisonReport {
        measure: if exact_front.is_some() { "hyper_area_ratio".into() } else { "hv_norm".into() },
        rows,
        final_means,
        dominated_fractions,
    })
}

/// Hyper-area ratio of a run's final front against an exact front, with the
/// worst-vector reference. Exposed for the examples and acceptance tests.
pub fn final_ratio(
    front: &[(BitString, ObjectiveVector)],
    exact: &[(BitString, ObjectiveVector)],
    worst: [f64; 2],
) -> Result<f64> {
    let z_ref = ObjectiveVector::new(worst[0], worst[1]);
    let exact_fa = FrontApproximation::new(exact.iter().map(|e| e.1), z_ref);
    let approx = FrontApproximation::new(front.iter().map(|e| e.1), z_ref);
    hyper_area_ratio(&approx, &exact_fa)
}

/// Hypervolume of a front under an explicit reference; convenience for
/// examples.
pub fn front_hypervolume(points: &[ObjectiveVector], z_ref: ObjectiveVector) -> f64 {
    hypervolume_2d(&FrontApproximation::new(points.iter().copied(), z_ref))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn v(f1: f64, f2: f64) -> ObjectiveVector {
        ObjectiveVector::new(f1, f2)
    }

    fn keyed(points: &[(f64, f64)]) -> Vec<(BitString, ObjectiveVector)> {
        points
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                (BitString::from_str(&format!("{:04b}", i)).unwrap(), v(a, b))
            })
            .collect()
    }

    #[test]
    fn pareto_filter_basics() {
        let pts = keyed(&[(1.0, 1.0), (0.0, 2.0), (2.0, 0.0), (1.5, 1.5), (1.0, 1.0)]);
        let front = pareto_filter(&pts);
        let objs: Vec<(f64, f64)> = front.iter().map(|(_, p)| (p.f1, p.f2)).collect();
        assert_eq!(objs, vec![(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn pareto_filter_keeps_non_dominated_equal_f1() {
        let pts = keyed(&[(1.0, 5.0), (1.0, 3.0), (2.0, 1.0)]);
        let front = pareto_filter(&pts);
        let objs: Vec<(f64, f64)> = front.iter().map(|(_, p)| (p.f1, p.f2)).collect();
        // (1, 5) is dominated by (1, 3)
        assert_eq!(objs, vec![(1.0, 3.0), (2.0, 1.0)]);
    }

    #[test]
    fn algorithm_parsing() {
        assert_eq!(Algorithm::from_str("epsilon").unwrap(), Algorithm::Epsilon);
        assert_eq!(Algorithm::from_str("nsga2").unwrap(), Algorithm::Nsga2);
        assert_eq!(Algorithm::from_str("spea2").unwrap(), Algorithm::Spea2);
        assert!(Algorithm::from_str("moga").is_err());
    }
}
