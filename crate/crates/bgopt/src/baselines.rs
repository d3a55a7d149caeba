//! Benchmark algorithms: NSGA-II (fast non-dominated sorting with crowding
//! distance) and SPEA-2 (strength/raw fitness with k-th nearest-neighbour
//! density and distance-profile truncation). Both share the evaluation
//! cache, operators and per-generation trace schema of the main algorithm
//! so comparisons run on a per-unique-simulation basis.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::BitString;
use crate::evaluate::FitnessCache;
use crate::operators::{crossover_at, mutate_bits, random_bitstring};
use crate::problem::ProblemDefinition;
use crate::run::{GenerationRecord, GenerationSink, ObjectiveBounds};
use crate::{Error, ObjectiveVector, Result};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Population size N.
    pub population_size: usize,
    /// Archive size for SPEA-2.
    pub archive_size: usize,
    pub t_end: u64,
    /// Stop at the first generation boundary where the unique-simulation
    /// count reaches this budget.
    pub eval_budget: Option<u64>,
    pub seed: u64,
    /// Per-bit mutation probability; defaults to 1/L.
    pub mutation_prob: Option<f64>,
    pub crossover_prob: f64,
}

impl BenchConfig {
    pub fn new(population_size: usize, seed: u64) -> Self {
        BenchConfig {
            population_size,
            archive_size: population_size,
            t_end: 250,
            eval_budget: None,
            seed,
            mutation_prob: None,
            crossover_prob: 1.0,
        }
    }
}

/// Divide points into fronts of equal dominance rank: front 0 holds the
/// non-dominated members, front k the members non-dominated once earlier
/// fronts are removed. Returns per-front index lists covering the input.
pub fn fast_non_dominated_sort(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if points[i].dominates(&points[j]) {
                dominated_by[i].push(j);
            } else if points[j].dominates(&points[i]) {
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// Per-member crowding distance within one front: boundary members get
/// infinity, interior members accumulate normalised neighbour gaps per
/// objective. A zero-range objective contributes nothing.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0f64; n];
    if n == 0 {
        return dist;
    }
    for obj in 0..2 {
        let value = |i: usize| if obj == 0 { front[i].f1 } else { front[i].f2 };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = value(order[n - 1]) - value(order[0]);
        if range <= 0.0 {
            continue;
        }
        for w in 1..n.saturating_sub(1) {
            let lo = value(order[w - 1]);
            let hi = value(order[w + 1]);
            dist[order[w]] += (hi - lo) / range;
        }
    }
    dist
}

/// SPEA-2 fitness annotations for one member of the union population.
#[derive(Debug, Clone, Copy)]
pub struct Spea2Fitness {
    /// Count of members this one dominates.
    pub strength: usize,
    /// Sum of strengths of this member's dominators; 0 iff non-dominated.
    pub raw: f64,
    /// Distance to the k-th nearest neighbour in normalised objective
    /// space; larger means less crowded.
    pub kth_distance: f64,
    /// Density 1 / (kth_distance + 2).
    pub density: f64,
    /// Combined fitness raw + density; below 1 iff non-dominated.
    pub combined: f64,
}

/// Strength, raw fitness, k-th nearest-neighbour density and combined
/// fitness over a union population, with k = floor(sqrt(N + N_archive)).
/// Distances are per-objective normalised 1-norms.
pub fn spea2_fitness(union: &[ObjectiveVector], n: usize, n_archive: usize) -> Vec<Spea2Fitness> {
    let m = union.len();
    let mut strength = vec![0usize; m];
    for i in 0..m {
        for j in 0..m {
            if i != j && union[i].dominates(&union[j]) {
                strength[i] += 1;
            }
        }
    }
    let mut raw = vec![0.0f64; m];
    for i in 0..m {
        for j in 0..m {
            if i != j && union[j].dominates(&union[i]) {
                raw[i] += strength[j] as f64;
            }
        }
    }
    let (mut f1_min, mut f1_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut f2_min, mut f2_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in union {
        f1_min = f1_min.min(p.f1);
        f1_max = f1_max.max(p.f1);
        f2_min = f2_min.min(p.f2);
        f2_max = f2_max.max(p.f2);
    }
    let r1 = f1_max - f1_min;
    let r2 = f2_max - f2_min;
    let norm_dist = |a: &ObjectiveVector, b: &ObjectiveVector| {
        let d1 = if r1 > 0.0 { (a.f1 - b.f1).abs() / r1 } else { 0.0 };
        let d2 = if r2 > 0.0 { (a.f2 - b.f2).abs() / r2 } else { 0.0 };
        d1 + d2
    };
    let k = ((n + n_archive) as f64).sqrt().floor() as usize;
    let k = k.clamp(1, m.saturating_sub(1).max(1));
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut dists: Vec<f64> = (0..m)
            .filter(|&j| j != i)
            .map(|j| norm_dist(&union[i], &union[j]))
            .collect();
        dists.sort_by(|a, b| a.total_cmp(b));
        let kth = if dists.is_empty() { 0.0 } else { dists[k.min(dists.len()) - 1] };
        let density = 1.0 / (kth + 2.0);
        out.push(Spea2Fitness {
            strength: strength[i],
            raw: raw[i],
            kth_distance: kth,
            density,
            combined: raw[i] + density,
        });
    }
    out
}

/// Iteratively remove the member whose sorted nearest-neighbour distance
/// profile is lexicographically minimal until `keep` members remain.
/// Returns the retained indices into the input, in input order.
pub fn spea2_truncate(points: &[ObjectiveVector], keep: usize) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..points.len()).collect();
    if keep == 0 {
        return Vec::new();
    }
    let (mut f1_min, mut f1_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut f2_min, mut f2_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        f1_min = f1_min.min(p.f1);
        f1_max = f1_max.max(p.f1);
        f2_min = f2_min.min(p.f2);
        f2_max = f2_max.max(p.f2);
    }
    let r1 = f1_max - f1_min;
    let r2 = f2_max - f2_min;
    let dist = |a: usize, b: usize| {
        let d1 = if r1 > 0.0 { (points[a].f1 - points[b].f1).abs() / r1 } else { 0.0 };
        let d2 = if r2 > 0.0 { (points[a].f2 - points[b].f2).abs() / r2 } else { 0.0 };
        d1 + d2
    };
    while alive.len() > keep {
        // sorted distance profile of each survivor to the other survivors
        let profiles: Vec<Vec<f64>> = alive
            .iter()
            .map(|&i| {
                let mut d: Vec<f64> =
                    alive.iter().filter(|&&j| j != i).map(|&j| dist(i, j)).collect();
                d.sort_by(|a, b| a.total_cmp(b));
                d
            })
            .collect();
        let mut worst = 0usize;
        for cand in 1..alive.len() {
            if lex_less(&profiles[cand], &profiles[worst]) {
                worst = cand;
            }
        }
        alive.remove(worst);
    }
    alive
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

struct ObservedBounds {
    f1: (f64, f64),
    f2: (f64, f64),
}

impl ObservedBounds {
    fn new() -> Self {
        ObservedBounds {
            f1: (f64::INFINITY, f64::NEG_INFINITY),
            f2: (f64::INFINITY, f64::NEG_INFINITY),
        }
    }

    fn absorb(&mut self, v: &ObjectiveVector) {
        self.f1.0 = self.f1.0.min(v.f1);
        self.f1.1 = self.f1.1.max(v.f1);
        self.f2.0 = self.f2.0.min(v.f2);
        self.f2.1 = self.f2.1.max(v.f2);
    }

    fn as_bounds(&self) -> ObjectiveBounds {
        ObjectiveBounds {
            f1_min: self.f1.0,
            f1_max: self.f1.1,
            f2_min: self.f2.0,
            f2_max: self.f2.1,
        }
    }

    fn normalized_hv(&self, front: &[ObjectiveVector]) -> f64 {
        let lower = ObjectiveVector::new(self.f1.0, self.f2.0);
        let upper = ObjectiveVector::new(self.f1.1, self.f2.1);
        crate::metrics::normalized_hypervolume(front, lower, upper).unwrap_or(0.0)
    }
}

fn budget_reached(cache: &FitnessCache, cfg: &BenchConfig) -> bool {
    cfg.eval_budget.is_some_and(|b| cache.unique_evaluations() >= b)
}

/// NSGA-II main loop. Returns the final non-dominated front as
/// genotype/objective pairs.
pub fn run_nsga2(
    problem: &ProblemDefinition,
    cfg: &BenchConfig,
    cache: &mut FitnessCache,
    sink: &mut dyn GenerationSink,
) -> Result<Vec<(BitString, ObjectiveVector)>> {
    if cfg.population_size == 0 || cfg.population_size % 2 != 0 {
        return Err(Error::config(format!(
            "population size must be positive and even for pairing, got {}",
            cfg.population_size
        )));
    }
    let len = problem.layout.total_length();
    let mutation = cfg.mutation_prob.unwrap_or(1.0 / len.max(1) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut obs = ObservedBounds::new();

    let mut parents: Vec<BitString> =
        (0..cfg.population_size).map(|_| random_bitstring(len, &mut rng)).collect();
    let mut offspring: Vec<BitString> = Vec::new();
    let mut survivors: Vec<(BitString, ObjectiveVector, usize, f64)> = Vec::new();

    let mut t = 0u64;
    while t < cfg.t_end && !budget_reached(cache, cfg) {
        let merged: Vec<BitString> = parents.iter().chain(offspring.iter()).cloned().collect();
        let objectives = cache.evaluate_batch(&merged, problem)?;
        for v in &objectives {
            obs.absorb(v);
        }
        let fronts = fast_non_dominated_sort(&objectives);

        // fill the next generation front by front, the last one by
        // descending crowding distance
        survivors.clear();
        for (rank, front) in fronts.iter().enumerate() {
            let front_points: Vec<ObjectiveVector> = front.iter().map(|&i| objectives[i]).collect();
            let crowd = crowding_distance(&front_points);
            if survivors.len() + front.len() <= cfg.population_size {
                for (slot, &i) in front.iter().enumerate() {
                    survivors.push((merged[i].clone(), objectives[i], rank, crowd[slot]));
                }
            } else {
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]));
                for &slot in order.iter().take(cfg.population_size - survivors.len()) {
                    let i = front[slot];
                    survivors.push((merged[i].clone(), objectives[i], rank, crowd[slot]));
                }
                break;
            }
            if survivors.len() == cfg.population_size {
                break;
            }
        }

        let front0: Vec<ObjectiveVector> =
            survivors.iter().filter(|s| s.2 == 0).map(|s| s.1).collect();
        sink.record(&GenerationRecord {
            algorithm: "nsga2".into(),
            t,
            population_size: survivors.len(),
            archive_size: front0.len(),
            unique_evals: cache.unique_evaluations(),
            epsilon: None,
            bounds: obs.as_bounds(),
            hv_norm: obs.normalized_hv(&front0),
            front: front0.iter().map(|p| p.as_array()).collect(),
        })?;

        // binary tournament on (rank, crowding), one-point crossover on
        // pairs, bit-flip mutation
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let a = rng.gen_range(0..survivors.len());
            let b = rng.gen_range(0..survivors.len());
            let (ra, ca) = (survivors[a].2, survivors[a].3);
            let (rb, cb) = (survivors[b].2, survivors[b].3);
            if ra < rb || (ra == rb && ca > cb) {
                a
            } else if rb < ra || (rb == ra && cb > ca) {
                b
            } else if rng.gen_bool(0.5) {
                a
            } else {
                b
            }
        };
        offspring.clear();
        while offspring.len() < cfg.population_size {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let (a, b) = (&survivors[p1].0, &survivors[p2].0);
            let (mut c1, mut c2) = if len >= 2 && rng.gen_bool(cfg.crossover_prob) {
                let cut = rng.gen_range(1..len);
                (crossover_at(a, b, cut), crossover_at(b, a, cut))
            } else {
                (a.clone(), b.clone())
            };
            mutate_bits(&mut c1, mutation, &mut rng);
            mutate_bits(&mut c2, mutation, &mut rng);
            offspring.push(c1);
            if offspring.len() < cfg.population_size {
                offspring.push(c2);
            }
        }
        parents = survivors.iter().map(|s| s.0.clone()).collect();
        t += 1;
    }

    Ok(survivors
        .iter()
        .filter(|s| s.2 == 0)
        .map(|s| (s.0.clone(), s.1))
        .collect())
}

/// SPEA-2 main loop. Returns the final archive.
pub fn run_spea2(
    problem: &ProblemDefinition,
    cfg: &BenchConfig,
    cache: &mut FitnessCache,
    sink: &mut dyn GenerationSink,
) -> Result<Vec<(BitString, ObjectiveVector)>> {
    if cfg.population_size == 0 || cfg.archive_size == 0 {
        return Err(Error::config("SPEA-2 needs positive population and archive sizes"));
    }
    let len = problem.layout.total_length();
    let mutation = cfg.mutation_prob.unwrap_or(1.0 / len.max(1) as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut obs = ObservedBounds::new();

    let mut population: Vec<BitString> =
        (0..cfg.population_size).map(|_| random_bitstring(len, &mut rng)).collect();
    let mut archive: Vec<BitString> = Vec::new();

    let mut final_archive: Vec<(BitString, ObjectiveVector)> = Vec::new();
    let mut t = 0u64;
    while t < cfg.t_end && !budget_reached(cache, cfg) {
        let union: Vec<BitString> = population.iter().chain(archive.iter()).cloned().collect();
        let objectives = cache.evaluate_batch(&union, problem)?;
        for v in &objectives {
            obs.absorb(v);
        }
        let fitness = spea2_fitness(&objectives, cfg.population_size, cfg.archive_size);

        // non-dominated members enter the archive, then fill or truncate
        let mut chosen: Vec<usize> =
            (0..union.len()).filter(|&i| fitness[i].combined < 1.0).collect();
        if chosen.len() < cfg.archive_size {
            let mut rest: Vec<usize> =
                (0..union.len()).filter(|&i| fitness[i].combined >= 1.0).collect();
            rest.sort_by(|&a, &b| {
                fitness[a]
                    .combined
                    .total_cmp(&fitness[b].combined)
                    .then(fitness[a].density.total_cmp(&fitness[b].density))
            });
            chosen.extend(rest.into_iter().take(cfg.archive_size - chosen.len()));
        } else if chosen.len() > cfg.archive_size {
            let points: Vec<ObjectiveVector> = chosen.iter().map(|&i| objectives[i]).collect();
            let kept = spea2_truncate(&points, cfg.archive_size);
            chosen = kept.into_iter().map(|slot| chosen[slot]).collect();
        }

        final_archive =
            chosen.iter().map(|&i| (union[i].clone(), objectives[i])).collect();
        let front: Vec<ObjectiveVector> = final_archive.iter().map(|e| e.1).collect();
        sink.record(&GenerationRecord {
            algorithm: "spea2".into(),
            t,
            population_size: population.len(),
            archive_size: final_archive.len(),
            unique_evals: cache.unique_evaluations(),
            epsilon: None,
            bounds: obs.as_bounds(),
            hv_norm: obs.normalized_hv(&front),
            front: front.iter().map(|p| p.as_array()).collect(),
        })?;

        archive = final_archive.iter().map(|e| e.0.clone()).collect();
        t += 1;
        if t >= cfg.t_end || budget_reached(cache, cfg) {
            break;
        }

        // binary tournament with replacement on the archive by combined
        // fitness; coincident parents are allowed
        let archive_fitness: Vec<f64> =
            chosen.iter().map(|&i| fitness[i].combined).collect();
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let a = rng.gen_range(0..archive.len());
            let b = rng.gen_range(0..archive.len());
            if archive_fitness[a] < archive_fitness[b] {
                a
            } else if archive_fitness[b] < archive_fitness[a] {
                b
            } else if rng.gen_bool(0.5) {
                a
            } else {
                b
            }
        };
        population.clear();
        while population.len() < cfg.population_size {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let (a, b) = (&archive[p1], &archive[p2]);
            let (mut c1, mut c2) = if len >= 2 && rng.gen_bool(cfg.crossover_prob) {
                let cut = rng.gen_range(1..len);
                (crossover_at(a, b, cut), crossover_at(b, a, cut))
            } else {
                (a.clone(), b.clone())
            };
            mutate_bits(&mut c1, mutation, &mut rng);
            mutate_bits(&mut c2, mutation, &mut rng);
            population.push(c1);
            if population.len() < cfg.population_size {
                population.push(c2);
            }
        }
    }

    Ok(final_archive)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(f1: f64, f2: f64) -> ObjectiveVector {
        ObjectiveVector::new(f1, f2)
    }

    #[test]
    fn single_front_when_mutually_non_dominated() {
        let pts = vec![v(0.0, 3.0), v(1.0, 2.0), v(2.0, 1.0), v(3.0, 0.0)];
        let fronts = fast_non_dominated_sort(&pts);
        assert_eq!(fronts.len(), 1);
        assert_eq!(fronts[0].len(), 4);
    }

    #[test]
    fn strict_chain_gives_singleton_fronts() {
        let pts = vec![v(2.0, 2.0), v(1.0, 1.0), v(3.0, 3.0)];
        let fronts = fast_non_dominated_sort(&pts);
        assert_eq!(fronts, vec![vec![1], vec![0], vec![2]]);
    }

    /// Brute-force peeling oracle: repeatedly strip the non-dominated
    /// members.
    fn peel_oracle(points: &[ObjectiveVector]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining.iter().any(|&j| j != i && points[j].dominates(&points[i]))
                })
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    #[test]
    fn sort_matches_peeling_oracle_on_random_instances() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let pts: Vec<ObjectiveVector> =
                (0..50).map(|_| v(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
            let mut got = fast_non_dominated_sort(&pts);
            let mut want = peel_oracle(&pts);
            for f in got.iter_mut().chain(want.iter_mut()) {
                f.sort_unstable();
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn crowding_boundaries_are_infinite() {
        let d = crowding_distance(&[v(0.0, 1.0), v(1.0, 0.0)]);
        assert!(d[0].is_infinite() && d[1].is_infinite());
    }

    #[test]
    fn crowding_evenly_spaced_interior() {
        // three evenly spaced members on a line: interior accumulates
        // a full normalised gap per objective
        let d = crowding_distance(&[v(0.0, 2.0), v(1.0, 1.0), v(2.0, 0.0)]);
        assert_eq!(d[1], 2.0);
    }

    #[test]
    fn crowding_duplicates_contribute_zero_gap() {
        let d = crowding_distance(&[v(0.0, 2.0), v(1.0, 1.0), v(1.0, 1.0), v(2.0, 0.0)]);
        // the duplicated interior pair shares identical neighbours, but the
        // gap between the duplicates themselves is zero
        assert!(d[1] > 0.0 && d[2] > 0.0);
        let flat = crowding_distance(&[v(0.0, 0.0), v(0.0, 0.0), v(0.0, 0.0)]);
        assert_eq!(flat[1], 0.0, "zero-range objectives contribute nothing");
    }

    #[test]
    fn spea2_single_member() {
        let f = spea2_fitness(&[v(1.0, 1.0)], 1, 1);
        assert_eq!(f[0].strength, 0);
        assert_eq!(f[0].raw, 0.0);
        assert!(f[0].combined < 1.0);
        assert_eq!(f[0].density, 0.5);
    }

    #[test]
    fn spea2_dominator_strengths_accumulate() {
        // index 0 dominates all, 3 dominated by all
        let pts = vec![v(0.0, 0.0), v(1.0, 2.0), v(2.0, 1.0), v(3.0, 3.0)];
        let f = spea2_fitness(&pts, 4, 0);
        assert_eq!(f[0].strength, 3);
        assert_eq!(f[0].raw, 0.0);
        // brute-force raw fitness: sum of dominator strengths
        for (i, fi) in f.iter().enumerate() {
            let expect: f64 = (0..4)
                .filter(|&j| j != i && pts[j].dominates(&pts[i]))
                .map(|j| f[j].strength as f64)
                .sum();
            assert_eq!(fi.raw, expect, "member {i}");
        }
        // combined fitness below 1 exactly for the non-dominated members
        for (i, fi) in f.iter().enumerate() {
            let non_dominated = !(0..4).any(|j| j != i && pts[j].dominates(&pts[i]));
            assert_eq!(fi.combined < 1.0, non_dominated);
        }
    }

    #[test]
    fn spea2_coincident_vectors_density() {
        let f = spea2_fitness(&[v(1.0, 1.0), v(1.0, 1.0)], 2, 0);
        // zero distance to the nearest neighbour: density 1/2
        assert_eq!(f[0].density, 0.5);
        assert_eq!(f[1].density, 0.5);
    }

    #[test]
    fn truncation_cases() {
        // already within bounds: unchanged
        let pts = vec![v(0.0, 1.0), v(1.0, 0.0)];
        assert_eq!(spea2_truncate(&pts, 2), vec![0, 1]);

        // three collinear evenly spaced points: the middle one goes first
        let pts = vec![v(0.0, 2.0), v(1.0, 1.0), v(2.0, 0.0)];
        assert_eq!(spea2_truncate(&pts, 2), vec![0, 2]);

        // duplicates have zero nearest distance and go first
        let pts = vec![v(0.0, 2.0), v(1.0, 1.0), v(1.0, 1.0), v(2.0, 0.0)];
        let kept = spea2_truncate(&pts, 3);
        assert_eq!(kept.len(), 3);
        assert!(kept.contains(&0) && kept.contains(&3));
        assert_eq!(kept.iter().filter(|&&i| i == 1 || i == 2).count(), 1);
    }
}
