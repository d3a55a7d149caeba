//! The epsilon-dominance archive: box indexing of objective vectors, box
//! dominance, the single-candidate update procedure with intra-box
//! tie-breaking, dynamic epsilon recalculation from the archive extents, and
//! the re-gridding prune that follows an epsilon change.
//!
//! The archive maintains a bounded epsilon-Pareto approximation: at most one
//! member per box, no member box-dominating another, and at most `max_front`
//! members in total.

use rand::Rng;

use crate::encoding::BitString;
use crate::ObjectiveVector;

pub const TOL: f64 = 1e-12;

/// Per-objective grid cell of an objective vector under the epsilon grid.
pub type BoxIndex = [i64; 2];

#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub genotype: BitString,
    pub objectives: ObjectiveVector,
    pub box_index: BoxIndex,
}

/// Outcome of offering one candidate to the archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub accepted: bool,
    /// Members removed because the candidate displaced them; feeds the
    /// replacement count of the adaptive population-sizing criterion.
    pub displaced: usize,
}

#[derive(Debug, Clone)]
pub struct ArchiveState {
    entries: Vec<ArchiveEntry>,
    /// Left boundary objective vector `[f1_min, f2_max]` (the do-minimum
    /// anchor).
    z_min: ObjectiveVector,
    /// Right boundary objective vector `[f1_max, f2_min]` (the do-maximum
    /// anchor).
    z_max: ObjectiveVector,
    epsilon: [f64; 2],
    max_front: usize,
}

impl ArchiveState {
    /// Build an archive over the objective ranges spanned by the two
    /// boundary vectors; epsilon divides each dimension into `max_front`
    /// equal intervals.
    pub fn new(z_min: ObjectiveVector, z_max: ObjectiveVector, max_front: usize) -> Self {
        assert!(max_front >= 1, "archive needs a positive maximum front size");
        let mut state = ArchiveState {
            entries: Vec::new(),
            z_min,
            z_max,
            epsilon: [TOL; 2],
            max_front,
        };
        state.recompute_epsilon();
        state
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn epsilon(&self) -> [f64; 2] {
        self.epsilon
    }

    pub fn max_front(&self) -> usize {
        self.max_front
    }

    pub fn z_min(&self) -> ObjectiveVector {
        self.z_min
    }

    pub fn z_max(&self) -> ObjectiveVector {
        self.z_max
    }

    pub fn f1_min(&self) -> f64 {
        self.z_min.f1
    }

    pub fn f1_max(&self) -> f64 {
        self.z_max.f1
    }

    pub fn f2_min(&self) -> f64 {
        self.z_max.f2
    }

    pub fn f2_max(&self) -> f64 {
        self.z_min.f2
    }

    /// Objective vectors of the current members.
    pub fn front(&self) -> Vec<ObjectiveVector> {
        self.entries.iter().map(|e| e.objectives).collect()
    }

    fn recompute_epsilon(&mut self) {
        // a degenerate range floors epsilon at the tolerance, collapsing
        // that objective to a single box column
        self.epsilon = [
            ((self.f1_max() - self.f1_min()) / self.max_front as f64).max(TOL),
            ((self.f2_max() - self.f2_min()) / self.max_front as f64).max(TOL),
        ];
    }

    /// Componentwise floor of the vector against the per-objective minima.
    /// A value sitting exactly on the top edge of the grid is assigned to
    /// the last interior box so the bounded-front guarantee holds with the
    /// boundary anchors archived.
    pub fn box_index(&self, z: &ObjectiveVector) -> BoxIndex {
        let mins = [self.f1_min(), self.f2_min()];
        let maxs = [self.f1_max(), self.f2_max()];
        let vals = [z.f1, z.f2];
        let mut b = [0i64; 2];
        for i in 0..2 {
            let idx = ((vals[i] - mins[i]) / self.epsilon[i]).floor() as i64;
            b[i] = if vals[i] <= maxs[i] {
                idx.min(self.max_front as i64 - 1)
            } else {
                idx
            };
        }
        b
    }

    /// Box dominance: componentwise `<=` on box indices with one strict `<`.
    pub fn box_dominates(&self, z: &ObjectiveVector, w: &ObjectiveVector) -> bool {
        let (a, b) = (self.box_index(z), self.box_index(w));
        box_index_dominates(&a, &b)
    }

    /// Squared distance from the vector to its box origin, in
    /// epsilon-normalised coordinates per the tie-break rule.
    fn box_origin_distance(&self, z: &ObjectiveVector) -> f64 {
        let d1 = (z.f1 - self.f1_min()).rem_euclid(self.epsilon[0]);
        let d2 = (z.f2 - self.f2_min()).rem_euclid(self.epsilon[1]);
        (d1 * d1 + d2 * d2).sqrt()
    }

    /// Intra-box tie-break between a resident and a candidate (both mutually
    /// non-dominated in the same box): the vector closer to the box origin
    /// wins; exact ties resolve by a draw from the run's random stream.
    /// Returns true when the archived resident is kept.
    pub fn tie_break<R: Rng + ?Sized>(
        &self,
        archived: &ObjectiveVector,
        candidate: &ObjectiveVector,
        rng: &mut R,
    ) -> bool {
        let da = self.box_origin_distance(archived);
        let dc = self.box_origin_distance(candidate);
        if da < dc {
            true
        } else if dc < da {
            false
        } else {
            rng.gen_bool(0.5)
        }
    }

    /// Offer one candidate to the archive. The candidate is rejected if any
    /// member box-dominates it or its box resident beats it (strict
    /// dominance, then the tie-break); otherwise it enters and every member
    /// it box-dominates or beat is removed.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        genotype: BitString,
        objectives: ObjectiveVector,
        rng: &mut R,
    ) -> UpdateOutcome {
        let cand_box = self.box_index(&objectives);
        let mut displaced: Vec<usize> = Vec::new();
        for (i, entry) in self.entries.iter().enumerate() {
            let member_box = self.box_index(&entry.objectives);
            if box_index_dominates(&cand_box, &member_box) {
                displaced.push(i);
            } else if box_index_dominates(&member_box, &cand_box) {
                return UpdateOutcome { accepted: false, displaced: 0 };
            } else if member_box == cand_box {
                if objectives.dominates(&entry.objectives) {
                    displaced.push(i);
                } else if entry.objectives.dominates(&objectives)
                    || self.tie_break(&entry.objectives, &objectives, rng)
                {
                    return UpdateOutcome { accepted: false, displaced: 0 };
                } else {
                    displaced.push(i);
                }
            }
        }
        let count = displaced.len();
        for &i in displaced.iter().rev() {
            self.entries.remove(i);
        }
        self.entries.push(ArchiveEntry { genotype, objectives, box_index: cand_box });
        UpdateOutcome { accepted: true, displaced: count }
    }

    /// Re-derive the objective bounds from the archived members: a
    /// box-dominated left boundary tightens `f2_max`; a strictly dominated
    /// right boundary shifts both of its components inside the dominating
    /// member (with tolerance offsets); a box-dominated right boundary
    /// tightens `f2_min`; members beyond the extents expand them. Epsilon is
    /// then recomputed. Returns true when anything moved.
    pub fn update_epsilon(&mut self) -> bool {
        let before_eps = self.epsilon;
        let before_min = self.z_min;
        let before_max = self.z_max;
        let members: Vec<ObjectiveVector> = self.entries.iter().map(|e| e.objectives).collect();
        for z in &members {
            let z_min = self.z_min;
            if self.box_dominates(z, &z_min) {
                self.z_min = ObjectiveVector::new(self.f1_min(), z.f2 + TOL);
            }
            let z_max = self.z_max;
            if z.dominates(&z_max) {
                self.z_max = ObjectiveVector::new(z.f1 + TOL, z.f2 - TOL);
            } else if self.box_dominates(z, &z_max) {
                self.z_max = ObjectiveVector::new(self.f1_max(), z.f2 - TOL);
            } else if z.f1 > self.f1_max() || z.f2 < self.f2_min() {
                self.z_max = ObjectiveVector::new(
                    (z.f1 + TOL).max(self.f1_max()),
                    (z.f2 - TOL).min(self.f2_min()),
                );
            }
        }
        self.recompute_epsilon();
        self.z_min != before_min || self.z_max != before_max || self.epsilon != before_eps
    }

    /// Re-grid after an epsilon change: re-map members to their new boxes,
    /// drop box-dominated members, then resolve multi-occupancy boxes with
    /// strict dominance and the tie-break.
    pub fn prune<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let boxes: Vec<BoxIndex> =
            self.entries.iter().map(|e| self.box_index(&e.objectives)).collect();
        for (entry, b) in self.entries.iter_mut().zip(&boxes) {
            entry.box_index = *b;
        }

        // inter-box dominance
        let mut keep = vec![true; self.entries.len()];
        for i in 0..self.entries.len() {
            for j in 0..self.entries.len() {
                if i != j
                    && keep[i]
                    && box_index_dominates(&self.entries[j].box_index, &self.entries[i].box_index)
                {
                    keep[i] = false;
                }
            }
        }
        let mut survivors: Vec<ArchiveEntry> = self
            .entries
            .drain(..)
            .zip(keep)
            .filter_map(|(e, k)| k.then_some(e))
            .collect();

        // intra-box: a single winner per box, resolved in entry order
        let mut winners: Vec<ArchiveEntry> = Vec::with_capacity(survivors.len());
        'outer: for entry in survivors.drain(..) {
            for resident in winners.iter_mut() {
                if resident.box_index != entry.box_index {
                    continue;
                }
                let keep_resident = if entry.objectives.dominates(&resident.objectives) {
                    false
                } else if resident.objectives.dominates(&entry.objectives) {
                    true
                } else {
                    self.tie_break(&resident.objectives, &entry.objectives, rng)
                };
                if !keep_resident {
                    *resident = entry;
                }
                continue 'outer;
            }
            winners.push(entry);
        }
        self.entries = winners;
    }

    /// Check every structural invariant; panics with a description on the
    /// first violation. Used by tests and debug assertions.
    pub fn assert_invariants(&self) {
        let boxes: Vec<BoxIndex> =
            self.entries.iter().map(|e| self.box_index(&e.objectives)).collect();
        for i in 0..boxes.len() {
            for j in 0..boxes.len() {
                if i == j {
                    continue;
                }
                assert_ne!(boxes[i], boxes[j], "two archive members share box {:?}", boxes[i]);
                assert!(
                    !box_index_dominates(&boxes[i], &boxes[j]),
                    "member {:?} box-dominates member {:?}",
                    boxes[i],
                    boxes[j]
                );
            }
        }
        assert!(
            self.entries.len() <= self.max_front,
            "archive size {} exceeds the bound {}",
            self.entries.len(),
            self.max_front
        );
    }
}

pub fn box_index_dominates(a: &BoxIndex, b: &BoxIndex) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Additive epsilon dominance: `z` epsilon-dominates `w` when shifting `z`
/// by epsilon still leaves it componentwise at or below `w`.
pub fn epsilon_dominates(z: &ObjectiveVector, w: &ObjectiveVector, epsilon: &[f64; 2]) -> bool {
    z.f1 - epsilon[0] <= w.f1 && z.f2 - epsilon[1] <= w.f2
}
