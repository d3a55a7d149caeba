//! Performance indicators: exact 2-D hypervolume (S-metric), the hyper-area
//! ratio against a known Pareto set, and objective-space normalisation.

use crate::{Error, ObjectiveVector, Result};

/// A non-dominated front approximation paired with its reference vector.
/// Points with any component beyond the reference contribute nothing and are
/// dropped at construction; points equal to the reference on a component are
/// kept (they arise at normalisation clamps) and contribute zero area.
#[derive(Debug, Clone)]
pub struct FrontApproximation {
    points: Vec<ObjectiveVector>,
    reference: ObjectiveVector,
}

impl FrontApproximation {
    pub fn new(points: impl IntoIterator<Item = ObjectiveVector>, reference: ObjectiveVector) -> Self {
        let points = points
            .into_iter()
            .filter(|p| p.f1 <= reference.f1 && p.f2 <= reference.f2)
            .collect();
        FrontApproximation { points, reference }
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }

    pub fn reference(&self) -> ObjectiveVector {
        self.reference
    }
}

/// Area of the union of axis-aligned rectangles `[p, z_ref]` by a sorted
/// sweep over the non-dominated staircase. Dominated members contribute
/// nothing; an empty front has hypervolume 0.
pub fn hypervolume_2d(front: &FrontApproximation) -> f64 {
    let z_ref = front.reference;
    let mut pts: Vec<ObjectiveVector> = front.points.to_vec();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));

    let mut area = 0.0;
    let mut best_f2 = f64::INFINITY;
    // staircase: at f1 >= p.f1 the dominated region extends down to p.f2
    let mut i = 0;
    while i < pts.len() {
        let p = pts[i];
        if p.f2 < best_f2 {
            // strip from p.f1 to the next staircase corner
            let mut next_f1 = z_ref.f1;
            for q in &pts[i + 1..] {
                if q.f2 < p.f2 {
                    next_f1 = q.f1;
                    break;
                }
            }
            area += (next_f1 - p.f1) * (z_ref.f2 - p.f2);
            best_f2 = p.f2;
        }
        i += 1;
    }
    area
}

/// `HV(approx) / HV(exact)`; equals 1 when the approximation matches the
/// exact front. Both fronts must share a reference vector.
pub fn hyper_area_ratio(approx: &FrontApproximation, exact: &FrontApproximation) -> Result<f64> {
    if approx.reference != exact.reference {
        return Err(Error::input(
            "hyper-area ratio requires a shared reference vector",
        ));
    }
    let denom = hypervolume_2d(exact);
    if denom == 0.0 {
        return Err(Error::input(
            "hyper-area ratio undefined: exact front has zero hypervolume",
        ));
    }
    Ok(hypervolume_2d(approx) / denom)
}

/// Affine map of each component to `[0, 1]` given per-objective bounds.
/// Values outside the bounds clamp to `[0, 1.25]` so the offset reference
/// vector stays meaningful.
pub fn normalize(
    points: &[ObjectiveVector],
    lower: ObjectiveVector,
    upper: ObjectiveVector,
) -> Result<Vec<ObjectiveVector>> {
    if !(upper.f1 > lower.f1) || !(upper.f2 > lower.f2) {
        return Err(Error::input(format!(
            "degenerate normalisation range: lower ({}, {}), upper ({}, {})",
            lower.f1, lower.f2, upper.f1, upper.f2
        )));
    }
    Ok(points
        .iter()
        .map(|p| {
            let n1 = (p.f1 - lower.f1) / (upper.f1 - lower.f1);
            let n2 = (p.f2 - lower.f2) / (upper.f2 - lower.f2);
            ObjectiveVector::new(n1.clamp(0.0, 1.25), n2.clamp(0.0, 1.25))
        })
        .collect())
}

/// Reference vector for hypervolume over a normalised objective space,
/// offset beyond the unit square so boundary solutions contribute
/// positively.
pub const NORMALIZED_REFERENCE: ObjectiveVector = ObjectiveVector { f1: 1.25, f2: 1.25 };

/// Normalised hypervolume of a front under the given bounds: objectives
/// scaled to `[0, 1]`, reference at `(1.25, 1.25)`.
pub fn normalized_hypervolume(
    points: &[ObjectiveVector],
    lower: ObjectiveVector,
    upper: ObjectiveVector,
) -> Result<f64> {
    let scaled = normalize(points, lower, upper)?;
    Ok(hypervolume_2d(&FrontApproximation::new(scaled, NORMALIZED_REFERENCE)))
}
