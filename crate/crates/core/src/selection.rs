//! Candidate scoring strategies and selection.

use crate::dsl::{CadSequence, ModelingStep};
use crate::fit::CandidateStep;
use crate::geometry::{bbox_of_cylinder, sample_surface, ExtrusionCylinder, Solid, CHORD_TOLERANCE};
use crate::math::derive_seed;
use crate::spatial::IndexedCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

/// Surface samples drawn for each geometric score.
pub const GEO_SAMPLES: usize = 4096;
/// Monte-Carlo samples for the volume heuristic.
pub const HEUR_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Lowest chamfer distance of the updated state to the target.
    Geo,
    /// Largest candidate volume.
    Heur,
    /// Uniformly random.
    Rand,
    /// Bounding-box IoU with the ground-truth step, gated by flag agreement.
    Oracle,
}

impl Strategy {
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Strategy::Geo)
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geo" => Ok(Strategy::Geo),
            "heur" => Ok(Strategy::Heur),
            "rand" => Ok(Strategy::Rand),
            "oracle" => Ok(Strategy::Oracle),
            other => Err(format!("unknown strategy {other:?} (expected geo, heur, rand or oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("no candidates to select from")]
    NoCandidates,
}

/// Chamfer distance between the state extended by the candidate and the
/// target; `+inf` when the extended state does not execute.
pub fn score_geo(step: &ModelingStep, state: &CadSequence, target: &IndexedCloud, seed: u64) -> f64 {
    let mut seq = state.clone();
    seq.steps.push(step.clone());
    let Ok(solid) = Solid::from_sequence(&seq) else { return f64::INFINITY };
    match sample_surface(&solid, GEO_SAMPLES, seed) {
        Ok(pc) => target.chamfer_fast(&pc.points),
        Err(_) => f64::INFINITY,
    }
}

/// Monte-Carlo volume of the candidate cylinder alone, sampled in its
/// local bounding box with a fixed seed.
pub fn score_heur(step: &ModelingStep) -> f64 {
    let Ok(cyl) = ExtrusionCylinder::new(&step.sketch, &step.extrusion, CHORD_TOLERANCE) else { return 0.0 };
    let (lo, hi) = cyl.sketch.bounds();
    let (zlo, zhi) = cyl.z_range();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6865_7572);
    let mut inside = 0usize;
    for _ in 0..HEUR_SAMPLES {
        let p = [rng.random_range(lo[0]..=hi[0]), rng.random_range(lo[1]..=hi[1])];
        let z = rng.random_range(zlo..=zhi);
        if cyl.contains(&cyl.to_world(p, z)) {
            inside += 1;
        }
    }
    let s = step.extrusion.scale;
    let box_volume = (hi[0] - lo[0]) * (hi[1] - lo[1]) * s * s * (zhi - zlo);
    box_volume * inside as f64 / HEUR_SAMPLES as f64
}

/// Uniform score in `[0, 1)` for candidate `index`.
pub fn score_random(seed: u64, index: usize) -> f64 {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64)).random()
}

/// Bounding-box IoU with the ground-truth step when the flags agree, else 0.
pub fn score_oracle(step: &ModelingStep, gt: &ModelingStep) -> f64 {
    if step.boolean != gt.boolean {
        return 0.0;
    }
    let (Ok(a), Ok(b)) = (
        ExtrusionCylinder::new(&step.sketch, &step.extrusion, CHORD_TOLERANCE),
        ExtrusionCylinder::new(&gt.sketch, &gt.extrusion, CHORD_TOLERANCE),
    ) else {
        return 0.0;
    };
    crate::losses::bbox_iou_exact(&bbox_of_cylinder(&a), &bbox_of_cylinder(&b)).unwrap_or(0.0)
}

/// Scores every candidate under `strategy`. `gt` is required for the oracle.
pub fn score_all(
    candidates: &[CandidateStep],
    strategy: Strategy,
    state: &CadSequence,
    target: &IndexedCloud,
    gt: Option<&ModelingStep>,
    seed: u64,
) -> Vec<f64> {
    crate::par::map_range(candidates.len(), |i| {
        let step = &candidates[i].step;
        match strategy {
            Strategy::Geo => score_geo(step, state, target, derive_seed(seed, i as u64)),
            Strategy::Heur => score_heur(step),
            Strategy::Rand => score_random(seed, i),
            Strategy::Oracle => gt.map_or(0.0, |g| score_oracle(step, g)),
        }
    })
}

/// Candidate indices best first. Ties prefer more prompt inliers, then the
/// lower index. Non-finite scores rank last.
pub fn rank(scores: &[f64], inlier_counts: &[usize], higher_is_better: bool) -> Vec<usize> {
    let key = |i: usize| {
        let s = scores[i];
        if !s.is_finite() {
            f64::INFINITY
        } else if higher_is_better {
            -s
        } else {
            s
        }
    };
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        key(a).total_cmp(&key(b)).then(inlier_counts[b].cmp(&inlier_counts[a])).then(a.cmp(&b))
    });
    idx
}

/// Index of the best candidate.
pub fn select(candidates: &[CandidateStep], scores: &[f64], strategy: Strategy) -> Result<usize, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError::NoCandidates);
    }
    let inliers: Vec<usize> = candidates.iter().map(|c| c.prompt.inlier_count).collect();
    Ok(rank(scores, &inliers, strategy.higher_is_better())[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::BooleanOp;
    use crate::math::rotation_xyz;

    #[test]
    fn heur_volumes() {
        let cube = ModelingStep::axis_box([0.0; 3], [1.0; 3], BooleanOp::Union);
        assert!((score_heur(&cube) - 1.0).abs() < 0.02);
        let half = ModelingStep::axis_box([0.0; 3], [0.5; 3], BooleanOp::Union);
        assert!((score_heur(&half) - 0.125).abs() < 0.01);
        let mut rotated = cube.clone();
        rotated.extrusion.orientation = crate::math::euler_from_rotation(&rotation_xyz(0.3, 0.2, -0.5));
        assert!((score_heur(&rotated) - 1.0).abs() < 0.02);
    }

    #[test]
    fn oracle_values() {
        let a = ModelingStep::axis_box([0.0; 3], [1.0; 3], BooleanOp::Union);
        assert_eq!(score_oracle(&a, &a), 1.0);
        let mut flipped = a.clone();
        flipped.boolean = BooleanOp::Subtraction;
        assert_eq!(score_oracle(&flipped, &a), 0.0);
        let b = ModelingStep::axis_box([0.5, 0.0, 0.0], [1.5, 1.0, 1.0], BooleanOp::Union);
        assert!((score_oracle(&a, &b) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn random_is_reproducible_and_uniform() {
        assert_eq!(score_random(4, 2), score_random(4, 2));
        let mut counts = [0usize; 4];
        for trial in 0..10_000u64 {
            let scores: Vec<f64> = (0..4).map(|i| score_random(trial, i)).collect();
            counts[rank(&scores, &[0; 4], true)[0]] += 1;
        }
        for c in counts {
            assert!((2350..=2650).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn ties_prefer_inliers_then_index() {
        assert_eq!(rank(&[1.0, 1.0, 1.0], &[5, 9, 9], false), vec![1, 2, 0]);
        assert_eq!(rank(&[f64::INFINITY, 2.0], &[0, 0], false), vec![1, 0]);
        assert_eq!(rank(&[0.5, 0.5], &[3, 3], true), vec![0, 1]);
    }
}
