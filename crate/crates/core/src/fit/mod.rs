//! Geometric single-step reconstruction from a planar prompt.
//!
//! The prompt plane fixes the sketch plane. The cross-section of the
//! reference cloud near that plane is rasterized, traced and fitted with
//! lines, arcs and circles; the extrusion extent comes from the offsets of
//! reference points above and below the profile, and the Boolean flag from
//! a lookahead against the target cloud.

mod contour;
mod loops;
mod profile;

pub use contour::{trace_contours, Contour};
pub use loops::{douglas_peucker_closed, fit_contour, fit_loops, kasa_fit, FittedSketch};
pub use profile::{extract_profile, Profile};

use crate::cloud::PointCloud;
use crate::dsl::planar::{bounds, discretize_loop};
use crate::dsl::{validate, BooleanOp, CadSequence, Extrusion, ModelingStep, Point2, Sketch, Violation};
use crate::geometry::{sample_surface, Solid};
use crate::guidance::PlanePrompt;
use crate::math::{derive_seed, euler_from_rotation, percentile, Mat3, Vec3};
use crate::par;
use crate::spatial::IndexedCloud;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lengths are in unit-box units; see [`StepFitConfig::scaled`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepFitConfig {
    pub cell: f64,
    pub slab_half: f64,
    pub closing_radius: f64,
    pub fit_tol: f64,
    pub snap_tol: f64,
    pub min_thickness: f64,
    pub min_slab_points: usize,
    pub min_across_cells: usize,
    /// Minimum `|cos|` between a point normal and the plane normal for the
    /// point to count as a cap point.
    pub cap_cos: f64,
    /// Surface samples per lookahead execution.
    pub lookahead_samples: usize,
}

impl Default for StepFitConfig {
    fn default() -> Self {
        StepFitConfig {
            cell: 1.0 / 128.0,
            slab_half: 0.02,
            closing_radius: 0.045,
            fit_tol: 2.0 / 128.0,
            snap_tol: 0.01,
            min_thickness: 0.02,
            min_slab_points: 16,
            min_across_cells: 4,
            cap_cos: 0.95,
            lookahead_samples: 1024,
        }
    }
}

impl StepFitConfig {
    /// Copy with every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        StepFitConfig {
            cell: self.cell * s,
            slab_half: self.slab_half * s,
            closing_radius: self.closing_radius * s,
            fit_tol: self.fit_tol * s,
            snap_tol: self.snap_tol * s,
            min_thickness: self.min_thickness * s,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("only {points} points near the prompt plane")]
    InsufficientSupport { points: usize },
    #[error("profile has no usable contour")]
    DegenerateProfile,
    #[error("extruded thickness {thickness} is below the minimum")]
    FlatCandidate { thickness: f64 },
    #[error("candidate executes to an empty solid under both Boolean flags")]
    InvalidCandidate,
    #[error("fitted step is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

/// Which side of the prompt plane the extrusion may occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
    Both,
}

/// Whether the extrusion runs to the robust far extent or stops at the
/// first parallel cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reach {
    Far,
    Near,
}

/// Signed offsets of reference points whose projection lies in the profile,
/// with a flag marking cap points.
fn column_offsets(profile: &Profile, p_ref: &PointCloud, cfg: &StepFitConfig) -> Vec<(f64, bool)> {
    p_ref
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let (q, o) = profile.project(p);
            profile.contains(q).then(|| {
                let cap = p_ref.normals.as_ref().is_none_or(|ns| ns[i].dot(&profile.n).abs() >= cfg.cap_cos);
                (o, cap)
            })
        })
        .collect()
}

/// Two-sided robust extent: 1st and 99th percentile of offsets, widened to
/// include the plane itself.
pub fn estimate_extrusion(profile: &Profile, p_ref: &PointCloud, cfg: &StepFitConfig) -> Result<(f64, f64), FitError> {
    estimate_extrusion_with(profile, p_ref, Side::Both, Reach::Far, cfg)
}

pub fn estimate_extrusion_with(
    profile: &Profile,
    p_ref: &PointCloud,
    side: Side,
    reach: Reach,
    cfg: &StepFitConfig,
) -> Result<(f64, f64), FitError> {
    let offs = column_offsets(profile, p_ref, cfg);
    extent_from_offsets(&offs, side, reach, cfg)
}

fn extent_from_offsets(offs: &[(f64, bool)], side: Side, reach: Reach, cfg: &StepFitConfig) -> Result<(f64, f64), FitError> {
    let snap = |x: f64| if x.abs() < cfg.snap_tol { 0.0 } else { x };
    let (lo, hi) = match (side, reach) {
        (Side::Both, _) => {
            let all: Vec<f64> = offs.iter().map(|o| o.0).collect();
            (percentile(&all, 0.01).unwrap_or(0.0).min(0.0), percentile(&all, 0.99).unwrap_or(0.0).max(0.0))
        }
        (Side::Positive, Reach::Far) => {
            let v: Vec<f64> = offs.iter().map(|o| o.0).filter(|&o| o >= -cfg.snap_tol).collect();
            (0.0, percentile(&v, 0.99).unwrap_or(0.0).max(0.0))
        }
        (Side::Negative, Reach::Far) => {
            let v: Vec<f64> = offs.iter().map(|o| o.0).filter(|&o| o <= cfg.snap_tol).collect();
            (percentile(&v, 0.01).unwrap_or(0.0).min(0.0), 0.0)
        }
        (Side::Positive, Reach::Near) => (0.0, nearest_cap(offs.iter().filter(|o| o.1).map(|o| o.0), cfg).unwrap_or(0.0)),
        (Side::Negative, Reach::Near) => {
            (-nearest_cap(offs.iter().filter(|o| o.1).map(|o| -o.0), cfg).unwrap_or(0.0), 0.0)
        }
    };
    let (lo, hi) = (snap(lo), snap(hi));
    if hi - lo < cfg.min_thickness {
        return Err(FitError::FlatCandidate { thickness: hi - lo });
    }
    Ok((lo, hi))
}

/// Distance of the first well-populated cap level on the positive side.
fn nearest_cap(offsets: impl Iterator<Item = f64>, cfg: &StepFitConfig) -> Option<f64> {
    let width = 2.0 * cfg.cell;
    let mut v: Vec<f64> = offsets.filter(|&o| o > cfg.snap_tol).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let bins = ((v[v.len() - 1] / width).floor() as usize) + 1;
    let mut counts = vec![0usize; bins];
    for o in &v {
        counts[(o / width).floor() as usize] += 1;
    }
    let top = *counts.iter().max()?;
    let need = (top as f64 * 0.2).ceil().max(8.0) as usize;
    let b = counts.iter().position(|&c| c >= need)?;
    let members: Vec<f64> = v.iter().copied().filter(|o| (o / width).floor() as usize == b).collect();
    percentile(&members, 0.5)
}

/// Places a plane-coordinate sketch: normalizes it into the unit square and
/// moves its offset and orientation into the extrusion.
pub fn place_step(sketch_plane: &Sketch, profile: &Profile, d_minus: f64, d_plus: f64) -> ModelingStep {
    let mut all: Vec<Point2> = Vec::new();
    for f in &sketch_plane.faces {
        if let Ok(poly) = discretize_loop(&f.outer, 1e-4) {
            all.extend(poly);
        }
    }
    let (lo, hi) = bounds(&all);
    let sigma = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let sketch = sketch_plane.map_points(|p| [(p[0] - lo[0]) / sigma, (p[1] - lo[1]) / sigma]);
    let (u, v, n) = (profile.u, profile.v, profile.n);
    let tau = n * profile.offset + u * lo[0] + v * lo[1];
    let rot = Mat3::from_columns(&[u, v, n]);
    ModelingStep {
        sketch,
        extrusion: Extrusion {
            d_plus,
            d_minus,
            translation: [tau.x, tau.y, tau.z],
            orientation: euler_from_rotation(&rot),
            scale: sigma,
        },
        boolean: BooleanOp::Union,
    }
}

/// Outcome of the Boolean lookahead.
#[derive(Debug, Clone)]
pub struct BooleanChoice {
    pub op: BooleanOp,
    /// One-sided chamfer from each result to the target (union, subtraction).
    pub scores: [f64; 2],
    /// Surface sample of the chosen result.
    pub sample: Vec<Vec3>,
}

/// Executes the state with the step under both flags and keeps the flag
/// whose result lies closer to the target. Ties go to union.
pub fn choose_boolean(
    step: &ModelingStep,
    state: &CadSequence,
    target: &IndexedCloud,
    samples: usize,
    seed: u64,
) -> Result<BooleanChoice, FitError> {
    let run = |op: BooleanOp| -> Option<(f64, Vec<Vec3>)> {
        let mut seq = state.clone();
        seq.steps.push(ModelingStep { boolean: op, ..step.clone() });
        let solid = Solid::from_sequence(&seq).ok()?;
        let pc = sample_surface(&solid, samples, seed).ok()?;
        Some((target.mean_sq_from(&pc.points), pc.points))
    };
    let union = run(BooleanOp::Union);
    let sub = if state.is_empty() { None } else { run(BooleanOp::Subtraction) };
    let su = union.as_ref().map_or(f64::INFINITY, |u| u.0);
    let ss = sub.as_ref().map_or(f64::INFINITY, |s| s.0);
    match (union, sub) {
        (None, None) => Err(FitError::InvalidCandidate),
        (Some(u), Some(s)) if s.0 < u.0 => Ok(BooleanChoice { op: BooleanOp::Subtraction, scores: [su, ss], sample: s.1 }),
        (Some(u), _) => Ok(BooleanChoice { op: BooleanOp::Union, scores: [su, ss], sample: u.1 }),
        (None, Some(s)) => Ok(BooleanChoice { op: BooleanOp::Subtraction, scores: [su, ss], sample: s.1 }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub grid: [usize; 2],
    pub cell: f64,
    pub slab_points: usize,
    pub loop_residuals: Vec<f64>,
    pub holes_filled: bool,
    pub side: Side,
    pub reach: Reach,
    pub boolean_scores: [f64; 2],
    pub lookahead_cd: f64,
    /// Counts of in-profile offsets over 16 equal bins spanning `[-1, 1]`.
    pub depth_histogram: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateStep {
    pub step: ModelingStep,
    pub prompt: PlanePrompt,
    pub diagnostics: FitDiagnostics,
}

const VARIANTS: [(Side, Reach); 5] = [
    (Side::Positive, Reach::Near),
    (Side::Negative, Reach::Near),
    (Side::Positive, Reach::Far),
    (Side::Negative, Reach::Far),
    (Side::Both, Reach::Far),
];

/// Builds one candidate step for a prompt.
///
/// Several extrusion variants are tried (each side of the plane, nearest
/// cap or far extent, with and without the profile's holes); each picks
/// its flag by [`choose_boolean`] and the variant whose result has the
/// lowest symmetric chamfer distance to the target is returned.
pub fn reconstruct_step(
    prompt: &PlanePrompt,
    p_ref: &PointCloud,
    target: &IndexedCloud,
    state: &CadSequence,
    cfg: &StepFitConfig,
    seed: u64,
) -> Result<CandidateStep, FitError> {
    let profile = extract_profile(prompt, p_ref, cfg)?;
    let mut profiles = vec![(profile.clone(), false)];
    if profile.has_holes() {
        profiles.push((profile.without_holes(), true));
    }
    let mut variants: Vec<(ModelingStep, Vec<f64>, bool, Side, Reach, Vec<usize>)> = Vec::new();
    let mut last_err = FitError::DegenerateProfile;
    for (prof, filled) in &profiles {
        let fitted = match fit_loops(prof, cfg) {
            Ok(f) => f,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let offs = column_offsets(prof, p_ref, cfg);
        let hist = depth_histogram(&offs, target_extent(target));
        let mut seen: Vec<(f64, f64)> = Vec::new();
        for (side, reach) in VARIANTS {
            let (lo, hi) = match extent_from_offsets(&offs, side, reach, cfg) {
                Ok(x) => x,
                Err(e) => {
                    last_err = e;
                    continue;
                }
            };
            if seen.iter().any(|s| (s.0 - lo).abs() < 1e-9 && (s.1 - hi).abs() < 1e-9) {
                continue;
            }
            seen.push((lo, hi));
            if !*filled && profile.has_holes() && blind_hole_points(&profile, p_ref, lo, hi, cfg) >= BLIND_HOLE_POINTS {
                continue;
            }
            let step = place_step(&fitted.sketch, prof, lo, hi);
            let v = validate(&CadSequence::new(vec![step.clone()]));
            if !v.is_empty() {
                last_err = FitError::Invalid(v);
                continue;
            }
            variants.push((step, fitted.residuals.clone(), *filled, side, reach, hist.clone()));
        }
    }
    let evaluated = par::map_range(variants.len(), |i| {
        let step = &variants[i].0;
        let choice = choose_boolean(step, state, target, cfg.lookahead_samples, derive_seed(seed, i as u64))?;
        let (precision, recall) = target.chamfer_parts(&choice.sample);
        let cd = (PRECISION_WEIGHT * precision + recall) / (PRECISION_WEIGHT + 1.0);
        Ok::<_, FitError>((choice, cd))
    });
    let mut best: Option<(usize, BooleanChoice, f64)> = None;
    for (i, r) in evaluated.into_iter().enumerate() {
        match r {
            Ok((choice, cd)) => {
                if best.as_ref().is_none_or(|b| cd < b.2) {
                    best = Some((i, choice, cd));
                }
            }
            Err(e) => last_err = e,
        }
    }
    let (i, choice, cd) = best.ok_or(last_err)?;
    let (mut step, residuals, filled, side, reach, hist) = variants.swap_remove(i);
    step.boolean = choice.op;
    Ok(CandidateStep {
        step,
        prompt: prompt.clone(),
        diagnostics: FitDiagnostics {
            grid: [profile.nx, profile.ny],
            cell: profile.cell,
            slab_points: profile.slab_points,
            loop_residuals: residuals,
            holes_filled: filled,
            side,
            reach,
            boolean_scores: choice.scores,
            lookahead_cd: cd,
            depth_histogram: hist,
        },
    })
}

/// Weight of the sample-to-target direction when ranking variants.
const PRECISION_WEIGHT: f64 = 3.0;

/// Cap points inside a hole that suffice to call it blind.
const BLIND_HOLE_POINTS: usize = 8;

/// Cap points of `p_ref` that project into a hole of the profile and lie
/// strictly between the extrusion ends. A through hole has none; a blind
/// pocket has its floor there.
fn blind_hole_points(profile: &Profile, p_ref: &PointCloud, lo: f64, hi: f64, cfg: &StepFitConfig) -> usize {
    let closed = profile.without_holes();
    p_ref
        .points
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            let (q, o) = profile.project(p);
            let cap = p_ref.normals.as_ref().is_none_or(|ns| ns[*i].dot(&profile.n).abs() >= cfg.cap_cos);
            cap && o > lo + cfg.snap_tol && o < hi - cfg.snap_tol && closed.contains(q) && !profile.contains(q)
        })
        .count()
}

fn target_extent(target: &IndexedCloud) -> f64 {
    PointCloud::new(target.subsample.clone()).extent().max(1e-9)
}

fn depth_histogram(offs: &[(f64, bool)], extent: f64) -> Vec<usize> {
    let mut h = vec![0usize; 16];
    for (o, _) in offs {
        let t = ((o / extent + 1.0) / 2.0 * 16.0).floor();
        if (0.0..16.0).contains(&t) {
            h[t as usize] += 1;
        }
    }
    h
}

#[cfg(test)]
mod tests;
