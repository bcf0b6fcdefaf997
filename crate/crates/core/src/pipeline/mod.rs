//! The iterative prompt-and-select reconstruction loop.

mod synth;

pub use synth::generate_synthetic;

use crate::cloud::PointCloud;
use crate::dsl::{CadSequence, ModelingStep};
use crate::fit::{reconstruct_step, FitDiagnostics, StepFitConfig};
use crate::geometry::{sample_surface, Solid};
use crate::guidance::{build_p_ref, detect_planes, diff_mask, sample_prompt, Provenance, RansacConfig, DEFAULT_PROMPT_SIZE, DEFAULT_TAU};
use crate::math::derive_seed;
use crate::metrics::chamfer_points;
use crate::selection::{rank, score_all, Strategy};
use crate::spatial::IndexedCloud;
use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub n_points: usize,
    pub tau: f64,
    pub ransac: RansacConfig,
    pub prompt_size: usize,
    pub strategy: Strategy,
    /// Stop once the chamfer distance to the target is at most this.
    pub stop_cd: f64,
    pub max_steps: usize,
    /// Minimum chamfer improvement for a step to be accepted.
    pub min_improvement: f64,
    /// Ranked candidates tried per iteration before stopping.
    pub gate_attempts: usize,
    pub fit: StepFitConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_points: 8192,
            tau: DEFAULT_TAU,
            ransac: RansacConfig::default(),
            prompt_size: DEFAULT_PROMPT_SIZE,
            strategy: Strategy::Geo,
            stop_cd: 1e-4,
            max_steps: 10,
            min_improvement: 1e-4,
            gate_attempts: 2,
            fit: StepFitConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Chamfer distance reached `stop_cd`.
    Converged,
    /// Too few distinct points left to detect a plane.
    EmptyReference,
    NoCandidates,
    /// No tried candidate passed the improvement gate.
    NoImprovement,
    MaxSteps,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("target point cloud is empty")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no step could be executed")]
    InvalidReconstruction { trace: Box<Trace> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneTrace {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inlier_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PromptStatus {
    Candidate { candidate: usize },
    Failed { error: String },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptTrace {
    pub plane: usize,
    #[serde(flatten)]
    pub status: PromptStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateTrace {
    pub plane: usize,
    pub step: ModelingStep,
    /// Selection score; `null` when the candidate is disqualified.
    pub score: f64,
    pub diagnostics: FitDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptTrace {
    pub candidate: usize,
    pub cd_after: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub t: usize,
    pub mask_full: usize,
    pub mask_prev: usize,
    pub planes: Vec<PlaneTrace>,
    pub prompts: Vec<PromptTrace>,
    pub candidates: Vec<CandidateTrace>,
    pub ranking: Vec<usize>,
    pub attempts: Vec<AttemptTrace>,
    pub accepted: Option<usize>,
    pub cd_before: Option<f64>,
    pub cd_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub config: PipelineConfig,
    pub n_points_full: usize,
    pub iterations: Vec<IterationTrace>,
    pub stop_reason: Option<StopReason>,
    pub steps: usize,
    pub final_cd: Option<f64>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Partial reconstruction.
#[derive(Debug, Clone)]
pub struct ReconState {
    pub sequence: CadSequence,
    pub solid: Option<Solid>,
    pub p_prev: PointCloud,
    pub t: usize,
    /// Chamfer distance of `p_prev` to the target; infinite when empty.
    pub cd: f64,
}

impl ReconState {
    pub fn empty() -> Self {
        ReconState { sequence: CadSequence::default(), solid: None, p_prev: PointCloud::default(), t: 0, cd: f64::INFINITY }
    }
}

/// Result of one iteration.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub trace: IterationTrace,
    /// Updated state when a step was accepted.
    pub next: Option<ReconState>,
    pub stop: Option<StopReason>,
    pub p_ref: PointCloud,
}

/// Per-iteration dump: the state after the iteration and its reference cloud.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub sequence: CadSequence,
    pub p_ref: PointCloud,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub sequence: CadSequence,
    pub cd: f64,
    pub trace: Trace,
    pub snapshots: Vec<Snapshot>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One guidance, reconstruction and selection round. `gt` supplies the
/// ground-truth sequence for the oracle strategy.
pub fn iterate_once(
    state: &ReconState,
    p_full: &PointCloud,
    target: &IndexedCloud,
    cfg: &PipelineConfig,
    gt: Option<&CadSequence>,
) -> IterationOutcome {
    let seed = derive_seed(cfg.seed, state.t as u64);
    let (mask_full, mask_prev) = diff_mask(p_full, &state.p_prev, cfg.tau);
    let p_ref = build_p_ref(p_full, &state.p_prev, &mask_full, &mask_prev);
    let mut trace = IterationTrace {
        t: state.t,
        mask_full: p_ref.count(Provenance::Full),
        mask_prev: p_ref.count(Provenance::Prev),
        planes: Vec::new(),
        prompts: Vec::new(),
        candidates: Vec::new(),
        ranking: Vec::new(),
        attempts: Vec::new(),
        accepted: None,
        cd_before: finite(state.cd),
        cd_after: None,
    };
    let p_ref_cloud = p_ref.cloud;
    let stop = |trace: IterationTrace, reason, p_ref| IterationOutcome { trace, next: None, stop: Some(reason), p_ref };
    if p_ref_cloud.len() < cfg.ransac.d.max(cfg.prompt_size) {
        return stop(trace, StopReason::EmptyReference, p_ref_cloud);
    }

    let planes = detect_planes(&p_ref_cloud, &cfg.ransac, derive_seed(seed, 1));
    trace.planes = planes.iter().map(|p| PlaneTrace { normal: p.normal, offset: p.offset, inlier_count: p.inlier_count }).collect();
    let prompts: Vec<_> = planes
        .iter()
        .enumerate()
        .map(|(i, pl)| (i, sample_prompt(pl, &p_ref_cloud, cfg.prompt_size, derive_seed(derive_seed(seed, 2), i as u64))))
        .collect();

    let fit_cfg = cfg.fit.scaled(p_full.extent());
    let fit_seed = derive_seed(seed, 3);
    let results = crate::par::map(&prompts, |(i, pr)| match pr {
        Ok(pr) => Some(reconstruct_step(pr, &p_ref_cloud, target, &state.sequence, &fit_cfg, derive_seed(fit_seed, *i as u64))),
        Err(_) => None,
    });
    let mut candidates = Vec::new();
    let mut cand_planes = Vec::new();
    for ((i, pr), res) in prompts.iter().zip(results) {
        let status = match (pr, res) {
            (Err(e), _) => PromptStatus::Skipped { reason: e.to_string() },
            (Ok(_), Some(Ok(c))) => {
                candidates.push(c);
                cand_planes.push(*i);
                PromptStatus::Candidate { candidate: candidates.len() - 1 }
            }
            (Ok(_), Some(Err(e))) => PromptStatus::Failed { error: e.to_string() },
            (Ok(_), None) => unreachable!("prompt without result"),
        };
        trace.prompts.push(PromptTrace { plane: *i, status });
    }
    if candidates.is_empty() {
        return stop(trace, StopReason::NoCandidates, p_ref_cloud);
    }

    let gt_step = gt.and_then(|g| g.steps.get(state.sequence.len()));
    let scores = score_all(&candidates, cfg.strategy, &state.sequence, target, gt_step, derive_seed(seed, 4));
    let inliers: Vec<usize> = candidates.iter().map(|c| c.prompt.inlier_count).collect();
    trace.ranking = rank(&scores, &inliers, cfg.strategy.higher_is_better());
    trace.candidates = candidates
        .iter()
        .zip(&scores)
        .zip(&cand_planes)
        .map(|((c, &s), &plane)| CandidateTrace { plane, step: c.step.clone(), score: s, diagnostics: c.diagnostics.clone() })
        .collect();

    let resample_seed = derive_seed(seed, 5);
    for &ci in trace.ranking.clone().iter().take(cfg.gate_attempts.max(1)) {
        let mut seq = state.sequence.clone();
        seq.steps.push(candidates[ci].step.clone());
        let executed = Solid::from_sequence(&seq)
            .ok()
            .and_then(|solid| sample_surface(&solid, cfg.n_points, resample_seed).ok().map(|pc| (solid, pc)));
        let Some((solid, p_new)) = executed else {
            trace.attempts.push(AttemptTrace { candidate: ci, cd_after: None, accepted: false });
            continue;
        };
        let cd = chamfer_points(&p_new.points, &p_full.points);
        let accepted = !state.cd.is_finite() || cd <= state.cd - cfg.min_improvement;
        trace.attempts.push(AttemptTrace { candidate: ci, cd_after: Some(cd), accepted });
        if accepted {
            trace.accepted = Some(ci);
            trace.cd_after = Some(cd);
            let next = ReconState { sequence: seq, solid: Some(solid), p_prev: p_new, t: state.t + 1, cd };
            let reason = (cd <= cfg.stop_cd).then_some(StopReason::Converged);
            return IterationOutcome { trace, next: Some(next), stop: reason, p_ref: p_ref_cloud };
        }
    }
    stop(trace, StopReason::NoImprovement, p_ref_cloud)
}

/// Reconstructs a sequence from a unit-box normalized target cloud.
pub fn run(p_full: &PointCloud, cfg: &PipelineConfig) -> Result<Reconstruction, PipelineError> {
    run_with_gt(p_full, cfg, None)
}

/// [`run`] with a ground-truth sequence, required by the oracle strategy.
pub fn run_with_gt(p_full: &PointCloud, cfg: &PipelineConfig, gt: Option<&CadSequence>) -> Result<Reconstruction, PipelineError> {
    if p_full.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    if cfg.max_steps == 0 {
        return Err(PipelineError::Config("max_steps must be at least 1".into()));
    }
    if cfg.strategy == Strategy::Oracle && gt.is_none() {
        return Err(PipelineError::Config("the oracle strategy needs a ground-truth sequence".into()));
    }
    let target = IndexedCloud::new(&p_full.points, crate::selection::GEO_SAMPLES);
    let mut state = ReconState::empty();
    let mut trace = Trace {
        config: cfg.clone(),
        n_points_full: p_full.len(),
        iterations: Vec::new(),
        stop_reason: None,
        steps: 0,
        final_cd: None,
    };
    let mut snapshots = Vec::new();
    while trace.stop_reason.is_none() {
        if state.t >= cfg.max_steps {
            trace.stop_reason = Some(StopReason::MaxSteps);
            break;
        }
        let out = iterate_once(&state, p_full, &target, cfg, gt);
        debug!("iteration {}: {} candidates, accepted {:?}", state.t, out.trace.candidates.len(), out.trace.accepted);
        trace.iterations.push(out.trace);
        trace.stop_reason = out.stop;
        if let Some(next) = out.next {
            state = next;
        }
        snapshots.push(Snapshot { sequence: state.sequence.clone(), p_ref: out.p_ref });
    }
    if state.sequence.is_empty() {
        return Err(PipelineError::InvalidReconstruction { trace: Box::new(trace) });
    }
    trace.steps = state.sequence.len();
    trace.final_cd = finite(state.cd);
    info!("reconstructed {} steps, cd {:.6}, stop {:?}", state.sequence.len(), state.cd, trace.stop_reason);
    Ok(Reconstruction { sequence: state.sequence, cd: state.cd, trace, snapshots })
}
