//! Dataset ingestion and batch evaluation.

use super::{chamfer, edge_chamfer_with, hausdorff, invalid_ratio, normal_consistency, normalize_unit_box, MetricsError};
use crate::cloud::PointCloud;
use crate::dsl::{parse_text, CadSequence, TokenAlphabet};
use crate::geometry::{sample_surface, Solid};
use crate::math::derive_seed;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

/// Ground truth as a sequence to execute or a sampled cloud.
#[derive(Debug, Clone)]
pub enum GtSource {
    Sequence(CadSequence),
    Cloud(PointCloud),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub samples: usize,
    pub seed: u64,
    pub edge_radius: f64,
    pub edge_angle_deg: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { samples: super::DEFAULT_SAMPLES, seed: 0, edge_radius: super::EDGE_RADIUS, edge_angle_deg: super::EDGE_ANGLE_DEG }
    }
}

/// One evaluated pair. Distances are squared-distance chamfer, Hausdorff
/// and edge chamfer in unit-box units; the `_x100` fields scale them by 100.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub name: String,
    pub valid: bool,
    pub steps_used: usize,
    pub cd: Option<f64>,
    pub hd: Option<f64>,
    pub ecd: Option<f64>,
    pub ecd_fallback: bool,
    pub nc: Option<f64>,
    pub cd_x100: Option<f64>,
    pub hd_x100: Option<f64>,
    pub ecd_x100: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: EvalConfig,
    pub n_pairs: usize,
    pub n_valid: usize,
    /// Percentage of predictions with no executable prefix.
    pub invalid_ratio: f64,
    pub mean_cd: Option<f64>,
    pub mean_hd: Option<f64>,
    pub mean_ecd: Option<f64>,
    pub mean_nc: Option<f64>,
    pub mean_cd_x100: Option<f64>,
    pub mean_hd_x100: Option<f64>,
    pub mean_ecd_x100: Option<f64>,
    pub pairs: Vec<PairResult>,
}

/// Both sides are sampled from the same stream so identical shapes give
/// identical clouds.
const SAMPLE_STREAM: u64 = 0;

/// Longest executable prefix of `seq` whose surface can be sampled.
fn best_prefix(seq: &CadSequence, samples: usize, seed: u64) -> Option<(usize, PointCloud)> {
    (1..=seq.len()).rev().find_map(|n| {
        let solid = Solid::from_sequence(&seq.prefix(n)).ok()?;
        sample_surface(&solid, samples, seed).ok().map(|pc| (n, pc))
    })
}

fn gt_cloud(gt: &GtSource, cfg: &EvalConfig) -> Result<PointCloud, String> {
    match gt {
        GtSource::Cloud(pc) => Ok(pc.clone()),
        GtSource::Sequence(seq) => {
            let solid = Solid::from_sequence(seq).map_err(|e| format!("ground truth: {e}"))?;
            sample_surface(&solid, cfg.samples, derive_seed(cfg.seed, SAMPLE_STREAM)).map_err(|e| format!("ground truth: {e}"))
        }
    }
}

/// Normalizes both sides separately, samples and computes every metric.
pub fn evaluate_pair(name: &str, gt: &GtSource, pred: &CadSequence, cfg: &EvalConfig) -> PairResult {
    let mut r = PairResult { name: name.to_string(), ..Default::default() };
    let gt = match gt_cloud(gt, cfg).and_then(|pc| normalize_unit_box(&pc).map_err(|e| format!("ground truth: {e}"))) {
        Ok((pc, _)) => pc,
        Err(e) => {
            r.error = Some(e);
            return r;
        }
    };
    let Some((n, pc)) = best_prefix(pred, cfg.samples, derive_seed(cfg.seed, SAMPLE_STREAM)) else {
        r.error = Some("no executable prefix".into());
        return r;
    };
    r.valid = true;
    r.steps_used = n;
    let pred = match normalize_unit_box(&pc) {
        Ok((pc, _)) => pc,
        Err(e) => {
            r.error = Some(format!("prediction: {e}"));
            return r;
        }
    };
    let cd = chamfer(&gt, &pred);
    let hd = hausdorff(&gt, &pred);
    r.cd = Some(cd);
    r.hd = Some(hd);
    r.cd_x100 = Some(cd * 100.0);
    r.hd_x100 = Some(hd * 100.0);
    match edge_chamfer_with(&gt, &pred, cfg.edge_radius, cfg.edge_angle_deg) {
        Ok(e) => {
            r.ecd = Some(e.value);
            r.ecd_x100 = Some(e.value * 100.0);
            r.ecd_fallback = e.fallback;
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    match normal_consistency(&gt, &pred) {
        Ok(nc) => r.nc = Some(nc),
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

fn mean(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = vals.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// A ground-truth and prediction pair, either of which may have failed to load.
pub type EvalPair = (String, Result<GtSource, String>, Result<CadSequence, String>);

/// Evaluates every pair; per-pair failures are recorded, not raised.
/// Means are taken over valid predictions; pairs whose ground truth failed
/// are excluded from the invalid ratio.
pub fn evaluate_dataset(pairs: &[EvalPair], cfg: &EvalConfig) -> Result<MetricsReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoResults);
    }
    let results: Vec<PairResult> = crate::par::map(pairs, |(name, gt, pred)| match (gt, pred) {
        (Err(e), _) => PairResult { name: name.clone(), error: Some(format!("ground truth: {e}")), ..Default::default() },
        (Ok(_), Err(e)) => PairResult { name: name.clone(), error: Some(format!("prediction: {e}")), ..Default::default() },
        (Ok(gt), Ok(pred)) => evaluate_pair(name, gt, pred, cfg),
    });
    let counted: Vec<bool> = pairs
        .iter()
        .zip(&results)
        .filter(|((_, gt, _), r)| gt.is_ok() && !r.error.as_deref().is_some_and(|e| e.starts_with("ground truth")))
        .map(|(_, r)| r.valid)
        .collect();
    let ir = invalid_ratio(&counted)?;
    let valid = || results.iter().filter(|r| r.valid);
    let mean_cd = mean(valid().map(|r| r.cd));
    let mean_hd = mean(valid().map(|r| r.hd));
    let mean_ecd = mean(valid().map(|r| r.ecd));
    Ok(MetricsReport {
        config: *cfg,
        n_pairs: results.len(),
        n_valid: valid().count(),
        invalid_ratio: ir,
        mean_cd,
        mean_hd,
        mean_ecd,
        mean_nc: mean(valid().map(|r| r.nc)),
        mean_cd_x100: mean_cd.map(|v| v * 100.0),
        mean_hd_x100: mean_hd.map(|v| v * 100.0),
        mean_ecd_x100: mean_ecd.map(|v| v * 100.0),
        pairs: results,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per pair with the scaled distances.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record(["name", "valid", "steps_used", "cd_x100", "hd_x100", "ecd_x100", "ecd_fallback", "nc", "error"])
            .expect("in-memory write");
        for r in &self.pairs {
            w.write_record([
                r.name.clone(),
                r.valid.to_string(),
                r.steps_used.to_string(),
                opt(r.cd_x100),
                opt(r.hd_x100),
                opt(r.ecd_x100),
                r.ecd_fallback.to_string(),
                opt(r.nc),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

fn ext(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Reads a sequence from JSON or from token text (`.txt`, `.tok`).
pub fn load_sequence(path: &Path) -> Result<CadSequence, IngestError> {
    let text = read(path)?;
    let fmt = |msg: String| IngestError::Format { path: path.to_path_buf(), msg };
    match ext(path).as_str() {
        "json" => CadSequence::from_json(&text).map_err(|e| fmt(e.to_string())),
        _ => parse_text(&text, &TokenAlphabet::default()).map_err(|e| fmt(e.to_string())),
    }
}

/// Reads ground truth: PLY or XYZ clouds, anything else as a sequence.
pub fn load_gt(path: &Path) -> Result<GtSource, IngestError> {
    let fmt = |msg: String| IngestError::Format { path: path.to_path_buf(), msg };
    let open = || fs::File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source });
    match ext(path).as_str() {
        "ply" => PointCloud::read_ply(open()?).map(GtSource::Cloud).map_err(|e| fmt(e.to_string())),
        "xyz" => PointCloud::read_xyz(open()?).map(GtSource::Cloud).map_err(|e| fmt(e.to_string())),
        _ => load_sequence(path).map(GtSource::Sequence),
    }
}

const GT_EXTS: [&str; 5] = ["json", "txt", "tok", "ply", "xyz"];
const PRED_EXTS: [&str; 3] = ["json", "txt", "tok"];

/// Pairs every ground-truth file in `gt_dir` with the prediction of the
/// same stem in `pred_dir`, sorted by name.
pub fn load_pairs(gt_dir: &Path, pred_dir: &Path) -> Result<Vec<EvalPair>, IngestError> {
    let entries = fs::read_dir(gt_dir).map_err(|source| IngestError::Io { path: gt_dir.to_path_buf(), source })?;
    let mut gts: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && GT_EXTS.contains(&ext(p).as_str()))
        .collect();
    gts.sort();
    Ok(gts
        .into_iter()
        .map(|gt_path| {
            let stem = gt_path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
            let gt = load_gt(&gt_path).map_err(|e| e.to_string());
            let pred = PRED_EXTS
                .iter()
                .map(|e| pred_dir.join(format!("{stem}.{e}")))
                .find(|p| p.is_file())
                .ok_or_else(|| format!("no prediction for {stem}"))
                .and_then(|p| load_sequence(&p).map_err(|e| e.to_string()));
            (stem, gt, pred)
        })
        .collect())
}
