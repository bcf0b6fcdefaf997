//! Subcommand bodies.

use crate::output::{domain_err, input_err, write_atomic, write_json, CliError, CliResult};
use crate::{DetectPlanesArgs, DiffCheckArgs, EvaluateArgs, ExecuteArgs, GenerateArgs, ReconstructArgs, SampleArgs, TokenizeArgs};
use log::{info, warn};
use recad_core::dsl::{parse_text, tokenize as encode_tokens, validate, TokenAlphabet};
use recad_core::geometry::{export_mesh, sample_surface, GeometryError};
use recad_core::guidance::{detect_planes as ransac_detect, RansacConfig};
use recad_core::losses::{fd_check, random_pair, switch_margin, FdReport};
use recad_core::math::derive_seed;
use recad_core::metrics::{evaluate_dataset, load_pairs, normalize_unit_box, EvalConfig, UnitBox};
use recad_core::pipeline::{self, generate_synthetic, PipelineConfig, PipelineError};
use recad_core::{CadSequence, PointCloud, Solid};
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

const PRED_EXTS: [&str; 3] = ["json", "txt", "tok"];

/// Minimum switch margin of a derivative-check draw.
const DIFF_MIN_MARGIN: f64 = 0.02;

fn ext(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses JSON, or token text for any other extension.
fn read_sequence(path: &Path) -> CliResult<CadSequence> {
    let text = read_text(path)?;
    let parsed = if ext(path) == "json" {
        CadSequence::from_json(&text).map_err(|e| e.to_string())
    } else {
        parse_text(&text, &TokenAlphabet::default()).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_cloud(path: &Path) -> CliResult<PointCloud> {
    let f = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let cloud = match ext(path).as_str() {
        "xyz" => PointCloud::read_xyz(f),
        _ => PointCloud::read_ply(f),
    };
    cloud.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn execute_solid(seq: &CadSequence) -> CliResult<Solid> {
    let violations = validate(seq);
    if !violations.is_empty() {
        return Err(domain_err(GeometryError::Invalid(violations)));
    }
    Solid::from_sequence(seq).map_err(domain_err)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

/// Writes to stdout, ignoring a closed pipe.
fn print_str(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn print_json(v: &serde_json::Value) {
    print_str(&(serde_json::to_string_pretty(v).expect("value serializes") + "\n"));
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("value serializes")
}

pub fn execute(a: &ExecuteArgs) -> CliResult {
    let seq = read_sequence(&a.input)?;
    let violations = validate(&seq);
    let mut report = json!({
        "command": "execute",
        "input": a.input,
        "res": a.res,
        "steps": seq.len(),
        "valid": violations.is_empty(),
        "violations": violations,
    });
    if !violations.is_empty() {
        print_json(&report);
        return Err(domain_err(GeometryError::Invalid(violations)));
    }
    let solid = Solid::from_sequence(&seq).map_err(domain_err)?;
    let mesh = export_mesh(&solid, a.res).map_err(domain_err)?;
    if mesh.triangles.is_empty() {
        report["valid"] = json!(false);
        print_json(&report);
        return Err(domain_err(GeometryError::EmptySolid));
    }
    let (lo, hi) = solid.hull();
    report["mesh"] = json!({
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "volume": mesh.volume(),
        "euler_characteristic": mesh.euler_characteristic(),
        "hull": [[lo.x, lo.y, lo.z], [hi.x, hi.y, hi.z]],
    });
    if let Some(obj) = &a.obj {
        write_atomic(obj, mesh.to_obj().as_bytes())?;
        write_json(&sidecar(obj), &report)?;
        info!("wrote {}", obj.display());
    }
    print_json(&report);
    Ok(())
}

pub fn sample(a: &SampleArgs) -> CliResult {
    if a.n == 0 {
        return Err(CliError::Input("--n must be positive".into()));
    }
    let seq = read_sequence(&a.input)?;
    let solid = execute_solid(&seq)?;
    let cloud = sample_surface(&solid, a.n, a.seed).map_err(domain_err)?;
    write_atomic(&a.out, cloud.to_ply().as_bytes())?;
    write_json(&sidecar(&a.out), &json!({ "command": "sample", "input": a.input, "n": a.n, "seed": a.seed }))?;
    info!("wrote {} points to {}", cloud.len(), a.out.display());
    Ok(())
}

fn resolve_config(a: &ReconstructArgs) -> CliResult<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = a.strategy {
        cfg.strategy = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.max_steps {
        cfg.max_steps = n;
    }
    if let Some(n) = a.n_points {
        cfg.n_points = n;
    }
    if let Some(c) = a.stop_cd {
        cfg.stop_cd = c;
    }
    Ok(cfg)
}

fn dump_steps(dir: &Path, recon: &pipeline::Reconstruction, res: usize) -> CliResult {
    for (i, snap) in recon.snapshots.iter().enumerate() {
        write_atomic(&dir.join(format!("step_{i:02}_pref.ply")), snap.p_ref.to_ply().as_bytes())?;
        if snap.sequence.is_empty() {
            continue;
        }
        match Solid::from_sequence(&snap.sequence).and_then(|s| export_mesh(&s, res)) {
            Ok(mesh) => write_atomic(&dir.join(format!("step_{i:02}.obj")), mesh.to_obj().as_bytes())?,
            Err(e) => warn!("step {i}: no mesh dump: {e}"),
        }
    }
    Ok(())
}

pub fn reconstruct(a: &ReconstructArgs) -> CliResult {
    let cfg = resolve_config(a)?;
    let raw = read_cloud(&a.input)?;
    if raw.is_empty() {
        return Err(CliError::Input(format!("{}: cloud is empty", a.input.display())));
    }
    let (cloud, norm) = if a.no_normalize {
        (raw, UnitBox { scale: 1.0, offset: [0.0; 3] })
    } else {
        normalize_unit_box(&raw).map_err(input_err)?
    };
    let resolved = json!({
        "command": "reconstruct",
        "input": a.input,
        "normalization": norm,
        "pipeline": cfg,
        "dump_res": a.dump_res,
    });
    if let Some(dir) = &a.trace {
        write_json(&dir.join("config.json"), &resolved)?;
    }
    let result = pipeline::run(&cloud, &cfg);
    let recon = match result {
        Ok(r) => r,
        Err(PipelineError::InvalidReconstruction { trace }) => {
            if let Some(dir) = &a.trace {
                write_atomic(&dir.join("trace.json"), trace.to_json().as_bytes())?;
            }
            return Err(CliError::Domain("reconstruction produced no executable step".into()));
        }
        Err(PipelineError::EmptyInput) => return Err(CliError::Input("target cloud is empty".into())),
        Err(e @ PipelineError::Config(_)) => return Err(input_err(e)),
    };
    let inv = 1.0 / norm.scale;
    let world = recon.sequence.transformed(inv, std::array::from_fn(|k| -norm.offset[k] * inv));
    write_atomic(&a.out, world.to_json().as_bytes())?;
    if let Some(dir) = &a.trace {
        write_atomic(&dir.join("trace.json"), recon.trace.to_json().as_bytes())?;
        write_atomic(&dir.join("seq_normalized.json"), recon.sequence.to_json().as_bytes())?;
        dump_steps(dir, &recon, a.dump_res)?;
    }
    info!("{} steps, chamfer {:.3e}, stop {:?}", recon.sequence.len(), recon.cd, recon.trace.stop_reason);
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult {
    if !a.gt.is_dir() {
        return Err(CliError::Input(format!("{}: not a directory", a.gt.display())));
    }
    if !a.pred.is_dir() {
        return Err(CliError::Input(format!("{}: not a directory", a.pred.display())));
    }
    let pairs = load_pairs(&a.gt, &a.pred).map_err(input_err)?;
    let gt_ids: BTreeSet<&str> = pairs.iter().map(|(n, _, _)| n.as_str()).collect();
    let missing: Vec<&str> = pairs.iter().filter(|(_, _, p)| p.is_err()).map(|(n, _, _)| n.as_str()).collect();
    let mut unmatched: Vec<String> = fs::read_dir(&a.pred)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.pred.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && PRED_EXTS.contains(&ext(p).as_str()))
        .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
        .filter(|s| !gt_ids.contains(s.as_str()))
        .collect();
    unmatched.sort();
    unmatched.dedup();
    for id in &missing {
        warn!("no usable prediction for {id}");
    }
    for id in &unmatched {
        warn!("prediction {id} has no ground truth");
    }
    let cfg = EvalConfig { samples: a.samples, seed: a.seed, ..EvalConfig::default() };
    let report = evaluate_dataset(&pairs, &cfg).map_err(domain_err)?;
    let mut out = to_value(&report);
    out["command"] = json!("evaluate");
    out["gt_dir"] = json!(a.gt);
    out["pred_dir"] = json!(a.pred);
    out["missing_predictions"] = json!(missing);
    out["unmatched_predictions"] = json!(unmatched);
    write_json(&a.out, &out)?;
    write_atomic(&a.out.with_extension("csv"), report.to_csv().as_bytes())?;
    print_str(&format!(
        "{} pairs, {} valid, IR {:.2}%, mean CD x100 {}\n",
        report.n_pairs,
        report.n_valid,
        report.invalid_ratio,
        report.mean_cd_x100.map_or("n/a".into(), |v| format!("{v:.4}"))
    ));
    Ok(())
}

#[derive(Serialize)]
struct PlaneOut {
    normal: [f64; 3],
    offset: f64,
    inlier_count: usize,
}

pub fn detect_planes(a: &DetectPlanesArgs) -> CliResult {
    if !(a.t > 0.0) || a.d < 3 {
        return Err(CliError::Input("--t must be positive and --d at least 3".into()));
    }
    let cloud = read_cloud(&a.input)?;
    let cfg = RansacConfig { t: a.t, d: a.d, max_planes: a.max_planes, ..RansacConfig::default() };
    let planes = ransac_detect(&cloud, &cfg, a.seed);
    let planes: Vec<PlaneOut> =
        planes.into_iter().map(|p| PlaneOut { normal: p.normal, offset: p.offset, inlier_count: p.inlier_count }).collect();
    let out = json!({
        "command": "detect-planes",
        "input": a.input,
        "seed": a.seed,
        "config": cfg,
        "n_points": cloud.len(),
        "planes": planes,
    });
    emit(a.out.as_deref(), &out)
}

fn emit(out: Option<&Path>, value: &serde_json::Value) -> CliResult {
    match out {
        Some(p) => write_json(p, value),
        None => {
            print_json(value);
            Ok(())
        }
    }
}

pub fn diff_check(a: &DiffCheckArgs) -> CliResult {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(a.seed, 0));
    let mut reports: Vec<FdReport> = Vec::with_capacity(a.draws);
    let mut rejected = 0usize;
    while reports.len() < a.draws {
        let (pred, gt) = random_pair(&mut rng);
        if switch_margin(&pred, &gt) < DIFF_MIN_MARGIN {
            rejected += 1;
            continue;
        }
        reports.push(fd_check(&pred, &gt, a.h));
    }
    let worst = reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let out = json!({
        "command": "diff-check",
        "seed": a.seed,
        "h": a.h,
        "min_margin": DIFF_MIN_MARGIN,
        "draws": a.draws,
        "rejected": rejected,
        "max_rel_err": worst,
        "reports": reports,
    });
    eprintln!("{} draws, max relative error {worst:.3e}", a.draws);
    emit(a.out.as_deref(), &out)
}

pub fn generate(a: &GenerateArgs) -> CliResult {
    let (seq, cloud) = generate_synthetic(a.seed, a.steps as usize, a.n);
    write_atomic(&a.out, seq.to_json().as_bytes())?;
    if let Some(p) = &a.cloud {
        write_atomic(p, cloud.to_ply().as_bytes())?;
    }
    write_json(&sidecar(&a.out), &json!({ "command": "generate", "seed": a.seed, "steps": a.steps, "n": a.n }))?;
    Ok(())
}

pub fn tokenize(a: &TokenizeArgs) -> CliResult {
    let seq = read_sequence(&a.input)?;
    let text = if ext(&a.input) == "json" {
        let stream = encode_tokens(&seq, &TokenAlphabet::default()).map_err(domain_err)?;
        stream.to_text().map_err(domain_err)?
    } else {
        seq.to_json()
    };
    match &a.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print_str(&text);
            Ok(())
        }
    }
}
