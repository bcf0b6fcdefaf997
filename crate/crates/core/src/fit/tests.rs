use super::*;
use crate::dsl::{CurveKind, Face, Loop};
use crate::geometry::bbox_of_cylinder;
use crate::geometry::ExtrusionCylinder;
use crate::guidance::{detect_planes, sample_prompt, Plane, RansacConfig};
use crate::math::arr3;

fn sampled(seq: &CadSequence, n: usize) -> PointCloud {
    sample_surface(&Solid::from_sequence(seq).unwrap(), n, 1).unwrap()
}

fn prompt_on(cloud: &PointCloud, normal: [f64; 3], offset: f64) -> PlanePrompt {
    let n = Vec3::from(normal);
    let inliers: Vec<usize> = (0..cloud.len()).filter(|&i| (n.dot(&cloud.points[i]) - offset).abs() <= 1e-3).collect();
    let plane = Plane { normal, offset, inlier_count: inliers.len(), inliers };
    sample_prompt(&plane, cloud, 64, 0).unwrap()
}

fn box_seq(min: [f64; 3], max: [f64; 3]) -> CadSequence {
    CadSequence::new(vec![ModelingStep::axis_box(min, max, BooleanOp::Union)])
}

fn cylinder_seq(c: Point2, r: f64, h: f64) -> CadSequence {
    CadSequence::new(vec![ModelingStep {
        sketch: Sketch::single(Face::new(Loop::circle([0.5, 0.5], 0.5))),
        extrusion: Extrusion {
            d_plus: h,
            d_minus: 0.0,
            translation: [c[0] - r, c[1] - r, 0.0],
            orientation: [0.0; 3],
            scale: 2.0 * r,
        },
        boolean: BooleanOp::Union,
    }])
}

#[test]
fn box_top_gives_filled_rectangle() {
    let cloud = sampled(&box_seq([0.0; 3], [1.0, 0.6, 0.4]), 8192);
    let pr = prompt_on(&cloud, [0.0, 0.0, 1.0], 0.4);
    let prof = extract_profile(&pr, &cloud, &StepFitConfig::default()).unwrap();
    let area = prof.area();
    assert!((area - 0.6).abs() < 0.03, "{area}");
    assert!(prof.contains([0.5, 0.3]));
    assert!(!prof.contains([0.5, 0.7]));
    assert!(!prof.has_holes());
}

#[test]
fn cylinder_top_gives_disc_and_circle() {
    let cloud = sampled(&cylinder_seq([0.5, 0.5], 0.4, 0.3), 8192);
    let pr = prompt_on(&cloud, [0.0, 0.0, 1.0], 0.3);
    let cfg = StepFitConfig::default();
    let prof = extract_profile(&pr, &cloud, &cfg).unwrap();
    let expect = std::f64::consts::PI * 0.16;
    assert!((prof.area() - expect).abs() / expect < 0.05);
    let fitted = fit_loops(&prof, &cfg).unwrap();
    let c = &fitted.sketch.faces[0].outer.curves;
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].kind, CurveKind::Circle);
    let (ctr, r) = c[0].circle_params().unwrap();
    assert!((ctr[0] - 0.5).abs() < cfg.cell * 2.0 && (ctr[1] - 0.5).abs() < cfg.cell * 2.0);
    assert!((r - 0.4).abs() < cfg.cell * 2.0, "{r}");
}

#[test]
fn grazing_plane_has_no_support() {
    let cloud = PointCloud::new(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]);
    let pr = PlanePrompt { points: vec![[0.0; 3]; 3], normal: [0.0, 0.0, 1.0], offset: 0.0, inlier_count: 3 };
    assert!(matches!(
        extract_profile(&pr, &cloud, &StepFitConfig::default()),
        Err(FitError::InsufficientSupport { points: 3 })
    ));
}

#[test]
fn box_height_from_bottom_prompt() {
    let cloud = sampled(&box_seq([0.0; 3], [1.0, 0.6, 0.4]), 8192);
    let pr = prompt_on(&cloud, [0.0, 0.0, 1.0], 0.0);
    let cfg = StepFitConfig::default();
    let prof = extract_profile(&pr, &cloud, &cfg).unwrap();
    let (lo, hi) = estimate_extrusion(&prof, &cloud, &cfg).unwrap();
    assert_eq!(lo, 0.0);
    assert!((hi - 0.4).abs() < 0.01, "{hi}");
}

#[test]
fn symmetric_slab_straddles_plane() {
    let cloud = sampled(&box_seq([0.0, 0.0, -0.2], [1.0, 1.0, 0.2]), 8192);
    // Points on the mid plane are the walls' middles; use them as the prompt.
    let pr = PlanePrompt { points: vec![], normal: [0.0, 0.0, 1.0], offset: 0.0, inlier_count: 0 };
    let cfg = StepFitConfig::default();
    let prof = extract_profile(&pr, &cloud, &cfg).unwrap();
    let (lo, hi) = estimate_extrusion(&prof, &cloud, &cfg).unwrap();
    assert!((lo + 0.2).abs() < 0.01 && (hi - 0.2).abs() < 0.01, "{lo} {hi}");
}

#[test]
fn tangent_plane_of_sphere_is_flat() {
    let mut pts = Vec::new();
    for i in 0..60 {
        for j in 0..120 {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / 60.0;
            let ph = std::f64::consts::TAU * j as f64 / 120.0;
            pts.push(Vec3::new(0.5 * th.sin() * ph.cos(), 0.5 * th.sin() * ph.sin(), 0.5 * th.cos()));
        }
    }
    let cloud = PointCloud::new(pts);
    let pr = PlanePrompt { points: vec![], normal: [0.0, 0.0, 1.0], offset: 0.5, inlier_count: 0 };
    let cfg = StepFitConfig::default();
    match extract_profile(&pr, &cloud, &cfg) {
        Err(FitError::InsufficientSupport { .. }) => {}
        Ok(prof) => match fit_loops(&prof, &cfg) {
            Err(FitError::DegenerateProfile) => {}
            Ok(_) => {
                let r = estimate_extrusion_with(&prof, &cloud, Side::Positive, Reach::Far, &cfg);
                assert!(matches!(r, Err(FitError::FlatCandidate { .. })), "{r:?}");
            }
            Err(e) => panic!("{e}"),
        },
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn empty_state_chooses_union() {
    let seq = box_seq([0.0; 3], [1.0; 3]);
    let cloud = sampled(&seq, 2048);
    let target = IndexedCloud::new(&cloud.points, 1024);
    let c = choose_boolean(&seq.steps[0], &CadSequence::default(), &target, 512, 0).unwrap();
    assert_eq!(c.op, BooleanOp::Union);
}

#[test]
fn hole_matching_target_is_subtraction_and_disjoint_box_is_union() {
    let base = box_seq([0.0; 3], [1.0, 1.0, 0.4]);
    let hole = ModelingStep {
        sketch: Sketch::single(Face::new(Loop::circle([0.5, 0.5], 0.5))),
        extrusion: Extrusion { d_plus: 0.4, d_minus: 0.0, translation: [0.3, 0.3, 0.0], orientation: [0.0; 3], scale: 0.4 },
        boolean: BooleanOp::Subtraction,
    };
    let mut full = base.clone();
    full.steps.push(hole.clone());
    let target = IndexedCloud::new(&sampled(&full, 8192).points, 2048);
    let c = choose_boolean(&hole, &base, &target, 1024, 3).unwrap();
    assert_eq!(c.op, BooleanOp::Subtraction);

    let other = ModelingStep::axis_box([1.5, 0.0, 0.0], [2.0, 0.5, 0.4], BooleanOp::Union);
    let mut full = base.clone();
    full.steps.push(other.clone());
    let target = IndexedCloud::new(&sampled(&full, 8192).points, 2048);
    let c = choose_boolean(&other, &base, &target, 1024, 3).unwrap();
    assert_eq!(c.op, BooleanOp::Union);
}

#[test]
fn single_box_top_prompt_recovers_the_box() {
    let seq = box_seq([0.0, 0.1, 0.0], [1.0, 0.7, 0.45]);
    let cloud = sampled(&seq, 8192);
    let target = IndexedCloud::new(&cloud.points, 2048);
    let planes = detect_planes(&cloud, &RansacConfig::default(), 1);
    let top = planes.iter().find(|p| p.normal[2] > 0.99 && (p.offset - 0.45).abs() < 1e-3).expect("top plane");
    let pr = sample_prompt(top, &cloud, 64, 0).unwrap();
    let cand = reconstruct_step(&pr, &cloud, &target, &CadSequence::default(), &StepFitConfig::default(), 0).unwrap();
    assert!(validate(&CadSequence::new(vec![cand.step.clone()])).is_empty());
    let gt = ExtrusionCylinder::new(&seq.steps[0].sketch, &seq.steps[0].extrusion, 1e-3).unwrap();
    let got = ExtrusionCylinder::new(&cand.step.sketch, &cand.step.extrusion, 1e-3).unwrap();
    let iou = bbox_of_cylinder(&gt).hull_iou(&bbox_of_cylinder(&got));
    assert!(iou >= 0.9, "{iou} {:?}", cand.step.extrusion);
    let n = got.normal();
    assert!(n.dot(&Vec3::from(pr.normal)).abs() > (2.0f64).to_radians().cos());
}

#[test]
fn l_shape_side_prompt_extrudes_along_side_normal() {
    let seq = CadSequence::new(vec![
        ModelingStep::axis_box([0.0; 3], [1.0, 0.6, 0.3], BooleanOp::Union),
        ModelingStep::axis_box([0.0, 0.0, 0.3], [0.3, 0.6, 0.8], BooleanOp::Union),
    ]);
    let cloud = sampled(&seq, 8192);
    let target = IndexedCloud::new(&cloud.points, 2048);
    let pr = prompt_on(&cloud, [1.0, 0.0, 0.0], 1.0);
    let cand = reconstruct_step(&pr, &cloud, &target, &CadSequence::default(), &StepFitConfig::default(), 0).unwrap();
    let got = ExtrusionCylinder::new(&cand.step.sketch, &cand.step.extrusion, 1e-3).unwrap();
    assert!(got.normal().x.abs() > 0.999);
    assert!(validate(&CadSequence::new(vec![cand.step])).is_empty());
}

#[test]
fn scaling_inputs_scales_the_step() {
    let seq = box_seq([0.0, 0.1, 0.0], [1.0, 0.7, 0.45]);
    let cloud = sampled(&seq, 8192);
    let s = 0.5;
    let small = cloud.map_points(|p| p * s);
    let pr = prompt_on(&cloud, [0.0, 0.0, 1.0], 0.0);
    let mut pr_s = pr.clone();
    pr_s.offset *= s;
    pr_s.points = pr.points.iter().map(|p| arr3(&(Vec3::from(*p) * s))).collect();
    let cfg = StepFitConfig::default();
    let a = extract_profile(&pr, &cloud, &cfg).unwrap();
    let b = extract_profile(&pr_s, &small, &cfg.scaled(s)).unwrap();
    let (alo, ahi) = estimate_extrusion(&a, &cloud, &cfg).unwrap();
    let (blo, bhi) = estimate_extrusion(&b, &small, &cfg.scaled(s)).unwrap();
    assert!((blo - alo * s).abs() < 1e-9 && (bhi - ahi * s).abs() < 0.01 * s);
    assert_eq!(a.filled_count(), b.filled_count());
}
