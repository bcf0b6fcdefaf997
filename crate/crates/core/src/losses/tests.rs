use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit() -> SoftParams {
    SoftParams {
        sketch_min: [0.0, 0.0],
        sketch_max: [1.0, 1.0],
        d_minus: 0.0,
        d_plus: 1.0,
        translation: [0.0; 3],
        orientation: [0.0; 3],
        scale: 1.0,
    }
}

#[test]
fn token_expectation() {
    let mut p = vec![0.0; 64];
    p[10] = 1.0;
    assert_eq!(soft_token_expectation(&p).unwrap(), 10.0);
    let u = vec![1.0 / 64.0; 64];
    assert!((soft_token_expectation(&u).unwrap() - 31.5).abs() < 1e-12);
    let mut h = vec![0.0; 64];
    h[10] = 0.5;
    h[20] = 0.5;
    assert_eq!(soft_token_expectation(&h).unwrap(), 15.0);
    assert!(soft_token_expectation(&[0.5, 0.6]).is_err());
    assert!(soft_token_expectation(&[1.5, -0.5]).is_err());
}

#[test]
fn identity_box_is_unit_cube() {
    let b = soft_bbox(&unit());
    assert_eq!(b.min, Vec3::zeros());
    assert_eq!(b.max, Vec3::new(1.0, 1.0, 1.0));
    let jac = soft_bbox_jacobian(&unit());
    for c in jac {
        assert_eq!(c[0][6], 1.0);
        assert_eq!(c[1][7], 1.0);
        assert_eq!(c[2][8], 1.0);
    }
}

#[test]
fn iou_cases() {
    let a = unit();
    let mut b = unit();
    b.translation[0] = 0.5;
    assert_eq!(bbox_iou(&a, &a, IouPath::Exact), 1.0);
    assert!((bbox_iou(&a, &b, IouPath::Exact) - 1.0 / 3.0).abs() < 1e-12);
    assert!((bbox_iou(&a, &b, IouPath::Smooth) - 1.0 / 3.0).abs() < 1e-2);
    let mut far = unit();
    far.translation = [3.0, 0.0, 0.0];
    assert_eq!(bbox_iou(&a, &far, IouPath::Exact), 0.0);
    assert!((bbox_iou_exact(&soft_bbox(&a), &soft_bbox(&b)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    let mut flat = unit();
    flat.d_plus = 0.0;
    assert_eq!(bbox_iou_exact(&soft_bbox(&flat), &soft_bbox(&a)), Err(LossError::DegenerateBox));
}

#[test]
fn iou_scale_invariant() {
    let a = unit();
    let mut b = unit();
    b.translation = [0.3, 0.2, -0.1];
    let s = 2.5;
    let scale = |p: &SoftParams| SoftParams {
        d_minus: p.d_minus * s,
        d_plus: p.d_plus * s,
        translation: p.translation.map(|t| t * s),
        scale: p.scale * s,
        ..*p
    };
    let r = bbox_iou(&a, &b, IouPath::Exact);
    assert!((bbox_iou(&scale(&a), &scale(&b), IouPath::Exact) - r).abs() < 1e-12);
}

#[test]
fn loss_values() {
    let a = unit();
    assert_eq!(l_bbox(&a, &a), 0.0);
    let mut b = unit();
    b.translation[0] = 0.5;
    assert!((l_bbox(&a, &b) - 3f64.ln()).abs() < 1e-12);
    let mut far = unit();
    far.translation = [3.0, 0.0, 0.0];
    assert!((l_bbox(&a, &far) - (-(IOU_CLAMP.ln()))).abs() < 1e-12);
}

#[test]
fn combined_gating() {
    assert_eq!(combined_loss(1.0, 2.0, 4.0, 10, DEFAULT_EP_THRES), 3.0);
    assert_eq!(combined_loss(1.0, 2.0, 4.0, 30, DEFAULT_EP_THRES), 3.0);
    assert_eq!(combined_loss(1.0, 2.0, 4.0, 31, DEFAULT_EP_THRES), 7.0);
    assert_eq!(combined_loss(0.0, 0.0, 0.0, 99, DEFAULT_EP_THRES), 0.0);
}

#[test]
fn finite_differences_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 30 {
        let (pred, gt) = random_pair(&mut rng);
        if switch_margin(&pred, &gt) < 0.02 {
            continue;
        }
        let r = fd_check(&pred, &gt, 1e-5);
        let worst = r.entries.iter().max_by(|a, b| a.rel_err.total_cmp(&b.rel_err)).unwrap();
        assert!(r.max_rel_err < 1e-4, "{worst:?}");
        checked += 1;
    }
}
