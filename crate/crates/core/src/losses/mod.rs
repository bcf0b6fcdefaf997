//! Differentiable bounding-box quantities and the loss combination rule.
//!
//! Every quantity is written once over [`Scalar`], evaluated with `f64` for
//! values and with [`Dual`] for gradients. Hull min/max is exact on the
//! evaluation path and log-sum-exp on the smooth path.

mod dual;

pub use dual::{Dual, Scalar, N_PARAMS};

use crate::geometry::Bbox3;
use crate::math::Vec3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Temperature of the smooth min/max and softplus.
pub const SMOOTH_TEMPERATURE: f64 = 1e-3;
/// IoU clamp inside the logarithm of `l_bbox`.
pub const IOU_CLAMP: f64 = 1e-6;
/// Epoch after which the bbox term is enabled by default.
pub const DEFAULT_EP_THRES: u32 = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("probabilities must be nonnegative and sum to 1 (sum {sum})")]
    NotNormalized { sum: f64 },
    #[error("bounding box has zero volume")]
    DegenerateBox,
}

/// Continuous extrusion-cylinder parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftParams {
    pub sketch_min: [f64; 2],
    pub sketch_max: [f64; 2],
    pub d_minus: f64,
    pub d_plus: f64,
    pub translation: [f64; 3],
    pub orientation: [f64; 3],
    pub scale: f64,
}

impl SoftParams {
    pub fn to_array(&self) -> [f64; N_PARAMS] {
        let [a, b] = self.sketch_min;
        let [c, d] = self.sketch_max;
        let [tx, ty, tz] = self.translation;
        let [th, ph, rh] = self.orientation;
        [a, b, c, d, self.d_minus, self.d_plus, tx, ty, tz, th, ph, rh, self.scale]
    }

    pub fn from_array(x: [f64; N_PARAMS]) -> Self {
        SoftParams {
            sketch_min: [x[0], x[1]],
            sketch_max: [x[2], x[3]],
            d_minus: x[4],
            d_plus: x[5],
            translation: [x[6], x[7], x[8]],
            orientation: [x[9], x[10], x[11]],
            scale: x[12],
        }
    }

    /// Parameters of a modeling step, using the discretized sketch bounds
    /// as corners.
    pub fn from_step(step: &crate::dsl::ModelingStep) -> Result<Self, crate::geometry::DegenerateCurve> {
        let (lo, hi) = crate::geometry::DiscretizedSketch::new(&step.sketch, crate::geometry::CHORD_TOLERANCE)?.bounds();
        let e = &step.extrusion;
        Ok(SoftParams {
            sketch_min: lo,
            sketch_max: hi,
            d_minus: e.d_minus,
            d_plus: e.d_plus,
            translation: e.translation,
            orientation: e.orientation,
            scale: e.scale,
        })
    }
}

/// Expected token index `sum_j p_j * j`.
pub fn soft_token_expectation(probs: &[f64]) -> Result<f64, LossError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
        return Err(LossError::NotNormalized { sum });
    }
    Ok(probs.iter().enumerate().map(|(j, p)| p * j as f64).sum())
}

/// Which min/max is used for the axis-aligned hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouPath {
    Exact,
    Smooth,
}

fn corners_of<S: Scalar>(x: &[S; N_PARAMS]) -> [[S; 3]; 8] {
    let (ct, st) = (x[9].cos(), x[9].sin());
    let (cp, sp) = (x[10].cos(), x[10].sin());
    let (cr, sr) = (x[11].cos(), x[11].sin());
    // Rz(rho) Ry(phi) Rx(theta)
    let r = [
        [cr * cp, cr * sp * st - sr * ct, cr * sp * ct + sr * st],
        [sr * cp, sr * sp * st + cr * ct, sr * sp * ct - cr * st],
        [-sp, cp * st, cp * ct],
    ];
    let quad = [[x[0], x[1]], [x[2], x[1]], [x[2], x[3]], [x[0], x[3]]];
    std::array::from_fn(|i| {
        let z = if i < 4 { x[4] } else { x[5] };
        let l = [x[12] * quad[i % 4][0], x[12] * quad[i % 4][1], z];
        std::array::from_fn(|k| r[k][0] * l[0] + r[k][1] * l[1] + r[k][2] * l[2] + x[6 + k])
    })
}

fn smooth_max<S: Scalar>(xs: &[S]) -> S {
    let m = xs.iter().map(|x| x.value()).fold(f64::NEG_INFINITY, f64::max);
    let t = SMOOTH_TEMPERATURE;
    let sum = xs.iter().fold(S::constant(0.0), |acc, &x| acc + (x - S::constant(m)).scale(1.0 / t).exp());
    S::constant(m) + sum.ln().scale(t)
}

fn smooth_min<S: Scalar>(xs: &[S]) -> S {
    let neg: Vec<S> = xs.iter().map(|&x| -x).collect();
    -smooth_max(&neg)
}

fn softplus<S: Scalar>(w: S) -> S {
    let t = SMOOTH_TEMPERATURE;
    let one = S::constant(1.0);
    if w.value() > 0.0 {
        w + (one + (-w).scale(1.0 / t).exp()).ln().scale(t)
    } else {
        (one + w.scale(1.0 / t).exp()).ln().scale(t)
    }
}

fn hull<S: Scalar>(c: &[[S; 3]; 8], path: IouPath) -> ([S; 3], [S; 3]) {
    let axis = |k: usize| -> Vec<S> { c.iter().map(|p| p[k]).collect() };
    match path {
        IouPath::Exact => {
            let lo = std::array::from_fn(|k| axis(k).into_iter().reduce(Scalar::min).unwrap());
            let hi = std::array::from_fn(|k| axis(k).into_iter().reduce(Scalar::max).unwrap());
            (lo, hi)
        }
        IouPath::Smooth => (std::array::from_fn(|k| smooth_min(&axis(k))), std::array::from_fn(|k| smooth_max(&axis(k)))),
    }
}

fn iou_of<S: Scalar>(a: ([S; 3], [S; 3]), b: ([S; 3], [S; 3]), path: IouPath) -> S {
    let mut inter = S::constant(1.0);
    let mut va = S::constant(1.0);
    let mut vb = S::constant(1.0);
    for k in 0..3 {
        va = va * (a.1[k] - a.0[k]);
        vb = vb * (b.1[k] - b.0[k]);
        let w = match path {
            IouPath::Exact => a.1[k].min(b.1[k]) - a.0[k].max(b.0[k]),
            IouPath::Smooth => smooth_min(&[a.1[k], b.1[k]]) - smooth_max(&[a.0[k], b.0[k]]),
        };
        let w = match path {
            IouPath::Exact => w.max(S::constant(0.0)),
            IouPath::Smooth => softplus(w),
        };
        inter = inter * w;
    }
    let union = va + vb - inter;
    if union.value() <= 0.0 {
        S::constant(0.0)
    } else {
        inter / union
    }
}

fn lift(p: &SoftParams) -> [Dual; N_PARAMS] {
    let x = p.to_array();
    std::array::from_fn(|i| Dual::var(x[i], i))
}

fn constant(p: &SoftParams) -> [Dual; N_PARAMS] {
    p.to_array().map(Dual::constant)
}

fn l_of<S: Scalar>(iou: S) -> S {
    -iou.max(S::constant(IOU_CLAMP)).ln()
}

/// The eight projected corners of the cylinder's sketch bounding box.
pub fn soft_bbox(p: &SoftParams) -> Bbox3 {
    let c = corners_of(&p.to_array());
    Bbox3::from_corners(c.map(Vec3::from))
}

/// Jacobian `[corner][axis][param]` of [`soft_bbox`].
pub fn soft_bbox_jacobian(p: &SoftParams) -> [[[f64; N_PARAMS]; 3]; 8] {
    corners_of(&lift(p)).map(|c| c.map(|d| d.g))
}

/// Exact IoU of the axis-aligned hulls of two corner sets.
pub fn bbox_iou_exact(a: &Bbox3, b: &Bbox3) -> Result<f64, LossError> {
    if a.hull_volume() <= 0.0 || b.hull_volume() <= 0.0 {
        return Err(LossError::DegenerateBox);
    }
    let arr = |v: &Vec3| [v.x, v.y, v.z];
    Ok(iou_of((arr(&a.min), arr(&a.max)), (arr(&b.min), arr(&b.max)), IouPath::Exact))
}

/// Hull IoU between the boxes of `pred` and `gt`.
pub fn bbox_iou(pred: &SoftParams, gt: &SoftParams, path: IouPath) -> f64 {
    let a = hull(&corners_of(&pred.to_array()), path);
    let b = hull(&corners_of(&gt.to_array()), path);
    iou_of(a, b, path)
}

/// [`bbox_iou`] and its gradient with respect to `pred`.
pub fn bbox_iou_grad(pred: &SoftParams, gt: &SoftParams, path: IouPath) -> (f64, [f64; N_PARAMS]) {
    let a = hull(&corners_of(&lift(pred)), path);
    let b = hull(&corners_of(&constant(gt)), path);
    let d = iou_of(a, b, path);
    (d.v, d.g)
}

/// `-ln(max(IoU, 1e-6))` on the exact path.
pub fn l_bbox(pred: &SoftParams, gt: &SoftParams) -> f64 {
    l_bbox_with(pred, gt, IouPath::Exact)
}

/// Never returns negative zero.
pub fn l_bbox_with(pred: &SoftParams, gt: &SoftParams, path: IouPath) -> f64 {
    l_of(bbox_iou(pred, gt, path)) + 0.0
}

/// Loss and its gradient with respect to `pred`.
pub fn l_bbox_grad(pred: &SoftParams, gt: &SoftParams, path: IouPath) -> (f64, [f64; N_PARAMS]) {
    let a = hull(&corners_of(&lift(pred)), path);
    let b = hull(&corners_of(&constant(gt)), path);
    let d = l_of(iou_of(a, b, path));
    (d.v, d.g)
}

/// `ce + bce + alpha * lbbox` with `alpha = 1` once `epoch > ep_thres`.
pub fn combined_loss(ce: f64, bce: f64, lbbox: f64, epoch: u32, ep_thres: u32) -> f64 {
    let alpha = if epoch > ep_thres { 1.0 } else { 0.0 };
    ce + bce + alpha * lbbox
}

/// Smallest distance to a point where the hull or overlap selection
/// changes; finite differences are only meaningful well away from zero.
pub fn switch_margin(pred: &SoftParams, gt: &SoftParams) -> f64 {
    let ca = corners_of(&pred.to_array());
    let cb = corners_of(&gt.to_array());
    let mut margin = f64::INFINITY;
    let top_gap = |c: &[[f64; 3]; 8], k: usize, sign: f64| {
        let mut v: Vec<f64> = c.iter().map(|p| sign * p[k]).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v[0] - v[1]
    };
    let (ha, hb) = (hull(&ca, IouPath::Exact), hull(&cb, IouPath::Exact));
    for k in 0..3 {
        for c in [&ca, &cb] {
            margin = margin.min(top_gap(c, k, 1.0)).min(top_gap(c, k, -1.0));
        }
        margin = margin.min((ha.1[k] - hb.1[k]).abs()).min((ha.0[k] - hb.0[k]).abs());
        let w = ha.1[k].min(hb.1[k]) - ha.0[k].max(hb.0[k]);
        margin = margin.min(w.abs());
    }
    margin
}

/// One checked derivative.
#[derive(Debug, Clone, Serialize)]
pub struct FdEntry {
    pub quantity: String,
    pub param: usize,
    pub analytic: f64,
    pub numeric_h: f64,
    pub numeric_h2: f64,
    pub rel_err: f64,
}

/// Finite-difference comparison for one parameter pair.
#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub pred: SoftParams,
    pub gt: SoftParams,
    pub h: f64,
    pub margin: f64,
    pub max_rel_err: f64,
    pub entries: Vec<FdEntry>,
}

/// Denominator floor of the relative error.
pub const FD_REL_FLOOR: f64 = 1e-3;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_REL_FLOOR)
}

fn central(f: &impl Fn(&[f64; N_PARAMS]) -> f64, x: &[f64; N_PARAMS], i: usize, h: f64) -> f64 {
    let mut xp = *x;
    let mut xm = *x;
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Compares dual-number derivatives of `soft_bbox`, `bbox_iou` and `l_bbox`
/// (both paths) against central differences at `h` and `h / 2`.
pub fn fd_check(pred: &SoftParams, gt: &SoftParams, h: f64) -> FdReport {
    let x = pred.to_array();
    let mut entries = Vec::new();
    let mut push = |quantity: String, analytic: &[f64; N_PARAMS], f: &dyn Fn(&[f64; N_PARAMS]) -> f64| {
        for i in 0..N_PARAMS {
            let n1 = central(&f, &x, i, h);
            let n2 = central(&f, &x, i, h / 2.0);
            let e = rel_err(analytic[i], n1).max(rel_err(analytic[i], n2));
            entries.push(FdEntry { quantity: quantity.clone(), param: i, analytic: analytic[i], numeric_h: n1, numeric_h2: n2, rel_err: e });
        }
    };
    let jac = soft_bbox_jacobian(pred);
    for c in 0..8 {
        for k in 0..3 {
            push(format!("corner[{c}][{k}]"), &jac[c][k], &|y| corners_of(y)[c][k]);
        }
    }
    for path in [IouPath::Exact, IouPath::Smooth] {
        let name = match path {
            IouPath::Exact => "exact",
            IouPath::Smooth => "smooth",
        };
        let (_, g) = bbox_iou_grad(pred, gt, path);
        push(format!("iou_{name}"), &g, &|y| bbox_iou(&SoftParams::from_array(*y), gt, path));
        let (_, g) = l_bbox_grad(pred, gt, path);
        push(format!("l_bbox_{name}"), &g, &|y| l_bbox_with(&SoftParams::from_array(*y), gt, path));
    }
    let max_rel_err = entries.iter().map(|e| e.rel_err).fold(0.0, f64::max);
    FdReport { pred: *pred, gt: *gt, h, margin: switch_margin(pred, gt), max_rel_err, entries }
}

/// Draws a box parameter set and a nearby perturbed target, as used for
/// derivative checks.
pub fn random_pair(rng: &mut impl Rng) -> (SoftParams, SoftParams) {
    use std::f64::consts::PI;
    let mut draw = || {
        let lo = [rng.random_range(0.0..0.4), rng.random_range(0.0..0.4)];
        SoftParams {
            sketch_min: lo,
            sketch_max: [lo[0] + rng.random_range(0.2..0.6), lo[1] + rng.random_range(0.2..0.6)],
            d_minus: rng.random_range(-0.5..0.0),
            d_plus: rng.random_range(0.1..0.6),
            translation: std::array::from_fn(|_| rng.random_range(-0.3..0.3)),
            orientation: std::array::from_fn(|_| rng.random_range(-PI..PI)),
            scale: rng.random_range(0.5..1.5),
        }
    };
    let pred = draw();
    let x = draw();
    let mut gt = pred;
    gt.translation = std::array::from_fn(|k| pred.translation[k] + 0.3 * x.translation[k]);
    gt.orientation = std::array::from_fn(|k| pred.orientation[k] + 0.2 * x.orientation[k] / PI);
    gt.scale = pred.scale * (0.8 + 0.4 * (x.scale - 0.5));
    (pred, gt)
}

#[cfg(test)]
mod tests;
