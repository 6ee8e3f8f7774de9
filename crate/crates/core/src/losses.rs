//! Training objectives over point sets, with analytic gradients.
//!
//! Gradients are taken with respect to the predicted / current set (the
//! second argument). Where a loss contains a `min` or a Euclidean norm, the
//! gradient is the one of the selected branch (smallest index on ties) and
//! zero at a vanishing norm.

use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};
use crate::image::FrameImage;

/// Scalar loss with an optional per-point gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Option<Vec<Point>>,
}

impl LossValue {
    fn with_grad(value: f64, grad: Vec<Point>) -> Self {
        Self {
            value,
            grad: Some(grad),
        }
    }

    /// Gradient slice; empty when the loss carries no point gradient.
    pub fn grad(&self) -> &[Point] {
        self.grad.as_deref().unwrap_or(&[])
    }
}

#[inline]
fn huber(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

#[inline]
fn huber_grad(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x
    } else {
        x.signum()
    }
}

/// Smooth-L1 distance summed over both coordinates (kink at 1 pixel).
#[inline]
pub fn smooth_l1(d: Point) -> f64 {
    huber(d.x) + huber(d.y)
}

/// Derivative of [`smooth_l1`] with respect to `d`.
#[inline]
pub fn smooth_l1_grad(d: Point) -> Point {
    Point::new(huber_grad(d.x), huber_grad(d.y))
}

fn same_len(a: &PointSet, b: &PointSet) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(format!(
            "point sets have {} and {} points",
            a.len(),
            b.len()
        )));
    }
    Ok(a.len())
}

/// Minimum over cyclic start indices `k` of `sum_i smooth_l1(gt[(k+i)%N] - pred[i])`.
pub fn point_set_matching_loss(gt: &PointSet, pred: &PointSet) -> Result<LossValue> {
    let n = same_len(gt, pred)?;
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let g = gt.points();
    let p = pred.points();
    let shift_cost = |k: usize| -> f64 { (0..n).map(|i| smooth_l1(g[(k + i) % n] - p[i])).sum() };
    let (best_k, best) = (0..n)
        .map(|k| (k, shift_cost(k)))
        .fold((0, f64::INFINITY), |acc, (k, c)| if c < acc.1 { (k, c) } else { acc });
    let grad = (0..n)
        .map(|i| -smooth_l1_grad(g[(best_k + i) % n] - p[i]))
        .collect();
    Ok(LossValue::with_grad(best, grad))
}

/// Mean Euclidean colour difference over the set pixels of `mask`.
pub fn pixel_matching_loss(
    cur: &FrameImage,
    warped_prev: &FrameImage,
    mask: &FrameImage,
) -> Result<LossValue> {
    if !cur.same_shape(warped_prev) {
        return Err(Error::SizeMismatch("current and warped frames differ".into()));
    }
    if mask.width() != cur.width() || mask.height() != cur.height() {
        return Err(Error::SizeMismatch("mask and frame differ".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..cur.height() {
        for c in 0..cur.width() {
            if !mask.is_set(c, r) {
                continue;
            }
            count += 1;
            total += cur
                .pixel(c, r)
                .iter()
                .zip(warped_prev.pixel(c, r))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(LossValue {
        value: total / count as f64,
        grad: None,
    })
}

/// Index-paired smooth-L1 loss `sum_i smooth_l1(gt[i] - pred[i])`.
pub fn paired_l1_loss(gt: &PointSet, pred: &PointSet) -> Result<LossValue> {
    same_len(gt, pred)?;
    let mut value = 0.0;
    let grad = gt
        .points()
        .iter()
        .zip(pred.points())
        .map(|(&g, &p)| {
            value += smooth_l1(g - p);
            -smooth_l1_grad(g - p)
        })
        .collect();
    Ok(LossValue::with_grad(value, grad))
}

fn nearest(from: Point, set: &[Point]) -> (usize, f64) {
    set.iter()
        .enumerate()
        .map(|(j, &q)| (j, from.dist(q)))
        .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc })
}

#[inline]
fn unit(v: Point) -> Point {
    let n = v.norm();
    if n > 0.0 {
        v * (1.0 / n)
    } else {
        Point::default()
    }
}

/// Symmetric Chamfer distance, each directed term averaged over its own set.
pub fn chamfer_loss(gt: &PointSet, pred: &PointSet) -> Result<LossValue> {
    if gt.is_empty() || pred.is_empty() {
        return Err(Error::EmptySet);
    }
    let g = gt.points();
    let p = pred.points();
    let inv_g = 1.0 / g.len() as f64;
    let inv_p = 1.0 / p.len() as f64;
    let mut grad = vec![Point::default(); p.len()];
    let mut value = 0.0;
    for &gi in g {
        let (j, d) = nearest(gi, p);
        value += d * inv_g;
        grad[j] += unit(p[j] - gi) * inv_g;
    }
    for (j, &pj) in p.iter().enumerate() {
        let (i, d) = nearest(pj, g);
        value += d * inv_p;
        grad[j] += unit(pj - g[i]) * inv_p;
    }
    Ok(LossValue::with_grad(value, grad))
}

fn check_regularizer_inputs(prev: &PointSet, cur: &PointSet) -> Result<usize> {
    let n = same_len(prev, cur)?;
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    Ok(n)
}

/// First-derivative regularizer: squared change of every cyclic edge length.
pub fn reg_first_derivative(prev: &PointSet, cur: &PointSet) -> Result<LossValue> {
    let n = check_regularizer_inputs(prev, cur)?;
    let (q, c) = (prev.points(), cur.points());
    let mut value = 0.0;
    let mut grad = vec![Point::default(); n];
    for i in 0..n {
        let im1 = (i + n - 1) % n;
        let edge = c[i] - c[im1];
        let diff = edge.norm() - (q[i] - q[im1]).norm();
        value += diff * diff;
        let g = unit(edge) * (2.0 * diff);
        grad[i] += g;
        grad[im1] -= g;
    }
    Ok(LossValue::with_grad(value, grad))
}

/// Second-derivative regularizer: Euclidean change of every cyclic second
/// difference `P[i+1] - 2 P[i] + P[i-1]`.
pub fn reg_second_derivative(prev: &PointSet, cur: &PointSet) -> Result<LossValue> {
    let n = check_regularizer_inputs(prev, cur)?;
    let (q, c) = (prev.points(), cur.points());
    let second = |s: &[Point], i: usize| s[(i + 1) % n] - s[i] * 2.0 + s[(i + n - 1) % n];
    let mut value = 0.0;
    let mut grad = vec![Point::default(); n];
    for i in 0..n {
        let u = second(c, i) - second(q, i);
        value += u.norm();
        let g = unit(u);
        grad[(i + 1) % n] += g;
        grad[i] -= g * 2.0;
        grad[(i + n - 1) % n] += g;
    }
    Ok(LossValue::with_grad(value, grad))
}

/// Mean smooth-L1 distance over all `K * N` forward/backward point pairs.
///
/// The gradient is with respect to the forward sets, concatenated in order.
pub fn cycle_consistency_loss(forward: &[PointSet], backward: &[PointSet]) -> Result<LossValue> {
    if forward.len() != backward.len() {
        return Err(Error::SizeMismatch(format!(
            "{} forward vs {} backward sets",
            forward.len(),
            backward.len()
        )));
    }
    if forward.is_empty() {
        return Err(Error::EmptySet);
    }
    for (f, b) in forward.iter().zip(backward) {
        same_len(f, b)?;
    }
    let pairs: usize = forward.iter().map(PointSet::len).sum();
    if pairs == 0 {
        return Err(Error::EmptySet);
    }
    let scale = 1.0 / pairs as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(pairs);
    for (f, b) in forward.iter().zip(backward) {
        for (&p, &q) in f.points().iter().zip(b.points()) {
            value += smooth_l1(p - q);
            grad.push(smooth_l1_grad(p - q) * scale);
        }
    }
    Ok(LossValue::with_grad(value * scale, grad))
}
