//! Tracking and segmentation metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rasterize_mask, Point, PointSet};
use crate::image::FrameImage;

/// Per-frame point sets of one tracked object on a `width x height` canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackAnnotation {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<PointSet>,
}

impl TrackAnnotation {
    pub fn new(width: usize, height: usize, frames: Vec<PointSet>) -> Result<Self> {
        let ann = Self {
            width,
            height,
            frames,
        };
        ann.validate()?;
        Ok(ann)
    }

    /// Checks the frame count and the equal-N invariant.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .frames
            .first()
            .ok_or_else(|| Error::Schema("frames: at least one frame required".into()))?;
        if let Some(t) = self.frames.iter().position(|f| f.len() != first.len()) {
            return Err(Error::Schema(format!(
                "frames: frame {t} has {} points, frame 0 has {}",
                self.frames[t].len(),
                first.len()
            )));
        }
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_points(&self) -> usize {
        self.frames.first().map_or(0, PointSet::len)
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

/// Evaluation summary; every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sa: BTreeMap<String, f64>,
    pub ta: BTreeMap<String, f64>,
    pub j: f64,
    pub f: f64,
    pub avg_acc: f64,
}

fn check_pair(pred: &TrackAnnotation, gt: &TrackAnnotation) -> Result<()> {
    if pred.num_frames() != gt.num_frames() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted frames vs {} ground-truth frames",
            pred.num_frames(),
            gt.num_frames()
        )));
    }
    for (t, (p, g)) in pred.frames.iter().zip(&gt.frames).enumerate() {
        if p.len() != g.len() {
            return Err(Error::ShapeMismatch(format!(
                "frame {t}: {} predicted vs {} ground-truth points",
                p.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("threshold must be positive, got {tau}")))
    }
}

/// Fraction of ground-truth-visible points whose error is below `tau * D`,
/// `D` being the ground-truth image diagonal.
pub fn spatial_accuracy(pred: &TrackAnnotation, gt: &TrackAnnotation, tau: f64) -> Result<f64> {
    check_pair(pred, gt)?;
    check_tau(tau)?;
    let limit = tau * gt.diagonal();
    let (mut hit, mut total) = (0usize, 0usize);
    for (p, g) in pred.frames.iter().zip(&gt.frames) {
        for i in 0..g.len() {
            if !g.visible()[i] {
                continue;
            }
            total += 1;
            if p.points()[i].dist(g.points()[i]) < limit {
                hit += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::NoVisiblePoints);
    }
    Ok(hit as f64 / total as f64)
}

/// Fraction of consecutive-frame pairs (point visible in both ground-truth
/// frames) whose change of error is below `tau * D`.
pub fn temporal_accuracy(pred: &TrackAnnotation, gt: &TrackAnnotation, tau: f64) -> Result<f64> {
    check_pair(pred, gt)?;
    check_tau(tau)?;
    if gt.num_frames() < 2 {
        return Err(Error::TooFewFrames {
            needed: 2,
            got: gt.num_frames(),
        });
    }
    let limit = tau * gt.diagonal();
    let (mut hit, mut total) = (0usize, 0usize);
    for t in 1..gt.num_frames() {
        let (g0, g1) = (&gt.frames[t - 1], &gt.frames[t]);
        let (p0, p1) = (&pred.frames[t - 1], &pred.frames[t]);
        for i in 0..g1.len() {
            if !(g0.visible()[i] && g1.visible()[i]) {
                continue;
            }
            total += 1;
            let e1 = p1.points()[i] - g1.points()[i];
            let e0 = p0.points()[i] - g0.points()[i];
            if (e1 - e0).norm() < limit {
                hit += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::NoVisiblePoints);
    }
    Ok(hit as f64 / total as f64)
}

fn check_masks(a: &FrameImage, b: &FrameImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::SizeMismatch(format!(
            "{}x{} vs {}x{} masks",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Intersection over union; 1 when both masks are empty.
pub fn region_similarity(pred_mask: &FrameImage, gt_mask: &FrameImage) -> Result<f64> {
    check_masks(pred_mask, gt_mask)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for r in 0..gt_mask.height() {
        for c in 0..gt_mask.width() {
            let (p, g) = (pred_mask.is_set(c, r), gt_mask.is_set(c, r));
            inter += (p && g) as usize;
            union += (p || g) as usize;
        }
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Foreground pixels with a 4-neighbour that is background or off-image.
pub fn boundary_pixels(mask: &FrameImage) -> Vec<bool> {
    let (w, h) = (mask.width(), mask.height());
    let mut out = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            if !mask.is_set(c, r) {
                continue;
            }
            let bg = |dc: i64, dr: i64| {
                let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                nc < 0 || nr < 0 || nc >= w as i64 || nr >= h as i64 || !mask.is_set(nc as usize, nr as usize)
            };
            out[r * w + c] = bg(1, 0) || bg(-1, 0) || bg(0, 1) || bg(0, -1);
        }
    }
    out
}

fn dilate_disk(src: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    let rad = radius as i64;
    let offsets: Vec<(i64, i64)> = (-rad..=rad)
        .flat_map(|dy| (-rad..=rad).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= rad * rad)
        .collect();
    let mut out = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            if !src[r * w + c] {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nc, nr) = (c as i64 + dx, r as i64 + dy);
                if nc >= 0 && nr >= 0 && nc < w as i64 && nr < h as i64 {
                    out[nr as usize * w + nc as usize] = true;
                }
            }
        }
    }
    out
}

/// Matching radius `ceil(0.008 * D)` used by [`boundary_accuracy`].
pub fn boundary_radius(width: usize, height: usize) -> usize {
    (0.008 * (width as f64).hypot(height as f64)).ceil() as usize
}

/// Boundary F-measure with the default radius.
pub fn boundary_accuracy(pred_mask: &FrameImage, gt_mask: &FrameImage) -> Result<f64> {
    let radius = boundary_radius(gt_mask.width(), gt_mask.height());
    boundary_accuracy_with_radius(pred_mask, gt_mask, radius)
}

/// Boundary F-measure: a boundary pixel matches when a boundary pixel of the
/// other mask lies within Euclidean distance `radius`.
pub fn boundary_accuracy_with_radius(
    pred_mask: &FrameImage,
    gt_mask: &FrameImage,
    radius: usize,
) -> Result<f64> {
    check_masks(pred_mask, gt_mask)?;
    let (w, h) = (gt_mask.width(), gt_mask.height());
    let bp = boundary_pixels(pred_mask);
    let bg = boundary_pixels(gt_mask);
    let np = bp.iter().filter(|&&b| b).count();
    let ng = bg.iter().filter(|&&b| b).count();
    if np == 0 && ng == 0 {
        return Ok(1.0);
    }
    if np == 0 || ng == 0 {
        return Ok(0.0);
    }
    let near_gt = dilate_disk(&bg, w, h, radius);
    let near_pred = dilate_disk(&bp, w, h, radius);
    let matched_p = bp.iter().zip(&near_gt).filter(|(&b, &n)| b && n).count();
    let matched_g = bg.iter().zip(&near_pred).filter(|(&b, &n)| b && n).count();
    let precision = matched_p as f64 / np as f64;
    let recall = matched_g as f64 / ng as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Fraction of pixels where the two masks agree.
pub fn average_accuracy(pred_mask: &FrameImage, gt_mask: &FrameImage) -> Result<f64> {
    check_masks(pred_mask, gt_mask)?;
    let total = gt_mask.width() * gt_mask.height();
    if total == 0 {
        return Ok(1.0);
    }
    let agree = (0..gt_mask.height())
        .flat_map(|r| (0..gt_mask.width()).map(move |c| (c, r)))
        .filter(|&(c, r)| pred_mask.is_set(c, r) == gt_mask.is_set(c, r))
        .count();
    Ok(agree as f64 / total as f64)
}

/// Sequence statistics `(MO, SC)` on coordinates normalized by `(W, H)`:
/// mean point displacement and mean absolute change of cyclic edge length
/// between consecutive frames.
pub fn sequence_stats(gt: &TrackAnnotation) -> Result<(f64, f64)> {
    if gt.num_frames() < 2 {
        return Err(Error::TooFewFrames {
            needed: 2,
            got: gt.num_frames(),
        });
    }
    let (sx, sy) = (1.0 / gt.width as f64, 1.0 / gt.height as f64);
    let norm = |p: Point| Point::new(p.x * sx, p.y * sy);
    let n = gt.num_points();
    let (mut mo, mut sc, mut count) = (0.0, 0.0, 0usize);
    for t in 1..gt.num_frames() {
        let prev: Vec<Point> = gt.frames[t - 1].points().iter().map(|&p| norm(p)).collect();
        let cur: Vec<Point> = gt.frames[t].points().iter().map(|&p| norm(p)).collect();
        for i in 0..n {
            let im1 = (i + n - 1) % n;
            mo += cur[i].dist(prev[i]);
            sc += (cur[i].dist(cur[im1]) - prev[i].dist(prev[im1])).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Ok((0.0, 0.0));
    }
    Ok((mo / count as f64, sc / count as f64))
}

/// Formats a threshold the way report keys are written, e.g. `0.04`.
pub fn tau_key(tau: f64) -> String {
    let s = format!("{tau}");
    if s.starts_with('.') {
        format!("0{s}")
    } else {
        s
    }
}

/// Full report. Mask metrics use the supplied per-frame masks, or, when none
/// are given, the rasterized polygons of both tracks.
pub fn evaluate(
    pred: &TrackAnnotation,
    gt: &TrackAnnotation,
    taus: &[f64],
    masks: Option<(&[FrameImage], &[FrameImage])>,
) -> Result<MetricReport> {
    check_pair(pred, gt)?;
    let mut sa = BTreeMap::new();
    let mut ta = BTreeMap::new();
    for &tau in taus {
        sa.insert(tau_key(tau), spatial_accuracy(pred, gt, tau)?);
        if gt.num_frames() >= 2 {
            ta.insert(tau_key(tau), temporal_accuracy(pred, gt, tau)?);
        }
    }
    let owned;
    let (pm, gm): (&[FrameImage], &[FrameImage]) = match masks {
        Some(m) => m,
        None => {
            let raster = |a: &TrackAnnotation| -> Result<Vec<FrameImage>> {
                a.frames
                    .iter()
                    .map(|f| rasterize_mask(f, gt.width, gt.height))
                    .collect()
            };
            owned = (raster(pred)?, raster(gt)?);
            (&owned.0, &owned.1)
        }
    };
    if pm.len() != gm.len() || pm.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted masks vs {} ground-truth masks",
            pm.len(),
            gm.len()
        )));
    }
    let (mut j, mut f, mut acc) = (0.0, 0.0, 0.0);
    for (p, g) in pm.iter().zip(gm) {
        j += region_similarity(p, g)?;
        f += boundary_accuracy(p, g)?;
        acc += average_accuracy(p, g)?;
    }
    let k = pm.len() as f64;
    Ok(MetricReport {
        sa,
        ta,
        j: j / k,
        f: f / k,
        avg_acc: acc / k,
    })
}
