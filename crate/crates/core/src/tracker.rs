//! Frame-to-frame propagation of a point set.
//!
//! Every frame: crop around the previous estimate, align the previous crop to
//! the current one with a global affine, warp the points, then refine them
//! coarse to fine on a feature pyramid with either the alignment network or
//! a small energy descent.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    apply_affine, crop_window, rasterize_mask, resample_uniform, warp_image, AffineTransform, Point,
    PointSet,
};
use crate::image::FrameImage;
use crate::lam::{lam_forward, sample_point_features, FeaturePyramid, LamParams, LamState, PyramidLevel};
use crate::losses::{pixel_matching_loss, reg_first_derivative, reg_second_derivative};
use crate::metrics::TrackAnnotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Lam,
    Energy,
}

/// Global affine optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    /// Resolution levels, each half the size of the next.
    pub levels: usize,
    /// Maximum Levenberg-Marquardt iterations per level.
    pub steps_per_level: usize,
    /// Initial downscale factor applied to both frames.
    pub downscale: usize,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            steps_per_level: 100,
            downscale: 2,
        }
    }
}

/// Weights of the energy backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyWeights {
    pub w_edge: f64,
    pub w_r1: f64,
    pub w_r2: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            w_edge: 1.0,
            w_r1: 0.01,
            w_r2: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub n_points: usize,
    pub local_iters: usize,
    /// One stride per refinement iteration, coarse to fine.
    pub pyramid_strides: Vec<usize>,
    pub backend: Backend,
    pub global: GlobalConfig,
    pub energy: EnergyWeights,
    pub crop_scale: f64,
    /// Network checkpoint for the `lam` backend; read by the command line.
    pub lam_checkpoint: Option<String>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_points: 128,
            local_iters: 5,
            pyramid_strides: vec![32, 16, 8, 4, 4],
            backend: Backend::Energy,
            global: GlobalConfig::default(),
            energy: EnergyWeights::default(),
            crop_scale: 2.0,
            lam_checkpoint: None,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 3 {
            return Err(Error::Config(format!("n_points must be at least 3, got {}", self.n_points)));
        }
        if self.local_iters != self.pyramid_strides.len() {
            return Err(Error::Config(format!(
                "local_iters is {} but {} pyramid strides are given",
                self.local_iters,
                self.pyramid_strides.len()
            )));
        }
        let e = &self.energy;
        if [e.w_edge, e.w_r1, e.w_r2].iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("energy weights must be nonnegative".into()));
        }
        if !(self.crop_scale.is_finite() && self.crop_scale > 0.0) {
            return Err(Error::Config("crop_scale must be positive".into()));
        }
        if self.global.levels == 0 || self.global.downscale == 0 {
            return Err(Error::Config("global levels and downscale must be positive".into()));
        }
        Ok(())
    }
}

/// What happened on one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    pub frame: usize,
    /// Global transform in full-image coordinates.
    pub global: AffineTransform,
    pub crop_origin: (i64, i64),
    pub crop_size: usize,
    /// Mean point displacement of each refinement iteration.
    pub mean_offsets: Vec<f64>,
}

/// Running state of one track.
#[derive(Debug, Clone)]
pub struct TrackState {
    pub points: PointSet,
    pub lam: LamState,
    pub prev_frame: FrameImage,
    pub diagnostics: Vec<FrameDiagnostics>,
}

/// Per-level images, coarse first.
fn image_pyramid(img: &FrameImage, base: usize, levels: usize) -> Vec<(usize, FrameImage)> {
    (0..levels)
        .rev()
        .map(|l| {
            let f = base << l;
            (f, img.avg_pool(f))
        })
        .collect()
}

/// Parameters `[d11, d12, d21, d22, tx, ty]` of
/// `u -> c + (I + D)(u - c) + t`, in full-resolution pixels.
fn params_to_affine(p: &Vector6<f64>, c: Point) -> AffineTransform {
    let lin = AffineTransform::new(1.0 + p[0], p[1], p[2], 1.0 + p[3], 0.0, 0.0);
    let moved = lin.apply(c);
    AffineTransform::new(
        lin.a11,
        lin.a12,
        lin.a21,
        lin.a22,
        c.x + p[4] - moved.x,
        c.y + p[5] - moved.y,
    )
}

struct AlignLevel {
    factor: f64,
    cur: FrameImage,
    prev: FrameImage,
    /// Level pixel centers of the previous-frame mask.
    samples: Vec<Point>,
}

impl AlignLevel {
    /// Sum of squared residuals and, if requested, the normal equations.
    fn evaluate(&self, p: &Vector6<f64>, c: Point, normal: bool) -> (f64, Matrix6<f64>, Vector6<f64>) {
        let a = params_to_affine(p, c);
        let inv = 1.0 / self.factor;
        let cl = c * inv;
        let mut cost = 0.0;
        let mut jtj = Matrix6::zeros();
        let mut jtr = Vector6::zeros();
        let ch = self.cur.channels();
        for &u in &self.samples {
            let full = a.apply(u * self.factor);
            let x = full * inv;
            let d = u - cl;
            for k in 0..ch {
                let (v, gx, gy) = self.cur.sample_with_gradient(x.x, x.y, k);
                let r = v - self.prev.get((u.x - 0.5) as usize, (u.y - 0.5) as usize, k);
                cost += r * r;
                if normal {
                    let j = Vector6::new(gx * d.x, gx * d.y, gy * d.x, gy * d.y, gx * inv, gy * inv);
                    jtj += j * j.transpose();
                    jtr += j * r;
                }
            }
        }
        (cost, jtj, jtr)
    }
}

fn mask_centroid(mask: &FrameImage) -> Option<Point> {
    let mut sum = Point::default();
    let mut n = 0usize;
    for r in 0..mask.height() {
        for c in 0..mask.width() {
            if mask.is_set(c, r) {
                sum += Point::new(c as f64 + 0.5, r as f64 + 0.5);
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum * (1.0 / n as f64))
}

fn alignment_objective(cur: &FrameImage, prev: &FrameImage, prev_mask: &FrameImage, a: &AffineTransform) -> f64 {
    let warped = warp_image(prev, a);
    let mask = warp_image(prev_mask, a);
    match (warped, mask) {
        (Ok(w), Ok(m)) => pixel_matching_loss(cur, &w, &m).map_or(f64::INFINITY, |l| l.value),
        _ => f64::INFINITY,
    }
}

/// Affine map from the previous frame to the current one, found by
/// Levenberg-Marquardt on the squared colour residual over the previous
/// mask, coarse to fine from the identity after an initial downscale.
///
/// The result is returned only if it scores strictly better than the
/// identity under [`pixel_matching_loss`] with the warped mask.
pub fn estimate_global_affine(
    cur: &FrameImage,
    prev: &FrameImage,
    prev_mask: &FrameImage,
    cfg: &TrackerConfig,
) -> Result<AffineTransform> {
    if !cur.same_shape(prev) {
        return Err(Error::SizeMismatch("current and previous frames differ".into()));
    }
    if prev_mask.width() != cur.width() || prev_mask.height() != cur.height() {
        return Err(Error::SizeMismatch("mask and frames differ".into()));
    }
    let center = mask_centroid(prev_mask).ok_or(Error::EmptyMask)?;
    let g = &cfg.global;
    let cur_levels = image_pyramid(cur, g.downscale, g.levels);
    let prev_levels = image_pyramid(prev, g.downscale, g.levels);
    let mask_levels = image_pyramid(prev_mask, g.downscale, g.levels);

    let mut p = Vector6::zeros();
    for (((f, cur_l), (_, prev_l)), (_, mask_l)) in cur_levels.into_iter().zip(prev_levels).zip(mask_levels) {
        let samples: Vec<Point> = (0..mask_l.height())
            .flat_map(|r| (0..mask_l.width()).map(move |c| (c, r)))
            .filter(|&(c, r)| mask_l.is_set(c, r))
            .map(|(c, r)| Point::new(c as f64 + 0.5, r as f64 + 0.5))
            .collect();
        if samples.len() < 6 {
            continue;
        }
        let level = AlignLevel {
            factor: f as f64,
            cur: cur_l,
            prev: prev_l,
            samples,
        };
        let mut lambda = 1e-3;
        let (mut cost, mut jtj, mut jtr) = level.evaluate(&p, center, true);
        for _ in 0..g.steps_per_level {
            let mut h = jtj;
            for i in 0..6 {
                h[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(delta) = h.cholesky().map(|ch| ch.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + delta;
            let (trial_cost, _, _) = level.evaluate(&trial, center, false);
            if trial_cost < cost {
                p = trial;
                lambda = (lambda * 0.3).max(1e-9);
                (cost, jtj, jtr) = level.evaluate(&p, center, true);
                if delta.norm() < 1e-9 {
                    break;
                }
            } else {
                lambda *= 10.0;
                if lambda > 1e9 {
                    break;
                }
            }
        }
    }

    let a = params_to_affine(&p, center);
    if !a.is_finite() || a.determinant().abs() < 1e-6 {
        return Ok(AffineTransform::IDENTITY);
    }
    let fitted = alignment_objective(cur, prev, prev_mask, &a);
    let identity = alignment_objective(cur, prev, prev_mask, &AffineTransform::IDENTITY);
    Ok(if fitted < identity { a } else { AffineTransform::IDENTITY })
}

/// Pyramid over `[cur | warped_prev | mask | gradient magnitude of cur]`,
/// one level per configured stride.
pub fn build_pyramid(
    cur: &FrameImage,
    warped_prev: &FrameImage,
    warped_mask: &FrameImage,
    cfg: &TrackerConfig,
) -> Result<FeaturePyramid> {
    let mask = warped_mask.channel(0);
    let grad = cur.gradient_magnitude();
    let stacked = FrameImage::concat_channels(&[cur, warped_prev, &mask, &grad])?;
    let levels = cfg
        .pyramid_strides
        .iter()
        .map(|&s| PyramidLevel {
            stride: s,
            plane: stacked.avg_pool(s.max(1)),
        })
        .collect();
    FeaturePyramid::new(levels)
}

fn mean_step(before: &PointSet, after: &PointSet) -> f64 {
    let n = before.len().max(1) as f64;
    before
        .points()
        .iter()
        .zip(after.points())
        .map(|(a, b)| a.dist(*b))
        .sum::<f64>()
        / n
}

/// One descent step of the energy backend on `level`.
///
/// The step is `-0.5 * stride * grad E` per point, shortened to at most
/// `0.5 * stride` pixels. The edge term reads the last pyramid channel
/// divided by its level maximum.
fn energy_step(ps: &PointSet, reference: &PointSet, level: &PyramidLevel, w: &EnergyWeights) -> Result<PointSet> {
    let s = level.stride as f64;
    let n = ps.len();
    let mut grad = vec![Point::default(); n];
    if w.w_edge > 0.0 {
        let ch = level.plane.channels() - 1;
        let max = (0..level.plane.height())
            .flat_map(|r| (0..level.plane.width()).map(move |c| (c, r)))
            .map(|(c, r)| level.plane.get(c, r, ch))
            .fold(0.0, f64::max);
        if max > 0.0 {
            let scale = w.w_edge / (max * s);
            for (g, p) in grad.iter_mut().zip(ps.points()) {
                let (_, gx, gy) = level.plane.sample_with_gradient(p.x / s, p.y / s, ch);
                *g -= Point::new(gx, gy) * scale;
            }
        }
    }
    for (weight, reg) in [
        (w.w_r1, reg_first_derivative as fn(&PointSet, &PointSet) -> Result<_>),
        (w.w_r2, reg_second_derivative),
    ] {
        if weight > 0.0 {
            for (g, d) in grad.iter_mut().zip(reg(reference, ps)?.grad()) {
                *g += *d * weight;
            }
        }
    }
    let limit = 0.5 * s;
    let points = ps
        .points()
        .iter()
        .zip(&grad)
        .map(|(&p, &g)| {
            let mut step = g * (-0.5 * s);
            let len = step.norm();
            if len > limit {
                step = step * (limit / len);
            }
            p + step
        })
        .collect();
    Ok(PointSet::from_points(points))
}

/// One network step on `level`: sample features, add predicted offsets.
pub fn lam_step(ps: &PointSet, level: &PyramidLevel, state: &mut LamState, params: &LamParams) -> Result<PointSet> {
    let feats = sample_point_features(level, ps);
    let (offsets, next) = lam_forward(&feats, ps, state, params)?;
    *state = next;
    Ok(PointSet::from_points(
        ps.points().iter().zip(&offsets).map(|(&p, &o)| p + o).collect(),
    ))
}

/// Coarse-to-fine refinement, one iteration per pyramid level, with points
/// clamped to `[0, width] x [0, height]` after each iteration.
///
/// The regularizers of the energy backend compare against the input set.
/// Returns the refined set and the mean displacement of every iteration.
pub fn local_refine(
    ps: &PointSet,
    pyr: &FeaturePyramid,
    lam_state: &mut LamState,
    cfg: &TrackerConfig,
    params: Option<&LamParams>,
    bounds: (usize, usize),
) -> Result<(PointSet, Vec<f64>)> {
    if ps.len() != cfg.n_points {
        return Err(Error::ShapeMismatch(format!(
            "{} points, tracker configured for {}",
            ps.len(),
            cfg.n_points
        )));
    }
    let mut cur = ps.clone();
    let mut offsets = Vec::with_capacity(pyr.levels().len());
    for level in pyr.levels() {
        let mut next = match cfg.backend {
            Backend::Energy => energy_step(&cur, ps, level, &cfg.energy)?,
            Backend::Lam => {
                let params = params.ok_or_else(|| Error::Config("lam backend needs parameters".into()))?;
                lam_step(&cur, level, lam_state, params)?
            }
        };
        next.clamp_to(bounds.0 as f64, bounds.1 as f64);
        offsets.push(mean_step(&cur, &next));
        cur = next;
    }
    Ok((cur, offsets))
}

fn prepare_init(init: &PointSet, cfg: &TrackerConfig) -> Result<PointSet> {
    if init.len() < 3 {
        return Err(Error::BadInit(format!("{} points, need at least 3", init.len())));
    }
    if init.points().iter().any(|p| !p.is_finite()) {
        return Err(Error::BadInit("non-finite coordinate".into()));
    }
    if init.len() == cfg.n_points {
        return Ok(init.clone());
    }
    resample_uniform(init, cfg.n_points).map_err(|e| Error::BadInit(e.to_string()))
}

fn all_visible(ps: PointSet) -> PointSet {
    PointSet::from_points(ps.points().to_vec())
}

impl TrackState {
    pub fn new(init: PointSet, frame: FrameImage, hidden: usize) -> Self {
        let n = init.len();
        Self {
            points: init,
            lam: LamState::zeros(n, hidden),
            prev_frame: frame,
            diagnostics: Vec::new(),
        }
    }

    /// Propagates the estimate to `frame` and returns the new point set.
    pub fn advance(
        &mut self,
        frame: &FrameImage,
        cfg: &TrackerConfig,
        params: Option<&LamParams>,
    ) -> Result<PointSet> {
        if !frame.same_shape(&self.prev_frame) {
            return Err(Error::SizeMismatch("frames differ in size".into()));
        }
        let (w, h) = (frame.width(), frame.height());
        let window = crop_window(&self.points, cfg.crop_scale)?;
        let (origin, size) = window.pixel_rect();
        let o = Point::new(origin.0 as f64, origin.1 as f64);
        let cur_crop = frame.crop(origin, (size, size));
        let prev_crop = self.prev_frame.crop(origin, (size, size));
        let local_prev = self.points.translated(-o);
        let prev_mask = rasterize_mask(&local_prev, size, size)?;
        let a = if prev_mask.count_set() == 0 {
            AffineTransform::IDENTITY
        } else {
            estimate_global_affine(&cur_crop, &prev_crop, &prev_mask, cfg)?
        };
        let warped = apply_affine(&local_prev, &a);
        let warped_prev = warp_image(&prev_crop, &a)?;
        let warped_mask = rasterize_mask(&warped, size, size)?;
        let pyr = build_pyramid(&cur_crop, &warped_prev, &warped_mask, cfg)?;
        let (refined, mean_offsets) = local_refine(&warped, &pyr, &mut self.lam, cfg, params, (size, size))?;
        let mut out = all_visible(refined.translated(o));
        out.clamp_to(w as f64, h as f64);

        self.diagnostics.push(FrameDiagnostics {
            frame: self.diagnostics.len() + 1,
            global: a.in_local_frame(-o),
            crop_origin: origin,
            crop_size: size,
            mean_offsets,
        });
        self.points = out.clone();
        self.prev_frame = frame.clone();
        Ok(out)
    }
}

/// Tracks `init` (given on `frames[0]`) through every frame.
///
/// `params` is required by the `lam` backend and ignored otherwise.
pub fn track_sequence(
    frames: &[FrameImage],
    init: &PointSet,
    cfg: &TrackerConfig,
    params: Option<&LamParams>,
) -> Result<TrackAnnotation> {
    track_sequence_with_diagnostics(frames, init, cfg, params).map(|(t, _)| t)
}

/// [`track_sequence`] that also returns per-frame diagnostics.
pub fn track_sequence_with_diagnostics(
    frames: &[FrameImage],
    init: &PointSet,
    cfg: &TrackerConfig,
    params: Option<&LamParams>,
) -> Result<(TrackAnnotation, Vec<FrameDiagnostics>)> {
    cfg.validate()?;
    let first = frames.first().ok_or(Error::EmptyFrames)?;
    let start = all_visible(prepare_init(init, cfg)?);
    let hidden = match (cfg.backend, params) {
        (Backend::Lam, Some(p)) => p.config().hidden,
        (Backend::Lam, None) => return Err(Error::Config("lam backend needs parameters".into())),
        (Backend::Energy, _) => 0,
    };
    let mut state = TrackState::new(start.clone(), first.clone(), hidden);
    let mut out = Vec::with_capacity(frames.len());
    out.push(start);
    for frame in &frames[1..] {
        out.push(state.advance(frame, cfg, params)?);
    }
    let ann = TrackAnnotation::new(first.width(), first.height(), out)?;
    Ok((ann, state.diagnostics))
}

/// Tracks forward over `frames[0..=k]`, then backward from the last forward
/// estimate over the same frames reversed.
///
/// The backward trajectory is returned in forward time order, so frame `t`
/// of both annotations refers to the same image.
pub fn run_cycle(
    frames: &[FrameImage],
    init: &PointSet,
    k: usize,
    cfg: &TrackerConfig,
    params: Option<&LamParams>,
) -> Result<(TrackAnnotation, TrackAnnotation)> {
    if frames.len() < k + 1 {
        return Err(Error::TooFewFrames {
            needed: k + 1,
            got: frames.len(),
        });
    }
    let forward = track_sequence(&frames[..=k], init, cfg, params)?;
    let reversed: Vec<FrameImage> = frames[..=k].iter().rev().cloned().collect();
    let last = forward.frames.last().expect("at least one frame");
    let mut backward = track_sequence(&reversed, last, cfg, params)?;
    backward.frames.reverse();
    Ok((forward, backward))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, shift: Point) -> FrameImage {
        FrameImage::from_fn(w, h, 1, |c, r, _| {
            let x = c as f64 + 0.5 - shift.x;
            let y = r as f64 + 0.5 - shift.y;
            0.5 + 0.2 * (x * 0.31).sin() * (y * 0.23).cos() + 0.15 * ((x + 2.0 * y) * 0.17).sin()
        })
    }

    fn disk_points(c: Point, r: f64, n: usize) -> PointSet {
        PointSet::from_points(
            (0..n)
                .map(|i| {
                    let t = i as f64 / n as f64 * std::f64::consts::TAU;
                    Point::new(c.x + r * t.cos(), c.y + r * t.sin())
                })
                .collect(),
        )
    }

    #[test]
    fn identity_when_frames_match() {
        let img = textured(64, 64, Point::default());
        let mask = rasterize_mask(&disk_points(Point::new(32.0, 32.0), 14.0, 32), 64, 64).unwrap();
        let a = estimate_global_affine(&img, &img, &mask, &TrackerConfig::default()).unwrap();
        assert_eq!(a, AffineTransform::IDENTITY);
    }

    #[test]
    fn recovers_translation() {
        let prev = textured(96, 96, Point::default());
        let cur = textured(96, 96, Point::new(5.0, 0.0));
        let mask = rasterize_mask(&disk_points(Point::new(48.0, 48.0), 20.0, 32), 96, 96).unwrap();
        let a = estimate_global_affine(&cur, &prev, &mask, &TrackerConfig::default()).unwrap();
        let moved = a.apply(Point::new(48.0, 48.0));
        assert!((moved - Point::new(53.0, 48.0)).norm() < 0.5, "{a:?}");
    }

    #[test]
    fn pyramid_shapes() {
        let cur = FrameImage::from_fn(10, 7, 1, |c, _, _| c as f64);
        let cfg = TrackerConfig {
            pyramid_strides: vec![4, 1],
            local_iters: 2,
            ..TrackerConfig::default()
        };
        let mask = FrameImage::zeros(10, 7, 1);
        let pyr = build_pyramid(&cur, &cur, &mask, &cfg).unwrap();
        assert_eq!(pyr.channels(), 4);
        let coarse = &pyr.levels()[0].plane;
        assert_eq!((coarse.width(), coarse.height()), (3, 2));
        let fine = &pyr.levels()[1].plane;
        assert_eq!(fine.get(7, 3, 0), 7.0);
        let flat = FrameImage::from_fn(10, 7, 1, |_, _, _| 0.4);
        let pyr = build_pyramid(&flat, &flat, &mask, &cfg).unwrap();
        assert!(pyr.levels()[1].plane.channel(3).data().iter().all(|&v| v == 0.0));
        let small = FrameImage::zeros(5, 7, 1);
        assert!(matches!(build_pyramid(&cur, &small, &mask, &cfg), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn energy_without_edges_keeps_reference() {
        let cfg = TrackerConfig {
            n_points: 16,
            energy: EnergyWeights {
                w_edge: 0.0,
                ..EnergyWeights::default()
            },
            ..TrackerConfig::default()
        };
        let img = textured(64, 64, Point::default());
        let mask = FrameImage::zeros(64, 64, 1);
        let pyr = build_pyramid(&img, &img, &mask, &cfg).unwrap();
        let ps = disk_points(Point::new(30.0, 30.0), 10.0, 16);
        let (out, _) = local_refine(&ps, &pyr, &mut LamState::zeros(16, 0), &cfg, None, (64, 64)).unwrap();
        assert_eq!(out, ps);
    }

    #[test]
    fn zero_network_keeps_points() {
        use crate::lam::LamConfig;
        let cfg = TrackerConfig {
            n_points: 12,
            backend: Backend::Lam,
            ..TrackerConfig::default()
        };
        let img = textured(64, 64, Point::default());
        let pyr = build_pyramid(&img, &img, &FrameImage::zeros(64, 64, 1), &cfg).unwrap();
        let params = LamParams::zeros(LamConfig {
            in_channels: 4,
            hidden: 8,
            heads: 2,
            blocks: 1,
            ..LamConfig::default()
        })
        .unwrap();
        let ps = disk_points(Point::new(30.0, 30.0), 10.0, 12);
        let mut st = LamState::zeros(12, 8);
        let (out, offs) = local_refine(&ps, &pyr, &mut st, &cfg, Some(&params), (64, 64)).unwrap();
        assert_eq!(out, ps);
        assert!(offs.iter().all(|&o| o == 0.0));
    }

    #[test]
    fn error_cases() {
        let cfg = TrackerConfig::default();
        let init = disk_points(Point::new(30.0, 30.0), 10.0, 16);
        assert!(matches!(track_sequence(&[], &init, &cfg, None), Err(Error::EmptyFrames)));
        let frames = vec![FrameImage::zeros(64, 64, 1)];
        let bad = PointSet::from_xy(&[(1.0, 1.0), (2.0, 2.0)]);
        assert!(matches!(track_sequence(&frames, &bad, &cfg, None), Err(Error::BadInit(_))));
        assert!(matches!(
            run_cycle(&frames, &init, 2, &cfg, None),
            Err(Error::TooFewFrames { needed: 3, got: 1 })
        ));
        let single = track_sequence(&frames, &init, &cfg, None).unwrap();
        assert_eq!(single.num_frames(), 1);
        assert_eq!(single.num_points(), 128);
        let (f, b) = run_cycle(&frames, &init, 0, &cfg, None).unwrap();
        assert_eq!(f, b);
    }
}
