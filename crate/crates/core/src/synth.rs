//! Synthetic sequences with exact point correspondences.
//!
//! An object cut from a source mask/image is deformed once by moving least
//! squares, then follows a random walk of small affine motions over a
//! background that drifts independently. Ground-truth points undergo exactly
//! the same maps as the pixels.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    apply_affine, extract_contour, rasterize_mask, resample_uniform, AffineTransform, Point, PointSet,
};
use crate::image::FrameImage;
use crate::io;
use crate::metrics::TrackAnnotation;

/// Ranges of the per-frame random affine step; each parameter is drawn
/// uniformly from `[-r, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffineJitter {
    pub rotation_deg: f64,
    /// Relative isotropic scale change.
    pub scale: f64,
    /// Pixels per axis.
    pub translation: f64,
}

impl Default for AffineJitter {
    fn default() -> Self {
        Self {
            rotation_deg: 3.0,
            scale: 0.03,
            translation: 3.0,
        }
    }
}

impl AffineJitter {
    pub const NONE: AffineJitter = AffineJitter {
        rotation_deg: 0.0,
        scale: 0.0,
        translation: 0.0,
    };

    fn is_valid(&self) -> bool {
        [self.rotation_deg, self.scale, self.translation]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.scale < 1.0
    }

    /// One step, rotating and scaling about `center`.
    fn sample(&self, rng: &mut impl Rng, center: Point) -> AffineTransform {
        let angle = symmetric(rng, self.rotation_deg).to_radians();
        let scale = 1.0 + symmetric(rng, self.scale);
        let tx = symmetric(rng, self.translation);
        let ty = symmetric(rng, self.translation);
        AffineTransform::translation(tx, ty).compose(&AffineTransform::rotation_scale_about(
            angle, scale, center,
        ))
    }
}

fn symmetric(rng: &mut impl Rng, r: f64) -> f64 {
    if r > 0.0 {
        rng.gen_range(-r..=r)
    } else {
        0.0
    }
}

/// Generator settings. The single `seed` drives every random choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub frames: usize,
    pub points: usize,
    pub width: usize,
    pub height: usize,
    /// 1, or 2 for an extra untracked object composited underneath.
    pub objects: usize,
    pub mls_controls: usize,
    pub mls_max_shift: f64,
    pub object_jitter: AffineJitter,
    pub background_jitter: AffineJitter,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: 8,
            points: 64,
            width: 128,
            height: 128,
            objects: 1,
            mls_controls: 6,
            mls_max_shift: 4.0,
            object_jitter: AffineJitter::default(),
            background_jitter: AffineJitter {
                rotation_deg: 1.0,
                scale: 0.01,
                translation: 2.0,
            },
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::Config(format!("frames must be at least 2, got {}", self.frames)));
        }
        if self.points < 3 {
            return Err(Error::Config(format!("points must be at least 3, got {}", self.points)));
        }
        if !(1..=2).contains(&self.objects) {
            return Err(Error::Config(format!("objects must be 1 or 2, got {}", self.objects)));
        }
        if !(self.mls_max_shift.is_finite() && self.mls_max_shift >= 0.0) {
            return Err(Error::Config("mls_max_shift must be nonnegative".into()));
        }
        if !self.object_jitter.is_valid() || !self.background_jitter.is_valid() {
            return Err(Error::Config(
                "jitter ranges must be nonnegative with scale below 1".into(),
            ));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::CanvasTooSmall(format!(
                "canvas {}x{} is below 8x8",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// A generated sequence. `transforms[t][k]` maps frame-0 coordinates of
/// object `k` to frame `t`; object 0 is the tracked one.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<FrameImage>,
    pub gt: TrackAnnotation,
    pub transforms: Vec<Vec<AffineTransform>>,
    pub background_transforms: Vec<AffineTransform>,
}

impl SyntheticSequence {
    /// Rasterized ground-truth polygons, one mask per frame.
    pub fn masks(&self) -> Result<Vec<FrameImage>> {
        self.gt
            .frames
            .iter()
            .map(|ps| rasterize_mask(ps, self.gt.width, self.gt.height))
            .collect()
    }
}

/// Affine moving-least-squares deformation of `v` with weights
/// `|p_i - v|^(-2 alpha)`.
///
/// Returns `dst[i]` when `v` equals `src[i]`, and falls back to the weighted
/// mean displacement when fewer than three controls are given or they are
/// collinear.
pub fn mls_affine_deform(v: Point, src: &[Point], dst: &[Point], alpha: f64) -> Result<Point> {
    if src.is_empty() {
        return Err(Error::NoControls);
    }
    if src.len() != dst.len() {
        return Err(Error::SizeMismatch(format!(
            "{} source vs {} destination controls",
            src.len(),
            dst.len()
        )));
    }
    let mut weights = Vec::with_capacity(src.len());
    for (&p, &q) in src.iter().zip(dst) {
        let d2 = (p - v).dot(p - v);
        if d2 == 0.0 {
            return Ok(q);
        }
        weights.push(d2.powf(-alpha));
    }
    let wsum: f64 = weights.iter().sum();
    // Work with displacements e_i = q_i - p_i so that identity and pure
    // translations do not pass through an ill-conditioned solve.
    let mut p_star = Point::default();
    let mut e_star = Point::default();
    for ((&p, &q), &w) in src.iter().zip(dst).zip(&weights) {
        p_star += p * w;
        e_star += (q - p) * w;
    }
    p_star = p_star * (1.0 / wsum);
    e_star = e_star * (1.0 / wsum);

    let translation_fallback = v + e_star;
    if src.len() < 3 || collinear(src) {
        return Ok(translation_fallback);
    }
    // Row-vector convention: f(v) = v + e* + (v - p*) A^-1 C with
    // A = sum w ph^T ph and C = sum w ph^T (e - e*).
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    let (mut c11, mut c12, mut c21, mut c22) = (0.0, 0.0, 0.0, 0.0);
    for ((&p, &q), &w) in src.iter().zip(dst).zip(&weights) {
        let ph = p - p_star;
        let eh = (q - p) - e_star;
        a11 += w * ph.x * ph.x;
        a12 += w * ph.x * ph.y;
        a22 += w * ph.y * ph.y;
        c11 += w * ph.x * eh.x;
        c12 += w * ph.x * eh.y;
        c21 += w * ph.y * eh.x;
        c22 += w * ph.y * eh.y;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 + a22).powi(2) {
        return Ok(translation_fallback);
    }
    let (i11, i12, i22) = (a22 / det, -a12 / det, a11 / det);
    let m11 = i11 * c11 + i12 * c21;
    let m12 = i11 * c12 + i12 * c22;
    let m21 = i12 * c11 + i22 * c21;
    let m22 = i12 * c12 + i22 * c22;
    let d = v - p_star;
    Ok(Point::new(
        v.x + e_star.x + d.x * m11 + d.y * m21,
        v.y + e_star.y + d.x * m12 + d.y * m22,
    ))
}

/// True when every control lies within `1e-9` (relative to the spread) of the
/// line through the two most distant controls.
fn collinear(pts: &[Point]) -> bool {
    let mut best = (0, 0, 0.0);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(pts[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, len) = best;
    if len == 0.0 {
        return true;
    }
    let dir = (pts[j] - pts[i]) * (1.0 / len);
    pts.iter()
        .all(|&p| (p - pts[i]).cross(dir).abs() <= 1e-9 * len)
}

/// MLS warp of a source object, kept on a canvas padded by `pad` pixels.
struct Deformation {
    src: Vec<Point>,
    dst: Vec<Point>,
    pad: f64,
}

impl Deformation {
    fn forward(&self, p: Point) -> Point {
        let q = if self.src.is_empty() {
            p
        } else {
            mls_affine_deform(p, &self.src, &self.dst, 1.0).unwrap_or(p)
        };
        q + Point::new(self.pad, self.pad)
    }

    /// Inverse by fixed-point iteration, started from the reversed warp.
    fn inverse(&self, x: Point) -> Point {
        let target = x - Point::new(self.pad, self.pad);
        if self.src.is_empty() {
            return target;
        }
        let mut u = mls_affine_deform(target, &self.dst, &self.src, 1.0).unwrap_or(target);
        for _ in 0..8 {
            let r = target - mls_affine_deform(u, &self.src, &self.dst, 1.0).unwrap_or(u);
            u += r;
            if r.norm() < 1e-10 {
                break;
            }
        }
        u
    }
}

/// Object ready for compositing: colour, feathered alpha and tracked points,
/// all in its own padded coordinate frame.
struct Sprite {
    image: FrameImage,
    alpha: FrameImage,
    points: PointSet,
}

fn sample_controls(
    mask: &FrameImage,
    count: usize,
    max_shift: f64,
    rng: &mut impl Rng,
) -> (Vec<Point>, Vec<Point>) {
    if max_shift == 0.0 || count == 0 {
        return (Vec::new(), Vec::new());
    }
    let min_gap = 4.0 * max_shift;
    let mut src: Vec<Point> = Vec::with_capacity(count);
    let mut attempts = 0;
    while src.len() < count && attempts < 10_000 {
        attempts += 1;
        let c = rng.gen_range(0..mask.width());
        let r = rng.gen_range(0..mask.height());
        if !mask.is_set(c, r) {
            continue;
        }
        let p = Point::new(c as f64 + 0.5, r as f64 + 0.5);
        // spacing keeps the warp invertible; relaxed once the budget runs low
        if attempts < 5_000 && src.iter().any(|q| q.dist(p) < min_gap) {
            continue;
        }
        src.push(p);
    }
    let dst = src
        .iter()
        .map(|&p| p + Point::new(symmetric(rng, max_shift), symmetric(rng, max_shift)))
        .collect();
    (src, dst)
}

/// Alpha `min(1, d / 3)` with `d` the distance from an inside pixel center to
/// the nearest outside pixel center (off-image counts as outside).
fn feather_alpha(mask: &FrameImage) -> FrameImage {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let outside = |c: i64, r: i64| c < 0 || r < 0 || c >= w || r >= h || !mask.is_set(c as usize, r as usize);
    FrameImage::from_fn(mask.width(), mask.height(), 1, |c, r, _| {
        let (c, r) = (c as i64, r as i64);
        if outside(c, r) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for dr in -3..=3i64 {
            for dc in -3..=3i64 {
                if outside(c + dc, r + dr) {
                    best = best.min(((dc * dc + dr * dr) as f64).sqrt());
                }
            }
        }
        (best / 3.0).min(1.0)
    })
}

fn build_sprite(
    mask: &FrameImage,
    image: &FrameImage,
    base_points: &PointSet,
    deform: &Deformation,
) -> Sprite {
    let pad = deform.pad.ceil() as usize;
    let (w, h) = (mask.width() + 2 * pad, mask.height() + 2 * pad);
    let ch = image.channels();
    let mut warped_mask = FrameImage::zeros(w, h, 1);
    let mut warped_image = FrameImage::zeros(w, h, ch);
    let mut m = [0.0];
    let mut px = vec![0.0; ch];
    for r in 0..h {
        for c in 0..w {
            let u = deform.inverse(Point::new(c as f64 + 0.5, r as f64 + 0.5));
            if mask.sample_inside(u.x, u.y, &mut m) && m[0] >= 0.5 {
                warped_mask.set(c, r, 0, 1.0);
            }
            image.sample_clamped(u.x, u.y, &mut px);
            for (k, &v) in px.iter().enumerate() {
                warped_image.set(c, r, k, v);
            }
        }
    }
    let points = PointSet::from_points(base_points.points().iter().map(|&p| deform.forward(p)).collect());
    Sprite {
        alpha: feather_alpha(&warped_mask),
        image: warped_image,
        points,
    }
}

/// Renders one frame: the background under `bg` (black where uncovered), then
/// each sprite under its placement, bottom to top.
fn render(
    cfg: &SynthConfig,
    background: &FrameImage,
    bg: &AffineTransform,
    layers: &[(&Sprite, AffineTransform)],
) -> Result<FrameImage> {
    let ch = background.channels();
    let bg_inv = bg.inverse()?;
    let inv: Vec<AffineTransform> = layers.iter().map(|(_, a)| a.inverse()).collect::<Result<_>>()?;
    let mut out = FrameImage::zeros(cfg.width, cfg.height, ch);
    let mut px = vec![0.0; ch];
    let mut obj = vec![0.0; ch];
    let mut a = [0.0];
    for r in 0..cfg.height {
        for c in 0..cfg.width {
            let x = Point::new(c as f64 + 0.5, r as f64 + 0.5);
            let s = bg_inv.apply(x);
            if !background.sample_inside(s.x, s.y, &mut px) {
                px.iter_mut().for_each(|v| *v = 0.0);
            }
            for ((sprite, _), ai) in layers.iter().zip(&inv) {
                let u = ai.apply(x);
                if !sprite.alpha.sample_inside(u.x, u.y, &mut a) || a[0] <= 0.0 {
                    continue;
                }
                sprite.image.sample_clamped(u.x, u.y, &mut obj);
                for (p, o) in px.iter_mut().zip(&obj) {
                    *p = a[0] * o + (1.0 - a[0]) * *p;
                }
            }
            for (k, &v) in px.iter().enumerate() {
                out.set(c, r, k, v);
            }
        }
    }
    Ok(out)
}

fn with_visibility(ps: PointSet, width: usize, height: usize) -> PointSet {
    let (w, h) = (width as f64, height as f64);
    let visible = ps
        .points()
        .iter()
        .map(|p| (0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y))
        .collect();
    PointSet::new(ps.points().to_vec(), visible).expect("lengths agree")
}

/// Generates a sequence from caller-provided sources.
///
/// The object mask and image must share dimensions; the background must be
/// at least as large as the canvas.
pub fn generate_sequence(
    cfg: &SynthConfig,
    object_mask: &FrameImage,
    object_image: &FrameImage,
    background: &FrameImage,
) -> Result<SyntheticSequence> {
    cfg.validate()?;
    if object_mask.width() != object_image.width() || object_mask.height() != object_image.height() {
        return Err(Error::SizeMismatch("object mask and image differ in size".into()));
    }
    if object_image.channels() != background.channels() {
        return Err(Error::SizeMismatch("object and background channel counts differ".into()));
    }
    if background.width() < cfg.width || background.height() < cfg.height {
        return Err(Error::CanvasTooSmall(format!(
            "background {}x{} is smaller than the {}x{} canvas",
            background.width(),
            background.height(),
            cfg.width,
            cfg.height
        )));
    }
    let contour = extract_contour(object_mask)?;
    let base = resample_uniform(&contour, cfg.points)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sprites: Vec<Sprite> = (0..cfg.objects)
        .map(|_| {
            let (src, dst) = sample_controls(object_mask, cfg.mls_controls, cfg.mls_max_shift, &mut rng);
            let deform = Deformation {
                src,
                dst,
                pad: cfg.mls_max_shift.ceil(),
            };
            build_sprite(object_mask, object_image, &base, &deform)
        })
        .collect();

    // Initial placements: the tracked object near the canvas center, the
    // extra object offset by a random vector.
    let canvas_center = Point::new(cfg.width as f64 * 0.5, cfg.height as f64 * 0.5);
    let placements: Vec<AffineTransform> = sprites
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (lo, hi) = s.points.bounds().expect("nonempty points");
            let center = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
            let spread = if k == 0 { 0.125 } else { 0.3 };
            let off = Point::new(
                symmetric(&mut rng, spread * cfg.width as f64),
                symmetric(&mut rng, spread * cfg.height as f64),
            );
            let t = canvas_center + off - center;
            AffineTransform::translation(t.x, t.y)
        })
        .collect();
    let bg_center = Point::new(background.width() as f64 * 0.5, background.height() as f64 * 0.5);
    let bg0 = AffineTransform::translation(canvas_center.x - bg_center.x, canvas_center.y - bg_center.y);

    let gt0: Vec<PointSet> = sprites
        .iter()
        .zip(&placements)
        .map(|(s, a)| apply_affine(&s.points, a))
        .collect();

    let mut relative = vec![AffineTransform::IDENTITY; cfg.objects];
    let mut bg_rel = AffineTransform::IDENTITY;
    let mut frames = Vec::with_capacity(cfg.frames);
    let mut gt_frames = Vec::with_capacity(cfg.frames);
    let mut transforms = Vec::with_capacity(cfg.frames);
    let mut background_transforms = Vec::with_capacity(cfg.frames);
    for t in 0..cfg.frames {
        if t > 0 {
            for (rel, g0) in relative.iter_mut().zip(&gt0) {
                let center = apply_affine(g0, rel).centroid();
                *rel = cfg.object_jitter.sample(&mut rng, center).compose(rel);
            }
            bg_rel = cfg.background_jitter.sample(&mut rng, canvas_center).compose(&bg_rel);
        }
        let layers: Vec<(&Sprite, AffineTransform)> = sprites
            .iter()
            .zip(&placements)
            .zip(&relative)
            .rev()
            .map(|((s, p), r)| (s, r.compose(p)))
            .collect();
        let bg = bg_rel.compose(&bg0);
        frames.push(render(cfg, background, &bg, &layers)?);
        gt_frames.push(with_visibility(apply_affine(&gt0[0], &relative[0]), cfg.width, cfg.height));
        transforms.push(relative.clone());
        background_transforms.push(bg);
    }
    Ok(SyntheticSequence {
        frames,
        gt: TrackAnnotation::new(cfg.width, cfg.height, gt_frames)?,
        transforms,
        background_transforms,
    })
}

/// Default procedural sources: object mask, object texture, background.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSources {
    pub mask: FrameImage,
    pub image: FrameImage,
    pub background: FrameImage,
}

/// Smooth colour texture: a linear gradient plus random sinusoidal gratings
/// and a little per-pixel noise, clamped to `[0, 1]`.
pub fn procedural_texture(width: usize, height: usize, channels: usize, rng: &mut impl Rng) -> FrameImage {
    struct Grating {
        kx: f64,
        ky: f64,
        phase: f64,
        amp: f64,
    }
    let base: Vec<f64> = (0..channels).map(|_| rng.gen_range(0.25..0.75)).collect();
    let slope: Vec<(f64, f64)> = (0..channels)
        .map(|_| (rng.gen_range(-0.002..0.002), rng.gen_range(-0.002..0.002)))
        .collect();
    let gratings: Vec<Vec<Grating>> = (0..channels)
        .map(|_| {
            (0..4)
                .map(|_| {
                    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                    let wavelength = rng.gen_range(6.0..24.0);
                    let k = std::f64::consts::TAU / wavelength;
                    Grating {
                        kx: k * theta.cos(),
                        ky: k * theta.sin(),
                        phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        amp: rng.gen_range(0.04..0.1),
                    }
                })
                .collect()
        })
        .collect();
    let noise: Vec<f64> = (0..width * height * channels)
        .map(|_| rng.gen_range(-0.02..0.02))
        .collect();
    FrameImage::from_fn(width, height, channels, |c, r, k| {
        let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
        let mut v = base[k] + slope[k].0 * x + slope[k].1 * y;
        for g in &gratings[k] {
            v += g.amp * (g.kx * x + g.ky * y + g.phase).sin();
        }
        v += noise[(r * width + c) * channels + k];
        v.clamp(0.0, 1.0)
    })
}

/// Star-shaped blob `r(theta) = r0 (1 + sum_k a_k cos(k theta + phi_k))`
/// centered in a `size x size` mask.
pub fn blob_mask(size: usize, rng: &mut impl Rng) -> Result<FrameImage> {
    let r0 = 0.3 * size as f64;
    let harmonics: Vec<(f64, f64, f64)> = (2..=4)
        .map(|k| (k as f64, rng.gen_range(0.0..0.12), rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let c = size as f64 * 0.5;
    let n = 180;
    let outline = PointSet::from_points(
        (0..n)
            .map(|i| {
                let th = i as f64 / n as f64 * std::f64::consts::TAU;
                let r = r0 * (1.0 + harmonics.iter().map(|(k, a, p)| a * (k * th + p).cos()).sum::<f64>());
                Point::new(c + r * th.cos(), c + r * th.sin())
            })
            .collect(),
    );
    rasterize_mask(&outline, size, size)
}

/// Procedural sources sized for `cfg`: a blob half the shorter canvas side
/// and a background twice the canvas, drawn from their own random stream.
pub fn default_sources(cfg: &SynthConfig) -> Result<SynthSources> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let size = (cfg.width.min(cfg.height) / 2).max(8);
    let mask = blob_mask(size, &mut rng)?;
    let image = procedural_texture(size, size, 3, &mut rng);
    let background = procedural_texture(2 * cfg.width, 2 * cfg.height, 3, &mut rng);
    Ok(SynthSources {
        mask,
        image,
        background,
    })
}

/// [`generate_sequence`] on [`default_sources`].
pub fn generate_default_sequence(cfg: &SynthConfig) -> Result<SyntheticSequence> {
    let src = default_sources(cfg)?;
    generate_sequence(cfg, &src.mask, &src.image, &src.background)
}

/// Index of the files written by [`write_sequence`]; paths are relative to
/// the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config: SynthConfig,
    pub frames: Vec<String>,
    pub masks: Vec<String>,
    pub gt: String,
    /// Per frame and object, frame-0 to frame-t maps as `[a11, a12, a21, a22, tx, ty]`.
    pub transforms: Vec<Vec<[f64; 6]>>,
}

/// Writes frames (`frames/NNNN.ppm`), ground-truth masks (`masks/NNNN.pgm`),
/// `gt.json` and `manifest.json` under `dir`.
pub fn write_sequence(seq: &SyntheticSequence, cfg: &SynthConfig, dir: &Path) -> Result<Manifest> {
    let frames_dir = dir.join("frames");
    let masks_dir = dir.join("masks");
    for d in [&frames_dir, &masks_dir] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (t, f) in seq.frames.iter().enumerate() {
        let rel = format!("frames/{t:04}.ppm");
        io::save_pnm(&dir.join(&rel), f)?;
        frames.push(rel);
    }
    let mut masks = Vec::with_capacity(seq.frames.len());
    for (t, m) in seq.masks()?.iter().enumerate() {
        let rel = format!("masks/{t:04}.pgm");
        io::save_pnm(&dir.join(&rel), m)?;
        masks.push(rel);
    }
    io::save_track(&dir.join("gt.json"), &seq.gt)?;
    let manifest = Manifest {
        seed: cfg.seed,
        config: cfg.clone(),
        frames,
        masks,
        gt: "gt.json".into(),
        transforms: seq
            .transforms
            .iter()
            .map(|per| per.iter().map(AffineTransform::to_array).collect())
            .collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    io::write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}
