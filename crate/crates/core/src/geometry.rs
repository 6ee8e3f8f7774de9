//! Polygon and raster primitives: contour extraction, uniform resampling,
//! affine maps, warping, rasterization and crop windows.

use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::FrameImage;

/// A 2-D point in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl AddAssign for Point {
    #[inline]
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Point {
    #[inline]
    fn sub_assign(&mut self, o: Point) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Ordered cyclic point set with per-point visibility.
///
/// Index `i` is always read modulo `len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    visible: Vec<bool>,
}

impl PointSet {
    pub fn new(points: Vec<Point>, visible: Vec<bool>) -> Result<Self> {
        if points.len() != visible.len() {
            return Err(Error::SizeMismatch(format!(
                "{} points but {} visibility flags",
                points.len(),
                visible.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::ShapeMismatch("point coordinates must be finite".into()));
        }
        Ok(Self { points, visible })
    }

    /// All points visible.
    pub fn from_points(points: Vec<Point>) -> Self {
        let visible = vec![true; points.len()];
        Self { points, visible }
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Self {
        Self::from_points(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[inline]
    pub fn points_mut(&mut self) -> &mut [Point] {
        &mut self.points
    }

    #[inline]
    pub fn visible(&self) -> &[bool] {
        &self.visible
    }

    #[inline]
    pub fn visible_mut(&mut self) -> &mut [bool] {
        &mut self.visible
    }

    /// Point at cyclic index `i`.
    #[inline]
    pub fn at(&self, i: isize) -> Point {
        let n = self.points.len() as isize;
        self.points[i.rem_euclid(n) as usize]
    }

    /// Relabels so that new index `i` holds old index `(i + k) mod N`.
    pub fn cyclic_shift(&self, k: usize) -> PointSet {
        let n = self.len();
        if n == 0 {
            return self.clone();
        }
        let idx = |i: usize| (i + k) % n;
        PointSet {
            points: (0..n).map(|i| self.points[idx(i)]).collect(),
            visible: (0..n).map(|i| self.visible[idx(i)]).collect(),
        }
    }

    pub fn translated(&self, d: Point) -> PointSet {
        PointSet {
            points: self.points.iter().map(|&p| p + d).collect(),
            visible: self.visible.clone(),
        }
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    pub fn centroid(&self) -> Point {
        let n = self.len().max(1) as f64;
        self.points.iter().fold(Point::default(), |acc, &p| acc + p) * (1.0 / n)
    }

    /// Length of the closed polyline.
    pub fn perimeter(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| self.points[i].dist(self.points[(i + 1) % n]))
            .sum()
    }

    /// Shoelace sum; positive for the orientation used by [`extract_contour`].
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|i| self.points[i].cross(self.points[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn clamp_to(&mut self, width: f64, height: f64) {
        for p in &mut self.points {
            p.x = p.x.clamp(0.0, width);
            p.y = p.y.clamp(0.0, height);
        }
    }
}

/// Six-parameter affine map `(x, y) -> (a11 x + a12 y + tx, a21 x + a22 y + ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        a11: 1.0,
        a12: 0.0,
        a21: 0.0,
        a22: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64, tx: f64, ty: f64) -> Self {
        Self {
            a11,
            a12,
            a21,
            a22,
            tx,
            ty,
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0, tx, ty)
    }

    /// Rotation by `angle` radians and isotropic `scale` about `center`.
    pub fn rotation_scale_about(angle: f64, scale: f64, center: Point) -> Self {
        let (s, c) = angle.sin_cos();
        let lin = Self::new(scale * c, -scale * s, scale * s, scale * c, 0.0, 0.0);
        Self::translation(center.x, center.y)
            .compose(&lin)
            .compose(&Self::translation(-center.x, -center.y))
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a11, self.a12, self.a21, self.a22, self.tx, self.ty]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    #[inline]
    pub fn determinant(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a11 * p.x + self.a12 * p.y + self.tx,
            self.a21 * p.x + self.a22 * p.y + self.ty,
        )
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &AffineTransform) -> AffineTransform {
        AffineTransform {
            a11: self.a11 * other.a11 + self.a12 * other.a21,
            a12: self.a11 * other.a12 + self.a12 * other.a22,
            a21: self.a21 * other.a11 + self.a22 * other.a21,
            a22: self.a21 * other.a12 + self.a22 * other.a22,
            tx: self.a11 * other.tx + self.a12 * other.ty + self.tx,
            ty: self.a21 * other.tx + self.a22 * other.ty + self.ty,
        }
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::SingularTransform(det));
        }
        let inv = 1.0 / det;
        let a11 = self.a22 * inv;
        let a12 = -self.a12 * inv;
        let a21 = -self.a21 * inv;
        let a22 = self.a11 * inv;
        Ok(AffineTransform {
            a11,
            a12,
            a21,
            a22,
            tx: -(a11 * self.tx + a12 * self.ty),
            ty: -(a21 * self.tx + a22 * self.ty),
        })
    }

    /// Expresses the map in a frame whose origin sits at `origin` of this one.
    pub fn in_local_frame(&self, origin: Point) -> AffineTransform {
        AffineTransform::translation(-origin.x, -origin.y)
            .compose(self)
            .compose(&AffineTransform::translation(origin.x, origin.y))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Square crop window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropWindow {
    pub center: Point,
    pub side: f64,
}

impl CropWindow {
    /// Integer top-left pixel and pixel size of the window.
    pub fn pixel_rect(&self) -> ((i64, i64), usize) {
        let size = self.side.round().max(8.0) as usize;
        let half = size as f64 * 0.5;
        let ox = (self.center.x - half).round() as i64;
        let oy = (self.center.y - half).round() as i64;
        ((ox, oy), size)
    }
}

const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("neighbor offset")
}

/// Outer border of the largest 8-connected foreground component, traced with
/// Moore-neighbour following.
///
/// Points are pixel centers. The chain starts at the component's first pixel
/// in raster order and runs clockwise on screen, which is counter-clockwise
/// with a y-up reading (positive shoelace area).
pub fn extract_contour(mask: &FrameImage) -> Result<PointSet> {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut best: Option<(u32, usize, usize)> = None; // (label, area, start index)
    let mut next_label = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if labels[start] != 0 || !mask.is_set(start % w, start / w) {
            continue;
        }
        next_label += 1;
        labels[start] = next_label;
        queue.push_back(start);
        let mut area = 0usize;
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for &(dx, dy) in &DIRS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if labels[j] == 0 && mask.is_set(nx as usize, ny as usize) {
                    labels[j] = next_label;
                    queue.push_back(j);
                }
            }
        }
        if best.is_none_or(|(_, a, _)| area > a) {
            best = Some((next_label, area, start));
        }
    }
    let (label, _, start) = best.ok_or(Error::EmptyMask)?;

    let inside = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && labels[y as usize * w + x as usize] == label
    };
    // One Moore step: scan clockwise from the backtrack direction.
    let step = |b: (i64, i64), back: usize| -> Option<((i64, i64), usize)> {
        for k in 1..=8 {
            let d = (back + k) % 8;
            let n = (b.0 + DIRS[d].0, b.1 + DIRS[d].1);
            if inside(n.0, n.1) {
                let pd = (back + k - 1) % 8;
                let prev = (b.0 + DIRS[pd].0, b.1 + DIRS[pd].1);
                return Some((n, dir_index(prev.0 - n.0, prev.1 - n.1)));
            }
        }
        None
    };

    let s = ((start % w) as i64, (start / w) as i64);
    let mut chain = vec![s];
    if let Some((second, back)) = step(s, 4) {
        let mut cur = second;
        let mut back = back;
        let limit = 4 * w * h + 8;
        loop {
            if chain.len() > limit {
                unreachable!("border following did not close");
            }
            let (next, nback) = step(cur, back).expect("component pixel has a neighbor");
            if cur == s && next == second {
                break;
            }
            chain.push(cur);
            cur = next;
            back = nback;
        }
    }
    let distinct = {
        let mut c = chain.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    if distinct < 3 {
        return Err(Error::DegenerateComponent(distinct));
    }
    Ok(PointSet::from_points(
        chain
            .into_iter()
            .map(|(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
            .collect(),
    ))
}

/// `n` points at equal arc-length spacing along the closed polyline, starting
/// at the vertex with lexicographically minimal `(y, x)` and keeping the input
/// orientation.
pub fn resample_uniform(contour: &PointSet, n: usize) -> Result<PointSet> {
    if contour.len() < 3 {
        return Err(Error::TooFewPoints(contour.len()));
    }
    if n == 0 {
        return Err(Error::Config("resample count must be positive".into()));
    }
    let m = contour.len();
    let pts = contour.points();
    let start = (0..m)
        .min_by(|&a, &b| {
            (pts[a].y, pts[a].x)
                .partial_cmp(&(pts[b].y, pts[b].x))
                .expect("finite coordinates")
        })
        .expect("non-empty");
    let ordered: Vec<Point> = (0..m).map(|i| pts[(start + i) % m]).collect();
    let seg_len: Vec<f64> = (0..m).map(|i| ordered[i].dist(ordered[(i + 1) % m])).collect();
    let total: f64 = seg_len.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateContour);
    }
    let spacing = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    let mut seg_start = 0.0f64;
    for k in 0..n {
        let target = k as f64 * spacing;
        while seg + 1 < m && seg_start + seg_len[seg] <= target {
            seg_start += seg_len[seg];
            seg += 1;
        }
        let a = ordered[seg];
        let b = ordered[(seg + 1) % m];
        let t = if seg_len[seg] > 0.0 {
            ((target - seg_start) / seg_len[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(a + (b - a) * t);
    }
    Ok(PointSet::from_points(out))
}

pub fn apply_affine(ps: &PointSet, a: &AffineTransform) -> PointSet {
    PointSet {
        points: ps.points.iter().map(|&p| a.apply(p)).collect(),
        visible: ps.visible.clone(),
    }
}

/// Inverse-mapping bilinear warp: `out(x) = img(A^-1 x)`, zero where the
/// source location is outside the image.
pub fn warp_image(img: &FrameImage, a: &AffineTransform) -> Result<FrameImage> {
    let inv = a.inverse()?;
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = FrameImage::zeros(w, h, ch);
    let mut buf = vec![0.0; ch];
    for r in 0..h {
        for c in 0..w {
            let src = inv.apply(Point::new(c as f64 + 0.5, r as f64 + 0.5));
            if img.sample_inside(src.x, src.y, &mut buf) {
                for (k, &v) in buf.iter().enumerate() {
                    out.set(c, r, k, v);
                }
            }
        }
    }
    Ok(out)
}

const ON_EDGE_EPS: f64 = 1e-9;

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(a + ab * t)
}

/// Binary mask of the pixels whose centers lie inside the polygon by the
/// even-odd rule. Centers lying on the polygon outline count as inside.
pub fn rasterize_mask(ps: &PointSet, width: usize, height: usize) -> Result<FrameImage> {
    let n = ps.len();
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let pts = ps.points();
    let mut mask = FrameImage::zeros(width, height, 1);
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    for r in 0..height {
        let cy = r as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            if (a.y > cy) != (b.y > cy) {
                xs.push(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        for pair in xs.chunks_exact(2) {
            // centers with x0 <= cx < x1
            let c0 = (pair[0] - 0.5).ceil().max(0.0);
            let c1 = (pair[1] - 0.5).ceil().min(width as f64);
            let mut c = c0;
            while c < c1 {
                mask.set(c as usize, r, 0, 1.0);
                c += 1.0;
            }
        }
    }
    // outline pass
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let c0 = ((a.x.min(b.x) - 0.5 - ON_EDGE_EPS).ceil().max(0.0)) as i64;
        let c1 = ((a.x.max(b.x) - 0.5 + ON_EDGE_EPS).floor()).min(width as f64 - 1.0) as i64;
        let r0 = ((a.y.min(b.y) - 0.5 - ON_EDGE_EPS).ceil().max(0.0)) as i64;
        let r1 = ((a.y.max(b.y) - 0.5 + ON_EDGE_EPS).floor()).min(height as f64 - 1.0) as i64;
        for r in r0..=r1 {
            for c in c0..=c1 {
                let center = Point::new(c as f64 + 0.5, r as f64 + 0.5);
                if dist_to_segment(center, a, b) <= ON_EDGE_EPS {
                    mask.set(c as usize, r as usize, 0, 1.0);
                }
            }
        }
    }
    Ok(mask)
}

/// Crop window centered on the bounding box, with side
/// `scale * sqrt((w + p)(h + p))` and context `p = (w + h) / 2`.
pub fn crop_window(ps: &PointSet, scale: f64) -> Result<CropWindow> {
    let (lo, hi) = ps.bounds().ok_or(Error::EmptySet)?;
    let w = hi.x - lo.x;
    let h = hi.y - lo.y;
    if w <= 0.0 && h <= 0.0 {
        return Err(Error::DegenerateBox);
    }
    if scale <= 0.0 || !scale.is_finite() {
        return Err(Error::Config(format!("crop scale must be positive, got {scale}")));
    }
    let p = 0.5 * (w + h);
    Ok(CropWindow {
        center: Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)),
        side: scale * ((w + p) * (h + p)).sqrt(),
    })
}
