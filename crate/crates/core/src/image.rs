//! Raster type shared by frames, masks and feature planes.
//!
//! Pixel `(c, r)` covers the square `[c, c+1) x [r, r+1)` in continuous
//! coordinates, so its center sits at `(c + 0.5, r + 0.5)`. All samplers take
//! continuous coordinates in that convention.

use crate::error::{Error, Result};

/// Row-major, channel-interleaved raster of finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FrameImage {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::ShapeMismatch("image needs at least one channel".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("image samples must be finite".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(col, row, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(c, r, ch));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &FrameImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Diagonal length `sqrt(W^2 + H^2)` in pixels.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    #[inline]
    fn index(&self, col: usize, row: usize, ch: usize) -> usize {
        (row * self.width + col) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize, ch: usize) -> f64 {
        self.data[self.index(col, row, ch)]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, ch: usize, value: f64) {
        let i = self.index(col, row, ch);
        self.data[i] = value;
    }

    #[inline]
    pub fn pixel(&self, col: usize, row: usize) -> &[f64] {
        let i = self.index(col, row, 0);
        &self.data[i..i + self.channels]
    }

    /// True when channel 0 of the pixel is set (masks are thresholded at 0.5).
    #[inline]
    pub fn is_set(&self, col: usize, row: usize) -> bool {
        self.get(col, row, 0) > 0.5
    }

    /// Number of set pixels of a single-channel mask.
    pub fn count_set(&self) -> usize {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (c, r)))
            .filter(|&(c, r)| self.is_set(c, r))
            .count()
    }

    /// Per-pixel mean over channels.
    pub fn luminance(&self) -> FrameImage {
        if self.channels == 1 {
            return self.clone();
        }
        let inv = 1.0 / self.channels as f64;
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f64>() * inv)
            .collect();
        FrameImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Bilinear sample at continuous coordinates `(x, y)`; `None` when the
    /// point falls outside the span of pixel centers.
    pub fn sample_inside(&self, x: f64, y: f64, out: &mut [f64]) -> bool {
        const EPS: f64 = 1e-9;
        let u = x - 0.5;
        let v = y - 0.5;
        let max_u = self.width as f64 - 1.0;
        let max_v = self.height as f64 - 1.0;
        if !(u >= -EPS && u <= max_u + EPS && v >= -EPS && v <= max_v + EPS) {
            return false;
        }
        self.bilinear(u.clamp(0.0, max_u), v.clamp(0.0, max_v), out);
        true
    }

    /// Bilinear sample with coordinates clamped to the span of pixel centers.
    pub fn sample_clamped(&self, x: f64, y: f64, out: &mut [f64]) {
        let u = (x - 0.5).clamp(0.0, self.width as f64 - 1.0);
        let v = (y - 0.5).clamp(0.0, self.height as f64 - 1.0);
        self.bilinear(u, v, out);
    }

    /// Clamped bilinear sample of one channel together with its spatial
    /// derivative `(d/dx, d/dy)`; derivatives vanish where clamping is active.
    pub fn sample_with_gradient(&self, x: f64, y: f64, ch: usize) -> (f64, f64, f64) {
        let max_u = self.width as f64 - 1.0;
        let max_v = self.height as f64 - 1.0;
        let u_raw = x - 0.5;
        let v_raw = y - 0.5;
        let u = u_raw.clamp(0.0, max_u);
        let v = v_raw.clamp(0.0, max_v);
        let (x0, fx) = split(u, self.width);
        let (y0, fy) = split(v, self.height);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let a = self.get(x0, y0, ch);
        let b = self.get(x1, y0, ch);
        let c = self.get(x0, y1, ch);
        let d = self.get(x1, y1, ch);
        let value = (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy;
        let inside_u = u_raw > 0.0 && u_raw < max_u;
        let inside_v = v_raw > 0.0 && v_raw < max_v;
        let dx = if inside_u {
            (b - a) * (1.0 - fy) + (d - c) * fy
        } else {
            0.0
        };
        let dy = if inside_v {
            (c - a) * (1.0 - fx) + (d - b) * fx
        } else {
            0.0
        };
        (value, dx, dy)
    }

    fn bilinear(&self, u: f64, v: f64, out: &mut [f64]) {
        let (x0, fx) = split(u, self.width);
        let (y0, fy) = split(v, self.height);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        for (ch, o) in out.iter_mut().enumerate().take(self.channels) {
            let a = self.get(x0, y0, ch);
            let b = self.get(x1, y0, ch);
            let c = self.get(x0, y1, ch);
            let d = self.get(x1, y1, ch);
            *o = (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy;
        }
    }

    /// Average pooling with square cells of side `stride`; partial cells at
    /// the right and bottom edges average over the pixels they contain.
    pub fn avg_pool(&self, stride: usize) -> FrameImage {
        assert!(stride > 0, "stride must be positive");
        if stride == 1 {
            return self.clone();
        }
        let w = self.width.div_ceil(stride);
        let h = self.height.div_ceil(stride);
        let mut out = FrameImage::zeros(w, h, self.channels);
        for r in 0..h {
            let r0 = r * stride;
            let r1 = (r0 + stride).min(self.height);
            for c in 0..w {
                let c0 = c * stride;
                let c1 = (c0 + stride).min(self.width);
                let inv = 1.0 / ((r1 - r0) * (c1 - c0)) as f64;
                for ch in 0..self.channels {
                    let mut acc = 0.0;
                    for rr in r0..r1 {
                        for cc in c0..c1 {
                            acc += self.get(cc, rr, ch);
                        }
                    }
                    out.set(c, r, ch, acc * inv);
                }
            }
        }
        out
    }

    /// Central-difference gradient magnitude of the luminance, with
    /// one-sided differences at the borders.
    pub fn gradient_magnitude(&self) -> FrameImage {
        let lum = self.luminance();
        let (w, h) = (self.width, self.height);
        FrameImage::from_fn(w, h, 1, |c, r, _| {
            let gx = central(c, w, |k| lum.get(k, r, 0));
            let gy = central(r, h, |k| lum.get(c, k, 0));
            gx.hypot(gy)
        })
    }

    /// Copies the `size.0 x size.1` window whose top-left pixel is `origin`;
    /// pixels outside the source are zero.
    pub fn crop(&self, origin: (i64, i64), size: (usize, usize)) -> FrameImage {
        let (ox, oy) = origin;
        let mut out = FrameImage::zeros(size.0, size.1, self.channels);
        for r in 0..size.1 {
            let sr = oy + r as i64;
            if sr < 0 || sr >= self.height as i64 {
                continue;
            }
            for c in 0..size.0 {
                let sc = ox + c as i64;
                if sc < 0 || sc >= self.width as i64 {
                    continue;
                }
                for ch in 0..self.channels {
                    out.set(c, r, ch, self.get(sc as usize, sr as usize, ch));
                }
            }
        }
        out
    }

    /// Stacks images with equal width/height along the channel axis.
    pub fn concat_channels(parts: &[&FrameImage]) -> Result<FrameImage> {
        let first = parts
            .first()
            .ok_or_else(|| Error::SizeMismatch("nothing to concatenate".into()))?;
        let (w, h) = (first.width, first.height);
        if let Some(bad) = parts.iter().find(|p| p.width != w || p.height != h) {
            return Err(Error::SizeMismatch(format!(
                "{}x{} vs {}x{}",
                w, h, bad.width, bad.height
            )));
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(w * h * channels);
        for i in 0..w * h {
            for p in parts {
                data.extend_from_slice(&p.data[i * p.channels..(i + 1) * p.channels]);
            }
        }
        Ok(FrameImage {
            width: w,
            height: h,
            channels,
            data,
        })
    }

    /// Extracts a single channel as a one-channel image.
    pub fn channel(&self, ch: usize) -> FrameImage {
        FrameImage::from_fn(self.width, self.height, 1, |c, r, _| self.get(c, r, ch))
    }
}

#[inline]
fn split(u: f64, len: usize) -> (usize, f64) {
    if len <= 1 {
        return (0, 0.0);
    }
    let x0 = (u.floor() as usize).min(len - 2);
    (x0, u - x0 as f64)
}

#[inline]
fn central(i: usize, len: usize, f: impl Fn(usize) -> f64) -> f64 {
    if len < 2 {
        0.0
    } else if i == 0 {
        f(1) - f(0)
    } else if i == len - 1 {
        f(len - 1) - f(len - 2)
    } else {
        0.5 * (f(i + 1) - f(i - 1))
    }
}
