//! Small-scale supervised training of the alignment network.
//!
//! Each sample perturbs a ground-truth set with uniform noise and asks the
//! network, in a single step, for offsets that restore it. The objective is
//! `paired_l1(gt, pred) + w_r1 R1(prev_gt, pred) + w_r2 R2(prev_gt, pred)`
//! averaged over samples, minimized with Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{sample_point_features, LamState, PyramidLevel};
use super::network::{lam_backward, lam_forward_cached};
use super::params::LamParams;
use super::tensor::Mat;
use crate::error::{Error, Result};
use crate::geometry::{rasterize_mask, Point, PointSet};
use crate::image::FrameImage;
use crate::losses::{paired_l1_loss, reg_first_derivative, reg_second_derivative};
use crate::synth::SyntheticSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Half-width of the uniform per-coordinate input noise, in pixels.
    pub noise: f64,
    pub w_r1: f64,
    pub w_r2: f64,
    /// Pooling stride of the feature plane.
    pub stride: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 3e-3,
            noise: 2.0,
            w_r1: 0.1,
            w_r2: 0.1,
            stride: 1,
            seed: 0,
        }
    }
}

/// One training example.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub features: Mat,
    pub input: PointSet,
    pub target: PointSet,
    pub prev: PointSet,
}

/// Feature plane of the tracker layout `[cur | prev | mask | gradient]`.
fn feature_level(cur: &FrameImage, prev: &FrameImage, input: &PointSet, stride: usize) -> Result<PyramidLevel> {
    let mask = rasterize_mask(input, cur.width(), cur.height())?;
    let grad = cur.gradient_magnitude();
    let stacked = FrameImage::concat_channels(&[cur, prev, &mask, &grad])?;
    Ok(PyramidLevel {
        stride,
        plane: stacked.avg_pool(stride.max(1)),
    })
}

/// Builds one sample per frame `t >= 1` of every sequence.
pub fn make_samples(seqs: &[SyntheticSequence], cfg: &TrainConfig) -> Result<Vec<TrainSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for seq in seqs {
        for t in 1..seq.frames.len() {
            let target = PointSet::from_points(seq.gt.frames[t].points().to_vec());
            let input = PointSet::from_points(
                target
                    .points()
                    .iter()
                    .map(|&p| {
                        let n = if cfg.noise > 0.0 {
                            Point::new(rng.gen_range(-cfg.noise..cfg.noise), rng.gen_range(-cfg.noise..cfg.noise))
                        } else {
                            Point::default()
                        };
                        p + n
                    })
                    .collect(),
            );
            let level = feature_level(&seq.frames[t], &seq.frames[t - 1], &input, cfg.stride)?;
            out.push(TrainSample {
                features: sample_point_features(&level, &input),
                input,
                target,
                prev: PointSet::from_points(seq.gt.frames[t - 1].points().to_vec()),
            });
        }
    }
    Ok(out)
}

/// Objective value of one sample and, optionally, its parameter gradient.
pub fn sample_objective(
    params: &LamParams,
    sample: &TrainSample,
    cfg: &TrainConfig,
    with_grad: bool,
) -> Result<(f64, Option<LamParams>)> {
    let n = sample.input.len();
    let state = LamState::zeros(n, params.config().hidden);
    let (offsets, _, cache) = lam_forward_cached(&sample.features, &sample.input, &state, params)?;
    let pred = PointSet::from_points(
        sample
            .input
            .points()
            .iter()
            .zip(&offsets)
            .map(|(&p, &o)| p + o)
            .collect(),
    );
    let l = paired_l1_loss(&sample.target, &pred)?;
    let r1 = reg_first_derivative(&sample.prev, &pred)?;
    let r2 = reg_second_derivative(&sample.prev, &pred)?;
    let value = l.value + cfg.w_r1 * r1.value + cfg.w_r2 * r2.value;
    if !with_grad {
        return Ok((value, None));
    }
    let d: Vec<Point> = (0..n)
        .map(|i| l.grad()[i] + r1.grad()[i] * cfg.w_r1 + r2.grad()[i] * cfg.w_r2)
        .collect();
    Ok((value, Some(lam_backward(params, &cache, &d))))
}

/// Mean objective over `samples`.
pub fn mean_objective(params: &LamParams, samples: &[TrainSample], cfg: &TrainConfig) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut total = 0.0;
    for s in samples {
        total += sample_objective(params, s, cfg, false)?.0;
    }
    Ok(total / samples.len() as f64)
}

/// Adam with the usual defaults `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    m: LamParams,
    v: LamParams,
    t: i32,
}

impl Adam {
    pub fn new(params: &LamParams, lr: f64) -> Self {
        Self {
            lr,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut LamParams, grad: &LamParams) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        let tensors = params
            .tensors_mut()
            .iter_mut()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut().iter_mut().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for (((pv, &gv), mv), vv) in p.data.iter_mut().zip(&g.data).zip(&mut m.data).zip(&mut v.data) {
                *mv = B1 * *mv + (1.0 - B1) * gv;
                *vv = B2 * *vv + (1.0 - B2) * gv * gv;
                *pv -= self.lr * (*mv / c1) / ((*vv / c2).sqrt() + EPS);
            }
        }
    }
}

/// Full-batch training; returns the mean objective before every step and
/// after the last one (`steps + 1` values).
pub fn train(params: &mut LamParams, samples: &[TrainSample], cfg: &TrainConfig) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySet);
    }
    let inv = 1.0 / samples.len() as f64;
    let mut adam = Adam::new(params, cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.steps + 1);
    for _ in 0..cfg.steps {
        let mut grad = params.zeros_like();
        let mut total = 0.0;
        for s in samples {
            let (v, g) = sample_objective(params, s, cfg, true)?;
            total += v;
            let g = g.expect("gradient requested");
            for (acc, t) in grad.tensors_mut().iter_mut().zip(g.tensors()) {
                for (a, b) in acc.data.iter_mut().zip(&t.data) {
                    *a += b * inv;
                }
            }
        }
        history.push(total * inv);
        adam.step(params, &grad);
    }
    history.push(mean_objective(params, samples, cfg)?);
    Ok(history)
}
